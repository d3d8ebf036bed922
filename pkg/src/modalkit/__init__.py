"""Modal analysis toolkit: mode estimators, multimodality diagnostics,
modal clustering and modal regression, with a Monte Carlo rate harness."""

from .backend import HAS_NUMBA, USING_NUMBA
from .clustering import (
    UNASSIGNED,
    AscentConfig,
    AscentPath,
    Partition,
    ascent_path,
    gmm_modal_partition,
    modal_partition,
    parametric_partition,
)
from .data import (
    MixtureSpec,
    Sample,
    SeedSpec,
    load_csv,
    order_statistics,
    preset,
    sample_mixture,
)
from .density import (
    KernelDensityModel,
    KernelFunctionals,
    KernelSpec,
    NearestNeighborModel,
    kernel_functionals,
    normal_reference_bandwidth,
    unit_ball_volume,
)
from .direct import (
    DirectConfig,
    DirectEstimate,
    chernoff_mode,
    dalenius_venter_mode,
    grenander_mode,
    robertson_cryer_mode,
)
from .errors import (
    DataFormatError,
    DegenerateFitError,
    InfiniteDensityError,
    ModalkitError,
    SparseRegionError,
    UnsupportedKernelError,
)
from .grids import EvalGrid
from .mixtures import GaussianMixtureModel, MixtureDensity, fit_gmm_em, select_gmm_bic
from .modes import ModeEstimate, kernel_mode, sample_point_mode
from .regression import (
    ConditionalModel,
    ConditionalModes,
    ModalCurveSet,
    conditional_modes,
    local_linear_regression,
    modal_regression_curves,
)
from .render import render_plot
from .scale_space import ModeTree, SizerMap, mode_tree, sizer_map
from .simulate import RateReport, replicate_estimates, simulate_rate
from .topology import (
    ClusterTree,
    GridModes,
    PersistencePair,
    count_modes,
    level_set_tree,
    persistence_diagram,
)

__version__ = "0.1.0"
