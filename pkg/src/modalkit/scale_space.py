"""Bandwidth-sweep diagnostics: the mode tree and the derivative
significance (SiZer-style) map for univariate Gaussian-kernel estimates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from . import backend
from .data import Sample
from .density import KernelDensityModel, KernelSpec, normal_reference_bandwidth
from .grids import EvalGrid
from .topology import count_modes

__all__ = [
    "ModeTree",
    "mode_tree",
    "SizerMap",
    "sizer_map",
    "INCONCLUSIVE",
    "INCREASING",
    "DECREASING",
    "SPARSE",
]


@dataclass(frozen=True)
class ModeTree:
    """Mode locations across a decreasing bandwidth sweep.

    ``locations[j]`` holds the sorted mode locations at ``bandwidths[j]``;
    ``links[j][m]`` is the index of the nearest mode at the next-larger
    bandwidth (-1 on the top level).  ``auto_extended`` counts bandwidths
    prepended by doubling to reach a unimodal start.
    """

    bandwidths: np.ndarray
    locations: tuple
    links: tuple
    auto_extended: int

    @property
    def counts(self) -> np.ndarray:
        return np.array([loc.shape[0] for loc in self.locations])

    def to_dict(self) -> dict:
        return {
            "bandwidths": self.bandwidths.tolist(),
            "locations": [loc.tolist() for loc in self.locations],
            "links": [lk.tolist() for lk in self.links],
            "autoExtended": int(self.auto_extended),
        }


def _modes_at(s: Sample, h: float, resolution: int) -> np.ndarray:
    model = KernelDensityModel(s, bandwidth=h, kernel=KernelSpec("gaussian"))
    grid = EvalGrid.for_model(model, resolution=resolution)
    gm = count_modes(model, grid, refine=True)
    return np.sort(gm.locations[:, 0])


def mode_tree(
    s: Sample,
    bandwidths,
    resolution: int = 512,
    max_doublings: int = 20,
) -> ModeTree:
    """Trace Gaussian-kernel mode locations over a decreasing bandwidth
    sweep, linking each mode to the nearest mode one level up.

    If the largest bandwidth is not yet unimodal it is doubled (up to
    ``max_doublings`` times) and the extra levels are prepended.
    """
    if s.dim != 1:
        raise ValueError("mode tree requires a 1-d sample")
    hs = np.asarray(bandwidths, dtype=float)
    if hs.ndim != 1 or hs.shape[0] < 1:
        raise ValueError("need at least one bandwidth")
    if np.any(hs <= 0) or np.any(np.diff(hs) >= 0):
        raise ValueError("bandwidths must be positive and strictly decreasing")

    extended = []
    h_top = float(hs[0])
    while _modes_at(s, h_top, resolution).shape[0] != 1:
        if len(extended) >= max_doublings:
            raise RuntimeError(f"no unimodal bandwidth within {max_doublings} doublings")
        h_top *= 2.0
        extended.append(h_top)
    sweep = np.concatenate([np.array(extended)[::-1], hs]) if extended else hs

    locations = []
    links = []
    for j, h in enumerate(sweep):
        locs = _modes_at(s, float(h), resolution)
        if j == 0:
            lk = np.full(locs.shape[0], -1, dtype=int)
        else:
            prev = locations[-1]
            lk = np.array(
                [int(np.argmin(np.abs(prev - x))) for x in locs], dtype=int
            )
        locations.append(locs)
        links.append(lk)
    return ModeTree(
        bandwidths=sweep,
        locations=tuple(locations),
        links=tuple(links),
        auto_extended=len(extended),
    )


INCONCLUSIVE, INCREASING, DECREASING, SPARSE = 0, 1, 2, 3
_STATE_NAMES = {0: "inconclusive", 1: "increasing", 2: "decreasing", 3: "sparse"}


@dataclass(frozen=True)
class SizerMap:
    """Pointwise derivative-significance states over (location x bandwidth).

    ``states[i, j]`` classifies grid point ``x_grid[i]`` at bandwidth
    ``h_grid[j]``.  Significance is pointwise Gaussian, not the original
    simultaneous row-wise adjustment.
    """

    x_grid: np.ndarray
    h_grid: np.ndarray
    states: np.ndarray
    derivative: np.ndarray
    std_error: np.ndarray
    confidence: float

    @property
    def significant_mode_counts(self) -> np.ndarray:
        """Per-bandwidth count of increasing-to-decreasing transitions, a
        heuristic count of significant modes (no equivalence claimed with
        any formal test)."""
        counts = np.zeros(self.h_grid.shape[0], dtype=int)
        for j in range(self.h_grid.shape[0]):
            seq = [st for st in self.states[:, j] if st in (INCREASING, DECREASING)]
            counts[j] = sum(
                1 for a, b in zip(seq, seq[1:]) if a == INCREASING and b == DECREASING
            )
        return counts

    def to_dict(self) -> dict:
        return {
            "xGrid": self.x_grid.tolist(),
            "bandwidths": self.h_grid.tolist(),
            "states": [[_STATE_NAMES[int(v)] for v in row] for row in self.states],
            "derivative": self.derivative.tolist(),
            "stdError": self.std_error.tolist(),
            "confidence": float(self.confidence),
            "significantModeCounts": self.significant_mode_counts.tolist(),
        }


def sizer_map(s: Sample, x_grid, h_grid, confidence: float = 0.95) -> SizerMap:
    """Classify each (x, h) cell by the sign significance of the Gaussian
    kernel derivative estimate.

    The derivative estimate is the mean of the summands d/dx K_h(x - X_i)
    with pointwise standard error sd(summands)/sqrt(n); a cell is sparse
    when the effective sample size n * 2h * fhat(x) falls below 5.
    """
    if s.dim != 1:
        raise ValueError("the significance map requires a 1-d sample")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    x_grid = np.asarray(x_grid, dtype=float)
    h_grid = np.asarray(h_grid, dtype=float)
    data = np.ascontiguousarray(s.column(0))
    n = s.n
    z = float(ndtri(0.5 * (1.0 + confidence)))

    states = np.empty((x_grid.shape[0], h_grid.shape[0]), dtype=np.int8)
    deriv_all = np.empty_like(states, dtype=float)
    se_all = np.empty_like(states, dtype=float)
    for j, h in enumerate(h_grid):
        deriv, sd, dens = backend.deriv_stats_1d(x_grid, data, float(h))
        se = sd / np.sqrt(n)
        ess = n * 2.0 * h * dens
        col = np.full(x_grid.shape[0], INCONCLUSIVE, dtype=np.int8)
        inc = deriv > z * se
        dec = deriv < -z * se
        sparse = ess < 5.0
        col[sparse & ~inc & ~dec] = SPARSE
        col[inc] = INCREASING
        col[dec] = DECREASING
        states[:, j] = col
        deriv_all[:, j] = deriv
        se_all[:, j] = se
    return SizerMap(
        x_grid=x_grid,
        h_grid=h_grid,
        states=states,
        derivative=deriv_all,
        std_error=se_all,
        confidence=confidence,
    )


def default_bandwidth_sweep(s: Sample, count: int = 21) -> np.ndarray:
    """Log-spaced bandwidths around the normal-reference value."""
    h_ref = float(normal_reference_bandwidth(s)[0])
    return np.geomspace(4.0 * h_ref, h_ref / 8.0, count)
