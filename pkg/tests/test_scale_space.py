"""Mode tree bandwidth sweeps and the derivative significance map."""

import numpy as np
import pytest

from modalkit import Sample, SeedSpec, mode_tree, preset, sample_mixture, sizer_map
from modalkit.scale_space import DECREASING, INCREASING, SPARSE, default_bandwidth_sweep


@pytest.fixture(scope="module")
def normal_sample():
    s, _ = sample_mixture(preset("gauss"), 600, SeedSpec(14))
    return s


class TestModeTree:
    def test_single_branch_drift_bounded(self, normal_sample):
        t = mode_tree(normal_sample, np.geomspace(1.2, 0.3, 10), resolution=512)
        locs = np.concatenate([loc for loc in t.locations])
        assert t.counts[0] == 1
        assert np.ptp(locs[: np.sum(t.counts == 1)]) <= 0.5

    def test_branch_count_equals_count_modes(self, normal_sample):
        from modalkit import EvalGrid, KernelDensityModel, count_modes

        hs = np.geomspace(1.0, 0.1, 6)
        t = mode_tree(normal_sample, hs, resolution=512)
        for h, locs in zip(t.bandwidths, t.locations):
            m = KernelDensityModel(normal_sample, bandwidth=float(h))
            gm = count_modes(m, EvalGrid.for_model(m, resolution=512))
            assert locs.shape[0] == gm.count

    def test_counts_nondecreasing_as_h_decreases(self):
        for seed in range(10):
            s, _ = sample_mixture(preset("mw3"), 150, SeedSpec(200 + seed))
            t = mode_tree(s, default_bandwidth_sweep(s, 12), resolution=1024)
            assert np.all(np.diff(t.counts) >= 0)

    def test_every_mode_links_to_parent(self, normal_sample):
        t = mode_tree(normal_sample, np.geomspace(0.8, 0.1, 8), resolution=512)
        for j in range(1, len(t.locations)):
            assert t.links[j].shape[0] == t.locations[j].shape[0]
            assert np.all(t.links[j] >= 0)
            assert np.all(t.links[j] < t.locations[j - 1].shape[0])

    def test_auto_extension_reaches_unimodal(self):
        s = Sample(np.array([-6.0, -5.9, -6.1, 5.9, 6.0, 6.1]))
        t = mode_tree(s, np.array([0.5, 0.25]), resolution=256)
        assert t.auto_extended >= 1
        assert t.counts[0] == 1
        assert np.all(np.diff(t.bandwidths) < 0)

    def test_auto_extension_exhausted(self):
        s = Sample(np.array([-6.0, -5.9, -6.1, 5.9, 6.0, 6.1]))
        with pytest.raises(RuntimeError, match="doublings"):
            mode_tree(s, np.array([0.5, 0.25]), resolution=256, max_doublings=0)

    def test_rejects_nondecreasing_sweep(self, normal_sample):
        with pytest.raises(ValueError):
            mode_tree(normal_sample, np.array([0.5, 0.5]))


class TestSizer:
    def test_symmetry_center_not_significant(self):
        # two mirrored points cancel exactly in floating point
        s = Sample(np.array([-1.0, 1.0]))
        m = sizer_map(s, np.array([0.0]), np.array([1.0]))
        assert m.derivative[0, 0] == 0.0
        assert m.states[0, 0] in (0, SPARSE)

    def test_symmetry_center_four_points(self):
        s = Sample(np.array([-2.0, -1.0, 1.0, 2.0]))
        m = sizer_map(s, np.array([0.0]), np.array([1.0]))
        assert abs(m.derivative[0, 0]) < 1e-15
        assert m.states[0, 0] in (0, SPARSE)

    def test_steep_flank_increasing(self):
        s, _ = sample_mixture(preset("gauss"), 5000, SeedSpec(15))
        m = sizer_map(s, np.array([-1.0, 1.0]), np.array([0.3]))
        assert m.states[0, 0] == INCREASING
        assert m.states[1, 0] == DECREASING

    def test_map_dimensions(self):
        s, _ = sample_mixture(preset("gauss"), 200, SeedSpec(16))
        xg = np.linspace(-2, 2, 17)
        hg = np.geomspace(1.0, 0.1, 5)
        m = sizer_map(s, xg, hg)
        assert m.states.shape == (17, 5)

    def test_sign_coherence(self):
        s, _ = sample_mixture(preset("mw3"), 1000, SeedSpec(17))
        xg = np.linspace(-4, 1, 40)
        hg = np.geomspace(0.8, 0.05, 8)
        m = sizer_map(s, xg, hg)
        inc = m.states == INCREASING
        dec = m.states == DECREASING
        assert np.all(m.derivative[inc] > 0)
        assert np.all(m.derivative[dec] < 0)

    def test_far_tail_is_sparse(self):
        s, _ = sample_mixture(preset("gauss"), 500, SeedSpec(18))
        m = sizer_map(s, np.array([40.0]), np.array([0.2]))
        assert m.states[0, 0] == SPARSE

    def test_significant_mode_count_unimodal(self):
        s, _ = sample_mixture(preset("gauss"), 3000, SeedSpec(19))
        xg = np.linspace(-2.5, 2.5, 64)
        m = sizer_map(s, xg, np.array([0.4]))
        assert m.significant_mode_counts[0] == 1

    def test_confidence_validation(self):
        s, _ = sample_mixture(preset("gauss"), 100, SeedSpec(20))
        with pytest.raises(ValueError):
            sizer_map(s, np.array([0.0]), np.array([0.5]), confidence=1.5)
