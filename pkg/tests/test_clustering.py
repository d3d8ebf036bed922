"""Ascent paths and the three partition constructions."""

import itertools

import numpy as np
import pytest

from modalkit import (
    UNASSIGNED,
    AscentConfig,
    EvalGrid,
    KernelDensityModel,
    MixtureSpec,
    Sample,
    SeedSpec,
    ascent_path,
    count_modes,
    fit_gmm_em,
    gmm_modal_partition,
    modal_partition,
    parametric_partition,
    preset,
    sample_mixture,
)
from modalkit.mixtures import MixtureDensity

from .oracles import dense_grid_argmax


def best_agreement(labels_a, labels_b, r):
    """Max fraction of identical labels over label permutations."""
    best = 0.0
    for perm in itertools.permutations(range(1, r + 1)):
        mapped = np.array([perm[l - 1] if l >= 1 else 0 for l in labels_a])
        best = max(best, float((mapped == labels_b).mean()))
    return best


class TestAscentPath:
    def test_single_datum_fixed_point(self):
        m = KernelDensityModel(Sample(np.array([0.0])), bandwidth=1.0)
        p = ascent_path(m, np.array([2.5]))
        assert p.converged and not p.saddle
        assert p.terminal[0] == pytest.approx(0.0, abs=1e-8)

    def test_symmetric_start_is_saddle_flagged(self):
        m = KernelDensityModel(Sample(np.array([-1.0, 1.0])), bandwidth=0.3)
        p = ascent_path(m, np.array([0.0]))
        assert p.converged
        assert p.saddle
        assert p.terminal[0] == pytest.approx(0.0, abs=1e-12)

    def test_finds_right_mode_vs_dense_grid(self):
        m = KernelDensityModel(Sample(np.array([-1.0, 1.0])), bandwidth=0.3)
        p = ascent_path(m, np.array([0.9]))
        oracle, _ = dense_grid_argmax(lambda xs: m.pdf(xs[:, None]), 0.0, 2.0)
        assert p.terminal[0] == pytest.approx(oracle, abs=1e-4)
        assert not p.saddle

    def test_density_nondecreasing_along_path(self):
        s, _ = sample_mixture(preset("gauss"), 300, SeedSpec(30))
        m = KernelDensityModel(s, bandwidth=0.25)
        for x0 in (-2.0, -0.5, 1.7):
            p = ascent_path(m, np.array([x0]))
            assert np.all(np.diff(p.densities) >= -1e-12)

    def test_idempotent_restart(self):
        s, _ = sample_mixture(preset("gauss"), 300, SeedSpec(31))
        m = KernelDensityModel(s, bandwidth=0.3)
        p = ascent_path(m, np.array([1.2]))
        q = ascent_path(m, p.terminal)
        tol = AscentConfig().tol_factor * m.scale()
        assert np.linalg.norm(q.terminal - p.terminal) < 10 * tol

    def test_gmm_gradient_ascent(self):
        spec = MixtureSpec([0.5, 0.5], [[-4.0], [4.0]], [[[1.0]], [[1.0]]])
        md = MixtureDensity(spec)
        p = ascent_path(md, np.array([3.0]))
        assert p.converged
        assert p.terminal[0] == pytest.approx(4.0, abs=1e-3)


class TestModalPartition:
    def test_trimodal_recovery(self):
        spec = preset("trimodal-sep8")
        s, truth = sample_mixture(spec, 900, SeedSpec(32))
        part = modal_partition(KernelDensityModel(s), s)
        assert part.r == 3
        assert best_agreement(truth + 1, part.labels, 3) >= 0.99
        assert part.diagnostics["unassigned"] == 0

    def test_unimodal_single_cluster(self):
        s, _ = sample_mixture(preset("gauss"), 400, SeedSpec(33))
        # wide bandwidth guarantees the estimate itself is unimodal
        part = modal_partition(KernelDensityModel(s, bandwidth=1.0), s)
        assert part.r == 1
        assert np.all(part.labels == 1)

    def test_partition_properties(self):
        s, _ = sample_mixture(preset("trimodal-sep8"), 600, SeedSpec(34))
        part = modal_partition(KernelDensityModel(s), s)
        assert part.labels.shape[0] == s.n
        assigned = part.labels[part.labels != UNASSIGNED]
        assert set(assigned) == set(range(1, part.r + 1))
        # representatives pairwise separated
        for i in range(part.r):
            for j in range(i + 1, part.r):
                d = np.linalg.norm(part.representatives[i] - part.representatives[j])
                assert d > 1e-3 * KernelDensityModel(s).scale()

    def test_subset_labels_are_pointwise(self):
        s, _ = sample_mixture(preset("trimodal-sep8"), 600, SeedSpec(35))
        model = KernelDensityModel(s)
        full = modal_partition(model, s)
        idx = np.arange(0, s.n, 3)
        sub = modal_partition(model, s.points[idx])
        for i_sub, i_full in enumerate(idx):
            if sub.labels[i_sub] == UNASSIGNED or full.labels[i_full] == UNASSIGNED:
                continue
            rep_sub = sub.representatives[sub.labels[i_sub] - 1]
            rep_full = full.representatives[full.labels[i_full] - 1]
            assert np.linalg.norm(rep_sub - rep_full) < 1e-6

    def test_translation_equivariance(self):
        s, _ = sample_mixture(preset("gauss"), 200, SeedSpec(36))
        b = 7.25
        m1 = KernelDensityModel(s, bandwidth=0.4)
        m2 = KernelDensityModel(Sample(s.points + b), bandwidth=0.4)
        p1 = modal_partition(m1, s.points)
        p2 = modal_partition(m2, s.points + b)
        np.testing.assert_allclose(
            p2.representatives, p1.representatives + b, atol=1e-9
        )

    def test_r_matches_count_modes(self):
        s, _ = sample_mixture(preset("mw3"), 500, SeedSpec(37))
        model = KernelDensityModel(s, bandwidth=0.25)
        part = modal_partition(model, s)
        gm = count_modes(model, EvalGrid.for_model(model, resolution=4096))
        assert part.r == gm.count

    def test_accepts_grid_input(self):
        s = Sample(np.array([-3.0, -2.9, 3.0, 3.1]))
        model = KernelDensityModel(s, bandwidth=0.5)
        grid = EvalGrid.regular(-4.0, 4.0, 32)
        part = modal_partition(model, grid)
        assert part.r == 2
        assert part.labels.shape[0] == 32


class TestParametricPartition:
    @pytest.fixture(scope="class")
    def gmm(self):
        spec = MixtureSpec([0.5, 0.5], [[0.0], [4.0]], [[[1.0]], [[1.0]]])
        s, _ = sample_mixture(spec, 1200, SeedSpec(38))
        return fit_gmm_em(s, 2, SeedSpec(38))

    def test_halfway_point_example(self):
        spec = MixtureSpec([0.5, 0.5], [[0.0], [4.0]], [[[1.0]], [[1.0]]])
        gmm = MixtureDensity(spec)

        # direct densities: x=1 belongs to the left component
        class _Wrap:
            component_count = 2
            means = spec.means

            @staticmethod
            def component_log_pdfs(pts):
                return gmm.component_log_pdfs(pts)

        part = parametric_partition(_Wrap, np.array([[1.0]]))
        assert part.labels[0] == 1

    def test_exact_tie_boundary_flag(self):
        spec = MixtureSpec([0.5, 0.5], [[0.0], [4.0]], [[[1.0]], [[1.0]]])

        class _Wrap:
            component_count = 2
            means = spec.means
            component_log_pdfs = staticmethod(MixtureDensity(spec).component_log_pdfs)

        part = parametric_partition(_Wrap, np.array([[2.0], [1.0]]))
        assert part.labels[0] == 1  # smallest index on the tie
        assert 0 in part.diagnostics["boundary_points"]

    def test_single_component(self):
        spec = MixtureSpec([1.0], [[0.0]], [[[1.0]]])

        class _Wrap:
            component_count = 1
            means = spec.means
            component_log_pdfs = staticmethod(MixtureDensity(spec).component_log_pdfs)

        part = parametric_partition(_Wrap, np.linspace(-2, 2, 9)[:, None])
        assert part.r == 1
        assert np.all(part.labels == 1)

    def test_fitted_partition_sensible(self, gmm):
        pts = np.array([[-1.0], [5.0]])
        part = parametric_partition(gmm, pts)
        assert part.labels[0] != part.labels[1]


class TestGmmModalPartition:
    def test_overlapping_components_merge(self):
        spec = MixtureSpec([0.5, 0.5], [[0.0], [1.0]], [[[1.0]], [[1.0]]])
        s, _ = sample_mixture(spec, 1500, SeedSpec(39))
        gmm = fit_gmm_em(s, 2, SeedSpec(39))
        part = gmm_modal_partition(gmm, s)
        assert gmm.component_count == 2
        assert part.r == 1

    def test_separated_components_agree_with_parametric(self):
        spec = MixtureSpec([0.5, 0.5], [[0.0], [10.0]], [[[1.0]], [[1.0]]])
        s, _ = sample_mixture(spec, 1500, SeedSpec(40))
        gmm = fit_gmm_em(s, 2, SeedSpec(40))
        modal = gmm_modal_partition(gmm, s)
        param = parametric_partition(gmm, s)
        assert modal.r == 2
        agree = best_agreement(param.labels, modal.labels, 2)
        assert agree >= 0.99

    def test_single_component_identical_to_parametric(self):
        s, _ = sample_mixture(preset("gauss"), 500, SeedSpec(41))
        gmm = fit_gmm_em(s, 1, SeedSpec(41))
        modal = gmm_modal_partition(gmm, s)
        param = parametric_partition(gmm, s)
        assert modal.r == param.r == 1
        np.testing.assert_array_equal(modal.labels, param.labels)


def test_partition_json_shape():
    s, _ = sample_mixture(preset("gauss"), 100, SeedSpec(42))
    part = modal_partition(KernelDensityModel(s), s)
    d = part.to_dict()
    assert set(d) == {"labels", "representatives", "r", "method", "diagnostics"}
    assert len(d["labels"]) == 100
