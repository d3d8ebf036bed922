"""Sample container, CSV ingestion, mixture sampling."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modalkit import (
    DataFormatError,
    MixtureSpec,
    Sample,
    SeedSpec,
    load_csv,
    order_statistics,
    preset,
    sample_mixture,
)


class TestLoadCsv:
    def test_single_column_identity(self, tmp_path):
        f = tmp_path / "a.csv"
        f.write_text("1\n2\n3\n")
        s = load_csv(f, columns=[0])
        assert s.dim == 1
        np.testing.assert_array_equal(s.points, [[1.0], [2.0], [3.0]])

    def test_header_skip(self, tmp_path):
        f = tmp_path / "b.csv"
        f.write_text("x,y\n0,1\n")
        s = load_csv(f, columns=[0, 1])
        assert s.dim == 2
        np.testing.assert_array_equal(s.points, [[0.0, 1.0]])

    def test_header_by_name(self, tmp_path):
        f = tmp_path / "c.csv"
        f.write_text("x,y\n0,1\n2,3\n")
        s = load_csv(f, columns=["y"])
        np.testing.assert_array_equal(s.points, [[1.0], [3.0]])

    def test_non_numeric_cell_position(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("1\nfoo\n")
        with pytest.raises(DataFormatError, match="row 2, column 0"):
            load_csv(f)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataFormatError):
            load_csv(tmp_path / "nope.csv")

    def test_empty_selection(self, tmp_path):
        f = tmp_path / "e.csv"
        f.write_text("1,2\n")
        with pytest.raises(DataFormatError, match="empty"):
            load_csv(f, columns=[])

    def test_non_finite_rejected(self, tmp_path):
        f = tmp_path / "f.csv"
        f.write_text("1\nnan\n")
        with pytest.raises(DataFormatError, match="row 2"):
            load_csv(f)


class TestSample:
    def test_requires_finite(self):
        with pytest.raises(DataFormatError):
            Sample(np.array([1.0, np.inf]))

    def test_requires_nonempty(self):
        with pytest.raises(DataFormatError):
            Sample(np.empty((0, 1)))

    def test_immutable(self):
        s = Sample(np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            s.points[0, 0] = 5.0


class TestMixtureSpec:
    def test_degenerate_weight_rejected(self):
        with pytest.raises(ValueError, match="strictly positive"):
            MixtureSpec([1.0, 0.0], [[0.0], [1.0]], [[[1.0]], [[1.0]]])

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum to 1"):
            MixtureSpec([0.6, 0.6], [[0.0], [1.0]], [[[1.0]], [[1.0]]])

    def test_asymmetric_covariance_rejected(self):
        with pytest.raises(ValueError, match="symmetric"):
            MixtureSpec([1.0], [[0.0, 0.0]], [[[1.0, 0.5], [0.2, 1.0]]])

    def test_indefinite_covariance_rejected(self):
        with pytest.raises(ValueError, match="positive definite"):
            MixtureSpec([1.0], [[0.0, 0.0]], [[[1.0, 2.0], [2.0, 1.0]]])

    def test_mw3_moments_match_closed_form(self):
        spec = preset("mw3")
        r = Fraction(2, 3)
        mean = Fraction(3, 8) * sum(r**l for l in range(8)) - 3
        second = Fraction(1, 8) * sum(
            r ** (2 * l) + 9 * (r**l - 1) ** 2 for l in range(8)
        )
        var = second - mean**2
        assert spec.mean()[0] == pytest.approx(float(mean), abs=1e-12)
        assert spec.covariance()[0, 0] == pytest.approx(float(var), abs=1e-12)

    def test_presets_resolve(self):
        assert preset("gauss").component_count == 1
        assert preset("mw3").component_count == 8
        tri = preset("trimodal-sep8")
        d = np.linalg.norm(tri.means[:, None, :] - tri.means[None, :, :], axis=2)
        assert d[np.triu_indices(3, 1)] == pytest.approx(8.0)

    def test_unknown_preset(self):
        with pytest.raises(KeyError):
            preset("nope")


class TestSampleMixture:
    def test_large_sample_moments(self):
        s, _ = sample_mixture(preset("gauss"), 10**5, SeedSpec(1))
        assert abs(s.points.mean()) < 0.02
        assert abs(s.points.var() - 1.0) < 0.05

    def test_determinism(self):
        spec = preset("trimodal-sep8")
        a, la = sample_mixture(spec, 500, SeedSpec(9, 3))
        b, lb = sample_mixture(spec, 500, SeedSpec(9, 3))
        np.testing.assert_array_equal(a.points, b.points)
        np.testing.assert_array_equal(la, lb)

    def test_substreams_differ(self):
        spec = preset("gauss")
        a, _ = sample_mixture(spec, 100, SeedSpec(9, 0))
        b, _ = sample_mixture(spec, 100, SeedSpec(9, 1))
        assert not np.array_equal(a.points, b.points)

    def test_labels_match_components(self):
        spec = preset("trimodal-sep8")
        s, labels = sample_mixture(spec, 2000, SeedSpec(4))
        for ell in range(3):
            pts = s.points[labels == ell]
            assert np.linalg.norm(pts.mean(axis=0) - spec.means[ell]) < 0.2

    def test_moment_error_decreases_with_n(self):
        # prefix samples of one long stream form the fixed seed family
        spec = preset("gauss")
        monotone = 0
        for sd in range(20):
            s, _ = sample_mixture(spec, 10**5, SeedSpec(25000 + sd))
            x = s.points[:, 0]
            errs = [abs(x[:n].mean()) for n in (10**3, 10**4, 10**5)]
            if errs[0] > errs[1] > errs[2]:
                monotone += 1
        assert monotone >= 18

    def test_invalid_n(self):
        with pytest.raises(ValueError):
            sample_mixture(preset("gauss"), 0, SeedSpec(0))


class TestOrderStatistics:
    def test_sorts(self):
        assert list(order_statistics(Sample(np.array([3.0, 1.0, 2.0])))) == [1, 2, 3]

    def test_singleton(self):
        assert list(order_statistics(Sample(np.array([5.0])))) == [5.0]

    def test_ties_preserved(self):
        assert list(order_statistics(Sample(np.array([2.0, 2.0, 1.0])))) == [1, 2, 2]

    def test_rejects_multivariate(self):
        with pytest.raises(ValueError):
            order_statistics(Sample(np.zeros((3, 2))))

    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50))
    def test_permutation_property(self, values):
        out = order_statistics(Sample(np.array(values)))
        assert np.all(np.diff(out) >= 0)
        np.testing.assert_array_equal(np.sort(values), out)
