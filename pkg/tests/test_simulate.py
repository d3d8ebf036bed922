"""Monte Carlo rate harness."""

import math

import numpy as np
import pytest

from modalkit import SeedSpec, preset, replicate_estimates, simulate_rate
from modalkit.simulate import preset_target


class TestPresetTarget:
    def test_standard_normal_derivatives(self):
        t = preset_target(preset("gauss"))
        phi0 = 1.0 / math.sqrt(2.0 * math.pi)
        assert t.theta == pytest.approx(0.0, abs=1e-9)
        assert t.f == pytest.approx(phi0, rel=1e-9)
        assert t.f2 == pytest.approx(-phi0, rel=1e-9)
        assert t.f3 == pytest.approx(0.0, abs=1e-9)

    def test_mw3_mode(self):
        t = preset_target(preset("mw3"))
        assert t.theta == pytest.approx(-2.8003, abs=2e-3)

    def test_rejects_multivariate(self):
        with pytest.raises(ValueError):
            preset_target(preset("trimodal-sep8"))


class TestSimulateRate:
    def test_variance_constant_value(self):
        # v^2 = {f(theta)/f''(theta)^2} R(K') = sqrt(2 pi)/(4 sqrt(pi)) for N(0,1)
        r = simulate_rate("kernel", "gauss", [200, 400], 50, SeedSpec(1))
        assert r.v_k_squared == pytest.approx(0.35355, abs=5e-5)
        assert r.v_k_squared == pytest.approx(math.sqrt(2.0) / 4.0, rel=1e-6)
        assert r.b_k == pytest.approx(0.0, abs=1e-9)
        assert r.theoretical_slope == pytest.approx(-2.0 / 7.0)

    def test_deterministic_reports(self):
        from modalkit.serialize import dumps

        a = simulate_rate("hsm", "gauss", [100, 200], 50, SeedSpec(3))
        b = simulate_rate("hsm", "gauss", [100, 200], 50, SeedSpec(3))
        np.testing.assert_array_equal(a.rmse, b.rmse)
        assert dumps(a) == dumps(b)

    def test_rmse_positive_and_slope_finite(self):
        r = simulate_rate("dv", "gauss", [100, 200, 400], 60, SeedSpec(4))
        assert np.all(r.rmse > 0)
        assert np.isfinite(r.slope)
        assert np.isfinite(r.slope_se)
        assert r.theoretical_slope == pytest.approx(-0.2)
        assert r.v_k_squared is None

    def test_validation(self):
        with pytest.raises(ValueError, match="increasing"):
            simulate_rate("hsm", "gauss", [200, 100], 50, SeedSpec(0))
        with pytest.raises(ValueError, match="replicates"):
            simulate_rate("hsm", "gauss", [100, 200], 10, SeedSpec(0))
        with pytest.raises(ValueError, match="unknown method"):
            simulate_rate("nope", "gauss", [100, 200], 50, SeedSpec(0))

    def test_failing_estimator_aborts_with_diagnostics(self):
        # negative scale constant makes every kernel fit invalid
        with pytest.raises(RuntimeError, match="replicates failed"):
            replicate_estimates("kernel", preset("gauss"), 100, 60, SeedSpec(5), c=-1.0)


class TestReplicateEstimates:
    def test_substreams_are_independent_of_execution_order(self, monkeypatch):
        est1, nf1, _ = replicate_estimates("hsm", preset("gauss"), 200, 60, SeedSpec(6))
        monkeypatch.setenv("MODAL_THREADS", "1")
        est2, nf2, _ = replicate_estimates("hsm", preset("gauss"), 200, 60, SeedSpec(6))
        np.testing.assert_array_equal(est1, est2)
        assert nf1 == nf2 == 0

    def test_block_streams_do_not_overlap(self):
        a, _, _ = replicate_estimates("hsm", preset("gauss"), 100, 50, SeedSpec(7), stream_base=1)
        b, _, _ = replicate_estimates("hsm", preset("gauss"), 100, 50, SeedSpec(7), stream_base=51)
        assert not np.array_equal(a, b)
