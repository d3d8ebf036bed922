"""Monte Carlo harness checking convergence rates of the mode estimators.

For each sample size the harness draws seeded replicate samples on
independent substreams, estimates the mode, and aggregates the RMSE
against the preset's true mode; an ordinary least-squares fit of
log RMSE on log n gives the empirical rate.  For the kernel estimator the
large-sample constants derived from the kernel functionals and the
preset's density derivatives at the mode are attached for comparison.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import backend
from .data import MixtureSpec, SeedSpec, preset, sample_mixture
from .density import KernelDensityModel, KernelSpec, kernel_functionals
from .direct import (
    chernoff_mode,
    dalenius_venter_mode,
    grenander_mode,
    robertson_cryer_mode,
)
from .modes import kernel_mode

__all__ = ["RateReport", "simulate_rate", "replicate_estimates", "preset_target"]

METHODS = ("kernel", "chernoff", "dv", "hsm", "grenander")

_THEORETICAL_SLOPE = {
    "kernel": -2.0 / 7.0,
    "grenander": -2.0 / 7.0,
    "chernoff": -0.25,
    "dv": -0.2,
    "hsm": None,
}


@dataclass(frozen=True)
class PresetTarget:
    """True mode and density derivatives of a 1-d mixture at its mode."""

    theta: float
    f: float
    f2: float
    f3: float
    sd: float


def _mixture_derivs(spec: MixtureSpec, x):
    """Density and its first three derivatives of a 1-d Gaussian mixture."""
    w = spec.weights
    mu = spec.means[:, 0]
    sd = np.sqrt(spec.covariances[:, 0, 0])
    u = (np.atleast_1d(np.asarray(x, dtype=float))[:, None] - mu) / sd
    phi = np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)
    f = (w / sd * phi).sum(axis=1)
    f1 = (w / sd**2 * (-u) * phi).sum(axis=1)
    f2 = (w / sd**3 * (u * u - 1.0) * phi).sum(axis=1)
    f3 = (w / sd**4 * (3.0 * u - u**3) * phi).sum(axis=1)
    if np.asarray(x).ndim == 0:
        return float(f[0]), float(f1[0]), float(f2[0]), float(f3[0])
    return f, f1, f2, f3


def preset_target(spec: MixtureSpec) -> PresetTarget:
    """Locate the global mode by dense scan plus Newton refinement and
    evaluate the density derivatives there."""
    if spec.dim != 1:
        raise ValueError("rate targets are defined for 1-d presets only")
    mu = spec.means[:, 0]
    sd = np.sqrt(spec.covariances[:, 0, 0])
    lo = float((mu - 4.0 * sd).min())
    hi = float((mu + 4.0 * sd).max())
    xs = np.linspace(lo, hi, 8193)
    vals = _mixture_derivs(spec, xs)[0]
    x0 = float(xs[int(np.argmax(vals))])
    for _ in range(60):
        _, f1, f2, _ = _mixture_derivs(spec, x0)
        if f2 >= 0.0:
            break
        step = -f1 / f2
        step = max(-(hi - lo) / 100.0, min((hi - lo) / 100.0, step))
        x0 += step
        if abs(step) <= 1e-14 * max(1.0, abs(x0)):
            break
    f, _, f2, f3 = _mixture_derivs(spec, x0)
    overall_sd = float(np.sqrt(spec.covariance()[0, 0]))
    return PresetTarget(theta=x0, f=f, f2=f2, f3=f3, sd=overall_sd)


def _estimate_once(method, spec, target, n, seed, c):
    sample, _ = sample_mixture(spec, n, seed)
    if method == "kernel":
        h = c * n ** (-1.0 / 7.0)
        model = KernelDensityModel(sample, bandwidth=h, kernel=KernelSpec("gaussian"))
        return float(kernel_mode(model, grid=256).location[0])
    if method == "chernoff":
        a = c * target.sd * n ** (-1.0 / 8.0)
        return chernoff_mode(sample, a).location
    if method == "dv":
        k = int(min(n, max(2, math.ceil(c * n ** 0.8))))
        return dalenius_venter_mode(sample, k).location
    if method == "hsm":
        return robertson_cryer_mode(sample, 0.5).location
    if method == "grenander":
        p = c * n ** (2.0 / 7.0)
        k = int(min(n - 1, max(2, math.ceil(n ** 0.6))))
        return grenander_mode(sample, k, p).location
    raise ValueError(f"unknown method {method!r}; choose from {METHODS}")


def replicate_estimates(
    method: str,
    spec: MixtureSpec,
    n: int,
    replicates: int,
    seed: SeedSpec,
    c: float = 1.0,
    stream_base: int = 1,
    max_failure_fraction: float = 0.01,
):
    """Mode estimates over seeded replicate substreams (ordered by stream).

    Raises when more than ``max_failure_fraction`` of the replicates fail;
    otherwise failed replicates are dropped and counted.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    target = preset_target(spec)

    def one(i):
        try:
            return _estimate_once(method, spec, target, n, seed.substream(stream_base + i), c)
        except Exception as exc:  # noqa: BLE001 - failures are tallied below
            return exc

    workers = backend.thread_count()
    if workers > 1 and replicates >= 2 * workers:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(one, range(replicates)))
    else:
        results = [one(i) for i in range(replicates)]
    failures = [r for r in results if isinstance(r, Exception)]
    if len(failures) > max_failure_fraction * replicates:
        raise RuntimeError(
            f"{len(failures)}/{replicates} replicates failed for {method} at n={n}; "
            f"first failure: {failures[0]!r}"
        )
    est = np.array([r for r in results if not isinstance(r, Exception)], dtype=float)
    return est, len(failures), target


@dataclass(frozen=True)
class RateReport:
    method: str
    preset_name: str
    kernel_family: str
    n_grid: np.ndarray
    rmse: np.ndarray
    failures: np.ndarray
    slope: float
    slope_se: float
    intercept: float
    theoretical_slope: float | None
    v_k_squared: float | None
    b_k: float | None
    replicates: int
    seed: int
    c: float

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "preset": self.preset_name,
            "kernel": self.kernel_family,
            "nGrid": self.n_grid.tolist(),
            "rmse": self.rmse.tolist(),
            "failures": self.failures.tolist(),
            "slope": float(self.slope),
            "slopeStdError": float(self.slope_se),
            "intercept": float(self.intercept),
            "theoreticalSlope": self.theoretical_slope,
            "vKSquared": self.v_k_squared,
            "bK": self.b_k,
            "replicates": int(self.replicates),
            "seed": int(self.seed),
            "c": float(self.c),
        }


def _ols_loglog(ns, rmse):
    lx = np.log(ns)
    ly = np.log(rmse)
    m = lx.shape[0]
    xbar = lx.mean()
    sxx = ((lx - xbar) ** 2).sum()
    slope = ((lx - xbar) * (ly - ly.mean())).sum() / sxx
    intercept = ly.mean() - slope * xbar
    if m > 2:
        resid = ly - (intercept + slope * lx)
        se = math.sqrt((resid**2).sum() / (m - 2) / sxx)
    else:
        se = float("nan")
    return slope, intercept, se


def simulate_rate(
    method: str,
    distribution,
    n_grid,
    replicates: int,
    seed: SeedSpec,
    c: float = 1.0,
) -> RateReport:
    """Empirical RMSE-vs-n study for one estimator on one preset."""
    if isinstance(distribution, str):
        spec = preset(distribution)
    else:
        spec = distribution
    n_grid = np.asarray(n_grid, dtype=int)
    if n_grid.ndim != 1 or np.any(np.diff(n_grid) <= 0):
        raise ValueError("n_grid must be strictly increasing")
    if replicates < 50:
        raise ValueError("need at least 50 replicates")

    rmse = np.empty(n_grid.shape[0])
    fails = np.zeros(n_grid.shape[0], dtype=int)
    target = preset_target(spec)
    for b, n in enumerate(n_grid):
        est, nfail, _ = replicate_estimates(
            method, spec, int(n), replicates, seed, c=c,
            stream_base=1 + b * replicates,
        )
        rmse[b] = math.sqrt(float(np.mean((est - target.theta) ** 2)))
        fails[b] = nfail
    slope, intercept, se = _ols_loglog(n_grid.astype(float), rmse)

    vk2 = bk = None
    if method == "kernel":
        fns = kernel_functionals(KernelSpec("gaussian"))
        vk2 = target.f / target.f2**2 * fns.r_kprime
        bk = 0.5 * c**3.5 * (target.f3 / target.f2) * fns.mu2
    return RateReport(
        method=method,
        preset_name=spec.name or "custom",
        kernel_family="gaussian",
        n_grid=n_grid,
        rmse=rmse,
        failures=fails,
        slope=slope,
        slope_se=se,
        intercept=intercept,
        theoretical_slope=_THEORETICAL_SLOPE[method],
        v_k_squared=vk2,
        b_k=bk,
        replicates=replicates,
        seed=seed.seed,
        c=c,
    )
