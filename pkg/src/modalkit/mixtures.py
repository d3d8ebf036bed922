"""Gaussian mixture density evaluation and maximum-likelihood fitting.

The EM fitter is written here rather than borrowed because the contract
needs pieces a packaged fitter hides: the per-iteration log-likelihood
trace, a covariance-collapse restart policy, and exact closed-form
behavior for the single-component case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import solve_triangular

from .data import MixtureSpec, Sample, SeedSpec
from .errors import DegenerateFitError

__all__ = [
    "MixtureDensity",
    "GaussianMixtureModel",
    "fit_gmm_em",
    "select_gmm_bic",
    "gmm_parameter_count",
]

_LOG2PI = math.log(2.0 * math.pi)


class MixtureDensity:
    """Density-model adapter over a :class:`MixtureSpec`."""

    def __init__(self, spec: MixtureSpec):
        self.spec = spec
        self._chol = [np.linalg.cholesky(c) for c in spec.covariances]
        self._logdet = [2.0 * np.log(np.diag(c)).sum() for c in self._chol]
        self._inv = [np.linalg.inv(c) for c in spec.covariances]

    @property
    def dim(self) -> int:
        return self.spec.dim

    def scale(self) -> float:
        eig = min(np.linalg.eigvalsh(c).min() for c in self.spec.covariances)
        return float(math.sqrt(max(eig, 0.0)))

    def grid_window(self, margin: float = 3.0):
        sds = np.stack([np.sqrt(np.diag(c)) for c in self.spec.covariances])
        lo = (self.spec.means - margin * sds).min(axis=0)
        hi = (self.spec.means + margin * sds).max(axis=0)
        return lo, hi

    def component_log_pdfs(self, pts: np.ndarray) -> np.ndarray:
        """log(pi_l f_l(x)) for every point/component pair, shape (m, L)."""
        out = np.empty((pts.shape[0], self.spec.component_count))
        for ell in range(self.spec.component_count):
            diff = pts - self.spec.means[ell]
            sol = solve_triangular(self._chol[ell], diff.T, lower=True).T
            maha = (sol * sol).sum(axis=1)
            out[:, ell] = (
                math.log(self.spec.weights[ell])
                - 0.5 * (self.dim * _LOG2PI + self._logdet[ell] + maha)
            )
        return out

    def pdf(self, x):
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        single = np.asarray(x).ndim == 1
        lp = self.component_log_pdfs(pts)
        mx = lp.max(axis=1)
        vals = np.exp(mx) * np.exp(lp - mx[:, None]).sum(axis=1)
        return float(vals[0]) if single else vals

    def gradient(self, x):
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        single = np.asarray(x).ndim == 1
        comp = np.exp(self.component_log_pdfs(pts))  # (m, L) values pi_l f_l
        grads = np.zeros(pts.shape)
        for ell in range(self.spec.component_count):
            diff = pts - self.spec.means[ell]
            grads += comp[:, ell, None] * (-(diff @ self._inv[ell].T))
        return grads[0] if single else grads


@dataclass(frozen=True)
class GaussianMixtureModel(MixtureSpec):
    """Fitted mixture: spec parameters plus fit diagnostics."""

    log_likelihood: float = float("nan")
    bic: float = float("nan")
    loglik_trace: tuple = ()
    n_observations: int = 0

    @cached_property
    def _density(self) -> MixtureDensity:
        return MixtureDensity(self)

    def scale(self) -> float:
        return self._density.scale()

    def grid_window(self, margin: float = 3.0):
        return self._density.grid_window(margin)

    def pdf(self, x):
        return self._density.pdf(x)

    def gradient(self, x):
        return self._density.gradient(x)

    def component_log_pdfs(self, pts):
        return self._density.component_log_pdfs(pts)

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covariances": self.covariances.tolist(),
            "logLikelihood": float(self.log_likelihood),
            "bic": float(self.bic),
            "componentCount": int(self.component_count),
        }


def gmm_parameter_count(L: int, d: int) -> int:
    """Free parameters of an L-component full-covariance mixture in R^d."""
    return L - 1 + L * d + L * d * (d + 1) // 2


def _log_resp(pts, weights, means, chols):
    """Log joint (m, L) and per-point log-likelihood via logsumexp."""
    m = pts.shape[0]
    L = weights.shape[0]
    d = pts.shape[1]
    lj = np.empty((m, L))
    for ell in range(L):
        diff = pts - means[ell]
        sol = solve_triangular(chols[ell], diff.T, lower=True).T
        maha = (sol * sol).sum(axis=1)
        logdet = 2.0 * np.log(np.diag(chols[ell])).sum()
        lj[:, ell] = math.log(weights[ell]) - 0.5 * (d * _LOG2PI + logdet + maha)
    mx = lj.max(axis=1)
    ll = mx + np.log(np.exp(lj - mx[:, None]).sum(axis=1))
    return lj, ll


def _kmeans_init(pts, L, rng):
    """k-means++ seeding plus a few Lloyd rounds; returns centers/labels."""
    n = pts.shape[0]
    centers = np.empty((L, pts.shape[1]))
    centers[0] = pts[rng.integers(n)]
    d2 = ((pts - centers[0]) ** 2).sum(axis=1)
    for ell in range(1, L):
        total = d2.sum()
        if total <= 0:
            centers[ell] = pts[rng.integers(n)]
        else:
            centers[ell] = pts[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((pts - centers[ell]) ** 2).sum(axis=1))
    labels = np.zeros(n, dtype=int)
    for _ in range(10):
        dist = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = dist.argmin(axis=1)
        for ell in range(L):
            mask = labels == ell
            if mask.any():
                centers[ell] = pts[mask].mean(axis=0)
            else:
                centers[ell] = pts[dist.min(axis=1).argmax()]
    return centers, labels


class _Collapsed(Exception):
    pass


def _em_run(pts, L, rng, tol, max_iter, floor):
    n, d = pts.shape
    centers, labels = _kmeans_init(pts, L, rng)
    weights = np.empty(L)
    means = centers.copy()
    covs = np.empty((L, d, d))
    overall = np.cov(pts.T, ddof=0).reshape(d, d)
    for ell in range(L):
        mask = labels == ell
        weights[ell] = max(mask.sum(), 1.0) / n
        covs[ell] = (
            np.cov(pts[mask].T, ddof=0).reshape(d, d) if mask.sum() > d else overall
        )
        if np.linalg.eigvalsh(covs[ell]).min() < floor:
            covs[ell] = overall + floor * np.eye(d)
    weights /= weights.sum()

    trace = []
    chols = [np.linalg.cholesky(c) for c in covs]
    prev = -np.inf
    for _ in range(max_iter):
        lj, ll = _log_resp(pts, weights, means, chols)
        total = ll.sum()
        trace.append(total)
        resp = np.exp(lj - ll[:, None])
        nk = resp.sum(axis=0)
        if np.any(nk <= 0):
            raise _Collapsed
        weights = nk / n
        means = (resp.T @ pts) / nk[:, None]
        for ell in range(L):
            diff = pts - means[ell]
            covs[ell] = (resp[:, ell, None] * diff).T @ diff / nk[ell]
            if np.linalg.eigvalsh(covs[ell]).min() < floor:
                raise _Collapsed
        chols = [np.linalg.cholesky(c) for c in covs]
        if abs(total - prev) < tol:
            break
        prev = total
    _, ll = _log_resp(pts, weights, means, chols)
    trace.append(ll.sum())
    return weights, means, covs, trace


def fit_gmm_em(
    s: Sample,
    L: int,
    seed: SeedSpec,
    *,
    restarts: int = 10,
    tol: float = 1e-8,
    max_iter: int = 500,
) -> GaussianMixtureModel:
    """Maximum-likelihood mixture fit by EM, best of ``restarts`` k-means
    initializations.  A restart whose smallest covariance eigenvalue drops
    below 1e-8 times the data variance is discarded as collapsed; if every
    restart collapses a :class:`DegenerateFitError` is raised.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    if s.n < L * (s.dim + 1):
        raise ValueError(f"need n >= L*(d+1) = {L * (s.dim + 1)} observations")
    pts = s.points
    floor = 1e-8 * float(np.var(pts, axis=0).mean())
    floor = max(floor, 1e-300)

    if L == 1:
        # EM fixed point in closed form: sample mean, ML covariance.
        mean = pts.mean(axis=0)
        cov = np.cov(pts.T, ddof=0).reshape(s.dim, s.dim)
        if np.linalg.eigvalsh(cov).min() < floor:
            raise DegenerateFitError("single-component covariance is singular")
        _, ll = _log_resp(pts, np.array([1.0]), mean[None, :], [np.linalg.cholesky(cov)])
        total = float(ll.sum())
        return GaussianMixtureModel(
            weights=np.array([1.0]),
            means=mean[None, :],
            covariances=cov[None, :, :],
            name="gmm-fit",
            log_likelihood=total,
            bic=-2.0 * total + gmm_parameter_count(1, s.dim) * math.log(s.n),
            loglik_trace=(total,),
            n_observations=s.n,
        )

    best = None
    for r in range(restarts):
        rng = seed.substream(r).generator()
        try:
            weights, means, covs, trace = _em_run(pts, L, rng, tol, max_iter, floor)
        except (_Collapsed, np.linalg.LinAlgError):
            continue
        if best is None or trace[-1] > best[3][-1]:
            best = (weights, means, covs, trace)
    if best is None:
        raise DegenerateFitError(f"all {restarts} EM restarts collapsed for L={L}")
    weights, means, covs, trace = best
    total = float(trace[-1])
    return GaussianMixtureModel(
        weights=weights,
        means=means,
        covariances=covs,
        name="gmm-fit",
        log_likelihood=total,
        bic=-2.0 * total + gmm_parameter_count(L, s.dim) * math.log(s.n),
        loglik_trace=tuple(float(t) for t in trace),
        n_observations=s.n,
    )


def select_gmm_bic(s: Sample, Lmax: int, seed: SeedSpec, **kwargs) -> GaussianMixtureModel:
    """Fit L = 1..Lmax and return the fit with minimal BIC."""
    if Lmax < 1:
        raise ValueError("Lmax must be >= 1")
    best = None
    for L in range(1, Lmax + 1):
        try:
            fit = fit_gmm_em(s, L, seed.substream(1000 * L), **kwargs)
        except (DegenerateFitError, ValueError):
            continue
        if best is None or fit.bic < best.bic:
            best = fit
    if best is None:
        raise DegenerateFitError("no component count produced a usable fit")
    return best
