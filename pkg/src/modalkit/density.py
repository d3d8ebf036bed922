"""Kernel and nearest-neighbor density estimators behind one interface.

Every model exposes ``dim``, ``pdf(points)`` and, where defined,
``gradient(points)``, plus ``scale()`` (the smallest smoothing length,
used to derive convergence and merge tolerances) and ``grid_window()``
(a sensible evaluation window).  Gaussian-kernel evaluation is routed
through :mod:`modalkit.backend`; the bounded-support kernels are plain
numpy since nothing hot depends on them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .data import Sample
from .errors import InfiniteDensityError, UnsupportedKernelError

__all__ = [
    "KernelSpec",
    "KernelFunctionals",
    "kernel_functionals",
    "KernelDensityModel",
    "NearestNeighborModel",
    "normal_reference_bandwidth",
    "unit_ball_volume",
]

_SQRT2PI = math.sqrt(2.0 * math.pi)

_FAMILIES = ("gaussian", "uniform", "epanechnikov")


@dataclass(frozen=True)
class KernelSpec:
    """One of the implemented unit-integral kernel families."""

    family: str = "gaussian"

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise UnsupportedKernelError(
                f"unknown kernel family {self.family!r}; choose from {_FAMILIES}"
            )

    @property
    def differentiable(self) -> bool:
        return self.family != "uniform"

    def profile(self, u: np.ndarray) -> np.ndarray:
        """K(u) for scalar argument(s)."""
        u = np.asarray(u, dtype=float)
        if self.family == "gaussian":
            return np.exp(-0.5 * u * u) / _SQRT2PI
        if self.family == "uniform":
            return np.where(np.abs(u) <= 1.0, 0.5, 0.0)
        return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)

    def profile_deriv(self, u: np.ndarray) -> np.ndarray:
        """K'(u); defined a.e. for the Epanechnikov kernel, not for uniform."""
        u = np.asarray(u, dtype=float)
        if self.family == "gaussian":
            return -u * np.exp(-0.5 * u * u) / _SQRT2PI
        if self.family == "epanechnikov":
            return np.where(np.abs(u) <= 1.0, -1.5 * u, 0.0)
        raise UnsupportedKernelError("uniform kernel has no usable derivative")


@dataclass(frozen=True)
class KernelFunctionals:
    """Roughness of the kernel derivative and kernel second moment."""

    r_kprime: float
    mu2: float


def kernel_functionals(kernel: KernelSpec) -> KernelFunctionals:
    """Closed-form integral of K'(x)^2 and of x^2 K(x) per family."""
    if kernel.family == "gaussian":
        return KernelFunctionals(r_kprime=1.0 / (4.0 * math.sqrt(math.pi)), mu2=1.0)
    if kernel.family == "uniform":
        return KernelFunctionals(r_kprime=0.0, mu2=1.0 / 3.0)
    return KernelFunctionals(r_kprime=1.5, mu2=0.2)


def normal_reference_bandwidth(sample: Sample) -> np.ndarray:
    """Per-coordinate normal-reference bandwidths.

    h_j = sd_j * (4 / (d + 2))^(1/(d+4)) * n^(-1/(d+4)).  A plain default:
    data-driven selection is deliberately out of scope, so callers that
    care should pass explicit bandwidths.
    """
    n, d = sample.n, sample.dim
    sd = sample.points.std(axis=0, ddof=1) if n > 1 else np.ones(d)
    sd = np.where(sd > 0, sd, 1.0)
    return sd * (4.0 / (d + 2.0)) ** (1.0 / (d + 4.0)) * n ** (-1.0 / (d + 4.0))


def _as_points(x, dim: int) -> tuple[np.ndarray, bool]:
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1 or pts.ndim == 0
    pts = np.atleast_2d(pts)
    if pts.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got shape {pts.shape}")
    return np.ascontiguousarray(pts), single


@dataclass(frozen=True)
class KernelDensityModel:
    """Product-kernel density estimate with one bandwidth per coordinate."""

    sample: Sample
    bandwidth: np.ndarray = None
    kernel: KernelSpec = field(default_factory=KernelSpec)

    def __post_init__(self):
        h = self.bandwidth
        if h is None:
            h = normal_reference_bandwidth(self.sample)
        h = np.broadcast_to(np.asarray(h, dtype=float), (self.sample.dim,)).copy()
        if np.any(h <= 0.0) or not np.all(np.isfinite(h)):
            raise ValueError("bandwidths must be positive finite")
        h.setflags(write=False)
        object.__setattr__(self, "bandwidth", h)

    @property
    def dim(self) -> int:
        return self.sample.dim

    def scale(self) -> float:
        return float(self.bandwidth.min())

    def grid_window(self, margin: float = 3.0):
        lo = self.sample.points.min(axis=0) - margin * self.bandwidth
        hi = self.sample.points.max(axis=0) + margin * self.bandwidth
        return lo, hi

    def pdf(self, x) -> np.ndarray | float:
        pts, single = _as_points(x, self.dim)
        data = self.sample.points
        h = self.bandwidth
        if self.kernel.family == "gaussian":
            if self.dim == 1:
                out = backend.kde_1d(pts[:, 0], np.ascontiguousarray(data[:, 0]), h[0])
            else:
                out = backend.kde_nd(pts, np.ascontiguousarray(data), h)
        else:
            out = np.empty(pts.shape[0])
            for a in range(0, pts.shape[0], 1024):
                u = (pts[a:a + 1024, None, :] - data[None, :, :]) / h
                out[a:a + 1024] = self.kernel.profile(u).prod(axis=2).sum(axis=1)
            out /= self.sample.n * h.prod()
        return float(out[0]) if single else out

    def gradient(self, x) -> np.ndarray:
        """Analytic gradient of :meth:`pdf`; undefined for the uniform kernel."""
        if not self.kernel.differentiable:
            raise UnsupportedKernelError("uniform-kernel density has no gradient")
        pts, single = _as_points(x, self.dim)
        data = self.sample.points
        h = self.bandwidth
        if self.kernel.family == "gaussian":
            if self.dim == 1:
                _, g = backend.kde_grad_1d(pts[:, 0], np.ascontiguousarray(data[:, 0]), h[0])
                grads = g[:, None]
            else:
                _, grads = backend.kde_grad_nd(pts, np.ascontiguousarray(data), h)
        else:
            grads = np.empty(pts.shape)
            for a in range(0, pts.shape[0], 1024):
                u = (pts[a:a + 1024, None, :] - data[None, :, :]) / h
                prof = self.kernel.profile(u)
                dprof = self.kernel.profile_deriv(u)
                g = np.empty((u.shape[0], self.dim))
                for j in range(self.dim):
                    term = dprof[:, :, j] / h[j]
                    for k in range(self.dim):
                        if k != j:
                            term = term * prof[:, :, k]
                    g[:, j] = term.sum(axis=1)
                grads[a:a + 1024] = g
            grads /= self.sample.n * h.prod()
        return grads[0] if single else grads

    def pdf_at_sample_points(self) -> np.ndarray:
        return np.asarray(self.pdf(self.sample.points))


def unit_ball_volume(d: int) -> float:
    """Volume of the Euclidean unit ball in R^d."""
    return math.pi ** (d / 2.0) / math.gamma(1.0 + d / 2.0)


@dataclass(frozen=True)
class NearestNeighborModel:
    """k-th nearest neighbor density estimate."""

    sample: Sample
    k: int

    def __post_init__(self):
        if not 1 <= self.k <= self.sample.n:
            raise ValueError(f"k must lie in [1, {self.sample.n}]")

    @property
    def dim(self) -> int:
        return self.sample.dim

    def scale(self) -> float:
        spread = float(np.ptp(self.sample.points, axis=0).max())
        return spread / max(self.sample.n, 2) if spread > 0 else 1.0

    def grid_window(self, margin: float = 0.0):
        span = np.ptp(self.sample.points, axis=0)
        lo = self.sample.points.min(axis=0) - margin * span
        hi = self.sample.points.max(axis=0) + margin * span
        return lo, hi

    def _kth_distance(self, pts: np.ndarray, exclude_self: bool) -> np.ndarray:
        data = self.sample.points
        k = self.k
        out = np.empty(pts.shape[0])
        for a in range(0, pts.shape[0], 512):
            diff = pts[a:a + 512, None, :] - data[None, :, :]
            dist = np.sqrt((diff * diff).sum(axis=2))
            if exclude_self:
                # drop one zero per row (the query itself is a sample point)
                dist = np.sort(dist, axis=1)[:, 1:]
                out[a:a + 512] = dist[:, k - 1]
            else:
                out[a:a + 512] = np.partition(dist, k - 1, axis=1)[:, k - 1]
        return out

    def pdf(self, x) -> np.ndarray | float:
        """Density k / (n v_d r_k(x)^d) with r_k the k-th neighbor distance."""
        pts, single = _as_points(x, self.dim)
        r = self._kth_distance(pts, exclude_self=False)
        if np.any(r <= 0.0):
            raise InfiniteDensityError(
                "k-th neighbor distance is zero (query duplicates >= k sample points)"
            )
        out = self.k / (self.sample.n * unit_ball_volume(self.dim) * r**self.dim)
        return float(out[0]) if single else out

    def pdf_at_sample_points(self) -> np.ndarray:
        """Density at the observations, zero self-distance excluded
        (k-th neighbor among the other n-1 points)."""
        if self.k > self.sample.n - 1:
            raise ValueError("sample-point evaluation needs k <= n - 1")
        r = self._kth_distance(self.sample.points, exclude_self=True)
        if np.any(r <= 0.0):
            raise InfiniteDensityError(
                "duplicated observations give a zero k-th neighbor distance"
            )
        return self.k / (self.sample.n * unit_ball_volume(self.dim) * r**self.dim)
