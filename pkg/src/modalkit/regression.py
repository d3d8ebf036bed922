"""Conditional-mode (modal) regression with a local-linear mean baseline.

The conditional density of Y given X = x is the ratio of a product-kernel
joint estimate to the kernel marginal in x, so its local maxima in y are
the maxima of the x-weighted kernel sum over the responses.  They are
located by weighted mean-shift started from the observed responses and
sharpened by a safeguarded Newton step on the analytic derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .data import Sample
from .errors import SparseRegionError

__all__ = [
    "ConditionalModel",
    "ConditionalModes",
    "conditional_modes",
    "Branch",
    "ModalCurveSet",
    "modal_regression_curves",
    "local_linear_regression",
]

_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class ConditionalModel:
    """Joint (X, Y) sample with Gaussian product-kernel bandwidths."""

    sample: Sample
    h_x: float
    h_y: float

    def __post_init__(self):
        if self.sample.dim != 2:
            raise ValueError("conditional model needs a 2-d (x, y) sample")
        if self.h_x <= 0 or self.h_y <= 0:
            raise ValueError("bandwidths must be positive")

    @property
    def x(self) -> np.ndarray:
        return self.sample.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.sample.points[:, 1]

    def x_kernel_weights(self, x: float) -> np.ndarray:
        u = (x - self.x) / self.h_x
        return np.exp(-0.5 * u * u)

    def effective_size(self, x: float) -> float:
        """Sum of x-kernel weights relative to the kernel peak; the sparse
        cutoff is 5 effective observations."""
        return float(self.x_kernel_weights(x).sum())

    def conditional_density(self, x: float, ys) -> np.ndarray | float:
        """Estimated density of Y given X = x at the given responses."""
        w = self.x_kernel_weights(x)
        sw = w.sum()
        ys_arr = np.atleast_1d(np.asarray(ys, dtype=float))
        u = (ys_arr[:, None] - self.y[None, :]) / self.h_y
        g = (w[None, :] * np.exp(-0.5 * u * u)).sum(axis=1)
        vals = g / (sw * self.h_y * _SQRT2PI)
        return float(vals[0]) if np.asarray(ys).ndim == 0 else vals


@dataclass(frozen=True)
class ConditionalModes:
    """All local conditional-density maxima at one covariate value."""

    x: float
    locations: np.ndarray
    densities: np.ndarray

    @property
    def best(self) -> float:
        return float(self.locations[int(np.argmax(self.densities))])


def _newton_polish(y0, ys, w, h, max_iter=60):
    """Sharpen a near-stationary point of g(y) = sum w_i phi((y-Y_i)/h)."""
    y = float(y0)
    for _ in range(max_iter):
        u = (y - ys) / h
        e = np.exp(-0.5 * u * u)
        g1 = float((w * -u * e).sum() / h)
        g2 = float((w * (u * u - 1.0) * e).sum() / (h * h))
        if g2 >= 0.0:
            return y, False
        step = -g1 / g2
        step = max(-h, min(h, step))
        y += step
        if abs(step) <= 1e-12 * h:
            return y, True
    return y, True


def conditional_modes(
    model: ConditionalModel,
    x: float,
    max_starts: int = 64,
    max_iter: int = 500,
    min_density_fraction: float = 1e-3,
) -> ConditionalModes:
    """Local maxima in y of the conditional density estimate at x.

    Starts a weighted mean-shift from the observed responses (thinned to
    ``max_starts`` quantile-spread values), polishes each basin terminal
    with safeguarded Newton steps, and deduplicates at 1e-3 * h_y.
    Maxima whose conditional density falls below ``min_density_fraction``
    times the highest one are discarded as numerical tail bumps.
    """
    ess = model.effective_size(x)
    if ess <= 5.0:
        raise SparseRegionError(
            f"effective sample size {ess:.2f} <= 5 at x = {x:g}"
        )
    w_all = model.x_kernel_weights(x)
    keep = w_all >= w_all.max() * 1e-9
    ys = np.ascontiguousarray(model.y[keep])
    w = np.ascontiguousarray(w_all[keep])

    starts = np.sort(ys)
    if starts.shape[0] > max_starts:
        pick = np.unique(np.linspace(0, starts.shape[0] - 1, max_starts).round().astype(int))
        starts = starts[pick]

    h = model.h_y
    terms, _, conv = backend.weighted_mean_shift_1d(
        starts, ys, w, h, 1e-4 * h, max_iter
    )
    terms = terms[conv]
    if terms.shape[0] == 0:
        raise SparseRegionError(f"no convergent mean-shift start at x = {x:g}")

    # coarse basin grouping, then one polished candidate per basin
    terms = np.sort(terms)
    groups = [[terms[0]]]
    for t in terms[1:]:
        if t - groups[-1][-1] <= 0.5 * h:
            groups[-1].append(t)
        else:
            groups.append([t])
    candidates = []
    for g in groups:
        y1, ok = _newton_polish(float(np.median(g)), ys, w, h)
        if ok:
            candidates.append(y1)
    if not candidates:
        raise SparseRegionError(f"no conditional mode candidate survived at x = {x:g}")

    # final dedupe at the contract tolerance
    candidates = np.sort(np.asarray(candidates))
    modes = [candidates[0]]
    for c in candidates[1:]:
        if c - modes[-1] > 1e-3 * h:
            modes.append(c)
    modes = np.asarray(modes)
    dens = np.asarray(model.conditional_density(x, modes), dtype=float)
    keep_mode = dens >= min_density_fraction * dens.max()
    return ConditionalModes(
        x=float(x), locations=modes[keep_mode], densities=dens[keep_mode]
    )


@dataclass(frozen=True)
class Branch:
    id: int
    x_indices: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    densities: np.ndarray


@dataclass(frozen=True)
class ModalCurveSet:
    """Linked conditional-mode branches over an x grid, the per-x best mode
    curve, and the local-linear mean baseline."""

    x_grid: np.ndarray
    branches: tuple
    global_curve: np.ndarray
    mean_curve: np.ndarray
    sparse_mask: np.ndarray

    def modes_at(self, i: int) -> np.ndarray:
        ys = [b.ys[np.flatnonzero(b.x_indices == i)] for b in self.branches]
        return np.sort(np.concatenate(ys)) if ys else np.array([])

    def branch_count_at(self, i: int) -> int:
        return sum(1 for b in self.branches if i in b.x_indices)

    def to_dict(self) -> dict:
        return {
            "xGrid": self.x_grid.tolist(),
            "branches": [
                {
                    "id": int(b.id),
                    "x": b.xs.tolist(),
                    "y": b.ys.tolist(),
                    "density": b.densities.tolist(),
                }
                for b in self.branches
            ],
            "globalCurve": [None if np.isnan(v) else float(v) for v in self.global_curve],
            "meanCurve": [None if np.isnan(v) else float(v) for v in self.mean_curve],
            "sparse": self.sparse_mask.tolist(),
        }


def modal_regression_curves(
    model: ConditionalModel,
    x_grid,
    max_starts: int = 64,
    link_factor: float = 3.0,
) -> ModalCurveSet:
    """Track all conditional modes over the grid, linking adjacent-x modes
    by nearest response within ``link_factor * h_y``; unmatched modes open
    new branches and sparse grid points leave gaps."""
    x_grid = np.asarray(x_grid, dtype=float)
    modes_per_x = []
    sparse = np.zeros(x_grid.shape[0], dtype=bool)
    for x in x_grid:
        try:
            modes_per_x.append(conditional_modes(model, float(x), max_starts=max_starts))
        except SparseRegionError:
            modes_per_x.append(None)
            sparse[list(x_grid).index(x)] = True

    threshold = link_factor * model.h_y
    open_branches = {}           # branch id -> last y
    segments = {}                # branch id -> list of (i, y, dens)
    next_id = 0
    for i, cm in enumerate(modes_per_x):
        if cm is None:
            open_branches = {}
            continue
        ys = cm.locations
        dens = cm.densities
        assigned = {}
        if open_branches:
            pairs = sorted(
                (abs(ys[m] - last), bid, m)
                for bid, last in open_branches.items()
                for m in range(ys.shape[0])
            )
            used_b, used_m = set(), set()
            for dist, bid, m in pairs:
                if dist > threshold:
                    break
                if bid in used_b or m in used_m:
                    continue
                assigned[m] = bid
                used_b.add(bid)
                used_m.add(m)
        new_open = {}
        for m in range(ys.shape[0]):
            bid = assigned.get(m)
            if bid is None:
                bid = next_id
                next_id += 1
                segments[bid] = []
            segments[bid].append((i, float(ys[m]), float(dens[m])))
            new_open[bid] = float(ys[m])
        open_branches = new_open

    branches = []
    for bid in sorted(segments):
        seg = segments[bid]
        idx = np.array([t[0] for t in seg], dtype=int)
        branches.append(
            Branch(
                id=bid,
                x_indices=idx,
                xs=x_grid[idx],
                ys=np.array([t[1] for t in seg]),
                densities=np.array([t[2] for t in seg]),
            )
        )

    global_curve = np.full(x_grid.shape[0], np.nan)
    for i, cm in enumerate(modes_per_x):
        if cm is not None:
            global_curve[i] = cm.best
    mean_curve = local_linear_regression(model.sample, x_grid, model.h_x)
    return ModalCurveSet(
        x_grid=x_grid,
        branches=tuple(branches),
        global_curve=global_curve,
        mean_curve=mean_curve,
        sparse_mask=sparse,
    )


def local_linear_regression(s: Sample, x_grid, h: float) -> np.ndarray:
    """Gaussian-weighted degree-1 least squares; returns the fitted value
    at each grid point, NaN where the weighted design is singular."""
    if s.dim != 2:
        raise ValueError("local-linear regression needs a 2-d (x, y) sample")
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    xs = s.points[:, 0]
    ys = s.points[:, 1]
    x_grid = np.asarray(x_grid, dtype=float)
    out = np.full(x_grid.shape[0], np.nan)
    for i, x0 in enumerate(x_grid):
        u = (x0 - xs) / h
        w = np.exp(-0.5 * u * u)
        s0 = w.sum()
        if s0 <= 0.0:
            continue
        dx = xs - x0
        s1 = (w * dx).sum()
        s2 = (w * dx * dx).sum()
        t0 = (w * ys).sum()
        t1 = (w * dx * ys).sum()
        det = s0 * s2 - s1 * s1
        if not np.isfinite(det) or det <= 1e-14 * max(s0 * s2, 1e-300):
            continue
        out[i] = (s2 * t0 - s1 * t1) / det
    return out
