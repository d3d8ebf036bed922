"""Gradient-flow (modal) and mixture-component partitions.

The steepest-ascent flow is discretized by mean-shift for Gaussian-kernel
density estimates (exact ascent property, no step size) and by gradient
ascent with backtracking for mixture densities and bounded-support
kernels.  Points whose path fails to converge are reported with the
explicit ``UNASSIGNED`` label, never silently attached to a cluster.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .data import Sample
from .density import KernelDensityModel
from .grids import EvalGrid

__all__ = [
    "AscentConfig",
    "AscentPath",
    "ascent_path",
    "Partition",
    "modal_partition",
    "parametric_partition",
    "gmm_modal_partition",
    "UNASSIGNED",
]

UNASSIGNED = 0


@dataclass(frozen=True)
class AscentConfig:
    """Stopping rule for ascent iterations: step norm below
    ``tol_factor * model.scale()`` or ``max_iter`` iterations."""

    tol_factor: float = 1e-8
    max_iter: int = 2000


@dataclass(frozen=True)
class AscentPath:
    origin: np.ndarray
    steps: np.ndarray            # visited points, origin included
    terminal: np.ndarray
    iterations: int
    converged: bool
    saddle: bool                 # stationary but not a local maximum
    densities: np.ndarray        # model density along steps


def _is_gaussian_kde(model) -> bool:
    return isinstance(model, KernelDensityModel) and model.kernel.family == "gaussian"


def _check_saddle(model, x, scale) -> bool:
    """Positive second difference in any axis direction marks a non-maximum."""
    x = np.asarray(x, dtype=float)
    delta = 1e-3 * scale
    f0 = float(model.pdf(x))
    for k in range(x.shape[0]):
        e = np.zeros_like(x)
        e[k] = delta
        curv = float(model.pdf(x + e)) + float(model.pdf(x - e)) - 2.0 * f0
        # relative tolerance keeps flat plateaus from flagging
        if curv > 1e-10 * max(f0, 1e-300):
            return True
    return False


def ascent_path(model, x, cfg: AscentConfig = AscentConfig()) -> AscentPath:
    """Follow the density ascent flow from ``x``, recording every step."""
    x0 = np.atleast_1d(np.asarray(x, dtype=float))
    scale = model.scale()
    tol = cfg.tol_factor * scale
    steps = [x0.copy()]
    dens = [float(model.pdf(x0))]
    converged = False
    y = x0.copy()

    if _is_gaussian_kde(model):
        data = model.sample.points
        h = model.bandwidth
        for _ in range(cfg.max_iter):
            u = (y[None, :] - data) / h
            w = np.exp(-0.5 * (u * u).sum(axis=1))
            sw = w.sum()
            if not np.isfinite(sw) or sw <= 0.0:
                break
            ny = (w @ data) / sw
            step = np.linalg.norm(ny - y)
            y = ny
            steps.append(y.copy())
            dens.append(float(model.pdf(y)))
            if step <= tol:
                converged = True
                break
    else:
        t = scale
        for _ in range(cfg.max_iter):
            g = np.atleast_1d(model.gradient(y))
            if not np.all(np.isfinite(g)):
                raise ValueError("non-finite gradient during ascent")
            gn = np.linalg.norm(g)
            if gn * t <= tol:
                converged = True
                break
            f0 = dens[-1]
            moved = False
            for _ in range(40):
                ny = y + t * g
                f1 = float(model.pdf(ny))
                if f1 >= f0:
                    y = ny
                    steps.append(y.copy())
                    dens.append(f1)
                    moved = True
                    t *= 1.5
                    break
                t *= 0.5
            if not moved:
                converged = True
                break
            if np.linalg.norm(steps[-1] - steps[-2]) <= tol:
                converged = True
                break

    saddle = converged and _check_saddle(model, y, scale)
    return AscentPath(
        origin=x0,
        steps=np.asarray(steps),
        terminal=y,
        iterations=len(steps) - 1,
        converged=converged,
        saddle=saddle,
        densities=np.asarray(dens),
    )


@dataclass(frozen=True)
class Partition:
    """Cluster labels in 1..r with mode representatives; label 0 marks
    points whose ascent did not converge."""

    labels: np.ndarray
    representatives: np.ndarray
    r: int
    method: str
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "labels": self.labels.tolist(),
            "representatives": self.representatives.tolist(),
            "r": int(self.r),
            "method": self.method,
            "diagnostics": {
                k: (v.tolist() if isinstance(v, np.ndarray) else v)
                for k, v in self.diagnostics.items()
            },
        }


def _as_point_array(points) -> np.ndarray:
    if isinstance(points, Sample):
        return points.points
    if isinstance(points, EvalGrid):
        return points.nodes()
    pts = np.asarray(points, dtype=float)
    return pts[:, None] if pts.ndim == 1 else pts


def _batch_ascent(model, pts, cfg):
    """Terminals/convergence for many starts; threads split the work when
    MODAL_THREADS allows since the hot kernel drops the GIL."""
    tol = cfg.tol_factor * model.scale()
    if _is_gaussian_kde(model):
        data = np.ascontiguousarray(model.sample.points)
        h = model.bandwidth

        def run(chunk):
            return backend.mean_shift_nd(
                np.ascontiguousarray(chunk), data, h, tol, cfg.max_iter
            )

        workers = backend.thread_count()
        if workers > 1 and pts.shape[0] >= 4 * workers:
            chunks = np.array_split(pts, workers)
            with ThreadPoolExecutor(max_workers=workers) as ex:
                parts = list(ex.map(run, chunks))
            terms = np.concatenate([p[0] for p in parts])
            iters = np.concatenate([p[1] for p in parts])
            conv = np.concatenate([p[2] for p in parts])
        else:
            terms, iters, conv = run(pts)
        return terms, conv

    # vectorized gradient ascent with per-point backtracking
    y = pts.astype(float).copy()
    scale = model.scale()
    t = np.full(y.shape[0], scale)
    conv = np.zeros(y.shape[0], dtype=bool)
    active = np.arange(y.shape[0])
    f = np.asarray(model.pdf(y), dtype=float)
    for _ in range(cfg.max_iter):
        if active.size == 0:
            break
        g = np.atleast_2d(model.gradient(y[active]))
        gn = np.linalg.norm(g, axis=1)
        small = gn * t[active] <= tol
        conv[active[small]] = True
        active = active[~small]
        if active.size == 0:
            break
        g = g[~small]
        moved = np.zeros(active.size, dtype=bool)
        for _ in range(40):
            todo = ~moved
            if not todo.any():
                break
            idx = active[todo]
            prop = y[idx] + t[idx, None] * g[todo]
            fp = np.asarray(model.pdf(prop), dtype=float)
            ok = fp >= f[idx]
            sel = idx[ok]
            y[sel] = prop[ok]
            f[sel] = fp[ok]
            t[sel] *= 1.5
            t[idx[~ok]] *= 0.5
            moved[np.flatnonzero(todo)[ok]] = True
        stalled = active[~moved]
        conv[stalled] = True
        active = active[moved]
    return y, conv


def _merge_terminals(model, terms, conv, merge_tol):
    """Group converged terminals within tolerance; representatives sorted
    lexicographically so cluster ids are deterministic."""
    idx = np.flatnonzero(conv)
    if idx.size == 0:
        return np.array([]).reshape(0, terms.shape[1]), np.zeros(terms.shape[0], int)
    pts = terms[idx]
    uniq, inverse = np.unique(np.round(pts / (0.5 * merge_tol)), axis=0, return_inverse=True)
    reps_raw = np.empty((uniq.shape[0], pts.shape[1]))
    for g in range(uniq.shape[0]):
        reps_raw[g] = pts[inverse == g].mean(axis=0)
    # union-find over rounded groups closer than the merge tolerance
    m = reps_raw.shape[0]
    parent = np.arange(m)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a in range(m):
        for b in range(a + 1, m):
            if np.linalg.norm(reps_raw[a] - reps_raw[b]) <= merge_tol:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    group_of = np.array([find(a) for a in range(m)])
    groups = np.unique(group_of)

    reps = []
    for g in groups:
        members = np.flatnonzero(group_of == g)
        cand = np.concatenate([pts[inverse == mm] for mm in members])
        dens = np.asarray(model.pdf(cand), dtype=float)
        reps.append(cand[int(np.argmax(dens))])
    reps = np.asarray(reps)
    order = np.lexsort(reps.T[::-1])
    reps = reps[order]

    labels = np.zeros(terms.shape[0], dtype=int)
    rank = {int(g): int(np.flatnonzero(order == k)[0]) + 1
            for k, g in enumerate(groups)}
    labels[idx] = [rank[int(g)] for g in group_of[inverse]]
    return reps, labels


def modal_partition(
    model,
    points,
    cfg: AscentConfig = AscentConfig(),
    merge_tol_factor: float = 1e-3,
) -> Partition:
    """Assign each point to the domain of attraction of a density mode."""
    pts = _as_point_array(points)
    terms, conv = _batch_ascent(model, pts, cfg)
    merge_tol = merge_tol_factor * model.scale()
    reps, labels = _merge_terminals(model, terms, conv, merge_tol)
    return Partition(
        labels=labels,
        representatives=reps,
        r=reps.shape[0],
        method="modal",
        diagnostics={"unassigned": int((labels == UNASSIGNED).sum())},
    )


def parametric_partition(gmm, points) -> Partition:
    """Assign points to the mixture component maximizing the weighted
    component density; ties go to the smallest index and are flagged."""
    pts = _as_point_array(points)
    lp = gmm.component_log_pdfs(pts)
    raw = lp.argmax(axis=1)
    best = lp[np.arange(pts.shape[0]), raw]
    ties = (lp == best[:, None]).sum(axis=1) > 1
    used = np.unique(raw)
    relabel = {int(c): i + 1 for i, c in enumerate(used)}
    labels = np.array([relabel[int(c)] for c in raw], dtype=int)
    return Partition(
        labels=labels,
        representatives=gmm.means[used],
        r=used.size,
        method="parametric",
        diagnostics={
            "boundary_points": np.flatnonzero(ties),
            "dropped_components": int(gmm.component_count - used.size),
        },
    )


def gmm_modal_partition(
    gmm,
    points,
    cfg: AscentConfig = AscentConfig(),
    merge_tol_factor: float = 1e-3,
) -> Partition:
    """Modal partition driven by the fitted mixture density: components in
    one unimodal group collapse into a single cluster."""
    part = modal_partition(gmm, points, cfg=cfg, merge_tol_factor=merge_tol_factor)
    return Partition(
        labels=part.labels,
        representatives=part.representatives,
        r=part.r,
        method="gmm-modal",
        diagnostics=dict(part.diagnostics, component_count=int(gmm.component_count)),
    )
