"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

Every public name here is bound once at import time to either the
``@njit``-compiled implementation or the vectorized numpy one.  Set the
environment variable ``MODAL_NUMBA=0`` before import to force the numpy
path (the same path is used automatically when numba is unavailable).
Both paths implement identical formulas; they may differ in the last few
ulps because summation order differs.

Only Gaussian-kernel operations live here: they dominate the runtime of
grid evaluation, mean-shift ascent and the Monte Carlo harness.  Uniform
and Epanechnikov kernels are evaluated in plain numpy in ``density``.
"""

from __future__ import annotations

import math
import os

import numpy as np

_SQRT2PI = math.sqrt(2.0 * math.pi)

_env = os.environ.get("MODAL_NUMBA", "1").strip().lower()
_want_numba = _env not in ("0", "false", "no", "off")

try:
    if not _want_numba:
        raise ImportError("numba disabled via MODAL_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


# ---------------------------------------------------------------------------
# Loop implementations (compiled when numba is active).
# ---------------------------------------------------------------------------


def _kde_1d_loop(q, x, h):
    n = x.shape[0]
    m = q.shape[0]
    out = np.empty(m)
    c = 1.0 / (n * h * _SQRT2PI)
    for j in range(m):
        s = 0.0
        for i in range(n):
            u = (q[j] - x[i]) / h
            s += math.exp(-0.5 * u * u)
        out[j] = c * s
    return out


def _kde_grad_1d_loop(q, x, h):
    n = x.shape[0]
    m = q.shape[0]
    vals = np.empty(m)
    grads = np.empty(m)
    c = 1.0 / (n * h * _SQRT2PI)
    for j in range(m):
        s = 0.0
        g = 0.0
        for i in range(n):
            u = (q[j] - x[i]) / h
            e = math.exp(-0.5 * u * u)
            s += e
            g += -u * e / h
        vals[j] = c * s
        grads[j] = c * g
    return vals, grads


def _kde_nd_loop(q, x, hs):
    n, d = x.shape
    m = q.shape[0]
    out = np.empty(m)
    norm = float(n)
    for k in range(d):
        norm *= hs[k] * _SQRT2PI
    for j in range(m):
        s = 0.0
        for i in range(n):
            e = 0.0
            for k in range(d):
                u = (q[j, k] - x[i, k]) / hs[k]
                e += u * u
            s += math.exp(-0.5 * e)
        out[j] = s / norm
    return out


def _kde_grad_nd_loop(q, x, hs):
    n, d = x.shape
    m = q.shape[0]
    vals = np.empty(m)
    grads = np.empty((m, d))
    norm = float(n)
    for k in range(d):
        norm *= hs[k] * _SQRT2PI
    for j in range(m):
        s = 0.0
        for k in range(d):
            grads[j, k] = 0.0
        for i in range(n):
            e = 0.0
            for k in range(d):
                u = (q[j, k] - x[i, k]) / hs[k]
                e += u * u
            w = math.exp(-0.5 * e)
            s += w
            for k in range(d):
                grads[j, k] += -w * (q[j, k] - x[i, k]) / (hs[k] * hs[k])
        vals[j] = s / norm
        for k in range(d):
            grads[j, k] /= norm
    return vals, grads


def _mean_shift_nd_loop(starts, x, hs, tol, max_iter):
    n, d = x.shape
    m = starts.shape[0]
    terms = starts.copy()
    iters = np.zeros(m, dtype=np.int64)
    conv = np.zeros(m, dtype=np.bool_)
    for j in range(m):
        y = terms[j].copy()
        for it in range(max_iter):
            sw = 0.0
            num = np.zeros(d)
            for i in range(n):
                e = 0.0
                for k in range(d):
                    u = (y[k] - x[i, k]) / hs[k]
                    e += u * u
                w = math.exp(-0.5 * e)
                sw += w
                for k in range(d):
                    num[k] += w * x[i, k]
            if sw <= 0.0:
                iters[j] = it
                break
            step = 0.0
            for k in range(d):
                nk = num[k] / sw
                step += (nk - y[k]) ** 2
                y[k] = nk
            iters[j] = it + 1
            if math.sqrt(step) <= tol:
                conv[j] = True
                break
        terms[j] = y
    return terms, iters, conv


def _weighted_mean_shift_1d_loop(starts, y, w, h, tol, max_iter):
    n = y.shape[0]
    m = starts.shape[0]
    terms = starts.copy()
    iters = np.zeros(m, dtype=np.int64)
    conv = np.zeros(m, dtype=np.bool_)
    for j in range(m):
        t = terms[j]
        for it in range(max_iter):
            sw = 0.0
            num = 0.0
            for i in range(n):
                u = (t - y[i]) / h
                wk = w[i] * math.exp(-0.5 * u * u)
                sw += wk
                num += wk * y[i]
            if sw <= 0.0:
                iters[j] = it
                break
            nt = num / sw
            iters[j] = it + 1
            if abs(nt - t) <= tol:
                t = nt
                conv[j] = True
                break
            t = nt
        terms[j] = t
    return terms, iters, conv


def _deriv_stats_1d_loop(q, x, h):
    """Per-query mean, sample sd (ddof=1) of the summands d/dq K_h(q - x_i),
    plus the plain density, for derivative significance maps."""
    n = x.shape[0]
    m = q.shape[0]
    deriv = np.empty(m)
    sd = np.empty(m)
    dens = np.empty(m)
    c = 1.0 / (h * h * _SQRT2PI)
    for j in range(m):
        s = 0.0
        s2 = 0.0
        sdens = 0.0
        for i in range(n):
            u = (q[j] - x[i]) / h
            e = math.exp(-0.5 * u * u)
            t = -u * e * c
            s += t
            s2 += t * t
            sdens += e
        mu = s / n
        deriv[j] = mu
        if n > 1:
            v = (s2 - n * mu * mu) / (n - 1)
            sd[j] = math.sqrt(v) if v > 0.0 else 0.0
        else:
            sd[j] = 0.0
        dens[j] = sdens / (n * h * _SQRT2PI)
    return deriv, sd, dens


# ---------------------------------------------------------------------------
# Numpy fallbacks (chunked to bound temporaries).
# ---------------------------------------------------------------------------

_CHUNK = 2048


def _kde_1d_numpy(q, x, h):
    n = x.shape[0]
    out = np.empty(q.shape[0])
    c = 1.0 / (n * h * _SQRT2PI)
    for a in range(0, q.shape[0], _CHUNK):
        u = (q[a:a + _CHUNK, None] - x[None, :]) / h
        out[a:a + _CHUNK] = c * np.exp(-0.5 * u * u).sum(axis=1)
    return out


def _kde_grad_1d_numpy(q, x, h):
    n = x.shape[0]
    vals = np.empty(q.shape[0])
    grads = np.empty(q.shape[0])
    c = 1.0 / (n * h * _SQRT2PI)
    for a in range(0, q.shape[0], _CHUNK):
        u = (q[a:a + _CHUNK, None] - x[None, :]) / h
        e = np.exp(-0.5 * u * u)
        vals[a:a + _CHUNK] = c * e.sum(axis=1)
        grads[a:a + _CHUNK] = c * (-u * e / h).sum(axis=1)
    return vals, grads


def _kde_nd_numpy(q, x, hs):
    n = x.shape[0]
    norm = n * np.prod(hs * _SQRT2PI)
    out = np.empty(q.shape[0])
    for a in range(0, q.shape[0], _CHUNK):
        u = (q[a:a + _CHUNK, None, :] - x[None, :, :]) / hs
        out[a:a + _CHUNK] = np.exp(-0.5 * (u * u).sum(axis=2)).sum(axis=1) / norm
    return out


def _kde_grad_nd_numpy(q, x, hs):
    n = x.shape[0]
    norm = n * np.prod(hs * _SQRT2PI)
    vals = np.empty(q.shape[0])
    grads = np.empty(q.shape)
    for a in range(0, q.shape[0], _CHUNK):
        diff = q[a:a + _CHUNK, None, :] - x[None, :, :]
        u = diff / hs
        w = np.exp(-0.5 * (u * u).sum(axis=2))
        vals[a:a + _CHUNK] = w.sum(axis=1) / norm
        grads[a:a + _CHUNK] = (w[:, :, None] * (-diff / (hs * hs))).sum(axis=1) / norm
    return vals, grads


def _mean_shift_nd_numpy(starts, x, hs, tol, max_iter):
    m = starts.shape[0]
    terms = starts.astype(float).copy()
    iters = np.zeros(m, dtype=np.int64)
    conv = np.zeros(m, dtype=bool)
    active = np.arange(m)
    for it in range(max_iter):
        if active.size == 0:
            break
        y = terms[active]
        u = (y[:, None, :] - x[None, :, :]) / hs
        w = np.exp(-0.5 * (u * u).sum(axis=2))
        sw = w.sum(axis=1)
        stuck = sw <= 0.0
        sw[stuck] = 1.0
        newy = (w @ x) / sw[:, None]
        newy[stuck] = y[stuck]
        step = np.linalg.norm(newy - y, axis=1)
        terms[active] = newy
        iters[active[~stuck]] = it + 1
        done = (step <= tol) & ~stuck
        conv[active[done]] = True
        active = active[~(done | stuck)]
    return terms, iters, conv


def _weighted_mean_shift_1d_numpy(starts, y, w, h, tol, max_iter):
    m = starts.shape[0]
    terms = starts.astype(float).copy()
    iters = np.zeros(m, dtype=np.int64)
    conv = np.zeros(m, dtype=bool)
    active = np.arange(m)
    for it in range(max_iter):
        if active.size == 0:
            break
        t = terms[active]
        u = (t[:, None] - y[None, :]) / h
        wk = w[None, :] * np.exp(-0.5 * u * u)
        sw = wk.sum(axis=1)
        stuck = sw <= 0.0
        sw[stuck] = 1.0
        nt = (wk @ y) / sw
        nt[stuck] = t[stuck]
        step = np.abs(nt - t)
        terms[active] = nt
        iters[active[~stuck]] = it + 1
        done = (step <= tol) & ~stuck
        conv[active[done]] = True
        active = active[~(done | stuck)]
    return terms, iters, conv


def _deriv_stats_1d_numpy(q, x, h):
    n = x.shape[0]
    m = q.shape[0]
    deriv = np.empty(m)
    sd = np.empty(m)
    dens = np.empty(m)
    c = 1.0 / (h * h * _SQRT2PI)
    for a in range(0, m, _CHUNK):
        u = (q[a:a + _CHUNK, None] - x[None, :]) / h
        e = np.exp(-0.5 * u * u)
        t = -u * e * c
        deriv[a:a + _CHUNK] = t.mean(axis=1)
        sd[a:a + _CHUNK] = t.std(axis=1, ddof=1) if n > 1 else 0.0
        dens[a:a + _CHUNK] = e.sum(axis=1) / (n * h * _SQRT2PI)
    return deriv, sd, dens


# ---------------------------------------------------------------------------
# Binding. Keep both variants importable for the backend benchmark.
# ---------------------------------------------------------------------------

if HAS_NUMBA:
    _opts = dict(cache=True, nogil=True)
    kde_1d_numba = njit(**_opts)(_kde_1d_loop)
    kde_grad_1d_numba = njit(**_opts)(_kde_grad_1d_loop)
    kde_nd_numba = njit(**_opts)(_kde_nd_loop)
    kde_grad_nd_numba = njit(**_opts)(_kde_grad_nd_loop)
    mean_shift_nd_numba = njit(**_opts)(_mean_shift_nd_loop)
    weighted_mean_shift_1d_numba = njit(**_opts)(_weighted_mean_shift_1d_loop)
    deriv_stats_1d_numba = njit(**_opts)(_deriv_stats_1d_loop)

    kde_1d = kde_1d_numba
    kde_grad_1d = kde_grad_1d_numba
    kde_nd = kde_nd_numba
    kde_grad_nd = kde_grad_nd_numba
    mean_shift_nd = mean_shift_nd_numba
    weighted_mean_shift_1d = weighted_mean_shift_1d_numba
    deriv_stats_1d = deriv_stats_1d_numba
    USING_NUMBA = True
else:
    kde_1d = _kde_1d_numpy
    kde_grad_1d = _kde_grad_1d_numpy
    kde_nd = _kde_nd_numpy
    kde_grad_nd = _kde_grad_nd_numpy
    mean_shift_nd = _mean_shift_nd_numpy
    weighted_mean_shift_1d = _weighted_mean_shift_1d_numpy
    deriv_stats_1d = _deriv_stats_1d_numpy
    USING_NUMBA = False

NUMPY_IMPLS = {
    "kde_1d": _kde_1d_numpy,
    "kde_grad_1d": _kde_grad_1d_numpy,
    "kde_nd": _kde_nd_numpy,
    "kde_grad_nd": _kde_grad_nd_numpy,
    "mean_shift_nd": _mean_shift_nd_numpy,
    "weighted_mean_shift_1d": _weighted_mean_shift_1d_numpy,
    "deriv_stats_1d": _deriv_stats_1d_numpy,
}


def thread_count() -> int:
    """Worker cap for replicate/point parallelism, from MODAL_THREADS."""
    raw = os.environ.get("MODAL_THREADS", "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            return 1
    return min(4, os.cpu_count() or 1)
