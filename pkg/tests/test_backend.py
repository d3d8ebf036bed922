"""Numba and numpy kernel paths must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest

from modalkit import backend

pytestmark = pytest.mark.skipif(
    not backend.HAS_NUMBA, reason="comparison needs the numba path"
)

rng = np.random.default_rng(0)
DATA1 = rng.normal(0, 1, 3000)
GRID1 = np.linspace(-4, 4, 257)
DATA2 = np.ascontiguousarray(rng.normal(0, 1, (800, 2)))
H2 = np.array([0.3, 0.4])


def test_kde_1d_paths_agree():
    a = backend.kde_1d_numba(GRID1, DATA1, 0.25)
    b = backend.NUMPY_IMPLS["kde_1d"](GRID1, DATA1, 0.25)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-300)


def test_kde_grad_1d_paths_agree():
    va, ga = backend.kde_grad_1d_numba(GRID1, DATA1, 0.25)
    vb, gb = backend.NUMPY_IMPLS["kde_grad_1d"](GRID1, DATA1, 0.25)
    np.testing.assert_allclose(va, vb, rtol=1e-12)
    np.testing.assert_allclose(ga, gb, rtol=1e-10, atol=1e-13)


def test_kde_nd_paths_agree():
    q = np.ascontiguousarray(rng.normal(0, 1, (100, 2)))
    a = backend.kde_nd_numba(q, DATA2, H2)
    b = backend.NUMPY_IMPLS["kde_nd"](q, DATA2, H2)
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_kde_grad_nd_paths_agree():
    q = np.ascontiguousarray(rng.normal(0, 1, (50, 2)))
    va, ga = backend.kde_grad_nd_numba(q, DATA2, H2)
    vb, gb = backend.NUMPY_IMPLS["kde_grad_nd"](q, DATA2, H2)
    np.testing.assert_allclose(va, vb, rtol=1e-12)
    np.testing.assert_allclose(ga, gb, rtol=1e-9, atol=1e-13)


def test_mean_shift_paths_agree():
    starts = np.ascontiguousarray(DATA2[:40])
    ta, _, ca = backend.mean_shift_nd_numba(starts, DATA2, H2, 1e-10, 2000)
    tb, _, cb = backend.NUMPY_IMPLS["mean_shift_nd"](starts, DATA2, H2, 1e-10, 2000)
    np.testing.assert_array_equal(ca, cb)
    np.testing.assert_allclose(ta, tb, atol=1e-7)


def test_weighted_mean_shift_paths_agree():
    ys = DATA1[:800]
    w = np.exp(-0.5 * rng.uniform(0, 4, 800))
    starts = np.linspace(-2, 2, 33)
    ta, _, ca = backend.weighted_mean_shift_1d_numba(starts, ys, w, 0.3, 1e-10, 2000)
    tb, _, cb = backend.NUMPY_IMPLS["weighted_mean_shift_1d"](starts, ys, w, 0.3, 1e-10, 2000)
    np.testing.assert_array_equal(ca, cb)
    np.testing.assert_allclose(ta, tb, atol=1e-7)


def test_deriv_stats_paths_agree():
    da, sa, fa = backend.deriv_stats_1d_numba(GRID1, DATA1, 0.3)
    db, sb, fb = backend.NUMPY_IMPLS["deriv_stats_1d"](GRID1, DATA1, 0.3)
    np.testing.assert_allclose(da, db, rtol=1e-10, atol=1e-14)
    np.testing.assert_allclose(sa, sb, rtol=1e-8, atol=1e-14)
    np.testing.assert_allclose(fa, fb, rtol=1e-12)


def test_env_flag_forces_numpy_path():
    code = (
        "import modalkit.backend as b; "
        "assert not b.USING_NUMBA; "
        "import numpy as np; "
        "v = b.kde_1d(np.array([0.0]), np.array([0.0]), 1.0); "
        "print(round(float(v[0]), 6))"
    )
    env = dict(os.environ, MODAL_NUMBA="0")
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True
    )
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "0.398942"


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("MODAL_THREADS", "3")
    assert backend.thread_count() == 3
    monkeypatch.setenv("MODAL_THREADS", "bogus")
    assert backend.thread_count() == 1
