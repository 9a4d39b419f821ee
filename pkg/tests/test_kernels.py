"""Both kernel backends must agree with each other and with dense references."""

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dextra import kernels
from dextra.digraph import random_strongly_connected
from dextra.kernels import numba_impl, numpy_impl
from dextra.weights import local_degree_weights, make_tilde

BACKENDS = [numpy_impl] + ([numba_impl] if numba_impl is not None else [])


def setup(n, p, seed):
    pair = make_tilde(local_degree_weights(random_strongly_connected(n, 0.4, seed)))
    rng = np.random.default_rng(seed)
    arrs = [rng.standard_normal((n, p)) for _ in range(4)]
    return pair, arrs, np.abs(rng.standard_normal(n)) + 0.1


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
@given(st.integers(1, 12), st.integers(1, 5), st.integers(0, 1000))
def test_update_matches_dense_form(impl, n, p, seed):
    pair, (x, xp, g, gp), y = setup(n, p, seed)
    r = pair.rows
    x1, y1 = impl.dextra_update(r.indptr, r.indices, r.a, r.a_tilde, x, xp, y, g, gp, 0.07)
    A, At = np.asarray(pair.A), np.asarray(pair.A_tilde)
    assert np.abs(x1 - (x + A @ x - At @ xp - 0.07 * (g - gp))).max() <= 1e-13
    assert np.abs(y1 - A @ y).max() <= 1e-15
    assert np.abs(impl.csr_mix(r.indptr, r.indices, r.a, x) - A @ x).max() <= 1e-14


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_residual_matches_loop(impl):
    rng = np.random.default_rng(5)
    z, u = rng.standard_normal((7, 3)), rng.standard_normal(3)
    loop = sum(np.sqrt(sum((z[i, d] - u[d]) ** 2 for d in range(3))) for i in range(7)) / 7
    assert impl.residual(z, u) == pytest.approx(loop, abs=1e-15)
    spread = max(np.linalg.norm(z[i] - z[j]) for i in range(7) for j in range(7))
    assert impl.consensus_spread(z) == pytest.approx(spread, abs=1e-15)


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_least_squares_kernels(impl):
    rng = np.random.default_rng(3)
    H, h, z = rng.standard_normal((4, 5, 2)), rng.standard_normal((4, 5)), rng.standard_normal((4, 2))
    ref_g = np.stack([2 * H[i].T @ (H[i] @ z[i] - h[i]) for i in range(4)])
    ref_v = np.array([np.sum((H[i] @ z[i] - h[i]) ** 2) for i in range(4)])
    assert np.abs(impl.ls_grad(H, h, z) - ref_g).max() <= 1e-13
    assert np.abs(impl.ls_values(H, h, z) - ref_v).max() <= 1e-13


@pytest.mark.skipif(numba_impl is None, reason="numba not installed")
@given(st.integers(1, 15), st.integers(1, 4), st.integers(0, 1000))
def test_backends_agree(n, p, seed):
    pair, (x, xp, g, gp), y = setup(n, p, seed)
    r = pair.rows
    a = numpy_impl.dextra_update(r.indptr, r.indices, r.a, r.a_tilde, x, xp, y, g, gp, 0.1)
    b = numba_impl.dextra_update(r.indptr, r.indices, r.a, r.a_tilde, x, xp, y, g, gp, 0.1)
    assert np.abs(a[0] - b[0]).max() <= 1e-14 and np.abs(a[1] - b[1]).max() <= 1e-15


def test_environment_flag_selects_numpy():
    env = dict(os.environ, DEXTRA_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "import dextra.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_default_backend():
    expected = "numba" if numba_impl is not None and os.environ.get("DEXTRA_DISABLE_NUMBA", "0") in ("", "0") else "numpy"
    assert kernels.BACKEND == expected
