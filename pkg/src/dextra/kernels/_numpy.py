"""Pure-numpy implementations of the hot per-iteration kernels.

Every function here has a numba twin in ``_numba`` with the same signature.
Neighbor sums are computed from a CSR layout where row ``i`` lists the
in-neighbors of agent ``i`` (``indptr``/``indices``) and the matching weights.
"""

import numpy as np


def csr_mix(indptr, indices, vals, v):
    """Row-wise neighbor sum ``out[i] = sum_j vals[i,j] * v[j]`` for 2-D ``v``."""
    return np.add.reduceat(vals[:, None] * v[indices], indptr[:-1], axis=0)


def csr_mix_vec(indptr, indices, vals, v):
    return np.add.reduceat(vals * v[indices], indptr[:-1])


def dextra_update(indptr, indices, a, a_tilde, x, x_prev, y, grad, grad_prev, alpha):
    mixed = np.add.reduceat(
        a[:, None] * x[indices] - a_tilde[:, None] * x_prev[indices], indptr[:-1], axis=0
    )
    x_next = x + mixed - alpha * (grad - grad_prev)
    y_next = np.add.reduceat(a * y[indices], indptr[:-1])
    return x_next, y_next


def ls_grad(H, h, z):
    """Stacked least-squares gradients ``2 H_i^T (H_i z_i - h_i)``."""
    r = np.einsum("imp,ip->im", H, z) - h
    return 2.0 * np.einsum("imp,im->ip", H, r)


def ls_values(H, h, z):
    r = np.einsum("imp,ip->im", H, z) - h
    return np.einsum("im,im->i", r, r)


def residual(z, u):
    return float(np.mean(np.sqrt(((z - u) ** 2).sum(axis=1))))


def consensus_spread(z):
    diff = z[:, None, :] - z[None, :, :]
    return float(np.sqrt((diff**2).sum(axis=2).max()))
