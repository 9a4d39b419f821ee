"""numba ``@njit`` twins of the kernels in ``_numpy``.

Importing this module raises ``ImportError`` when numba is unavailable; the
package then falls back to the numpy path.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def csr_mix(indptr, indices, vals, v):
    n = indptr.shape[0] - 1
    p = v.shape[1]
    out = np.zeros((n, p))
    for i in range(n):
        for e in range(indptr[i], indptr[i + 1]):
            j = indices[e]
            w = vals[e]
            for d in range(p):
                out[i, d] += w * v[j, d]
    return out


@njit(cache=True)
def csr_mix_vec(indptr, indices, vals, v):
    n = indptr.shape[0] - 1
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for e in range(indptr[i], indptr[i + 1]):
            acc += vals[e] * v[indices[e]]
        out[i] = acc
    return out


@njit(cache=True)
def dextra_update(indptr, indices, a, a_tilde, x, x_prev, y, grad, grad_prev, alpha):
    n, p = x.shape
    x_next = np.empty((n, p))
    y_next = np.empty(n)
    for i in range(n):
        ysum = 0.0
        for d in range(p):
            x_next[i, d] = 0.0
        for e in range(indptr[i], indptr[i + 1]):
            j = indices[e]
            ysum += a[e] * y[j]
            for d in range(p):
                x_next[i, d] += a[e] * x[j, d] - a_tilde[e] * x_prev[j, d]
        for d in range(p):
            x_next[i, d] = x[i, d] + x_next[i, d] - alpha * (grad[i, d] - grad_prev[i, d])
        y_next[i] = ysum
    return x_next, y_next


@njit(cache=True)
def ls_grad(H, h, z):
    n, m, p = H.shape
    out = np.zeros((n, p))
    for i in range(n):
        for r in range(m):
            acc = -h[i, r]
            for d in range(p):
                acc += H[i, r, d] * z[i, d]
            for d in range(p):
                out[i, d] += 2.0 * H[i, r, d] * acc
    return out


@njit(cache=True)
def ls_values(H, h, z):
    n, m, p = H.shape
    out = np.zeros(n)
    for i in range(n):
        for r in range(m):
            acc = -h[i, r]
            for d in range(p):
                acc += H[i, r, d] * z[i, d]
            out[i] += acc * acc
    return out


@njit(cache=True)
def residual(z, u):
    n, p = z.shape
    total = 0.0
    for i in range(n):
        s = 0.0
        for d in range(p):
            diff = z[i, d] - u[d]
            s += diff * diff
        total += math.sqrt(s)
    return total / n


@njit(cache=True)
def consensus_spread(z):
    n, p = z.shape
    best = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            s = 0.0
            for d in range(p):
                diff = z[i, d] - z[j, d]
                s += diff * diff
            if s > best:
                best = s
    return math.sqrt(best)
