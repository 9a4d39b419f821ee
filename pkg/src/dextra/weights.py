"""Column-stochastic weighting matrices and their stationary behaviour."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .digraph import Digraph, is_strongly_connected

STOCHASTIC_TOL = 1e-12
POSITIVITY_TOL = 1e-12


class StationaryError(RuntimeError):
    """Power iteration failed to settle (the strong-connectivity premise is violated)."""


@dataclass(frozen=True)
class SparseRows:
    """CSR view of ``A`` and ``A_tilde`` over their joint sparsity pattern.

    Row ``i`` lists the in-neighbors of agent ``i``; this is what the
    per-agent kernels iterate over.
    """

    indptr: np.ndarray
    indices: np.ndarray
    a: np.ndarray
    a_tilde: np.ndarray


@dataclass(frozen=True)
class WeightPair:
    A: np.ndarray
    A_tilde: np.ndarray
    theta: float

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @cached_property
    def rows(self) -> SparseRows:
        pattern = (self.A != 0) | (self.A_tilde != 0)
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        indices = []
        for i in range(self.n):
            cols = np.flatnonzero(pattern[i])
            indices.extend(cols.tolist())
            indptr[i + 1] = indptr[i] + cols.size
        indices = np.asarray(indices, dtype=np.int64)
        rows = np.repeat(np.arange(self.n), np.diff(indptr))
        return SparseRows(
            indptr=indptr,
            indices=indices,
            a=np.ascontiguousarray(self.A[rows, indices], dtype=float),
            a_tilde=np.ascontiguousarray(self.A_tilde[rows, indices], dtype=float),
        )


@dataclass(frozen=True)
class StationaryInfo:
    """Limit of ``A^k 1``: ``pi`` sums to ``n`` so that ``D_inf = diag(pi)``."""

    pi: np.ndarray
    iterations: int
    gamma: float
    C: float = 4.0

    @property
    def n(self) -> int:
        return self.pi.shape[0]

    @property
    def D_inf(self) -> np.ndarray:
        return np.diag(self.pi)

    @property
    def pi_stochastic(self) -> np.ndarray:
        return self.pi / self.pi.sum()


def lemma_gamma(n: int) -> float:
    """Consensus constant ``1 - 1/n^n``; equals 1.0 in floating point for large ``n``."""
    log_nn = n * np.log(n)
    return 1.0 if log_nn > 700 else 1.0 - float(np.exp(-log_nn))


def is_column_stochastic(A: np.ndarray, tol: float = STOCHASTIC_TOL) -> bool:
    A = np.asarray(A, dtype=float)
    return bool(A.ndim == 2 and A.shape[0] == A.shape[1] and (A >= 0).all()
                and np.abs(A.sum(axis=0) - 1.0).max() <= tol)


def _require_connected(g: Digraph) -> None:
    if not is_strongly_connected(g):
        raise ValueError("graph is not strongly connected")


def local_degree_weights(g: Digraph) -> np.ndarray:
    """``a_ij = 1/|N_j^out|`` for every out-neighbor ``i`` of ``j``."""
    _require_connected(g)
    A = np.zeros((g.n, g.n))
    for j in range(g.n):
        outs = g.out_neighbors(j)
        A[list(outs), j] = 1.0 / len(outs)
    return A


def max_constant_zeta(g: Digraph) -> float:
    """Exclusive upper bound on ``zeta`` keeping every diagonal entry positive."""
    widest = max(g.out_degree(j) - 1 for j in range(g.n))
    return np.inf if widest == 0 else 1.0 / widest


def constant_weights(g: Digraph, zeta: float) -> np.ndarray:
    """Diagonally dominant weights: ``zeta`` to each out-neighbor, the rest kept."""
    _require_connected(g)
    bound = max_constant_zeta(g)
    if not 0.0 < zeta < bound:
        raise ValueError(f"zeta={zeta} outside the valid open interval (0, {bound})")
    A = np.zeros((g.n, g.n))
    for j in range(g.n):
        outs = g.out_neighbors(j)
        for i in outs:
            A[i, j] = zeta
        A[j, j] = 1.0 - zeta * (len(outs) - 1)
    return A


def row_stochastic_weights(g: Digraph) -> np.ndarray:
    """``w_ij = 1/|N_i^in|`` for in-neighbors ``j``; used by row-stochastic DGD."""
    W = np.zeros((g.n, g.n))
    for i in range(g.n):
        ins = g.in_neighbors(i)
        W[i, list(ins)] = 1.0 / len(ins)
    return W


def metropolis_weights(g: Digraph) -> np.ndarray:
    """Symmetric doubly-stochastic Metropolis-Hastings weights for an undirected graph."""
    if not g.is_symmetric():
        raise ValueError("Metropolis weights need an undirected (symmetric) graph")
    deg = np.array([g.out_degree(j) - 1 for j in range(g.n)])
    W = np.zeros((g.n, g.n))
    for i, j in g.edges:
        if i != j:
            W[i, j] = 1.0 / (1.0 + max(deg[i], deg[j]))
    W[np.diag_indices(g.n)] = 1.0 - W.sum(axis=0)
    return W


def make_tilde(A: np.ndarray, theta: float = 0.5) -> WeightPair:
    """Pair ``A`` with ``A_tilde = theta I + (1 - theta) A``."""
    if not 0.0 < theta <= 0.5:
        raise ValueError(f"theta={theta} outside (0, 1/2]")
    A = np.array(A, dtype=float)
    if not is_column_stochastic(A, tol=1e-10):
        raise ValueError("A must be column-stochastic")
    A_tilde = theta * np.eye(A.shape[0]) + (1.0 - theta) * A
    A.setflags(write=False)
    A_tilde.setflags(write=False)
    return WeightPair(A=A, A_tilde=A_tilde, theta=float(theta))


def stationary(A: np.ndarray, tol: float = 1e-13, max_iter: int = 1_000_000) -> StationaryInfo:
    """Power iteration ``y <- A y`` from ``y = 1`` until ``||A y - y|| <= tol``.

    The result is rescaled to sum to ``n``.  Raises ``StationaryError`` if the
    iteration does not settle within ``max_iter`` products.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    y = np.ones(n)
    k = 0
    while True:
        y_next = A @ y
        if np.linalg.norm(y_next - y) <= tol:
            break
        y = y_next
        k += 1
        if k >= max_iter:
            raise StationaryError(f"power iteration did not converge within {max_iter} steps")
    pi = y_next * (n / y_next.sum())
    if (pi <= 0).any():
        raise StationaryError("stationary vector has non-positive entries")
    pi.setflags(write=False)
    return StationaryInfo(pi=pi, iterations=k + 1, gamma=lemma_gamma(n))


def assumption_2c_matrix(pair: WeightPair, info: StationaryInfo) -> np.ndarray:
    inv = 1.0 / info.pi
    return inv[:, None] * pair.A_tilde + pair.A_tilde.T * inv[None, :]


def check_assumption_2c(pair: WeightPair, info: StationaryInfo) -> tuple[bool, float]:
    """Smallest eigenvalue of ``D_inf^-1 A_tilde + A_tilde^T D_inf^-1`` and whether it is positive.

    Positivity is judged relative to the largest eigenvalue magnitude.
    """
    if pair.n != info.n:
        raise ValueError("weight pair and stationary info disagree on n")
    eig = np.linalg.eigvalsh(assumption_2c_matrix(pair, info))
    lam_min = float(eig[0])
    scale = max(abs(eig[-1]), abs(eig[0]), 1.0)
    return lam_min > POSITIVITY_TOL * scale, lam_min


def consensus_bound_violations(A: np.ndarray, info: StationaryInfo, horizon: int, C: float = 4.0):
    """List ``(k, i, j, gap, bound)`` where ``|[A^k]_ij - pi_i| >= C gamma^k``.

    ``pi`` is taken in the stochastic normalization (sums to one).
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    pi = info.pi_stochastic
    gamma = lemma_gamma(n)
    power = np.eye(n)
    bad = []
    for k in range(horizon + 1):
        gap = np.abs(power - pi[:, None])
        bound = C * gamma**k
        hits = np.argwhere(gap >= bound)
        for i, j in hits:
            bad.append((k, int(i), int(j), float(gap[i, j]), bound))
        power = A @ power
    return bad


def consensus_rate_bound_check(A: np.ndarray, info: StationaryInfo, horizon: int) -> bool:
    """True iff ``|[A^k]_ij - pi_i| < 4 (1 - 1/n^n)^k`` for all ``k <= horizon``."""
    return not consensus_bound_violations(A, info, horizon)
