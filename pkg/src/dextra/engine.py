"""DEXTRA iteration core.

Each agent ``i`` keeps ``x_i``, a scalar ``y_i`` and ``z_i = x_i / y_i``; one
synchronous round reads the k-indexed messages of all in-neighbors and writes
the (k+1)-indexed state::

    x_i+ = x_i + sum_j a_ij x_j - sum_j a~_ij x_j(prev) - alpha (g_i(z_i) - g_i(z_i prev))
    y_i+ = sum_j a_ij y_j

The neighbor sums run through ``kernels.dextra_update`` over the CSR rows of
the weight pair, so only in-neighbor messages are touched.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .objectives import ObjectiveSuite
from .weights import WeightPair

DIVERGENCE_FACTOR = 1e6


class DivergenceError(ArithmeticError):
    """Raised by ``step`` when the new iterate contains non-finite values."""

    def __init__(self, k: int):
        super().__init__(f"non-finite iterate at k={k}")
        self.k = k


@dataclass(frozen=True)
class NetworkState:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    x_prev: np.ndarray
    grad_prev: np.ndarray
    k: int


@dataclass
class RunTrace:
    """Per-iteration series of one run; every series has ``iterations + 1`` entries."""

    alpha: float
    residual: list = field(default_factory=list)
    consensus_spread: list = field(default_factory=list)
    conservation_defect: list = field(default_factory=list)
    wall_time: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    x_history: list | None = None
    y_history: list | None = None
    final_state: NetworkState | None = None
    reason: str = ""
    algorithm: str = "dextra"

    @property
    def iterations(self) -> int:
        return len(self.residual) - 1

    def as_arrays(self) -> dict[str, np.ndarray]:
        return {
            "residual": np.asarray(self.residual),
            "consensus_spread": np.asarray(self.consensus_spread),
            "conservation_defect": np.asarray(self.conservation_defect),
        }


def residual(z: np.ndarray, u: np.ndarray) -> float:
    """Mean Euclidean distance of the agents' ``z_i`` to ``u``."""
    z = np.ascontiguousarray(z, dtype=float)
    u = np.ascontiguousarray(u, dtype=float)
    if z.ndim != 2 or z.shape[1] != u.shape[0]:
        raise ValueError("z must be (n, p) with p == len(u)")
    return kernels.residual(z, u)


def consensus_spread(z: np.ndarray) -> float:
    return kernels.consensus_spread(np.ascontiguousarray(z, dtype=float))


def _check(problem: ObjectiveSuite, weights: WeightPair, x0: np.ndarray, alpha: float) -> None:
    if not alpha > 0 or not np.isfinite(alpha):
        raise ValueError(f"step-size must be positive, got {alpha}")
    if weights.n != problem.n:
        raise ValueError(f"weights are {weights.n}x{weights.n} but there are {problem.n} agents")
    if x0.shape != (problem.n, problem.p):
        raise ValueError(f"x0 must have shape {(problem.n, problem.p)}, got {x0.shape}")


def _divide(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x / y[:, None]


def init(problem: ObjectiveSuite, weights: WeightPair, x0: np.ndarray, alpha: float) -> NetworkState:
    """Run the special first round (``x^-1 = 0``, ``grad f(z^-1) = 0``) and return the state at k = 1."""
    x0 = np.array(x0, dtype=float)
    _check(problem, weights, x0, alpha)
    rows = weights.rows
    g0 = problem.grad(x0)
    x1 = kernels.csr_mix(rows.indptr, rows.indices, rows.a, x0) - alpha * g0
    y1 = kernels.csr_mix_vec(rows.indptr, rows.indices, rows.a, np.ones(problem.n))
    return NetworkState(x=x1, y=y1, z=_divide(x1, y1), x_prev=x0, grad_prev=g0, k=1)


def step(state: NetworkState, problem: ObjectiveSuite, weights: WeightPair, alpha: float) -> NetworkState:
    """One synchronous DEXTRA round, k -> k+1."""
    if state.k < 1:
        raise ValueError("step needs a state produced by init (k >= 1)")
    rows = weights.rows
    g = problem.grad(state.z)
    x_next, y_next = kernels.dextra_update(rows.indptr, rows.indices, rows.a, rows.a_tilde,
                                           state.x, state.x_prev, state.y, g, state.grad_prev, alpha)
    if not (np.isfinite(x_next).all() and np.isfinite(y_next).all()):
        raise DivergenceError(state.k + 1)
    return NetworkState(x=x_next, y=y_next, z=_divide(x_next, y_next),
                        x_prev=state.x, grad_prev=g, k=state.k + 1)


def conservation_defect(x_before: np.ndarray, x_after: np.ndarray, grad: np.ndarray,
                        alpha: float, y_after: np.ndarray) -> float:
    """Relative violation of ``1^T x+ - 1^T x = -alpha 1^T grad`` and ``sum y = n``."""
    s0 = x_before.sum(axis=0)
    s1 = x_after.sum(axis=0)
    gsum = alpha * grad.sum(axis=0)
    x_err = np.abs(s1 - s0 + gsum).max() / max(1.0, np.abs(s0).max(), np.abs(s1).max(), np.abs(gsum).max())
    n = y_after.shape[0]
    y_err = abs(y_after.sum() - n) / n
    return float(max(x_err, y_err))


def run(
    problem: ObjectiveSuite,
    weights: WeightPair,
    alpha: float,
    max_iter: int,
    target_residual: float,
    u: np.ndarray,
    x0: np.ndarray | None = None,
    snapshot_stride: int = 0,
    record_history: bool = False,
) -> RunTrace:
    """Iterate until the residual drops to ``target_residual`` or ``max_iter`` rounds pass.

    The terminal reason is ``"converged"``, ``"iteration-budget"`` or
    ``"diverged"`` (non-finite iterate, or residual above 1e6 times its
    initial value).  Divergence ends the run; it is not raised.
    """
    u = np.asarray(u, dtype=float)
    if x0 is None:
        x0 = np.zeros((problem.n, problem.p))
    x0 = np.array(x0, dtype=float)
    trace = RunTrace(alpha=float(alpha))
    if record_history:
        trace.x_history, trace.y_history = [x0.copy()], [np.ones(problem.n)]

    t0 = time.perf_counter()
    r0 = residual(x0, u)
    trace.residual.append(r0)
    trace.consensus_spread.append(consensus_spread(x0))
    trace.conservation_defect.append(0.0)
    trace.wall_time.append(0.0)
    if snapshot_stride:
        trace.snapshots[0] = x0.copy()
    limit = DIVERGENCE_FACTOR * max(r0, np.finfo(float).tiny)

    if r0 <= target_residual:
        trace.reason = "converged"
        trace.final_state = NetworkState(x=x0, y=np.ones(problem.n), z=x0, x_prev=np.zeros_like(x0),
                                         grad_prev=np.zeros_like(x0), k=0)
        return trace
    if max_iter < 1:
        trace.reason = "iteration-budget"
        return trace

    prev_x = x0
    state = init(problem, weights, x0, alpha)
    reason = "iteration-budget"
    while True:
        now = time.perf_counter()
        k = state.k
        # state.grad_prev holds grad f(z^{k-1}), the gradient driving x^{k-1} -> x^k
        trace.conservation_defect.append(conservation_defect(prev_x, state.x, state.grad_prev, alpha, state.y))
        r = residual(state.z, u)
        trace.residual.append(r)
        trace.consensus_spread.append(consensus_spread(state.z))
        trace.wall_time.append(now - t0)
        t0 = now
        if record_history:
            trace.x_history.append(state.x.copy())
            trace.y_history.append(state.y.copy())
        if snapshot_stride and k % snapshot_stride == 0:
            trace.snapshots[k] = state.z.copy()
        if not np.isfinite(r) or r > limit:
            reason = "diverged"
            break
        if r <= target_residual:
            reason = "converged"
            break
        if k >= max_iter:
            break
        prev_x = state.x
        try:
            state = step(state, problem, weights, alpha)
        except DivergenceError:
            reason = "diverged"
            break
    trace.reason = reason
    trace.final_state = state
    return trace
