"""Comparison algorithms: EXTRA (undirected), row-stochastic DGD and gradient-push.

All three produce the same ``RunTrace`` as the DEXTRA engine so traces can be
compared and exported side by side.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .engine import DIVERGENCE_FACTOR, RunTrace, consensus_spread, residual
from .objectives import ObjectiveSuite

ALGORITHMS = ("extra", "dgd_row", "gradient_push")
SCHEDULES = ("constant", "sqrt")
SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class BaselineConfig:
    algorithm: str
    alpha: float
    schedule: str = "constant"

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.schedule == "sqrt" and self.algorithm == "extra":
            raise ValueError("the diminishing schedule applies to dgd_row and gradient_push only")
        if not self.alpha >= 0:
            raise ValueError("alpha must be non-negative")

    def step_size(self, k: int) -> float:
        """Step at round ``k`` (0-based); the diminishing form is ``alpha/sqrt(k+1)``."""
        if self.schedule == "sqrt":
            return self.alpha / np.sqrt(k + 1.0)
        return self.alpha


def _sparse(W: np.ndarray):
    W = np.asarray(W, dtype=float)
    indptr = np.zeros(W.shape[0] + 1, dtype=np.int64)
    idx = []
    for i in range(W.shape[0]):
        cols = np.flatnonzero(W[i])
        idx.extend(cols.tolist())
        indptr[i + 1] = indptr[i] + cols.size
    idx = np.asarray(idx, dtype=np.int64)
    rows = np.repeat(np.arange(W.shape[0]), np.diff(indptr))
    return indptr, idx, np.ascontiguousarray(W[rows, idx])


def _mix(W, v: np.ndarray) -> np.ndarray:
    indptr, idx, vals = W if isinstance(W, tuple) else _sparse(W)
    if v.ndim == 1:
        return kernels.csr_mix_vec(indptr, idx, vals, np.ascontiguousarray(v, dtype=float))
    return kernels.csr_mix(indptr, idx, vals, np.ascontiguousarray(v, dtype=float))


def _check_symmetric(W: np.ndarray) -> None:
    if np.abs(W - W.T).max() > SYMMETRY_TOL:
        raise ValueError("EXTRA needs a symmetric weighting matrix")


def extra_step(x, x_prev, grads, grads_prev, W, W_tilde, alpha):
    """``x+ = (I + W) x - W~ x_prev - alpha (grads - grads_prev)`` for symmetric ``W``."""
    _check_symmetric(np.asarray(W, dtype=float))
    return _extra(x, x_prev, grads, grads_prev, W, W_tilde, alpha)


def _extra(x, x_prev, grads, grads_prev, W, W_tilde, alpha):
    return x + _mix(W, x) - _mix(W_tilde, x_prev) - alpha * (grads - grads_prev)


def dgd_row_step(x, grads, W_row, alpha_k):
    """``x+ = W_row x - alpha_k grads``."""
    return _mix(W_row, x) - alpha_k * grads


def gradient_push_step(w, y_ps, grads_at_z, A, alpha_k):
    """Push-sum gradient step: ``w+ = A (w - alpha_k g(z))``, ``y+ = A y``; ``z+ = w+/y+``."""
    return _mix(A, w - alpha_k * grads_at_z), _mix(A, y_ps)


class _Recorder:
    def __init__(self, trace: RunTrace, u: np.ndarray, r0: float):
        self.trace = trace
        self.u = u
        self.limit = DIVERGENCE_FACTOR * max(r0, np.finfo(float).tiny)
        self.t0 = time.perf_counter()

    def record(self, z: np.ndarray, defect: float) -> float:
        now = time.perf_counter()
        r = residual(z, self.u) if np.isfinite(z).all() else np.inf
        self.trace.residual.append(r)
        self.trace.consensus_spread.append(consensus_spread(z) if np.isfinite(r) else np.inf)
        self.trace.conservation_defect.append(defect)
        self.trace.wall_time.append(now - self.t0)
        self.t0 = now
        return r

    def status(self, r: float, target: float) -> str | None:
        if not np.isfinite(r) or r > self.limit:
            return "diverged"
        if r <= target:
            return "converged"
        return None


def _mass_defect(s0, s1, gsum) -> float:
    return float(np.abs(s1 - s0 + gsum).max() / max(1.0, np.abs(s0).max(), np.abs(s1).max(), np.abs(gsum).max()))


def run_baseline(
    config: BaselineConfig,
    problem: ObjectiveSuite,
    W: np.ndarray,
    max_iter: int,
    target_residual: float,
    u: np.ndarray,
    x0: np.ndarray | None = None,
    W_tilde: np.ndarray | None = None,
    theta: float = 0.5,
) -> RunTrace:
    """Run one baseline from ``x0`` (zeros by default) and record its trace.

    ``W`` is the algorithm's own matrix: symmetric doubly-stochastic for
    EXTRA, row-stochastic for ``dgd_row``, column-stochastic for
    ``gradient_push``.  The conservation column records the push-sum mass
    identity for gradient-push and zero otherwise.
    """
    u = np.asarray(u, dtype=float)
    n, p = problem.n, problem.p
    x = np.zeros((n, p)) if x0 is None else np.array(x0, dtype=float)
    W = np.asarray(W, dtype=float)
    trace = RunTrace(alpha=config.alpha, algorithm=config.algorithm)
    rec = _Recorder(trace, u, residual(x, u))
    r = rec.record(x, 0.0)
    reason = rec.status(r, target_residual) or "iteration-budget"
    if reason == "converged" or max_iter < 1:
        trace.reason = reason
        return trace

    Wc = _sparse(W)  # built once; the step functions take either form
    if config.algorithm == "extra":
        _check_symmetric(W)
        if W_tilde is None:
            W_tilde = theta * np.eye(n) + (1.0 - theta) * W
        Wtc = _sparse(W_tilde)
        g = problem.grad(x)
        x_prev, g_prev = x, g
        x = dgd_row_step(x, g, Wc, config.alpha)  # first round: x^1 = W x^0 - alpha grad
        z = x
    elif config.algorithm == "dgd_row":
        z = x
    else:
        w, y = x, np.ones(n)
        z = w / y[:, None]

    for k in range(max_iter):
        if config.algorithm == "extra":
            if k > 0:
                g = problem.grad(x)
                x, x_prev, g_prev = _extra(x, x_prev, g, g_prev, Wc, Wtc, config.alpha), x, g
            z, defect = x, 0.0
        elif config.algorithm == "dgd_row":
            x = dgd_row_step(x, problem.grad(x), Wc, config.step_size(k))
            z, defect = x, 0.0
        else:
            a_k = config.step_size(k)
            g = problem.grad(z)
            s0 = w.sum(axis=0)
            w, y = gradient_push_step(w, y, g, Wc, a_k)
            z = w / y[:, None]
            defect = _mass_defect(s0, w.sum(axis=0), a_k * g.sum(axis=0))
        r = rec.record(z, defect)
        status = rec.status(r, target_residual)
        if status:
            reason = status
            break
    trace.reason = reason
    return trace
