"""Per-agent objectives and the centralized reference solver."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from . import kernels

RANK_TOL = 1e-10
MAX_ATTEMPTS = 10


class ObjectiveSuite(ABC):
    """``n`` differentiable local objectives over ``R^p``.

    Subclasses provide stacked gradients and the per-agent Lipschitz and
    restricted strong-convexity constants.
    """

    n: int
    p: int

    @abstractmethod
    def values(self, z: np.ndarray) -> np.ndarray:
        """Local objective values ``f_i(z_i)`` for a stacked ``(n, p)`` point."""

    @abstractmethod
    def grad(self, z: np.ndarray) -> np.ndarray:
        """Stacked gradients ``grad f_i(z_i)``, shape ``(n, p)``."""

    @abstractmethod
    def agent_constants(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-agent ``(L_fi, S_fi)`` arrays."""

    def constants(self) -> tuple[float, float]:
        L, S = self.agent_constants()
        return float(L.max()), float(S.min())

    def total_grad(self, x: np.ndarray) -> np.ndarray:
        """Gradient of ``sum_i f_i`` at a single point ``x``."""
        return self.grad(np.tile(x, (self.n, 1))).sum(axis=0)


@dataclass(eq=False)
class LeastSquaresInstance(ObjectiveSuite):
    """``f_i(x) = ||H_i x - h_i||^2``.

    ``H`` is stored as an ``(n, m_max, p)`` array; agents with fewer rows are
    zero-padded, which leaves their objective unchanged.
    """

    H: np.ndarray
    h: np.ndarray
    x_true: np.ndarray
    m: np.ndarray = None
    seed: int | None = None
    noise_std: float = 0.0
    n: int = field(init=False)
    p: int = field(init=False)

    def __post_init__(self):
        self.H = np.ascontiguousarray(self.H, dtype=float)
        self.h = np.ascontiguousarray(self.h, dtype=float)
        self.x_true = np.asarray(self.x_true, dtype=float)
        if self.H.ndim != 3 or self.h.shape != self.H.shape[:2]:
            raise ValueError("H must be (n, m, p) and h must be (n, m)")
        self.n, _, self.p = self.H.shape
        if self.m is None:
            self.m = np.full(self.n, self.H.shape[1], dtype=int)
        self.m = np.asarray(self.m, dtype=int)

    def gram(self) -> np.ndarray:
        return np.einsum("imp,imq->ipq", self.H, self.H)

    def values(self, z):
        return kernels.ls_values(self.H, self.h, np.ascontiguousarray(z, dtype=float))

    def grad(self, z):
        return kernels.ls_grad(self.H, self.h, np.ascontiguousarray(z, dtype=float))

    def agent_constants(self):
        eig = np.linalg.eigvalsh(self.gram())
        return 2.0 * eig[:, -1], 2.0 * eig[:, 0]


def generate_least_squares(
    n: int,
    p: int,
    m_each: int,
    noise_std: float,
    seed: int,
    lf_target: float | None = 1.0,
) -> LeastSquaresInstance:
    """Random least-squares instance with standard-normal ``H_i``.

    ``H`` is rescaled by a common factor so that ``L_f`` equals ``lf_target``
    (skip with ``None``); ``h_i = H_i x* + noise`` afterwards, so the noise
    keeps its stated standard deviation.  Each ``H_i^T H_i`` must be
    nonsingular; rank-deficient draws are retried with a perturbed seed.
    """
    if not m_each >= p >= 1:
        raise ValueError("need m_each >= p >= 1")
    if n < 1:
        raise ValueError("need at least one agent")
    for attempt in range(MAX_ATTEMPTS):
        rng = np.random.default_rng([seed, attempt])
        H = rng.standard_normal((n, m_each, p))
        eig = np.linalg.eigvalsh(np.einsum("imp,imq->ipq", H, H))
        if (eig[:, 0] > RANK_TOL * eig[:, -1]).all():
            break
    else:
        raise RuntimeError(f"rank-deficient H after {MAX_ATTEMPTS} attempts (seed={seed})")
    if lf_target is not None:
        H *= np.sqrt(lf_target / (2.0 * eig[:, -1].max()))
    x_true = rng.standard_normal(p)
    h = np.einsum("imp,p->im", H, x_true) + noise_std * rng.standard_normal((n, m_each))
    return LeastSquaresInstance(H=H, h=h, x_true=x_true, seed=seed, noise_std=noise_std)


def centralized_solve(inst: LeastSquaresInstance) -> np.ndarray:
    """Minimizer of ``sum_i ||H_i x - h_i||^2`` via the normal equations."""
    gram = inst.gram().sum(axis=0)
    rhs = np.einsum("imp,im->p", inst.H, inst.h)
    eig = np.linalg.eigvalsh(gram)
    if eig[0] <= RANK_TOL * max(eig[-1], 1e-300):
        raise np.linalg.LinAlgError("normal matrix is singular")
    return np.linalg.solve(gram, rhs)


def estimate_constants(inst: ObjectiveSuite) -> tuple[float, float]:
    """``(L_f, S_f) = (max_i L_fi, min_i S_fi)``."""
    return inst.constants()
