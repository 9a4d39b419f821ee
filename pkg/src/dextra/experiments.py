"""Instance assembly and multi-run protocols (comparisons, step-size sweeps)."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import engine
from .analysis import R2_LINEAR_GATE, fit_linear_rate
from .baselines import BaselineConfig, run_baseline
from .config import ExperimentConfig
from .digraph import Digraph, random_strongly_connected
from .io import read_edge_list
from .objectives import LeastSquaresInstance, centralized_solve, generate_least_squares
from .weights import (
    StationaryInfo,
    WeightPair,
    constant_weights,
    local_degree_weights,
    make_tilde,
    metropolis_weights,
    row_stochastic_weights,
    stationary,
)


@dataclass
class Instance:
    graph: Digraph
    pair: WeightPair
    info: StationaryInfo
    problem: LeastSquaresInstance
    u: np.ndarray
    strategy: str


def weight_matrix(g: Digraph, strategy: str, zeta: float = 0.01) -> np.ndarray:
    if strategy == "local_degree":
        return local_degree_weights(g)
    if strategy == "constant":
        return constant_weights(g, zeta)
    raise ValueError(f"unknown weighting strategy {strategy!r}")


def assemble(g: Digraph, problem: LeastSquaresInstance, strategy: str = "local_degree",
             zeta: float = 0.01, theta: float = 0.5) -> Instance:
    pair = make_tilde(weight_matrix(g, strategy, zeta), theta)
    return Instance(graph=g, pair=pair, info=stationary(pair.A), problem=problem,
                    u=centralized_solve(problem), strategy=strategy)


def build_instance(cfg: ExperimentConfig) -> Instance:
    if cfg.graph_file:
        g = read_edge_list(cfg.graph_file)
    else:
        g = random_strongly_connected(cfg.n, cfg.density, cfg.graph_seed)
    problem = generate_least_squares(g.n, cfg.p, cfg.m, cfg.noise, cfg.objective_seed)
    return assemble(g, problem, cfg.strategy, cfg.zeta, cfg.theta)


def run_algorithm(inst: Instance, algorithm: str, alpha: float, max_iter: int, target: float,
                  record_history: bool = False) -> engine.RunTrace:
    """Run one algorithm from ``x0 = 0``.

    gradient_push and dgd_row use the diminishing step ``alpha/sqrt(k+1)``;
    EXTRA needs an undirected graph and uses Metropolis weights.
    """
    if algorithm == "dextra":
        return engine.run(inst.problem, inst.pair, alpha, max_iter, target, inst.u, record_history=record_history)
    if algorithm == "extra":
        W = metropolis_weights(inst.graph)
        return run_baseline(BaselineConfig("extra", alpha), inst.problem, W, max_iter, target, inst.u,
                            theta=inst.pair.theta)
    if algorithm == "gradient_push":
        return run_baseline(BaselineConfig("gradient_push", alpha, "sqrt"), inst.problem,
                            np.asarray(inst.pair.A), max_iter, target, inst.u)
    if algorithm == "dgd_row":
        return run_baseline(BaselineConfig("dgd_row", alpha, "sqrt"), inst.problem,
                            row_stochastic_weights(inst.graph), max_iter, target, inst.u)
    raise ValueError(f"unknown algorithm {algorithm!r}")


@dataclass(frozen=True)
class RateSummary:
    algorithm: str
    reason: str
    iterations: int
    final_residual: float
    tau: float
    r_squared: float

    @property
    def linear(self) -> bool:
        return bool(self.tau < 1 and self.r_squared >= R2_LINEAR_GATE)


def summarize(trace: engine.RunTrace, floor: float = 1e-300) -> RateSummary:
    """Final residual and a log-linear fit over the trace (first tenth dropped as transient)."""
    r = np.asarray(trace.residual, dtype=float)
    tau = r2 = float("nan")
    ok = r[np.isfinite(r) & (r > floor)]
    if ok.size == r.size and r.size >= 12:
        tau, r2 = fit_linear_rate(r, burn_in=r.size // 10)
    return RateSummary(trace.algorithm, trace.reason, trace.iterations, float(r[-1]), tau, r2)


def compare(inst: Instance, algorithms, alpha: float, max_iter: int, target: float) -> dict[str, engine.RunTrace]:
    return {a: run_algorithm(inst, a, alpha, max_iter, target) for a in algorithms}


@dataclass(frozen=True)
class SweepPoint:
    alpha: float
    reason: str
    iterations: int
    final_residual: float
    tau: float
    r_squared: float

    @property
    def convergent(self) -> bool:
        """Reached the target, or is still shrinking log-linearly when the budget ran out."""
        if self.reason == "converged":
            return True
        return self.reason == "iteration-budget" and self.tau < 1 and self.r_squared >= R2_LINEAR_GATE


def _sweep_one(args) -> SweepPoint:
    inst, alpha, max_iter, target = args
    tr = engine.run(inst.problem, inst.pair, alpha, max_iter, target, inst.u)
    s = summarize(tr)
    return SweepPoint(float(alpha), tr.reason, tr.iterations, s.final_residual, s.tau, s.r_squared)


def alpha_sweep(inst: Instance, grid, max_iter: int, target: float, workers: int = 1) -> dict[float, SweepPoint]:
    """DEXTRA at every ``alpha`` in ``grid``; results keyed by ``alpha``."""
    jobs = [(inst, float(a), max_iter, target) for a in grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            points = list(ex.map(_sweep_one, jobs))
    else:
        points = [_sweep_one(j) for j in jobs]
    return {p.alpha: p for p in points}


def empirical_alpha_max(points: dict[float, SweepPoint]) -> float:
    """Largest grid step whose run is convergent (0.0 if none is)."""
    good = [a for a, p in points.items() if p.convergent]
    return max(good) if good else 0.0


def empirical_range(points: dict[float, SweepPoint]) -> tuple[float, float]:
    good = sorted(a for a, p in points.items() if p.convergent)
    return (good[0], good[-1]) if good else (float("nan"), float("nan"))
