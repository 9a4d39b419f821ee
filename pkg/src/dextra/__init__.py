"""Simulation and analysis of DEXTRA, a push-sum corrected EXTRA for directed graphs."""

from .digraph import Digraph, is_strongly_connected, random_strongly_connected, random_undirected_connected
from .engine import NetworkState, RunTrace, init, residual, run, step
from .kernels import BACKEND
from .objectives import LeastSquaresInstance, centralized_solve, estimate_constants, generate_least_squares
from .weights import (
    StationaryInfo,
    WeightPair,
    check_assumption_2c,
    constant_weights,
    consensus_rate_bound_check,
    local_degree_weights,
    make_tilde,
    stationary,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Digraph",
    "LeastSquaresInstance",
    "NetworkState",
    "RunTrace",
    "StationaryInfo",
    "WeightPair",
    "centralized_solve",
    "check_assumption_2c",
    "consensus_rate_bound_check",
    "constant_weights",
    "estimate_constants",
    "generate_least_squares",
    "init",
    "is_strongly_connected",
    "local_degree_weights",
    "make_tilde",
    "random_strongly_connected",
    "random_undirected_connected",
    "residual",
    "run",
    "stationary",
    "step",
]
