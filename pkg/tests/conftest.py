import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dextra.config import ExperimentConfig
from dextra.digraph import Digraph
from dextra.experiments import build_instance

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# the standard experiment: 10 agents, density 0.3, least squares p=4, m=6, noise 0.1
STANDARD = dict(n=10, density=0.3, p=4, m=6, noise=0.1)
STANDARD_ALPHA = 0.05


def standard_config(seed: int, **kw) -> ExperimentConfig:
    args = dict(STANDARD, graph_seed=seed, objective_seed=seed)
    args.update(kw)
    return ExperimentConfig(**args)


@pytest.fixture(scope="session")
def standard_instance():
    return build_instance(standard_config(1))


@pytest.fixture
def cycle3():
    # 0 -> 1 -> 2 -> 0 ; edge (i, j) means j sends to i
    return Digraph.from_edges(3, [(1, 0), (2, 1), (0, 2)])


def dense_dextra(A, At, grad, x0, alpha, iters):
    """Straight matrix-form reference: returns the list of (x^k, y^k, z^k) for k = 0..iters."""
    n = A.shape[0]
    x_prev, y = np.array(x0, dtype=float), np.ones(n)
    z_prev = x_prev / y[:, None]
    g_prev = grad(z_prev)
    x = A @ x_prev - alpha * g_prev
    y = A @ y
    out = [(x_prev, np.ones(n), z_prev), (x, y, x / y[:, None])]
    for _ in range(iters - 1):
        z = x / y[:, None]
        g = grad(z)
        x_next = x + A @ x - At @ x_prev - alpha * (g - g_prev)
        y = A @ y
        x_prev, x, g_prev = x, x_next, g
        out.append((x, y, x / y[:, None]))
    return out


ACCEPTANCE: dict[int, str] = {}


def record(criterion: int, ok: bool, detail: str) -> str:
    line = f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[criterion] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
