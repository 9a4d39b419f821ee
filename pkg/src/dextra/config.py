"""Experiment configuration read from INI-style ``key = value`` files with sections.

Example::

    [graph]
    n = 10
    density = 0.3
    seed = 1
    ; file = graph.txt

    [weights]
    strategy = local_degree   ; or constant
    zeta = 0.01
    theta = 0.5

    [objective]
    p = 4
    m = 6
    noise = 0.1
    seed = 3

    [run]
    algorithms = dextra,gradient_push,dgd_row
    alpha = 0.05
    alpha_grid = 0.01,0.05,0.1
    max_iter = 5000
    target = 1e-10
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

ALGOS = ("dextra", "extra", "gradient_push", "dgd_row")
STRATEGIES = ("local_degree", "constant")


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 3
    density: float = 0.3
    graph_seed: int = 1
    graph_file: str | None = None
    strategy: str = "local_degree"
    zeta: float = 0.01
    theta: float = 0.5
    p: int = 4
    m: int = 6
    noise: float = 0.1
    objective_seed: int = 3
    algorithms: tuple[str, ...] = ("dextra", "gradient_push", "dgd_row")
    alpha: float = 0.05
    alpha_grid: tuple[float, ...] = field(default_factory=tuple)
    max_iter: int = 5000
    target: float = 1e-10
    eta: float | None = None
    delta: float | None = None
    workers: int = 1

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown weighting strategy {self.strategy!r}")
        bad = [a for a in self.algorithms if a not in ALGOS]
        if bad:
            raise ValueError(f"unknown algorithms {bad}")
        if not self.algorithms:
            raise ValueError("algorithm list is empty")
        if any(not a > 0 for a in self.alpha_grid):
            raise ValueError("alpha grid entries must be positive")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.graph_file is not None and not Path(self.graph_file).exists():
            raise FileNotFoundError(self.graph_file)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def parse_alpha_grid(text: str) -> tuple[float, ...]:
    grid = _floats(text)
    if not grid:
        raise ValueError("alpha grid is empty")
    return grid


def load_config(path: Path | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.read(path)
    kw: dict = {}
    g = cp["graph"] if cp.has_section("graph") else {}
    if "n" in g:
        kw["n"] = int(g["n"])
    if "density" in g:
        kw["density"] = float(g["density"])
    if "seed" in g:
        kw["graph_seed"] = int(g["seed"])
    if "file" in g:
        f = Path(g["file"])
        kw["graph_file"] = str(f if f.is_absolute() else path.parent / f)
    w = cp["weights"] if cp.has_section("weights") else {}
    if "strategy" in w:
        kw["strategy"] = w["strategy"]
    for key in ("zeta", "theta"):
        if key in w:
            kw[key] = float(w[key])
    o = cp["objective"] if cp.has_section("objective") else {}
    for key in ("p", "m"):
        if key in o:
            kw[key] = int(o[key])
    if "noise" in o:
        kw["noise"] = float(o["noise"])
    if "seed" in o:
        kw["objective_seed"] = int(o["seed"])
    r = cp["run"] if cp.has_section("run") else {}
    if "algorithms" in r:
        kw["algorithms"] = tuple(a.strip() for a in r["algorithms"].split(",") if a.strip())
    if "alpha" in r:
        kw["alpha"] = float(r["alpha"])
    if "alpha_grid" in r:
        kw["alpha_grid"] = parse_alpha_grid(r["alpha_grid"])
    if "max_iter" in r:
        kw["max_iter"] = int(r["max_iter"])
    if "target" in r:
        kw["target"] = float(r["target"])
    for key in ("eta", "delta"):
        if key in r:
            kw[key] = float(r[key])
    if "workers" in r:
        kw["workers"] = int(r["workers"])
    return ExperimentConfig(**kw)
