"""Command-line harness: ``dextra {generate,certify,run,compare,sweep}``.

Exit codes: 0 success, 1 usage or I/O error, 2 infeasible certificate,
3 divergence in a primary run.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .analysis import certify
from .config import ExperimentConfig, load_config, parse_alpha_grid
from .experiments import (
    Instance,
    alpha_sweep,
    assemble,
    build_instance,
    compare,
    empirical_alpha_max,
    empirical_range,
    run_algorithm,
    summarize,
)
from .weights import make_tilde, stationary

log = logging.getLogger("dextra")

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_DIVERGED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="INI experiment file")
    common.add_argument("--out", type=Path, default=Path("dextra_out"), help="output directory")
    common.add_argument("--instance", type=Path, help="generated instance directory (default: --out)")
    common.add_argument("--seed", type=int, help="overrides both graph and objective seeds")
    common.add_argument("--alpha", type=float)
    common.add_argument("--alpha-grid", type=str, help="comma-separated step sizes")
    common.add_argument("--algo", type=str, help="comma-separated algorithm list")
    common.add_argument("--max-iter", type=int)
    common.add_argument("--target", type=float)
    common.add_argument("--eta", type=float)
    common.add_argument("--delta", type=float)
    common.add_argument("--workers", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="dextra", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, text in [
        ("generate", "write graph, weights and objective data"),
        ("certify", "compute the certified step-size interval"),
        ("run", "run one algorithm and export its trace"),
        ("compare", "run several algorithms (or several steps) and plot them"),
        ("sweep", "step-size sweep for both weighting strategies"),
    ]:
        sub.add_parser(name, parents=[common], help=text)
    return p


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    kw = dict(alpha=args.alpha, max_iter=args.max_iter, target=args.target, eta=args.eta,
              delta=args.delta, workers=args.workers)
    if args.seed is not None:
        kw.update(graph_seed=args.seed, objective_seed=args.seed)
    if args.alpha_grid:
        kw["alpha_grid"] = parse_alpha_grid(args.alpha_grid)
    if args.algo:
        kw["algorithms"] = tuple(a.strip() for a in args.algo.split(",") if a.strip())
    return cfg.with_overrides(**kw)


def _instance_dir(args) -> Path:
    return args.instance or args.out


def load_instance(directory: Path) -> tuple[Instance, dict]:
    d = Path(directory)
    manifest = d / "manifest.txt"
    if not manifest.exists():
        raise UsageError(f"no generated instance at {d} (missing {manifest})")
    man = io.read_kv(manifest)
    g = io.read_edge_list(d / "graph.txt")
    problem = io.read_instance(d / "objective")
    inst = assemble(g, problem, man["strategy"], float(man["zeta"]), float(man["theta"]))
    pair = make_tilde(io.read_matrix(d / "A.csv"), float(man["theta"]))
    inst.pair, inst.info = pair, stationary(pair.A)
    return inst, man


def cmd_generate(cfg: ExperimentConfig, out: Path) -> int:
    inst = build_instance(cfg)
    out.mkdir(parents=True, exist_ok=True)
    io.write_edge_list(inst.graph, out / "graph.txt")
    io.write_matrix(inst.pair.A, out / "A.csv")
    io.write_matrix(inst.pair.A_tilde, out / "A_tilde.csv")
    io.write_matrix(inst.info.pi[:, None], out / "pi.csv")
    io.write_instance(inst.problem, out / "objective")
    io.write_kv(out / "manifest.txt", {
        "n": inst.graph.n,
        "density": cfg.density,
        "graph_seed": cfg.graph_seed,
        "strategy": cfg.strategy,
        "zeta": cfg.zeta,
        "theta": cfg.theta,
        "p": cfg.p,
        "m": cfg.m,
        "noise": cfg.noise,
        "objective_seed": cfg.objective_seed,
    })
    print(f"wrote instance to {out}")
    return EXIT_OK


def cmd_certify(cfg: ExperimentConfig, inst: Instance, out: Path) -> int:
    L_f, S_f = inst.problem.constants()
    cert = certify(inst.pair, inst.info, L_f, S_f, eta=cfg.eta, delta=cfg.delta)
    report = cert.report()
    io.write_certificate(report, out)
    for k, v in report.items():
        print(f"{k}={v}")
    return EXIT_OK if cert.feasible else EXIT_INFEASIBLE


def cmd_run(cfg: ExperimentConfig, inst: Instance, out: Path) -> int:
    algo = cfg.algorithms[0]
    tr = run_algorithm(inst, algo, cfg.alpha, cfg.max_iter, cfg.target)
    out.mkdir(parents=True, exist_ok=True)
    io.write_trace(tr, out / f"trace_{algo}.csv", {"strategy": inst.strategy})
    s = summarize(tr)
    print(f"algorithm={algo} alpha={cfg.alpha} reason={tr.reason} iterations={tr.iterations} "
          f"final_residual={s.final_residual:.3e}")
    return EXIT_DIVERGED if tr.reason == "diverged" else EXIT_OK


def _plot(series: dict[str, list], path: Path, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "dextra"
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, r in series.items():
        r = np.asarray(r, dtype=float)
        r = np.where(np.isfinite(r) & (r > 0), r, np.nan)
        ax.semilogy(np.arange(r.size), r, label=label)
    ax.set_xlabel("iteration")
    ax.set_ylabel("residual")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _write_summary(rows, path: Path) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "reason", "iterations", "final_residual", "tau", "r_squared", "linear"])
        for name, s in rows:
            w.writerow([name, s.reason, s.iterations, repr(s.final_residual), repr(s.tau), repr(s.r_squared),
                        str(s.linear).lower()])


def cmd_compare(cfg: ExperimentConfig, inst: Instance, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    if cfg.alpha_grid:
        traces = {f"dextra_alpha={a:g}": run_algorithm(inst, "dextra", a, cfg.max_iter, cfg.target)
                  for a in cfg.alpha_grid}
        primary = None
    else:
        traces = compare(inst, cfg.algorithms, cfg.alpha, cfg.max_iter, cfg.target)
        primary = cfg.algorithms[0]
    rows = []
    for name, tr in traces.items():
        io.write_trace(tr, out / f"trace_{name}.csv", {"strategy": inst.strategy})
        s = summarize(tr)
        rows.append((name, s))
        flag = "  DIVERGED" if tr.reason == "diverged" else ""
        tau = f"{s.tau:.6f}" if s.linear else "not linear"
        print(f"{name:24s} final={s.final_residual:.3e} tau={tau}{flag}")
    _write_summary(rows, out / "summary.csv")
    _plot({k: v.residual for k, v in traces.items()}, out / "compare.svg", "residual vs iteration")
    if primary is not None and traces[primary].reason == "diverged":
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_sweep(cfg: ExperimentConfig, inst: Instance, out: Path) -> int:
    grid = cfg.alpha_grid or tuple(np.round(np.linspace(0.05, 1.0, 20), 6))
    out.mkdir(parents=True, exist_ok=True)
    L_f, S_f = inst.problem.constants()
    results = {}
    for strategy in ("local_degree", "constant"):
        other = assemble(inst.graph, inst.problem, strategy, cfg.zeta, inst.pair.theta)
        results[strategy] = (alpha_sweep(other, grid, cfg.max_iter, cfg.target, workers=cfg.workers),
                             certify(other.pair, other.info, L_f, S_f))
    with (out / "sweep.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["strategy", "alpha", "reason", "convergent", "iterations", "tau", "r_squared"])
        for strategy, (pts, _) in results.items():
            for a in sorted(pts):
                pt = pts[a]
                w.writerow([strategy, repr(a), pt.reason, str(pt.convergent).lower(), pt.iterations,
                            repr(pt.tau), repr(pt.r_squared)])
    report = {}
    for strategy, (pts, cert) in results.items():
        lo, hi = empirical_range(pts)
        report[f"{strategy}.empirical_alpha_max"] = empirical_alpha_max(pts)
        report[f"{strategy}.empirical_lo"] = lo
        report[f"{strategy}.empirical_hi"] = hi
        report[f"{strategy}.certified_feasible"] = str(cert.feasible).lower()
        report[f"{strategy}.certified_lo"] = cert.alpha_lo
        report[f"{strategy}.certified_hi"] = cert.alpha_hi
        contained = cert.feasible and lo <= cert.alpha_lo and cert.alpha_hi <= hi
        report[f"{strategy}.certified_within_empirical"] = str(bool(contained)).lower()
    wider = report["constant.empirical_alpha_max"] >= report["local_degree.empirical_alpha_max"]
    report["constant_not_narrower"] = str(wider).lower()
    io.write_kv(out / "sweep_report.txt", report)
    for k, v in report.items():
        print(f"{k}={v}")
    _plot_sweep(results, out / "sweep.svg")
    return EXIT_OK


def _plot_sweep(results, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "dextra"
    fig, ax = plt.subplots(figsize=(6, 4))
    for strategy, (pts, _) in results.items():
        al = sorted(pts)
        it = [pts[a].iterations if pts[a].convergent else np.nan for a in al]
        ax.plot(al, it, marker="o", label=strategy)
    ax.set_xlabel("alpha")
    ax.set_ylabel("iterations (convergent runs)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = _config(args)
        if args.command == "generate":
            return cmd_generate(cfg, args.out)
        inst, _ = load_instance(_instance_dir(args))
        handler = {"certify": cmd_certify, "run": cmd_run, "compare": cmd_compare, "sweep": cmd_sweep}[args.command]
        return handler(cfg, inst, args.out)
    except (UsageError, FileNotFoundError, ValueError, OSError) as exc:
        print(f"dextra: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
