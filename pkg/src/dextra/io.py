"""Plain-text persistence: edge lists, matrix CSVs, instance directories, traces and certificates."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .digraph import Digraph
from .engine import RunTrace
from .objectives import LeastSquaresInstance

TRACE_HEADER = ["iter", "residual", "consensus_spread", "conservation_defect"]
LYAPUNOV_HEADER = ["iter", "g_seminorm", "dz_error_sq"]


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_kv(path: Path, items: dict) -> None:
    path = Path(path)
    with path.open("w") as fh:
        for k, v in items.items():
            fh.write(f"{k}={_fmt(v)}\n")


def read_kv(path: Path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def write_edge_list(g: Digraph, path: Path) -> None:
    """First line ``n``, then one ``i j`` line per edge (``j`` sends to ``i``), sorted."""
    lines = [str(g.n)] + [f"{i} {j}" for i, j in g.sorted_edges()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path: Path) -> Digraph:
    rows = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not rows:
        raise ValueError(f"{path}: empty edge list")
    n = int(rows[0][0])
    return Digraph(n, frozenset((int(i), int(j)) for i, j in rows[1:]))


def write_matrix(M: np.ndarray, path: Path) -> None:
    """Dense row-major CSV preceded by a one-line header holding ``n`` (the row count)."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with Path(path).open("w", newline="") as fh:
        fh.write(f"{M.shape[0]}\n")
        w = csv.writer(fh)
        for row in M:
            w.writerow([repr(float(v)) for v in row])


def read_matrix(path: Path) -> np.ndarray:
    with Path(path).open(newline="") as fh:
        n = int(fh.readline())
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    M = np.array(rows, dtype=float)
    if M.shape[0] != n:
        raise ValueError(f"{path}: header says {n} rows, found {M.shape[0]}")
    return M


def write_instance(inst: LeastSquaresInstance, directory: Path) -> None:
    """One ``H_<i>.csv`` and ``h_<i>.csv`` per agent, ``x_true.csv`` and a ``manifest.txt``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for i in range(inst.n):
        m = int(inst.m[i])
        write_matrix(inst.H[i, :m], d / f"H_{i}.csv")
        write_matrix(inst.h[i, :m, None], d / f"h_{i}.csv")
    write_matrix(inst.x_true[:, None], d / "x_true.csv")
    write_kv(d / "manifest.txt", {
        "n": inst.n,
        "p": inst.p,
        "m": ",".join(str(int(v)) for v in inst.m),
        "seed": inst.seed,
        "noise_std": float(inst.noise_std),
    })


def read_instance(directory: Path) -> LeastSquaresInstance:
    d = Path(directory)
    man = read_kv(d / "manifest.txt")
    n, p = int(man["n"]), int(man["p"])
    m = np.array([int(v) for v in man["m"].split(",")], dtype=int)
    H = np.zeros((n, m.max(), p))
    h = np.zeros((n, m.max()))
    for i in range(n):
        H[i, : m[i]] = read_matrix(d / f"H_{i}.csv")
        h[i, : m[i]] = read_matrix(d / f"h_{i}.csv")[:, 0]
    x_true = read_matrix(d / "x_true.csv")[:, 0]
    seed = None if man.get("seed") in (None, "None") else int(man["seed"])
    return LeastSquaresInstance(H=H, h=h, x_true=x_true, m=m, seed=seed, noise_std=float(man["noise_std"]))


def write_trace(trace: RunTrace, path: Path, manifest: dict | None = None) -> None:
    """Trace CSV plus a ``<name>.manifest`` sidecar with alpha, algorithm and terminal reason."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for k, (r, s, c) in enumerate(zip(trace.residual, trace.consensus_spread, trace.conservation_defect)):
            w.writerow([k, repr(float(r)), repr(float(s)), repr(float(c))])
    meta = {"alpha": trace.alpha, "algorithm": trace.algorithm, "reason": trace.reason,
            "iterations": trace.iterations}
    meta.update(manifest or {})
    write_kv(path.with_suffix(".manifest"), meta)


def read_trace_csv(path: Path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = np.array(body, dtype=float).reshape(len(body), len(header))
    return {name: cols[:, i] for i, name in enumerate(header)}


def write_lyapunov(g_seminorm, dz_error_sq, path: Path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LYAPUNOV_HEADER)
        for k, (g, e) in enumerate(zip(g_seminorm, dz_error_sq)):
            w.writerow([k, repr(float(g)), repr(float(e))])


def write_certificate(report: dict, directory: Path, stem: str = "certificate") -> tuple[Path, Path]:
    """Flat ``key=value`` report and a two-column ``name,value`` CSV of the numeric entries."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    kv, table = d / f"{stem}.txt", d / f"{stem}_constants.csv"
    write_kv(kv, report)
    with table.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "value"])
        for k, v in report.items():
            if isinstance(v, (int, float, np.floating)) and not isinstance(v, bool):
                w.writerow([k, repr(float(v))])
    return kv, table
