import csv
from pathlib import Path

import numpy as np
import pytest

from conftest import standard_config
from dextra import io
from dextra.cli import load_instance, main
from dextra.config import ExperimentConfig, load_config
from dextra.digraph import random_strongly_connected
from dextra.engine import run
from dextra.experiments import build_instance
from dextra.objectives import generate_least_squares


def check_schema(path: Path, header):
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == header
    for k, row in enumerate(rows[1:]):
        assert int(row[0]) == k
        [float(v) for v in row[1:]]
    return len(rows) - 1


def test_edge_list_round_trip(tmp_path):
    g = random_strongly_connected(10, 0.3, 1)
    io.write_edge_list(g, tmp_path / "g.txt")
    lines = (tmp_path / "g.txt").read_text().splitlines()
    assert lines[0] == "10" and lines[1:] == sorted(lines[1:], key=lambda s: tuple(map(int, s.split())))
    assert io.read_edge_list(tmp_path / "g.txt") == g


def test_matrix_round_trip_is_exact(tmp_path):
    M = np.random.default_rng(0).standard_normal((4, 4))
    io.write_matrix(M, tmp_path / "m.csv")
    assert (tmp_path / "m.csv").read_text().splitlines()[0] == "4"
    assert np.array_equal(io.read_matrix(tmp_path / "m.csv"), M)


def test_instance_round_trip(tmp_path):
    inst = generate_least_squares(5, 3, 4, 0.1, 8)
    io.write_instance(inst, tmp_path / "obj")
    back = io.read_instance(tmp_path / "obj")
    assert np.array_equal(back.H, inst.H) and np.array_equal(back.h, inst.h)
    assert back.seed == 8 and back.noise_std == 0.1
    man = io.read_kv(tmp_path / "obj" / "manifest.txt")
    assert set(man) == {"n", "p", "m", "seed", "noise_std"}


def test_trace_export_schema(tmp_path, standard_instance):
    inst = standard_instance
    tr = run(inst.problem, inst.pair, 0.05, 30, 0.0, inst.u)
    io.write_trace(tr, tmp_path / "t.csv", {"strategy": "local_degree", "seed": 1})
    assert check_schema(tmp_path / "t.csv", io.TRACE_HEADER) == 31
    man = io.read_kv(tmp_path / "t.manifest")
    assert man["reason"] == "iteration-budget" and man["algorithm"] == "dextra" and float(man["alpha"]) == 0.05


def test_lyapunov_export_schema(tmp_path):
    io.write_lyapunov([1.0, 0.5, 0.25], [2.0, 1.0, 0.5], tmp_path / "l.csv")
    assert check_schema(tmp_path / "l.csv", io.LYAPUNOV_HEADER) == 3


def test_config_file(tmp_path):
    (tmp_path / "c.ini").write_text(
        "[graph]\nn = 6\ndensity = 0.2\nseed = 4\n\n[weights]\nstrategy = constant ; comment\nzeta = 0.02\n"
        "[objective]\np = 2\nm = 3\n[run]\nalgorithms = dextra, dgd_row\nalpha_grid = 0.1,0.2\nmax_iter = 99\n")
    cfg = load_config(tmp_path / "c.ini")
    assert (cfg.n, cfg.graph_seed, cfg.strategy, cfg.zeta, cfg.p, cfg.m) == (6, 4, "constant", 0.02, 2, 3)
    assert cfg.algorithms == ("dextra", "dgd_row") and cfg.alpha_grid == (0.1, 0.2) and cfg.max_iter == 99


@pytest.mark.parametrize("kw", [dict(strategy="metropolis"), dict(algorithms=("dgd",)), dict(alpha_grid=(0.1, -1.0)),
                                dict(algorithms=()), dict(graph_file="/nonexistent/graph.txt")])
def test_config_validation(kw):
    with pytest.raises((ValueError, FileNotFoundError)):
        ExperimentConfig(**kw)


def test_generate_minimal_and_idempotent(tmp_path):
    assert main(["generate", "--out", str(tmp_path / "a")]) == 0
    assert main(["generate", "--out", str(tmp_path / "b")]) == 0
    a, b = tmp_path / "a", tmp_path / "b"
    files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    assert files == sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes()
    for name in ("graph.txt", "A.csv", "manifest.txt", "objective/manifest.txt"):
        assert (a / name).exists()


def test_generate_round_trip(tmp_path):
    cfg_path = tmp_path / "c.ini"
    cfg_path.write_text("[graph]\nn = 10\ndensity = 0.3\nseed = 1\n[objective]\np = 4\nm = 6\nnoise = 0.1\nseed = 1\n")
    assert main(["generate", "--config", str(cfg_path), "--out", str(tmp_path / "inst")]) == 0
    loaded, man = load_instance(tmp_path / "inst")
    ref = build_instance(standard_config(1))
    assert loaded.graph == ref.graph
    assert np.array_equal(loaded.pair.A, ref.pair.A)
    assert np.array_equal(loaded.problem.H, ref.problem.H)
    assert np.allclose(loaded.info.pi, ref.info.pi, rtol=0, atol=0)
    assert man["strategy"] == "local_degree"


@pytest.fixture(scope="module")
def generated(tmp_path_factory):
    out = tmp_path_factory.mktemp("inst")
    assert main(["generate", "--out", str(out), "--seed", "1", "--config", str(_std_cfg(out))]) == 0
    return out


def _std_cfg(d: Path) -> Path:
    p = d / "std.ini"
    p.write_text("[graph]\nn = 10\ndensity = 0.3\n[objective]\np = 4\nm = 6\nnoise = 0.1\n")
    return p


def test_certify_reports_infeasible(generated, tmp_path, capsys):
    code = main(["certify", "--instance", str(generated), "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 2 and "feasible=false" in out and "Delta" in out
    rep = io.read_kv(tmp_path / "certificate.txt")
    assert rep["feasible"] == "false"
    assert (tmp_path / "certificate_constants.csv").read_text().startswith("name,value")


def test_certify_extreme_delta_names_bound(generated, tmp_path, capsys):
    code = main(["certify", "--instance", str(generated), "--out", str(tmp_path), "--delta", "1000"])
    out = capsys.readouterr().out
    assert code == 2 and "feasible=false" in out and "delta" in out


def test_missing_instance_path(tmp_path, capsys):
    missing = tmp_path / "nowhere"
    assert main(["certify", "--out", str(missing)]) == 1
    assert str(missing) in capsys.readouterr().err


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as ei:
        main(["frobnicate"])
    assert ei.value.code == 1


def test_run_and_divergence_exit(generated, tmp_path):
    assert main(["run", "--instance", str(generated), "--out", str(tmp_path), "--alpha", "0.05"]) == 0
    assert check_schema(tmp_path / "trace_dextra.csv", io.TRACE_HEADER) > 0
    assert io.read_kv(tmp_path / "trace_dextra.manifest")["reason"] == "converged"
    assert main(["run", "--instance", str(generated), "--out", str(tmp_path), "--alpha", "10"]) == 3


def test_compare_outputs(generated, tmp_path, capsys):
    code = main(["compare", "--instance", str(generated), "--out", str(tmp_path), "--alpha", "0.05",
                 "--max-iter", "4000", "--algo", "dextra,gradient_push,dgd_row"])
    assert code == 0
    for algo in ("dextra", "gradient_push", "dgd_row"):
        check_schema(tmp_path / f"trace_{algo}.csv", io.TRACE_HEADER)
    svg = (tmp_path / "compare.svg").read_text()
    assert svg.lstrip().startswith("<?xml") and "<svg" in svg
    with (tmp_path / "summary.csv").open() as fh:
        rows = {r["name"]: r for r in csv.DictReader(fh)}
    assert rows["dextra"]["reason"] == "converged" and float(rows["dextra"]["tau"]) < 1
    assert rows["dextra"]["linear"] == "true"
    # sublinear traces do not pass the linearity gate
    assert rows["gradient_push"]["linear"] == "false" and rows["dgd_row"]["linear"] == "false"
    assert "not linear" in capsys.readouterr().out


def test_compare_alpha_grid_flags_divergence(generated, tmp_path, capsys):
    code = main(["compare", "--instance", str(generated), "--out", str(tmp_path), "--alpha-grid", "0.1,8",
                 "--max-iter", "1500"])
    out = capsys.readouterr().out
    assert code == 0 and "DIVERGED" in out
    assert (tmp_path / "trace_dextra_alpha=0.1.csv").exists()


def test_single_agent_compare_coincides(tmp_path):
    assert main(["generate", "--out", str(tmp_path), "--config", str(_one_agent_cfg(tmp_path))]) == 0
    inst, _ = load_instance(tmp_path)
    from dextra.experiments import run_algorithm

    traces = {a: run_algorithm(inst, a, 0.1, 100, 0.0) for a in ("dextra", "extra")}
    x = np.zeros((1, inst.problem.p))
    for _ in range(100):
        x = x - 0.1 * inst.problem.grad(x)
    for tr in traces.values():
        assert tr.residual[-1] == pytest.approx(np.linalg.norm(x[0] - inst.u), abs=1e-10)


def _one_agent_cfg(d: Path) -> Path:
    p = d / "one.ini"
    p.write_text("[graph]\nn = 1\n[objective]\np = 2\nm = 3\n")
    return p


def test_sweep_report(generated, tmp_path):
    code = main(["sweep", "--instance", str(generated), "--out", str(tmp_path), "--alpha-grid", "0.2,0.5,6",
                 "--max-iter", "1500"])
    assert code == 0
    rep = io.read_kv(tmp_path / "sweep_report.txt")
    assert float(rep["local_degree.empirical_alpha_max"]) == 0.5
    assert rep["local_degree.certified_feasible"] == "false"
    with (tmp_path / "sweep.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 6 and {r["strategy"] for r in rows} == {"local_degree", "constant"}
    assert (tmp_path / "sweep.svg").exists()


def test_sweep_parallel_matches_serial(generated, tmp_path):
    inst, _ = load_instance(generated)
    from dextra.experiments import alpha_sweep

    serial = alpha_sweep(inst, [0.1, 0.3, 0.6], 800, 1e-10, workers=1)
    parallel = alpha_sweep(inst, [0.6, 0.3, 0.1], 800, 1e-10, workers=2)
    assert serial == parallel
