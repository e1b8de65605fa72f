"""Command-line behaviour: outputs, exit codes, reproducibility."""

import json

import pytest

from urnnet.cli import main
from urnnet.fileio import read_edge_list, write_edge_list
from urnnet.graph import DirectedGraph


def run_cli(*argv):
    return main(list(argv))


def test_generate_star(tmp_path, capsys):
    out = tmp_path / "star.edges"
    assert run_cli("generate", "--family", "star", "--n", "5", "--out", str(out)) == 0
    printed = capsys.readouterr().out
    assert "edges = 8" in printed
    assert "all vertices reinforced = True" in printed
    assert read_edge_list(out).n_edges == 8


def test_generate_cycle_undirected(tmp_path):
    out = tmp_path / "c6.edges"
    assert run_cli("generate", "--family", "cycle-undirected", "--n", "6", "--out", str(out)) == 0
    assert read_edge_list(out).n_edges == 12


def test_generate_er_reports_reinforced(tmp_path, capsys):
    out = tmp_path / "er.edges"
    code = run_cli(
        "generate", "--family", "er-min-indegree", "--n", "20", "--p", "0.1",
        "--seed", "1", "--out", str(out),
    )
    assert code == 0
    assert "all vertices reinforced = True" in capsys.readouterr().out


def test_generate_invalid_params_exit_2(tmp_path):
    assert run_cli("generate", "--family", "d-regular", "--n", "5", "--d", "3") == 2
    assert run_cli("generate", "--family", "star") == 2  # missing --n


def test_predict_star_friedman(tmp_path, capsys):
    graph = tmp_path / "star.edges"
    run_cli("generate", "--family", "star", "--n", "5", "--out", str(graph))
    capsys.readouterr()
    out = tmp_path / "report.json"
    code = run_cli(
        "predict", "--graph", str(graph), "--a", "1", "--b", "1", "--m", "2",
        "--out", str(out),
    )
    assert code == 0
    report = json.loads(out.read_text())["report"]
    assert report["regime"] == "gaussian_sqrt_t"
    assert report["rho"] == pytest.approx(1.0)
    assert report["equilibrium"] == pytest.approx([0.5] * 5)
    # Friedman with alpha = 1/2 sends one ball of each colour whatever is
    # drawn, so the reinforcement noise vanishes.
    assert report["noise_var_C"] == pytest.approx(0.0)


def test_predict_polya_rate_class(tmp_path):
    graph = tmp_path / "c8.edges"
    run_cli("generate", "--family", "cycle-undirected", "--n", "8", "--out", str(graph))
    out = tmp_path / "report.json"
    assert run_cli("predict", "--graph", str(graph), "--polya", "--out", str(out)) == 0
    report = json.loads(out.read_text())["report"]
    assert report["regime"] == "polya"
    assert report["rate_class"]["kind"] == "t_pow"
    assert report["rate_class"]["exponent"] == pytest.approx(-0.5857864376269053)


def _write_in_star(path):
    # four vertices all pointing at vertex 1; vertex 1 sends nothing
    write_edge_list(DirectedGraph(5, frozenset({(j, 1) for j in range(2, 6)})), path)


def test_predict_violations_exit_3(tmp_path):
    graph = tmp_path / "instar.edges"
    _write_in_star(graph)
    assert run_cli("predict", "--graph", str(graph), "--a", "1", "--b", "2", "--m", "4") == 3


def test_predict_violations_allowed(tmp_path):
    graph = tmp_path / "instar.edges"
    _write_in_star(graph)
    out = tmp_path / "report.json"
    code = run_cli(
        "predict", "--graph", str(graph), "--a", "1", "--b", "2", "--m", "4",
        "--allow-violations", "--out", str(out),
    )
    assert code == 0
    report = json.loads(out.read_text())["report"]
    # alpha = 0.25, beta = 0.5: reinforced vertex tends to (1-beta)(alpha+beta)
    assert report["equilibrium"][0] == pytest.approx(0.375)
    assert report["equilibrium"][1:] == pytest.approx([0.5] * 4)
    assert report["reinforced"] == [True, False, False, False, False]


def test_predict_fractional_params(tmp_path):
    graph = tmp_path / "c5.edges"
    run_cli("generate", "--family", "cycle-undirected", "--n", "5", "--out", str(graph))
    out = tmp_path / "report.json"
    code = run_cli(
        "predict", "--graph", str(graph), "--alpha", "0.0", "--beta", "0.0",
        "--out", str(out),
    )
    assert code == 0
    report = json.loads(out.read_text())["report"]
    assert report["regime"] == "subcritical_t_rho"
    assert report["rho"] < 0.5


def test_predict_heterogeneous_limit(tmp_path):
    graph = tmp_path / "k2.edges"
    run_cli("generate", "--family", "complete-loops", "--n", "2", "--out", str(graph))
    hetero = tmp_path / "scheme.json"
    hetero.write_text(json.dumps([{"a": 1, "b": 2, "m": 4}, {"a": 3, "b": 1, "m": 4}]))
    out = tmp_path / "report.json"
    code = run_cli("predict", "--graph", str(graph), "--hetero", str(hetero), "--out", str(out))
    assert code == 0
    report = json.loads(out.read_text())["report"]
    assert report["heterogeneous_limit"] == pytest.approx([5 / 9, 5 / 9])


def test_predict_heterogeneous_singular_exit_4(tmp_path):
    graph = tmp_path / "k2.edges"
    run_cli("generate", "--family", "complete-loops", "--n", "2", "--out", str(graph))
    hetero = tmp_path / "scheme.json"
    hetero.write_text(json.dumps([{"a": 1, "b": 1, "m": 1}, {"a": 1, "b": 1, "m": 1}]))
    assert run_cli("predict", "--graph", str(graph), "--hetero", str(hetero)) == 4


def test_simulate_trajectory_reproducible(tmp_path):
    graph = tmp_path / "star.edges"
    run_cli("generate", "--family", "star", "--n", "5", "--out", str(graph))
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    args = [
        "simulate", "--graph", str(graph), "--a", "0", "--b", "0", "--m", "1",
        "--horizon", "500", "--runs", "1", "--seed", "42",
    ]
    assert run_cli(*args, "--out", str(out1)) == 0
    assert run_cli(*args, "--out", str(out2)) == 0
    a, b = out1.read_bytes(), out2.read_bytes()
    assert a.replace(b"a.csv", b"") == b.replace(b"b.csv", b"")
    # identical command, identical path: byte-identical file
    first = out1.read_bytes()
    assert run_cli(*args, "--out", str(out1)) == 0
    assert out1.read_bytes() == first


def test_simulate_rerun_from_embedded_config(tmp_path):
    graph = tmp_path / "c2.edges"
    run_cli("generate", "--family", "cycle-directed", "--n", "2", "--out", str(graph))
    out1 = tmp_path / "traj.csv"
    assert run_cli(
        "simulate", "--graph", str(graph), "--polya", "--horizon", "100",
        "--runs", "1", "--seed", "7", "--out", str(out1),
    ) == 0
    # extract the embedded config and re-run from it
    cfg_path = tmp_path / "rerun.cfg"
    from urnnet.fileio import config_from_output, format_config

    cfg_path.write_text(format_config(config_from_output(out1)))
    out2 = tmp_path / "again.csv"
    assert run_cli("simulate", "--config", str(cfg_path), "--out", str(out2)) == 0
    assert out1.read_bytes().replace(b"traj.csv", b"") == out2.read_bytes().replace(
        b"again.csv", b""
    )


def test_simulate_ensemble_outputs(tmp_path):
    graph = tmp_path / "c2.edges"
    run_cli("generate", "--family", "cycle-directed", "--n", "2", "--out", str(graph))
    ens = tmp_path / "ens.json"
    summary = tmp_path / "summary.csv"
    code = run_cli(
        "simulate", "--graph", str(graph), "--polya", "--horizon", "200",
        "--runs", "16", "--seed", "5", "--out", str(ens), "--summary-out", str(summary),
    )
    assert code == 0
    payload = json.loads(ens.read_text())
    assert payload["result"]["runs"] == 16
    lines = [l for l in summary.read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "t,mean_1,mean_2,var_phi"
    assert len(lines) > 5


def test_simulate_jsonl_format(tmp_path):
    graph = tmp_path / "c2.edges"
    run_cli("generate", "--family", "cycle-directed", "--n", "2", "--out", str(graph))
    out = tmp_path / "traj.jsonl"
    code = run_cli(
        "simulate", "--graph", str(graph), "--polya", "--horizon", "10", "--runs", "1",
        "--seed", "1", "--format", "jsonl", "--checkpoints", "every", "--out", str(out),
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 12  # header + 11 records
    rec = json.loads(lines[-1])
    assert rec["t"] == 10 and len(rec["z"]) == 2


def test_simulate_violations_exit_3(tmp_path):
    graph = tmp_path / "instar.edges"
    _write_in_star(graph)
    assert run_cli(
        "simulate", "--graph", str(graph), "--polya", "--horizon", "10", "--runs", "1",
        "--seed", "0",
    ) == 3


def test_verify_oracle_passes(tmp_path, capsys):
    graph = tmp_path / "c2.edges"
    run_cli("generate", "--family", "cycle-directed", "--n", "2", "--out", str(graph))
    capsys.readouterr()
    code = run_cli(
        "verify", "--suite", "oracle", "--graph", str(graph), "--polya",
        "--horizon", "1", "--runs", "20000", "--seed", "3",
    )
    assert code == 0
    assert "suite oracle: PASS" in capsys.readouterr().out


def test_verify_consensus_fails_with_absurd_tolerance(tmp_path):
    code = run_cli(
        "verify", "--suite", "consensus", "--horizon", "50", "--runs", "10",
        "--seed", "1", "--tol", "1e-9",
    )
    assert code == 1


def test_verify_report_file(tmp_path):
    out = tmp_path / "verdict.json"
    code = run_cli(
        "verify", "--suite", "martingale", "--horizon", "300", "--runs", "200",
        "--seed", "2", "--out", str(out),
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["report"]["suite"] == "martingale"
    assert payload["report"]["pass"] is True


def test_oracle_command(tmp_path, capsys):
    graph = tmp_path / "c2.edges"
    run_cli("generate", "--family", "cycle-directed", "--n", "2", "--out", str(graph))
    capsys.readouterr()
    code = run_cli(
        "oracle", "--graph", str(graph), "--a", "0", "--b", "0", "--horizon", "2",
        "--runs", "20000", "--seed", "9",
    )
    assert code == 0
    assert "PASS" in capsys.readouterr().out


def test_usage_error_exit_2():
    with pytest.raises(SystemExit) as exc:
        run_cli("generate", "--family", "dodecahedron", "--n", "5")
    assert exc.value.code == 2


def test_missing_scheme_exit_2(tmp_path):
    graph = tmp_path / "c2.edges"
    run_cli("generate", "--family", "cycle-directed", "--n", "2", "--out", str(graph))
    assert run_cli("simulate", "--graph", str(graph), "--horizon", "5") == 2
