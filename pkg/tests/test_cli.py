import json

import pytest
from click.testing import CliRunner

from Graph_Process_Lab import EXIT_FAILED, EXIT_OK, EXIT_UNKNOWN, EXIT_USAGE, cli, dispatch
from graph_core import cycle_graph, hypercube, save_graph


@pytest.fixture
def runner():
    runner = CliRunner()
    with runner.isolated_filesystem():
        save_graph(hypercube(3), "q3.g")
        save_graph(hypercube(4), "q4.g")
        save_graph(cycle_graph(4), "c4.g")
        save_graph(cycle_graph(6), "c6.g")
        yield runner


def test_gen_writes_canonical_graph(runner):
    result = runner.invoke(cli, ["gen", "--type", "hypercube", "--dim", "2"])
    assert result.exit_code == EXIT_OK
    assert result.stdout == "4 4 2\n0 1\n0 2\n1 3\n2 3\n"


def test_gen_to_file(runner):
    result = runner.invoke(cli, ["gen", "--type", "product", "--factors", "K2,K2,K2", "--out", "p.g"])
    assert result.exit_code == EXIT_OK
    assert result.stdout == ""
    with open("p.g", "rb") as f, open("q3.g", "rb") as g:
        assert f.read() == g.read()


def test_gen_random_regular_respects_seed(runner):
    first = runner.invoke(cli, ["gen", "--type", "rrg", "--n", "12", "--d", "3", "--seed", "0x2a"])
    second = runner.invoke(cli, ["gen", "--type", "rrg", "--n", "12", "--d", "3", "--seed", "42"])
    assert first.exit_code == EXIT_OK
    assert first.stdout == second.stdout
    assert first.stdout.startswith("12 18 3\n")


@pytest.mark.parametrize("args", [
    ["gen", "--type", "hypercube"],
    ["gen", "--type", "cycle", "--n", "2"],
    ["gen", "--type", "product"],
    ["gen", "--type", "hypercube", "--dim", "3", "--seed", "zz"],
])
def test_gen_usage_errors(runner, args):
    assert runner.invoke(cli, args).exit_code == EXIT_USAGE


def test_certify_exit_codes(runner):
    certified = runner.invoke(cli, ["certify", "--graph", "q3.g", "--property", "p1", "--c", "1"])
    assert certified.exit_code == EXIT_OK
    assert json.loads(certified.stdout)["method"] == "harper"

    refuted = runner.invoke(cli, ["certify", "--graph", "c6.g", "--property", "p1", "--c", "1"])
    assert refuted.exit_code == EXIT_FAILED
    assert json.loads(refuted.stdout)["witness"] == [0, 1, 2]

    unknown = runner.invoke(cli, ["certify", "--graph", "c6.g", "--property", "p1", "--c", "1",
                                  "--method", "spectral"])
    assert unknown.exit_code == EXIT_UNKNOWN
    assert json.loads(unknown.stdout)["verdict"] == "unknown"


def test_certify_p2_default_size_bound(runner):
    result = runner.invoke(cli, ["certify", "--graph", "q4.g", "--property", "p2", "--epsilon", "0.9"])
    assert result.exit_code == EXIT_OK
    certificate = json.loads(result.stdout)
    assert certificate["property"] == {"kind": "p2", "epsilon": 0.9, "size_bound": 11}


def test_certify_input_errors(runner):
    with open("bad.g", "w") as f:
        f.write("4 4 2\n0 1\n")
    assert runner.invoke(cli, ["certify", "--graph", "bad.g", "--property", "p1", "--c", "1"]).exit_code \
        == EXIT_USAGE
    assert runner.invoke(cli, ["certify", "--graph", "q3.g", "--property", "p1"]).exit_code == EXIT_USAGE
    assert runner.invoke(cli, ["certify", "--graph", "q3.g", "--property", "p1", "--c", "-1"]).exit_code \
        == EXIT_USAGE


def test_sim_exhaustive_cycle(runner):
    result = runner.invoke(cli, ["sim", "--graph", "c4.g"])
    assert result.exit_code == EXIT_OK
    report = json.loads(result.stdout)
    assert report["kind"] == "hitting"
    assert report["aggregates"]["equal_probability"] == "2/3"
    assert "2/3" in result.stderr


def test_sim_accept_gate_fails_on_cycle(runner):
    assert runner.invoke(cli, ["sim", "--graph", "c4.g", "--accept"]).exit_code == EXIT_FAILED


def test_sim_csv(runner):
    result = runner.invoke(cli, ["sim", "--graph", "q3.g", "--trials", "5", "--format", "csv"])
    assert result.exit_code == EXIT_OK
    lines = result.stdout.splitlines()
    assert lines[0] == "equal,seed,tau_k,tau_kc,trial"
    assert len(lines) == 6


def test_sim_output_does_not_depend_on_threads(runner):
    serial = runner.invoke(cli, ["sim", "--graph", "q3.g", "--trials", "8", "--threads", "1"])
    parallel = runner.invoke(cli, ["sim", "--graph", "q3.g", "--trials", "8", "--threads", "2"])
    assert serial.exit_code == parallel.exit_code == EXIT_OK
    assert serial.stdout == parallel.stdout


def test_sim_rejects_disconnected_host(runner):
    with open("split.g", "w") as f:
        f.write("4 2 1\n0 1\n2 3\n")
    assert runner.invoke(cli, ["sim", "--graph", "split.g"]).exit_code == EXIT_USAGE


def test_exp_structure_gates(runner):
    passing = runner.invoke(cli, ["exp", "structure", "--graph", "q4.g", "--trials", "5", "--p", "1.0",
                                  "--accept"])
    assert passing.exit_code == EXIT_OK
    assert json.loads(passing.stdout)["aggregates"]["core"]["rate"] == 1.0
    failing = runner.invoke(cli, ["exp", "structure", "--graph", "q4.g", "--trials", "5", "--p", "0",
                                  "--accept"])
    assert failing.exit_code == EXIT_FAILED


def test_exp_tightness_needs_construction(runner):
    assert runner.invoke(cli, ["exp", "tightness", "--graph", "q4.g", "--trials", "2"]).exit_code == EXIT_USAGE


def test_sweep_report(runner):
    result = runner.invoke(cli, ["sweep", "--graph", "q3.g", "--property", "min_degree_ge_k",
                                 "--property", "connected", "--pmin", "0", "--pmax", "1", "--step", "0.25",
                                 "--trials", "10"])
    assert result.exit_code == EXIT_OK
    report = json.loads(result.stdout)
    assert report["config"]["p_grid"] == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert len(report["records"]) == 10
    assert "separation" in report["aggregates"]


def test_sweep_rejects_reversed_range(runner):
    result = runner.invoke(cli, ["sweep", "--graph", "q3.g", "--property", "connected", "--pmin", "0.6",
                                 "--pmax", "0.4", "--step", "0.1"])
    assert result.exit_code == EXIT_USAGE


def test_config_file_supplies_default_seed(runner):
    with open("custom.json", "w") as f:
        json.dump({"default_seed": 42}, f)
    from_config = runner.invoke(cli, ["gen", "--type", "rrg", "--n", "12", "--d", "3", "--config", "custom.json"])
    explicit = runner.invoke(cli, ["gen", "--type", "rrg", "--n", "12", "--d", "3", "--seed", "42"])
    assert from_config.stdout == explicit.stdout


def test_dispatch_returns_exit_codes(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert dispatch(["gen", "--type", "cycle", "--n", "3"]) == EXIT_OK
    assert capsys.readouterr().out == "3 3 2\n0 1\n0 2\n1 2\n"
    assert dispatch(["gen", "--type", "cycle", "--n", "2"]) == EXIT_USAGE
    assert dispatch(["gen", "--type", "petersen"]) == EXIT_USAGE


def test_sweep_acceptance_follows_threshold_ratio(runner):
    result = runner.invoke(cli, ["sweep", "--graph", "q3.g", "--property", "min_degree_ge_k",
                                 "--property", "connected", "--pmin", "0", "--pmax", "1", "--step", "0.125",
                                 "--trials", "20", "--accept", "separated"])
    report = json.loads(result.stdout)
    assert report["config"]["expect"] == "separated"
    ratio = report["aggregates"].get("separation")
    separated = ratio is not None and ratio >= 1.1
    assert result.exit_code == (EXIT_OK if separated else EXIT_FAILED)


def test_sweep_acceptance_fails_without_ratio(runner):
    result = runner.invoke(cli, ["sweep", "--graph", "q3.g", "--property", "connected", "--pmin", "0.5",
                                 "--pmax", "1", "--step", "0.25", "--trials", "4", "--accept", "coincident"])
    assert result.exit_code == EXIT_FAILED
    assert "separation" not in json.loads(result.stdout)["aggregates"]


def test_sweep_rejects_unknown_acceptance(runner):
    result = runner.invoke(cli, ["sweep", "--graph", "q3.g", "--property", "connected", "--pmin", "0",
                                 "--pmax", "1", "--step", "0.5", "--accept", "maybe"])
    assert result.exit_code == EXIT_USAGE
