import csv
import json

import pytest

from levykernel import cli
from levykernel.cli import main, parse_grid
from levykernel.exceptions import ConfigError, SimulationError

SMALL = ["--t-end", "10", "--delta", "0.01", "--substeps", "4"]


def body(path):
    with open(path) as fh:
        return list(csv.reader(line for line in fh if not line.startswith("#")))


def test_parse_grid():
    g = parse_grid("x=0,2;y=-1:-0.5:0.25,0.5:1:0.25")
    assert g.shape == (12, 2)
    assert sorted(set(g[:, 0])) == [0.0, 2.0]
    assert sorted(set(g[:, 1])) == [-1.0, -0.75, -0.5, 0.5, 0.75, 1.0]
    with pytest.raises(ConfigError):
        parse_grid("x=0")


def test_simulate_then_estimate(tmp_path, capsys):
    sim = tmp_path / "sim"
    assert main(["simulate", "--config", "d1-scaled", "--seed", "3", "--out", str(sim), "--fine", *SMALL]) == 0
    files = json.loads((sim / "manifest.json").read_text())["files"]
    assert files == ["path.csv", "jumps.csv", "fine.csv"]
    assert len(body(sim / "path.csv")) > 1000
    est = tmp_path / "est"
    code = main(["estimate", "--path", str(sim / "path.csv"), "--bandwidth", "0.4,0.4",
                 "--grid", "x=0;y=-1:-0.5:0.25,0.5:1:0.25", "--out", str(est), "--sigma", "1"])
    assert code == 0
    rows = body(est / "estimates.csv")
    assert rows[0][:3] == ["x", "y", "f_hat"] and len(rows) == 7
    assert "wrote 6 estimates" in capsys.readouterr().out


def test_simulate_is_reproducible(tmp_path):
    for d in ("a", "b"):
        main(["simulate", "--config", "toy", "--seed", "5", "--out", str(tmp_path / d), *SMALL])
    assert (tmp_path / "a" / "path.csv").read_bytes() == (tmp_path / "b" / "path.csv").read_bytes()


def test_missing_seed_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--config", "toy", "--out", str(tmp_path)])
    assert info.value.code == 2


def test_config_errors_exit_2(tmp_path, capsys):
    assert main(["simulate", "--config", "missing-preset", "--seed", "1", "--out", str(tmp_path)]) == 2
    assert main(["simulate", "--config", "toy", "--seed", "1", "--out", str(tmp_path), "--delta", "-1"]) == 2
    assert main(["estimate", "--path", str(tmp_path / "none.csv"), "--bandwidth", "0.4,0.4",
                 "--grid", "x=0;y=1:1:1", "--out", str(tmp_path)]) == 2
    assert main(["coverage", "--config", "toy", "--trajectories", "2", "--out", str(tmp_path)]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_numeric_failure_exit_3(tmp_path, monkeypatch, capsys):
    def boom(cfg, index):
        raise SimulationError("state diverged", time=1.25)

    monkeypatch.setattr(cli, "simulate_trajectory", boom)
    assert main(["simulate", "--config", "toy", "--seed", "1", "--out", str(tmp_path)]) == 3
    assert "numeric failure" in capsys.readouterr().err


def test_experiment_and_coverage(tmp_path, capsys):
    exp = tmp_path / "exp"
    assert main(["experiment", "--config", "toy", "--seed", "2", "--out", str(exp), *SMALL,
                 "--trajectories", "2", "--method", "wald"]) == 0
    manifest = json.loads((exp / "manifest.json").read_text())
    assert manifest["seeds"] == [2, 3] and manifest["config"]["ci_method"] == "wald"
    assert "results_traj001.csv" in manifest["files"]
    cov = tmp_path / "cov"
    assert main(["coverage", "--config", "toy", "--seed", "2", "--out", str(cov), *SMALL,
                 "--trajectories", "3"]) == 0
    assert "coverage: min" in capsys.readouterr().out
    assert len(body(cov / "coverage.csv")) > 1


def test_check_bandwidth(capsys):
    args = ["check-bandwidth", "--alpha1", "2", "--alpha2", "2", "--d", "1", "--beta", "1",
            "--delta", "1", "--eta-exponents", "0.16666666666666667,0.16666666666666667"]
    assert main(args + ["--format", "rows"]) == 0
    rows = dict((r.split(",")[0], r.split(",")[1]) for r in capsys.readouterr().out.split())
    assert rows["2.7a"] == "satisfied" and rows["2.8a"] == rows["2.8b"] == "boundary"
    assert main(args) == 0
    assert "optimal exponents" in capsys.readouterr().out
    assert main(args[:-2] + ["--eta-exponents=-0.5,0.2"]) == 2
