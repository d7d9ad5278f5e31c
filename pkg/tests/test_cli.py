import json
import subprocess
import sys

import pytest

from netrisk import cli, sweeps
from netrisk.config import SCHEMA_VERSION, ConfigError, load, parse_scenario

TOY = {"edges": {"type": "toy", "b": "0.5"}, "alpha": 2}


def write(tmp_path, doc, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps({"schema_version": SCHEMA_VERSION, **doc}))
    return str(p)


def test_exact_command(tmp_path, capsys):
    cfg = write(tmp_path, {"scenario": TOY})
    assert cli.run(["exact", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    status = json.loads(capsys.readouterr().out)
    rows = sweeps.read_csv(status["files"][0])
    point = {r["quantity"]: float(r["point"]) for r in rows if r["regime"] in ("independent", "")}
    assert point["C_S_ind"] == pytest.approx(3.0)


def test_subcommand_flag_and_conflict(tmp_path, capsys):
    cfg = write(tmp_path, {"scenario": TOY})
    assert cli.run(["--subcommand", "poisson", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert cli.run(["exact", "--subcommand", "poisson", "--config", cfg]) == 2
    assert "conflicting" in json.loads(capsys.readouterr().err.splitlines()[-1])["message"]


def test_invalid_scenario_reports_violations(tmp_path, capsys):
    cfg = write(tmp_path, {"scenario": {"edges": {"type": "rasch", "beta": [2, 1], "delta": [0.9]}, "alpha": -1}})
    assert cli.run(["exact", "--config", cfg, "--out", str(tmp_path)]) == 2
    err = json.loads(capsys.readouterr().err)
    paths = {v["path"] for v in err["violations"]}
    assert "claims.alpha" in paths and "edges[0][0]" in paths


def test_wrong_schema_version(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"schema_version": 99, "scenario": TOY}))
    with pytest.raises(ConfigError):
        load(str(p))
    assert cli.run(["exact", "--config", str(p)]) == 2


def test_missing_config():
    assert cli.run(["exact"]) == 2


def test_sweep_command_with_decimal_grid(tmp_path, capsys):
    doc = {"scenario": TOY, "sweep": {"parameter": "toy_b", "grid": {"start": "0", "stop": "1", "step": "0.1"},
                                       "outputs": ["C_i_ind"], "agents": [1], "root": True}}
    assert cli.run(["sweep", "--config", write(tmp_path, doc), "--out", str(tmp_path)]) == 0
    rows = sweeps.read_csv(json.loads(capsys.readouterr().out)["files"][0])
    assert [r["value"] for r in rows][:4] == ["0.0", "0.1", "0.2", "0.3"]


def test_mc_command_exit_code(tmp_path):
    doc = {"scenario": {"edges": {"type": "explicit", "P": [[1]]}, "alpha": 1.5},
           "mc": {"replicates": 50_000, "thresholds": [2, 5]}}
    assert cli.run(["mc", "--config", write(tmp_path, doc), "--out", str(tmp_path), "--seed", "3"]) == 0


def test_mc_check_failure_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr(sweeps.mc.TailEstimate, "covers", lambda self, v: False)
    doc = {"scenario": {"edges": {"type": "explicit", "P": [[1]]}, "alpha": 1.5},
           "mc": {"replicates": 1000, "thresholds": [2]}}
    assert cli.run(["mc", "--config", write(tmp_path, doc), "--out", str(tmp_path)]) == 3


def test_bad_seed(tmp_path):
    cfg = write(tmp_path, {"scenario": TOY})
    assert cli.run(["mc", "--config", cfg, "--seed", "-1"]) == 2


def test_figures_subset(tmp_path):
    cfg = write(tmp_path, {"figures": {"step": "0.5", "only": ["fig2"]}})
    assert cli.run(["figures", "--config", cfg, "--out", str(tmp_path)]) == 0
    manifest = json.loads((tmp_path / "figures.json").read_text())
    assert list(manifest["series"]) == ["fig2"]


def test_scenario_parsing_accepts_strings_and_inf():
    s = parse_scenario({"edges": {"type": "homogeneous", "q": 2, "d": 2, "p": "0.1"}, "alpha": "1.5",
                        "K": [1, "2"], "norm": {"r": "inf"}, "weights": {"type": "compensated", "r": "inf"}})
    assert s.norm.is_max and list(s.K) == [1.0, 2.0] and s.P[0, 0] == 0.1


def test_console_entry_point(tmp_path):
    cfg = write(tmp_path, {"scenario": TOY})
    res = subprocess.run([sys.executable, "-m", "netrisk.cli", "exact", "--config", cfg, "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["status"] == "ok"
