"""
Tests for the command-line subcommands and the shipped configs.
"""

import json
from pathlib import Path

import pytest

from neflow.cli.common import load_config
from neflow.cli.sweep import parse_values, set_key
from neflow.core.errors import ConfigurationError
from neflow.main import main

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def _write_config(path: Path, **overrides) -> Path:
    data = {
        "name": "cli_run",
        "scenario": {"name": "sensor"},
        "law": {"variant": "SingleIntPartialIM"},
        "graph": {"kind": "complete"},
        "observer_poles": [-1, -1],
        "sim": {"t_end": 1.0, "dt": 0.01, "record_every": 10},
    }
    data.update(overrides)
    path.write_text(json.dumps(data))
    return path


def test_ne_prints_sensor_equilibrium(capsys):
    assert main(["ne", "sensor"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["success"] is True
    assert out["x_star"][0] == [-0.25, 0.416667]
    assert out["x_star"][4] == [-0.333333, 0.0]
    assert out["residual"] < 1e-10


def test_ne_accepts_scenario_params(capsys):
    params = json.dumps({"N": 3, "dims": [1, 1, 2], "seed": 4})
    assert main(["ne", "synthetic", "--params", params]) == 0
    out = json.loads(capsys.readouterr().out)
    assert [len(block) for block in out["x_star"]] == [1, 1, 2]


def test_check_reports_margin(tmp_path, capsys):
    config = _write_config(tmp_path / "config.json")
    assert main(["check", str(config), "--lambda2", "5"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["margin"] == pytest.approx(-158.0)
    assert out["holds"] is False
    assert out["required_lambda2"] == pytest.approx(84.0)


def test_run_exit_codes(tmp_path, out_dir, capsys):
    converging = _write_config(tmp_path / "im.json", disturbance_free=True, law={"variant": "GradientPlayFull"},
                               observer_poles=None, sim={"t_end": 20.0, "dt": 0.01, "record_every": 10})
    assert main(["run", str(converging)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["converged"] is True
    assert Path(out["output_dir"]) == out_dir / "cli_run"
    assert (out_dir / "cli_run" / "summary.json").exists()

    stuck = _write_config(tmp_path / "gp.json", name="gp_run", law={"variant": "GradientPlayFull"},
                          observer_poles=None, sim={"t_end": 5.0, "dt": 0.01, "record_every": 10})
    assert main(["run", str(stuck), "--out", str(tmp_path / "explicit")]) == 2
    assert (tmp_path / "explicit" / "gp_run" / "trajectory.csv").exists()


def test_invalid_config_reports_json_error(tmp_path, capsys):
    config = _write_config(tmp_path / "bad.json", unknown_section={})
    assert main(["run", str(config)]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["success"] is False
    assert "invalid config" in err["error"]


def test_missing_config_reports_json_error(tmp_path, capsys):
    assert main(["check", str(tmp_path / "absent.json")]) == 1
    err = json.loads(capsys.readouterr().err)
    assert "ConfigurationError" in err["error"]


def test_malformed_json_reports_error(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert main(["check", str(path)]) == 1
    assert "malformed JSON" in json.loads(capsys.readouterr().err)["error"]


def test_sweep_writes_one_run_per_value(tmp_path, out_dir, capsys):
    config = _write_config(tmp_path / "sweep.json", law={"variant": "DoubleIntPartialIM", "b": 1.0})
    assert main(["sweep", str(config), "--key", "law.b", "--values", "0.5,2", "--jobs", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert [run["label"] for run in out["runs"]] == ["law.b=0.5", "law.b=2"]
    root = out_dir / "cli_run"
    assert (root / "sweep_summary.json").exists()
    assert (root / "law.b=0.5" / "summary.json").exists()
    assert (root / "law.b=2" / "summary.json").exists()


def test_sweep_helpers():
    assert parse_values("1, 2.5, complete") == [1, 2.5, "complete"]
    assert parse_values("[[-1, -1], [-2, -2]]") == [[-1, -1], [-2, -2]]
    data = {"graph": {"kind": "random", "p": 0.5}}
    updated = set_key(data, "graph.seed", 3)
    assert updated["graph"] == {"kind": "random", "p": 0.5, "seed": 3}
    assert "seed" not in data["graph"]
    with pytest.raises(ConfigurationError):
        set_key({"name": "x"}, "name.inner", 1)


def test_shipped_configs_are_valid_and_registered():
    manifest = json.loads((CONFIG_DIR / "manifest.json").read_text())
    registered = {entry["file"] for entry in manifest["configs"].values()}
    shipped = {p.name for p in CONFIG_DIR.glob("*.json") if p.name != "manifest.json"}
    assert registered == shipped
    for name in shipped:
        config = load_config(str(CONFIG_DIR / name))
        assert config.sim.dt == 1e-3
        assert manifest["configs"][config.name]["file"] == name
