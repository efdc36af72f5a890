import json

import numpy as np
import pytest

from conftest import cached_run
from quadsmc.artifacts import CONTROL_COLUMNS, STATE_COLUMNS, metrics_from_files, read_csv
from quadsmc.cli import main
from quadsmc.config import ConfigError, parse_config
from quadsmc.metrics import (ComparisonReport, RunMetrics, compute_metrics, metrics_from_arrays,
                             settling_time)


def _synthetic(n=1001, dt=1e-3, u=0.06, sat=False, offset=0.0):
    t = np.arange(n) * dt
    pos = np.tile([0.0, 0.0, 2.0 + offset], (n, 1))
    ref = np.tile([0.0, 0.0, 2.0], (n, 1))
    q = np.tile([1.0, 0, 0, 0], (n, 1))
    w = np.zeros((n, 3))
    return metrics_from_arrays(t, pos, ref, q, w, np.full((n, 4), u), np.full((n, 4), sat), q.copy(),
                               w.copy(), np.zeros(n, bool))


def test_perfect_hover_metrics():
    m = _synthetic()
    assert m.rmse_position == 0.0 and m.rmse_attitude == 0.0
    assert m.settling_time == 0.0 and m.saturation_fraction == 0.0 and not m.failed


def test_all_saturated_metrics():
    m = _synthetic(u=0.15, sat=True)
    assert m.saturation_fraction == 1.0
    assert abs(m.control_effort - 4 * 0.15 * 1.0) < 1e-12


def test_offset_never_settles():
    m = _synthetic(offset=0.2)
    assert m.settling_time is None and abs(m.rmse_position - 0.2) < 1e-12


def test_settling_requires_dwell():
    t = np.arange(3001) * 1e-3
    err = np.where((t > 0.5) & (t < 1.2), 0.0, 1.0)
    err[t >= 2.0] = 0.0
    assert settling_time(t, err) == pytest.approx(2.0)


def test_empty_log_rejected():
    e = np.zeros((0, 3))
    with pytest.raises(ValueError):
        metrics_from_arrays([], e, e, np.zeros((0, 4)), e, np.zeros((0, 4)), np.zeros((0, 4)),
                            np.zeros((0, 4)), e, [])


def test_nominal_hover_run_metrics():
    m = compute_metrics(cached_run("hover", "proposed", False, False))
    assert m.rmse_position < 1e-12 and m.settling_time == 0.0 and m.saturation_fraction == 0.0


def test_nominal_flip_settles():
    m = compute_metrics(cached_run("flip", "proposed", False, False))
    assert m.settling_time is not None and m.settling_time < 10.0 and not m.failed
    assert 0.0 <= m.saturation_fraction <= 1.0
    assert m.control_effort >= 0.01 * 4 * 10.0


def test_comparison_report_ordering():
    a = RunMetrics(0.1, 0.1, 1.0, 5.0, 0.1, False, 1.0, 1.0)
    b = RunMetrics(0.2, 0.1, None, 4.0, 0.2, True, 1.0, 1.0)
    rep = ComparisonReport("flip", {"a": a, "b": b})
    assert rep.ranking("rmse_position") == ["a", "b"]
    assert rep.ranking("settling_time") == ["a", "b"]
    assert rep.pairwise()["control_effort"] == {"a<b": False, "b<a": True}
    assert json.loads(json.dumps(rep.to_dict()))["metrics"]["b"]["settling_time"] is None


# ---- config ----------------------------------------------------------------

def test_config_parsing():
    cfg = parse_config({
        "vehicle": {"believed": {"m": 0.03}},
        "common": {"disturbance": False},
        "gains": {"proposed": {"K_q": 0.01}},
        "sim": {"dt_control": 0.002, "duration": 2.0},
        "scenario": {"flip_variant": "inverted"},
    })
    assert cfg.believed.m == 0.03 and not cfg.disturbance
    assert cfg.gains_for("proposed") == {"K_q": [0.01, 0.01, 0.01]}
    assert cfg.sim.control_ratio == 2 and cfg.duration == 2.0
    assert cfg.scenario("flip").name == "flip-inverted"


@pytest.mark.parametrize("doc", [
    {"vehicles": {}},
    {"gains": {"pid": {}}},
    {"gains": {"proposed": {"K_q": [1, 2]}}},
    {"sim": {"dt_physics": 0.001, "dt_control": 0.0015}},
    {"vehicle": {"true": {"m": -1}}},
    {"scenario": {"heading": "north"}},
    {"common": {"disturbance_axes": "q"}},
])
def test_config_errors(doc):
    with pytest.raises(ConfigError):
        parse_config(doc)


# ---- command line ----------------------------------------------------------

def test_cli_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["run", "--scenario", "flip", "--controller", "proposed", "--out", str(out),
                 "--duration", "0.5"])
    assert code == 0
    for name in ("states.csv", "controls.csv", "diagnostics.csv", "metrics.json"):
        assert (out / name).is_file()
    states = read_csv(out / "states.csv")
    assert list(states) == STATE_COLUMNS and len(states["t"]) == 501
    controls = read_csv(out / "controls.csv")
    assert list(controls) == CONTROL_COLUMNS and len(controls["t"]) == 501
    doc = json.loads((out / "metrics.json").read_text())
    assert set(RunMetrics.__dataclass_fields__) <= set(doc)
    again = metrics_from_files(out)
    for k, v in again.to_dict().items():
        if isinstance(v, float):
            assert abs(v - doc[k]) <= 1e-9
    assert json.loads(capsys.readouterr().out)["failed"] is False


def test_cli_unknown_controller(tmp_path, capsys):
    code = main(["run", "--scenario", "flip", "--controller", "pid", "--out", str(tmp_path)])
    assert code == 1
    err = capsys.readouterr().err
    assert "proposed" in err and "quat-pd" in err


def test_cli_unknown_scenario(tmp_path):
    assert main(["run", "--scenario", "loop", "--controller", "proposed", "--out", str(tmp_path)]) == 1


def test_cli_bad_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    args = ["run", "--scenario", "flip", "--controller", "proposed", "--out", str(tmp_path / "o")]
    assert main(args + ["--config", str(bad)]) == 1
    assert main(args + ["--config", str(tmp_path / "missing.json")]) == 1
    bad.write_text(json.dumps({"sim": {"dt_physics": -1}}))
    assert main(args + ["--config", str(bad)]) == 1
    assert main(args + ["--duration", "0.0105"]) == 1


def test_cli_flagged_failure_exit_code(tmp_path):
    code = main(["run", "--scenario", "flip-inverted", "--controller", "euler-smc", "--out", str(tmp_path),
                 "--duration", "0.1"])
    assert code == 2
    assert json.loads((tmp_path / "metrics.json").read_text())["failed"] is True


def test_cli_config_overrides_duration(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"sim": {"duration": 0.2, "dt_control": 0.002}, "common": {"disturbance": False}}))
    out = tmp_path / "o"
    assert main(["run", "--scenario", "flip", "--controller", "geometric", "--config", str(cfg),
                 "--out", str(out)]) == 0
    assert len(read_csv(out / "states.csv")["t"]) == 201
    meta = json.loads((out / "metrics.json").read_text())["meta"]
    assert meta["records"] == 201 and meta["aborted"] is False


def test_cli_compare(tmp_path):
    out = tmp_path / "cmp"
    code = main(["compare", "--scenario", "lemniscate", "--out", str(out), "--duration", "0.2"])
    assert code == 0
    for c in ("proposed", "geometric", "euler-smc", "quat-pd"):
        assert (out / c / "metrics.json").is_file()
    rep = json.loads((out / "report.json").read_text())
    assert rep["scenario"] == "lemniscate" and set(rep["metrics"]) == {"proposed", "geometric",
                                                                        "euler-smc", "quat-pd"}
    assert set(rep["rankings"]["rmse_position"]) == set(rep["metrics"])


def test_cli_plots(tmp_path):
    pytest.importorskip("matplotlib")
    out = tmp_path / "p"
    assert main(["run", "--scenario", "flip", "--controller", "quat-pd", "--out", str(out),
                 "--duration", "0.2", "--plots"]) == 0
    assert (out / "position.png").stat().st_size > 0
    assert (out / "attitude_thrust.png").stat().st_size > 0
