"""CSV/JSON output files for a run and readers that load them back."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .metrics import RunMetrics, compute_metrics, metrics_from_arrays

STATE_COLUMNS = ["t", "x", "y", "z", "vx", "vy", "vz", "qw", "qx", "qy", "qz", "wx", "wy", "wz",
                 "ref_x", "ref_y", "ref_z"]
CONTROL_COLUMNS = (["t", "u1", "u2", "u3", "u4", "f_cmd", "tau_x", "tau_y", "tau_z",
                    "sat1", "sat2", "sat3", "sat4"]
                   + [f"s_xi_{a}" for a in "xyz"] + [f"s_q_{a}" for a in "xyz"] + ["V"])
DIAG_COLUMNS = (["t", "qd_w", "qd_x", "qd_y", "qd_z", "wd_x", "wd_y", "wd_z", "failed", "degenerate"])

FLOAT_FMT = "%.17g"


def _write_csv(path: Path, columns: list[str], data: np.ndarray, int_cols=()) -> None:
    fmt = ["%d" if c in int_cols else FLOAT_FMT for c in columns]
    np.savetxt(path, data, delimiter=",", header=",".join(columns), comments="", fmt=fmt)


def write_run(log, out: str | Path) -> RunMetrics:
    """Write states.csv, controls.csv, diagnostics.csv and metrics.json into ``out``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    t = log.t[:, None]
    _write_csv(out / "states.csv", STATE_COLUMNS, np.hstack([t, log.x, log.ref_pos]))
    sat_cols = [f"sat{i}" for i in range(1, 5)]
    controls = np.hstack([t, log.u, log.f_cmd[:, None], log.tau_cmd, log.sat.astype(float),
                          log.s_xi, log.s_q, log.V[:, None]])
    _write_csv(out / "controls.csv", CONTROL_COLUMNS, controls, int_cols=sat_cols)
    diag = np.hstack([t, log.q_d, log.omega_d, log.failed[:, None].astype(float),
                      log.degenerate[:, None].astype(float)])
    _write_csv(out / "diagnostics.csv", DIAG_COLUMNS, diag, int_cols=("failed", "degenerate"))
    metrics = compute_metrics(log)
    doc = dict(metrics.to_dict())
    doc["meta"] = dict(log.meta, aborted=log.aborted, abort_reason=log.abort_reason, records=len(log))
    (out / "metrics.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return metrics


def read_csv(path: str | Path) -> dict[str, np.ndarray]:
    """Load a run CSV into ``{column: array}``."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, i] for i, name in enumerate(header)}


def metrics_from_files(run_dir: str | Path) -> RunMetrics:
    """Recompute a run's metrics from its CSV files alone."""
    run_dir = Path(run_dir)
    s = read_csv(run_dir / "states.csv")
    c = read_csv(run_dir / "controls.csv")
    d = read_csv(run_dir / "diagnostics.csv")

    def cols(src, names):
        return np.column_stack([src[n] for n in names])

    return metrics_from_arrays(
        s["t"], cols(s, ["x", "y", "z"]), cols(s, ["ref_x", "ref_y", "ref_z"]),
        cols(s, ["qw", "qx", "qy", "qz"]), cols(s, ["wx", "wy", "wz"]),
        cols(c, ["u1", "u2", "u3", "u4"]), cols(c, ["sat1", "sat2", "sat3", "sat4"]) != 0,
        cols(d, ["qd_w", "qd_x", "qd_y", "qd_z"]), cols(d, ["wd_x", "wd_y", "wd_z"]),
        d["failed"] != 0,
    )
