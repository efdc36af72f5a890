"""Run metrics and multi-controller comparison reports."""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np

SETTLE_RADIUS = 0.05
SETTLE_DWELL = 1.0


@dataclass
class RunMetrics:
    rmse_position: float
    rmse_attitude: float
    settling_time: float | None
    control_effort: float
    saturation_fraction: float
    failed: bool
    peak_position_error: float
    peak_rate_error: float

    def to_dict(self) -> dict:
        return asdict(self)


def attitude_error_angles(q: np.ndarray, q_d: np.ndarray) -> np.ndarray:
    """Per-row geodesic angle ``2 acos|w|`` of ``q_d* ⊗ q``."""
    # scalar part of q_d* ⊗ q is the 4-D dot product
    w = np.abs(np.einsum("ij,ij->i", q_d, q))
    return 2.0 * np.arccos(np.clip(w, 0.0, 1.0))


def settling_time(t: np.ndarray, err: np.ndarray, radius: float = SETTLE_RADIUS,
                  dwell: float = SETTLE_DWELL) -> float | None:
    """First time the error enters ``radius`` and stays inside for ``dwell`` seconds."""
    inside = err < radius
    k = 0
    n = len(t)
    while k < n:
        if not inside[k]:
            k += 1
            continue
        j = k
        while j + 1 < n and inside[j + 1]:
            j += 1
        if t[j] - t[k] >= dwell - 1e-9:
            return float(t[k])
        k = j + 1
    return None


def metrics_from_arrays(t, pos, ref_pos, q, omega, u, sat, q_d, omega_d, failed) -> RunMetrics:
    """Metrics from the logged columns; the same code path serves logs and CSV files."""
    t = np.asarray(t, dtype=float)
    if len(t) == 0:
        raise ValueError("cannot compute metrics of an empty log")
    err = np.linalg.norm(np.asarray(pos) - np.asarray(ref_pos), axis=1)
    ang = attitude_error_angles(np.asarray(q), np.asarray(q_d))
    rate_err = np.linalg.norm(np.asarray(omega) - np.asarray(omega_d), axis=1)
    # each record's command is held over the following physics step
    steps = max(len(t) - 1, 1)
    dt = float(t[1] - t[0]) if len(t) > 1 else 0.0
    effort = dt * float(np.asarray(u)[:steps].sum())
    sat_frac = float(np.asarray(sat, dtype=bool)[:steps].any(axis=1).mean())
    return RunMetrics(
        rmse_position=float(np.sqrt(np.mean(err ** 2))),
        rmse_attitude=float(np.sqrt(np.nanmean(ang ** 2))),
        settling_time=settling_time(t, err),
        control_effort=effort,
        saturation_fraction=sat_frac,
        failed=bool(np.any(failed)),
        peak_position_error=float(err.max()),
        peak_rate_error=float(np.nanmax(rate_err)),
    )


def compute_metrics(log) -> RunMetrics:
    return metrics_from_arrays(log.t, log.pos, log.ref_pos, log.q, log.omega, log.u, log.sat,
                               log.q_d, log.omega_d, log.failed)


ORDERED_METRICS = ("rmse_position", "rmse_attitude", "settling_time", "control_effort",
                   "saturation_fraction", "peak_position_error", "peak_rate_error")


def _key(v):
    # unsettled runs rank last
    return math.inf if v is None or (isinstance(v, float) and math.isnan(v)) else v


@dataclass
class ComparisonReport:
    scenario: str
    runs: dict

    def ranking(self, metric: str) -> list[str]:
        return sorted(self.runs, key=lambda c: _key(getattr(self.runs[c], metric)))

    def pairwise(self) -> dict:
        """``{metric: {"a<b": bool}}`` for every ordered controller pair (lower is better)."""
        out = {}
        for m in ORDERED_METRICS:
            out[m] = {f"{a}<{b}": _key(getattr(self.runs[a], m)) < _key(getattr(self.runs[b], m))
                      for a, b in itertools.permutations(self.runs, 2)}
        return out

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "metrics": {c: m.to_dict() for c, m in self.runs.items()},
            "rankings": {m: self.ranking(m) for m in ORDERED_METRICS},
            "pairwise": self.pairwise(),
        }
