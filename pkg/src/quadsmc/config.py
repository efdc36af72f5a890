"""JSON run configuration.

Layout (every key optional; defaults reproduce the reference vehicle and gains)::

    {
      "vehicle":  {"true": {...}, "believed": {...}},   # VehicleParams fields
      "common":   {"disturbance": true, "uncertainty": true, "disturbance_axes": "xyz"},
      "gains":    {"proposed": {"lam_xi": [2, 4, 8], ...}, "geometric": {...},
                   "euler-smc": {...}, "quat-pd": {...}},
      "sim":      {"dt_physics": 0.001, "dt_control": 0.001, "duration": null, "renormalize": true},
      "scenario": {"flip_variant": "printed", "heading": "velocity",
                   "lemniscate": {"vmax": 2.51, "amax": 1.7, "shape_ratio": 2.0, "z0": 2.0}}
    }

Vehicle inertia is given as ``"inertia": [Jx, Jy, Jz]`` and ``beta`` in degrees.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .control import CONTROLLERS
from .dynamics import VehicleParams, believed_params, true_params
from .engine import SimConfig
from .reference import ScenarioConfig, calibrate_lemniscate, make_scenario

TOP_KEYS = {"vehicle", "common", "gains", "sim", "scenario"}
VEHICLE_KEYS = {"m", "inertia", "c_t", "c_q", "l", "beta", "f_min", "f_max", "g"}
COMMON_KEYS = {"disturbance", "uncertainty", "disturbance_axes"}
SIM_KEYS = {"dt_physics", "dt_control", "duration", "renormalize"}
SCENARIO_KEYS = {"flip_variant", "heading", "lemniscate"}
LEMNISCATE_KEYS = {"vmax", "amax", "shape_ratio", "z0"}
CLI_SCENARIOS = ("flip", "flip-inverted", "lemniscate")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    plant: VehicleParams = field(default_factory=true_params)
    believed: VehicleParams = field(default_factory=believed_params)
    disturbance: bool = True
    uncertainty: bool = True
    disturbance_axes: str = "xyz"
    gains: dict = field(default_factory=dict)
    sim: SimConfig = field(default_factory=SimConfig)
    duration: float | None = None
    flip_variant: str = "printed"
    heading: str = "velocity"
    lemniscate: dict = field(default_factory=dict)

    def scenario(self, name: str) -> ScenarioConfig:
        if name == "flip" and self.flip_variant == "inverted":
            name = "flip-inverted"
        cal = None
        if name == "lemniscate":
            lk = self.lemniscate
            cal = calibrate_lemniscate(lk.get("vmax", 2.51), lk.get("amax", 1.7),
                                       lk.get("shape_ratio", 2.0), lk.get("z0", 2.0))
        return make_scenario(name, duration=self.duration, disturbance=self.disturbance,
                             uncertainty=self.uncertainty, disturbance_axes=self.disturbance_axes,
                             heading=self.heading, lemniscate=cal)

    def gains_for(self, controller: str) -> dict:
        return copy.deepcopy(self.gains.get(controller, {}))


def _check_keys(section: dict, allowed: set, where: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _vehicle(base: VehicleParams, spec: dict, where: str) -> VehicleParams:
    _check_keys(spec, VEHICLE_KEYS, where)
    kw = dict(spec)
    if "inertia" in kw:
        kw["inertia"] = tuple(float(j) for j in kw["inertia"])
    if "beta" in kw:
        kw["beta"] = math.radians(float(kw["beta"]))
    try:
        return replace(base, **kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _gain_vector(val, key: str, where: str) -> list[float]:
    if isinstance(val, (int, float)):
        val = [val] * 3
    if not isinstance(val, (list, tuple)) or len(val) != 3:
        raise ConfigError(f"{where}.{key} must be a number or a list of three numbers")
    return [float(v) for v in val]


def parse_config(data: dict) -> RunConfig:
    """Validate a decoded JSON document and build a :class:`RunConfig`."""
    _check_keys(data, TOP_KEYS, "config")
    cfg = RunConfig()
    veh = data.get("vehicle", {})
    _check_keys(veh, {"true", "believed"}, "vehicle")
    cfg.plant = _vehicle(cfg.plant, veh.get("true", {}), "vehicle.true")
    cfg.believed = _vehicle(cfg.believed, veh.get("believed", {}), "vehicle.believed")

    common = data.get("common", {})
    _check_keys(common, COMMON_KEYS, "common")
    cfg.disturbance = bool(common.get("disturbance", True))
    cfg.uncertainty = bool(common.get("uncertainty", True))
    cfg.disturbance_axes = str(common.get("disturbance_axes", "xyz"))
    if not cfg.disturbance_axes or any(a not in "xyz" for a in cfg.disturbance_axes):
        raise ConfigError("common.disturbance_axes must be a non-empty subset of 'xyz'")

    gains = data.get("gains", {})
    _check_keys(gains, set(CONTROLLERS), "gains")
    for ctrl, block in gains.items():
        if not isinstance(block, dict):
            raise ConfigError(f"gains.{ctrl} must be a JSON object")
        cfg.gains[ctrl] = {k: _gain_vector(v, k, f"gains.{ctrl}") for k, v in block.items()}

    sim = data.get("sim", {})
    _check_keys(sim, SIM_KEYS, "sim")
    try:
        cfg.sim = SimConfig(float(sim.get("dt_physics", 1e-3)), float(sim.get("dt_control", 1e-3)),
                            bool(sim.get("renormalize", True)))
    except ValueError as exc:
        raise ConfigError(f"sim: {exc}") from exc
    if sim.get("duration") is not None:
        cfg.duration = float(sim["duration"])
        if not cfg.duration > 0:
            raise ConfigError("sim.duration must be positive")

    sc = data.get("scenario", {})
    _check_keys(sc, SCENARIO_KEYS, "scenario")
    cfg.flip_variant = sc.get("flip_variant", "printed")
    if cfg.flip_variant not in ("printed", "inverted"):
        raise ConfigError("scenario.flip_variant must be 'printed' or 'inverted'")
    cfg.heading = sc.get("heading", "velocity")
    if cfg.heading not in ("velocity", "fixed"):
        raise ConfigError("scenario.heading must be 'velocity' or 'fixed'")
    lem = sc.get("lemniscate", {})
    _check_keys(lem, LEMNISCATE_KEYS, "scenario.lemniscate")
    cfg.lemniscate = {k: float(v) for k, v in lem.items()}
    return cfg


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return parse_config(data)
