"""Fixed-step closed-loop simulation.

The plant is integrated with classical RK4 at ``dt_physics``; the controller
runs every ``dt_control`` and its rotor command is held in between. One log
record is written per physics step, including the initial one, so a run of
duration ``T`` has ``T/dt_physics + 1`` records. No randomness is involved:
identical configurations give identical logs.
"""
from __future__ import annotations

import copy
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .control import make_controller
from .dynamics import (ControlCommand, Disturbances, VehicleParams, VehicleState, allocate_and_saturate,
                       believed_params, derivative_vector, eval_disturbances, true_params)
from .reference import ScenarioConfig

log = logging.getLogger(__name__)

Array = np.ndarray


@dataclass(frozen=True)
class SimConfig:
    dt_physics: float = 1e-3
    dt_control: float = 1e-3
    renormalize: bool = True

    def __post_init__(self):
        if not (self.dt_physics > 0 and self.dt_control > 0):
            raise ValueError("time steps must be positive")
        ratio = self.dt_control / self.dt_physics
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError("dt_control must be an integer multiple of dt_physics")

    @property
    def control_ratio(self) -> int:
        return int(round(self.dt_control / self.dt_physics))


class IntegratorAbort(RuntimeError):
    pass


def rk4_vector(x: Array, f: float, tau: Array, disturb, p: VehicleParams, dt: float, t: float = 0.0,
               renormalize: bool = True) -> Array:
    """One RK4 step of the stacked state; ``disturb`` is a Disturbances or ``t -> Disturbances``."""
    if callable(disturb):
        d0, dm, d1 = disturb(t), disturb(t + 0.5 * dt), disturb(t + dt)
    else:
        d0 = dm = d1 = disturb
    tau = [float(v) for v in tau]
    k1 = derivative_vector(x, f, tau, d0.d_a, d0.d_alpha, p)
    k2 = derivative_vector(x + 0.5 * dt * k1, f, tau, dm.d_a, dm.d_alpha, p)
    k3 = derivative_vector(x + 0.5 * dt * k2, f, tau, dm.d_a, dm.d_alpha, p)
    k4 = derivative_vector(x + dt * k3, f, tau, d1.d_a, d1.d_alpha, p)
    x_new = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(x_new)):
        raise IntegratorAbort(f"non-finite state after RK4 step at t={t:.6f}")
    if renormalize:
        x_new[6:10] /= math.sqrt(float(x_new[6:10] @ x_new[6:10]))
    return x_new


def rk4_step(s: VehicleState, cmd: ControlCommand, d, p: VehicleParams, dt: float, t: float = 0.0,
             renormalize: bool = True) -> VehicleState:
    """Advance the plant by ``dt`` with the realized wrench of ``cmd`` held constant."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    x = rk4_vector(s.as_vector(), cmd.f, cmd.tau, d, p, dt, t, renormalize)
    return VehicleState.from_vector(x)


@dataclass
class SimLog:
    """Per-physics-step record arrays (row ``k`` is time ``t[k]``)."""

    t: Array
    x: Array
    ref_pos: Array
    u: Array
    f_cmd: Array
    tau_cmd: Array
    f: Array
    tau: Array
    sat: Array
    s_xi: Array
    s_q: Array
    q_e: Array
    omega_e: Array
    V: Array
    q_d: Array
    omega_d: Array
    alpha_d: Array
    kappa: Array
    kappa_dot: Array
    kappa_ddot: Array
    failed: Array
    degenerate: Array
    control_tick: Array
    aborted: bool = False
    abort_reason: str = ""
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    @property
    def pos(self) -> Array:
        return self.x[:, 0:3]

    @property
    def vel(self) -> Array:
        return self.x[:, 3:6]

    @property
    def q(self) -> Array:
        return self.x[:, 6:10]

    @property
    def omega(self) -> Array:
        return self.x[:, 10:13]

    def truncated(self, n: int) -> "SimLog":
        kw = {}
        for name, val in self.__dict__.items():
            kw[name] = val[:n] if isinstance(val, np.ndarray) else val
        return SimLog(**kw)


_VEC_FIELDS = {
    "s_xi": 3, "s_q": 3, "q_e": 4, "omega_e": 3, "q_d": 4, "omega_d": 3, "alpha_d": 3,
    "kappa": 3, "kappa_dot": 3, "kappa_ddot": 3,
}


def _empty_log(n: int) -> dict:
    arrays = dict(
        t=np.zeros(n), x=np.zeros((n, 13)), ref_pos=np.zeros((n, 3)), u=np.zeros((n, 4)),
        f_cmd=np.zeros(n), tau_cmd=np.zeros((n, 3)), f=np.zeros(n), tau=np.zeros((n, 3)),
        sat=np.zeros((n, 4), dtype=bool), V=np.zeros(n), failed=np.zeros(n, dtype=bool),
        degenerate=np.zeros(n, dtype=bool), control_tick=np.zeros(n, dtype=bool),
    )
    for name, dim in _VEC_FIELDS.items():
        arrays[name] = np.full((n, dim), np.nan)
    return arrays


def plant_and_model(sc: ScenarioConfig, plant: VehicleParams | None = None,
                    believed: VehicleParams | None = None) -> tuple[VehicleParams, VehicleParams]:
    """Plant and controller models for a scenario.

    With uncertainty the plant uses the true vehicle and the controller the
    believed one; without it the plant is built from the believed model so
    both agree.
    """
    plant = plant or true_params()
    believed = believed or believed_params()
    if not sc.uncertainty:
        plant = believed
    return plant, believed


def run_scenario(sc: ScenarioConfig, controller="proposed", gains: dict | None = None,
                 sim: SimConfig | None = None, plant: VehicleParams | None = None,
                 believed: VehicleParams | None = None) -> SimLog:
    """Simulate one closed-loop run and return its log."""
    sim = sim or SimConfig()
    plant, believed = plant_and_model(sc, plant, believed)
    if isinstance(controller, str):
        ctrl = make_controller(controller, believed, gains)
    else:
        ctrl = controller
        ctrl.reset()
    reference = copy.deepcopy(sc.reference)

    n_steps = int(round(sc.duration / sim.dt_physics))
    if abs(n_steps * sim.dt_physics - sc.duration) > 1e-9 * max(1.0, sc.duration):
        raise ValueError("duration must be an integer multiple of dt_physics")
    ratio = sim.control_ratio
    rec = _empty_log(n_steps + 1)

    def disturb(t):
        return eval_disturbances(t, sc.disturbance, sc.disturbance_axes)

    x = sc.initial_state.as_vector()
    cmd: ControlCommand | None = None
    diag: dict = {}
    aborted, reason, n_rec = False, "", n_steps + 1
    for k in range(n_steps + 1):
        t = k * sim.dt_physics
        ref = reference(t)
        tick = k % ratio == 0
        if tick:
            state = VehicleState.from_vector(x)
            try:
                out = ctrl.step(t, state, ref, cmd)
                cmd = allocate_and_saturate(out.f, out.tau, plant)
            except (ValueError, FloatingPointError) as exc:
                aborted, reason, n_rec = True, f"controller error at t={t:.6f}: {exc}", k
                break
            diag = out.diag
        rec["t"][k] = t
        rec["x"][k] = x
        rec["ref_pos"][k] = ref.pos
        rec["u"][k] = cmd.u
        rec["f_cmd"][k] = cmd.f_cmd
        rec["tau_cmd"][k] = cmd.tau_cmd
        rec["f"][k] = cmd.f
        rec["tau"][k] = cmd.tau
        rec["sat"][k] = cmd.saturated
        rec["V"][k] = diag.get("V", np.nan)
        rec["failed"][k] = bool(diag.get("failed", False))
        rec["degenerate"][k] = diag.get("degenerate") is not None
        rec["control_tick"][k] = tick
        for name in _VEC_FIELDS:
            if name in diag:
                rec[name][k] = diag[name]
        if k == n_steps:
            break
        try:
            x = rk4_vector(x, cmd.f, cmd.tau, disturb, plant, sim.dt_physics, t, sim.renormalize)
        except IntegratorAbort as exc:
            aborted, reason, n_rec = True, str(exc), k + 1
            break

    name = getattr(ctrl, "name", type(ctrl).__name__)
    meta = {
        "scenario": sc.name, "controller": name, "duration": sc.duration,
        "dt_physics": sim.dt_physics, "dt_control": sim.dt_control,
        "disturbance": sc.disturbance, "uncertainty": sc.uncertainty,
        "f_min": plant.f_min, "f_max": plant.f_max,
    }
    simlog = SimLog(**rec, meta=meta)
    if aborted:
        log.warning("run aborted: %s", reason)
        simlog = simlog.truncated(n_rec)
        simlog.aborted, simlog.abort_reason = True, reason
    if simlog.failed.any():
        log.info("%s flagged a controller failure in %d records", name, int(simlog.failed.sum()))
    return simlog
