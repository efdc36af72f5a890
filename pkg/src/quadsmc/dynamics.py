"""Quadrotor plant: rigid-body equations of motion, rotor allocation, disturbances."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np


Array = np.ndarray

GRAVITY = 9.81
AXES = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class VehicleParams:
    """Mass/inertia, rotor coefficients, arm geometry and rotor thrust limits."""

    m: float = 0.027
    inertia: tuple[float, float, float] = (1.66e-5, 1.66e-5, 2.93e-5)
    c_t: float = 2.88e-8
    c_q: float = 7.24e-10
    l: float = 0.092
    beta: float = math.radians(45.0)
    f_min: float = 0.01
    f_max: float = 0.15
    g: float = GRAVITY

    def __post_init__(self):
        object.__setattr__(self, "inertia", tuple(float(j) for j in self.inertia))
        if not self.m > 0:
            raise ValueError("mass must be positive")
        if len(self.inertia) != 3 or min(self.inertia) <= 0:
            raise ValueError("inertia needs three positive principal moments")
        if not 0 <= self.f_min < self.f_max:
            raise ValueError("need 0 <= f_min < f_max")
        if not self.c_t > 0:
            raise ValueError("c_t must be positive")

    @cached_property
    def J(self) -> Array:
        return np.diag(self.inertia)

    @cached_property
    def J_diag(self) -> Array:
        return np.array(self.inertia)

    @cached_property
    def G(self) -> Array:
        return allocation_matrix(self)

    @cached_property
    def G_inv(self) -> Array:
        return np.linalg.inv(self.G)


def true_params() -> VehicleParams:
    """Plant parameters (nano quadrotor)."""
    return VehicleParams()


def believed_params() -> VehicleParams:
    """The deliberately wrong model every controller computes with."""
    return replace(VehicleParams(), m=0.0216, inertia=(1.992e-5, 1.4940e-5, 3.0765e-5))


@dataclass
class VehicleState:
    pos: Array
    vel: Array
    q: Array
    omega: Array

    def __post_init__(self):
        self.pos = np.asarray(self.pos, dtype=float)
        self.vel = np.asarray(self.vel, dtype=float)
        self.q = np.asarray(self.q, dtype=float)
        self.omega = np.asarray(self.omega, dtype=float)

    def as_vector(self) -> Array:
        return np.concatenate([self.pos, self.vel, self.q, self.omega])

    @classmethod
    def from_vector(cls, x: Array) -> "VehicleState":
        x = np.asarray(x, dtype=float)
        return cls(x[0:3].copy(), x[3:6].copy(), x[6:10].copy(), x[10:13].copy())

    def copy(self) -> "VehicleState":
        return VehicleState.from_vector(self.as_vector())


@dataclass
class ControlCommand:
    """Per-rotor thrusts and the wrench they realize.

    ``f``/``tau`` are the realized values ``G @ u``; ``f_cmd``/``tau_cmd`` keep
    the controller's request before saturation.
    """

    u: Array
    f: float
    tau: Array
    saturated: Array
    f_cmd: float = 0.0
    tau_cmd: Array = field(default_factory=lambda: np.zeros(3))


@dataclass
class Disturbances:
    d_a: Array = field(default_factory=lambda: np.zeros(3))
    d_alpha: Array = field(default_factory=lambda: np.zeros(3))


def allocation_matrix(p: VehicleParams) -> Array:
    """Map rotor thrusts to ``[f, τx, τy, τz]``.

    The fourth entry of the pitch row is ``l·cos β`` like the rest of its row
    (the printed ``l·sin β`` is a typo; identical at β = 45°).
    """
    if not 0.0 < p.beta < math.pi / 2:
        raise ValueError("arm angle beta must lie in (0, π/2)")
    ls = p.l * math.sin(p.beta)
    lc = p.l * math.cos(p.beta)
    k = p.c_q / p.c_t
    G = np.array([
        [1.0, 1.0, 1.0, 1.0],
        [ls, -ls, -ls, ls],
        [-lc, lc, -lc, lc],
        [-k, -k, k, k],
    ])
    if np.linalg.cond(G) > 1e12:
        raise ValueError("allocation matrix is singular for these parameters")
    return G


def allocate_and_saturate(f: float, tau: Array, p: VehicleParams) -> ControlCommand:
    """Invert the allocation, clamp each rotor to its bounds, recompute the wrench."""
    tau = np.asarray(tau, dtype=float)
    wrench = np.array([f, tau[0], tau[1], tau[2]])
    if not np.all(np.isfinite(wrench)):
        raise ValueError(f"non-finite wrench request {wrench!r}")
    u_raw = p.G_inv @ wrench
    u = np.clip(u_raw, p.f_min, p.f_max)
    realized = p.G @ u
    saturated = (u_raw <= p.f_min) | (u_raw >= p.f_max)
    return ControlCommand(
        u=u, f=float(realized[0]), tau=realized[1:].copy(), saturated=saturated,
        f_cmd=float(f), tau_cmd=tau.copy(),
    )


def rotor_speeds(u: Array, p: VehicleParams) -> Array:
    """Rotor spin rates from thrusts (diagnostic only, no motor dynamics)."""
    return np.sqrt(np.asarray(u) / p.c_t)


def eval_disturbances(t: float, enabled: bool = True, axes: str = "xyz") -> Disturbances:
    """Sinusoidal translational/rotational disturbances, same scalar on each enabled axis."""
    d = Disturbances()
    if not enabled:
        return d
    a = 2.0 * math.sin(math.pi * t + math.pi / 2)
    alpha = math.sin(math.pi * t)
    for name in axes:
        i = AXES[name]
        d.d_a[i] = a
        d.d_alpha[i] = alpha
    return d


def derivative_vector(x: Array, f: float, tau, d_a, d_alpha, p: VehicleParams) -> Array:
    """Time derivative of the stacked 13-vector ``[ξ, v, q, ω]``."""
    # scalar arithmetic: small-array numpy calls dominate the runtime otherwise
    _, _, _, vx, vy, vz, w, x1, y1, z1, wx, wy, wz = x.tolist()
    tx, ty, tz = tau
    Jx, Jy, Jz = p.inertia
    fm = f / p.m
    dx = np.array([
        vx, vy, vz,
        fm * 2.0 * (x1 * z1 + w * y1),
        fm * 2.0 * (y1 * z1 - w * x1),
        fm * (w * w - x1 * x1 - y1 * y1 + z1 * z1) - p.g,
        0.5 * (-x1 * wx - y1 * wy - z1 * wz),
        0.5 * (w * wx + y1 * wz - z1 * wy),
        0.5 * (w * wy - x1 * wz + z1 * wx),
        0.5 * (w * wz + x1 * wy - y1 * wx),
        (tx - (wy * Jz * wz - wz * Jy * wy)) / Jx,
        (ty - (wz * Jx * wx - wx * Jz * wz)) / Jy,
        (tz - (wx * Jy * wy - wy * Jx * wx)) / Jz,
    ])
    dx[3:6] += d_a
    dx[10:13] += d_alpha
    return dx


def state_derivative(s: VehicleState, cmd: ControlCommand, d: Disturbances, p: VehicleParams) -> VehicleState:
    """Evaluate the flight dynamics; the result holds derivatives, not a state.

    The plant is driven by the realized wrench ``(cmd.f, cmd.tau)``.
    """
    x = s.as_vector()
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite state")
    n = float(np.linalg.norm(s.q))
    if abs(n - 1.0) > 1e-6:
        raise ValueError(f"attitude quaternion is not unit (|q| = {n!r})")
    return VehicleState.from_vector(derivative_vector(x, cmd.f, cmd.tau, d.d_a, d.d_alpha, p))
