"""Reference trajectories (position + heading, with derivatives) and scenario setup."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .dynamics import VehicleState
from .mathcore import quat_normalize

Array = np.ndarray

E1 = np.array([1.0, 0.0, 0.0])
HEADING_MIN_SPEED = 1e-6


@dataclass
class ReferenceSample:
    """Desired position with derivatives up to snap, plus heading ``b1r`` and its derivatives."""

    pos: Array
    vel: Array = field(default_factory=lambda: np.zeros(3))
    acc: Array = field(default_factory=lambda: np.zeros(3))
    jerk: Array = field(default_factory=lambda: np.zeros(3))
    snap: Array = field(default_factory=lambda: np.zeros(3))
    b1: Array = field(default_factory=lambda: E1.copy())
    b1_dot: Array = field(default_factory=lambda: np.zeros(3))
    b1_ddot: Array = field(default_factory=lambda: np.zeros(3))


def unit_vector_derivatives(h: Array, h1: Array, h2: Array) -> tuple[Array, Array, Array]:
    """``b = h/|h|`` together with its first and second time derivatives."""
    n = math.sqrt(float(h @ h))
    hd1 = float(h @ h1)
    b = h / n
    b1 = h1 / n - hd1 / n**3 * h
    b2 = (h2 / n - 2.0 * hd1 / n**3 * h1
          - (h1 @ h1 + h @ h2) / n**3 * h
          + 3.0 * hd1**2 / n**5 * h)
    return b, b1, b2


class SetpointReference:
    """Constant position and heading; every derivative is zero."""

    def __init__(self, pos, b1=E1):
        self.pos = np.array(pos, dtype=float)
        b1 = np.array(b1, dtype=float)
        if abs(b1[2]) > 1e-12 or abs(np.linalg.norm(b1) - 1.0) > 1e-9:
            raise ValueError("heading must be a horizontal unit vector")
        self.b1 = b1

    def __call__(self, t: float) -> ReferenceSample:
        return ReferenceSample(pos=self.pos.copy(), b1=self.b1.copy())


FLIP_TARGET = (1.0, 2.0, 3.0)


def flip_reference(t: float) -> ReferenceSample:
    if t < 0:
        raise ValueError("t must be non-negative")
    return ReferenceSample(pos=np.array(FLIP_TARGET))


class CalibrationError(ValueError):
    def __init__(self, message: str, achievable: dict):
        super().__init__(message)
        self.achievable = achievable


@dataclass(frozen=True)
class LemniscateCal:
    """Figure-eight ``(A sin ωt, B sin 2ωt, z0)``; ``vmax``/``amax`` are sampled extrema."""

    A: float
    B: float
    omega: float
    z0: float = 2.0
    vmax: float = float("nan")
    amax: float = float("nan")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega


def _sin_derivs(amp: float, w: float, t: float, n: int = 5) -> list[float]:
    # k-th derivative of amp*sin(w t)
    return [amp * w**k * math.sin(w * t + k * math.pi / 2) for k in range(n)]


def lemniscate_derivatives(t: float, cal: LemniscateCal) -> list[Array]:
    """Position and its first four derivatives at ``t``."""
    xs = _sin_derivs(cal.A, cal.omega, t)
    ys = _sin_derivs(cal.B, 2.0 * cal.omega, t)
    out = [np.array([xs[k], ys[k], 0.0]) for k in range(5)]
    out[0][2] = cal.z0
    return out


def lemniscate_reference(t: float, cal: LemniscateCal, heading: str = "velocity",
                         last_b1: Array | None = None) -> ReferenceSample:
    """Figure-eight sample; the heading follows the horizontal velocity unless ``heading='fixed'``.

    Below ``HEADING_MIN_SPEED`` the heading is undefined and ``last_b1`` (or e1)
    is held with zero derivatives.
    """
    pos, vel, acc, jerk, snap = lemniscate_derivatives(t, cal)
    ref = ReferenceSample(pos=pos, vel=vel, acc=acc, jerk=jerk, snap=snap)
    if heading == "fixed":
        return ref
    if heading != "velocity":
        raise ValueError(f"unknown heading policy {heading!r}")
    h = np.array([vel[0], vel[1], 0.0])
    if np.linalg.norm(h) < HEADING_MIN_SPEED:
        ref.b1 = E1.copy() if last_b1 is None else np.array(last_b1, dtype=float)
        return ref
    h1 = np.array([acc[0], acc[1], 0.0])
    h2 = np.array([jerk[0], jerk[1], 0.0])
    ref.b1, ref.b1_dot, ref.b1_ddot = unit_vector_derivatives(h, h1, h2)
    return ref


class LemniscateReference:
    """Callable wrapper that remembers the last valid heading."""

    def __init__(self, cal: LemniscateCal, heading: str = "velocity"):
        self.cal = cal
        self.heading = heading
        self._last_b1 = None

    def __call__(self, t: float) -> ReferenceSample:
        ref = lemniscate_reference(t, self.cal, self.heading, self._last_b1)
        self._last_b1 = ref.b1
        return ref


def _unit_shape_extrema(shape_ratio: float, samples: int = 20000) -> tuple[float, float]:
    """Max speed and acceleration of the curve with A = 1, ω = 1."""
    b = 1.0 / shape_ratio

    def speed(u):
        return math.hypot(math.cos(u), 2.0 * b * math.cos(2.0 * u))

    def accel(u):
        return math.hypot(math.sin(u), 4.0 * b * math.sin(2.0 * u))

    u = np.linspace(0.0, 2.0 * math.pi, samples, endpoint=False)
    du = u[1] - u[0]
    out = []
    for fn in (speed, accel):
        vals = np.array([fn(x) for x in u])
        i = int(np.argmax(vals))
        res = minimize_scalar(lambda x: -fn(x), bounds=(u[i] - du, u[i] + du),
                              method="bounded", options={"xatol": 1e-12})
        out.append(max(vals[i], -res.fun))
    return out[0], out[1]


def sampled_extrema(cal: LemniscateCal, samples_per_period: int = 20000) -> tuple[float, float]:
    """Max ‖v‖ and ‖a‖ by dense sampling of the closed-form derivatives over one period."""
    t = np.linspace(0.0, cal.period, samples_per_period, endpoint=False)
    w = cal.omega
    vx = cal.A * w * np.cos(w * t)
    vy = cal.B * 2 * w * np.cos(2 * w * t)
    ax = -cal.A * w**2 * np.sin(w * t)
    ay = -cal.B * 4 * w**2 * np.sin(2 * w * t)
    return float(np.hypot(vx, vy).max()), float(np.hypot(ax, ay).max())


def calibrate_lemniscate(target_vmax: float = 2.51, target_amax: float = 1.7, shape_ratio: float = 2.0,
                         z0: float = 2.0, amplitude_bounds: tuple[float, float] = (0.0, math.inf),
                         omega_bounds: tuple[float, float] = (0.0, math.inf)) -> LemniscateCal:
    """Choose amplitude ``A`` (with ``B = A/shape_ratio``) and rate ``ω`` that hit both extrema.

    Speed scales as ``A ω`` and acceleration as ``A ω²``, so once the unit-curve
    extrema are known the pair is fixed; bounds on ``A`` or ``ω`` can make the
    targets infeasible, in which case the closest achievable extrema are reported.
    """
    if not (target_vmax > 0 and target_amax > 0 and shape_ratio > 0):
        raise ValueError("targets and shape ratio must be positive")
    cv, ca = _unit_shape_extrema(shape_ratio)
    a_omega = target_vmax / cv
    omega = (target_amax / ca) / a_omega
    A = a_omega / omega
    lo_a, hi_a = amplitude_bounds
    lo_w, hi_w = omega_bounds
    if not (lo_a < A <= hi_a and lo_w < omega <= hi_w):
        A_c = min(max(A, lo_a), hi_a)
        w_c = min(max(omega, lo_w), hi_w)
        achievable = {"A": A_c, "omega": w_c, "vmax": A_c * w_c * cv, "amax": A_c * w_c**2 * ca}
        raise CalibrationError(
            f"targets need A={A:.4g} m, omega={omega:.4g} rad/s outside the allowed bounds", achievable)
    cal = LemniscateCal(A=A, B=A / shape_ratio, omega=omega, z0=z0)
    vmax, amax = sampled_extrema(cal)
    return LemniscateCal(A=cal.A, B=cal.B, omega=cal.omega, z0=z0, vmax=vmax, amax=amax)


@dataclass
class ScenarioConfig:
    name: str
    initial_state: VehicleState
    duration: float
    reference: object
    disturbance: bool = True
    uncertainty: bool = True
    disturbance_axes: str = "xyz"

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        n = float(np.linalg.norm(self.initial_state.q))
        if abs(n - 1.0) > 1e-9:
            raise ValueError("initial attitude must be a unit quaternion")


# Initial conditions as printed; quaternions are normalized on load
# (the lemniscate one has |q| = 0.99999).
FLIP_INITIAL = dict(pos=(0.0, 0.0, 2.0), vel=(1.0, 1.0, 3.0), q=(0.0, 0.0, 0.0, 1.0), omega=(0.0, 0.0, 0.0))
FLIP_INVERTED_Q = (0.0, 1.0, 0.0, 0.0)
LEMNISCATE_INITIAL = dict(pos=(0.0, 0.0, 2.0), vel=(1.0, -0.5, 0.5), q=(0.2837, 0.0, 0.0, -0.9589),
                          omega=(0.0, 0.0, 0.0))

SCENARIOS = ("flip", "flip-inverted", "lemniscate", "hover")
DEFAULT_DURATION = {"flip": 10.0, "flip-inverted": 10.0, "lemniscate": 20.0, "hover": 10.0}


def _state(pos, vel, q, omega) -> VehicleState:
    return VehicleState(np.array(pos, float), np.array(vel, float), quat_normalize(np.array(q, float)),
                        np.array(omega, float))


def make_scenario(name: str, duration: float | None = None, disturbance: bool = True,
                  uncertainty: bool = True, disturbance_axes: str = "xyz", heading: str = "velocity",
                  lemniscate: LemniscateCal | None = None, initial_state: VehicleState | None = None,
                  hover_position=(0.0, 0.0, 2.0)) -> ScenarioConfig:
    """Build one of the named scenarios with optional overrides."""
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}; valid: {', '.join(SCENARIOS)}")
    if any(a not in "xyz" for a in disturbance_axes):
        raise ValueError(f"disturbance_axes must be a subset of 'xyz', got {disturbance_axes!r}")
    if name in ("flip", "flip-inverted"):
        init = dict(FLIP_INITIAL)
        if name == "flip-inverted":
            init["q"] = FLIP_INVERTED_Q
        ref = SetpointReference(FLIP_TARGET, E1)
    elif name == "lemniscate":
        init = LEMNISCATE_INITIAL
        ref = LemniscateReference(lemniscate or calibrate_lemniscate(), heading)
    else:
        init = dict(pos=hover_position, vel=(0, 0, 0), q=(1, 0, 0, 0), omega=(0, 0, 0))
        ref = SetpointReference(hover_position, E1)
    state = initial_state.copy() if initial_state is not None else _state(**init)
    return ScenarioConfig(
        name=name, initial_state=state, duration=duration or DEFAULT_DURATION[name], reference=ref,
        disturbance=disturbance, uncertainty=uncertainty, disturbance_axes=disturbance_axes,
    )
