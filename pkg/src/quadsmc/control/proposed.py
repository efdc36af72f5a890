"""Cascaded quaternion sliding mode controller.

Outer loop: position sliding surface ``s_ξ = v_e + λ_ξ∘ξ_e`` with a tanh
reaching law gives the force vector ``κ`` and the thrust ``f = κ·b3``.
Middle: ``κ`` and its derivatives fix the desired frame ``R_d`` (b3 along κ,
b1 from the reference heading) and from it ``q_d``, ``ω_d``, ``α_d``.
Inner loop: quaternion sliding surface
``s_q = ω_e + λ_q∘sgn₊(q_we) q⃗_e``; the ``sgn₊`` factor makes the law pick the
nearer of ``±q_e`` so the vehicle never unwinds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..dynamics import ControlCommand, VehicleParams, VehicleState
from ..mathcore import E3, body_z_axis, cross, hat, quat_conj, quat_mul, rotmat_to_quat, vee
from ..reference import ReferenceSample, unit_vector_derivatives

Array = np.ndarray

KAPPA_MIN = 1e-4
NU_MIN = 1e-6


@dataclass(frozen=True)
class PositionSmcGains:
    lam: tuple = (2.0, 4.0, 8.0)
    K: tuple = (4.0, 2.0, 8.0)

    def __post_init__(self):
        _check_gains(self.lam, self.K)


@dataclass(frozen=True)
class AttitudeSmcGains:
    lam: tuple = (20.0, 20.0, 20.0)
    K: tuple = (0.02, 0.02, 0.02)

    def __post_init__(self):
        _check_gains(self.lam, self.K)


def _check_gains(lam, K):
    if len(lam) != 3 or len(K) != 3:
        raise ValueError("gains need three entries")
    if min(lam) <= 0:
        raise ValueError("surface slopes must be positive")
    if min(K) < 0:
        raise ValueError("reaching gains must be non-negative")


@dataclass
class KappaChain:
    """Force vector ``κ`` with two derivatives, and the surface ``s_ξ`` with two derivatives."""

    kappa: Array
    kappa_dot: Array
    kappa_ddot: Array
    s: Array
    s_dot: Array
    s_ddot: Array


@dataclass
class AttitudeReference:
    q_d: Array
    omega_d: Array
    alpha_d: Array
    R_d: Array
    flag: str | None = None


class DegenerateReference(ValueError):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


@dataclass
class ControllerOutput:
    f: float
    tau: Array
    diag: dict = field(default_factory=dict)


def position_errors(state: VehicleState, ref: ReferenceSample) -> tuple[Array, Array]:
    return state.pos - ref.pos, state.vel - ref.vel


def model_acceleration_error(state: VehicleState, ref: ReferenceSample, thrust: float,
                             believed: VehicleParams) -> Array:
    """Acceleration error predicted by the believed model for a given thrust."""
    return (thrust / believed.m) * body_z_axis(state.q) - believed.g * E3 - ref.acc


def kappa_derivatives(state: VehicleState, ref: ReferenceSample, believed: VehicleParams,
                      gains: PositionSmcGains, a_e: Array, j_e: Array) -> tuple[Array, Array]:
    """First and second time derivatives of ``κ``.

    The second derivative is the exact derivative of the first. The printed
    form has ``s̈`` in its last term where differentiating ``sech²(s)∘ṡ`` gives
    ``-2 sech²(s)∘tanh(s)∘ṡ∘ṡ``.
    """
    return _kappa_chain(state, ref, believed, gains, a_e, j_e)[1:3]


def _kappa_chain(state, ref, believed, gains, a_e, j_e):
    lam = np.asarray(gains.lam)
    K = np.asarray(gains.K)
    xi_e, v_e = position_errors(state, ref)
    s = v_e + lam * xi_e
    s_dot = a_e + lam * v_e
    s_ddot = j_e + lam * a_e
    th = np.tanh(s)
    sech2 = 1.0 - th * th
    m = believed.m
    kappa = m * (ref.acc - lam * v_e + believed.g * E3 - K * th)
    kappa_dot = m * (ref.jerk - lam * a_e - K * sech2 * s_dot)
    kappa_ddot = m * (ref.snap - lam * j_e - K * (sech2 * s_ddot - 2.0 * sech2 * th * s_dot * s_dot))
    return kappa, kappa_dot, kappa_ddot, s, s_dot, s_ddot


def position_smc(state: VehicleState, ref: ReferenceSample, believed: VehicleParams,
                 gains: PositionSmcGains, a_e: Array | None = None,
                 j_e: Array | None = None) -> tuple[float, KappaChain]:
    """Thrust from the position sliding surface; ``a_e``/``j_e`` default to zero."""
    a_e = np.zeros(3) if a_e is None else np.asarray(a_e, dtype=float)
    j_e = np.zeros(3) if j_e is None else np.asarray(j_e, dtype=float)
    x = state.as_vector()
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite state")
    chain = KappaChain(*_kappa_chain(state, ref, believed, gains, a_e, j_e))
    f = float(chain.kappa @ body_z_axis(state.q))
    return f, chain


def _skew_part_vee(M: Array) -> Array:
    scale = max(1.0, float(np.abs(M).max()))
    return vee(M, tol=1e-6 * scale)


def desired_attitude(kappa: Array, kappa_dot: Array, kappa_ddot: Array, b1r: Array,
                     b1r_dot: Array, b1r_ddot: Array, prev_q: Array | None = None) -> AttitudeReference:
    """Desired frame from the force vector and heading, with ``ω_d`` and ``α_d``.

    Raises :class:`DegenerateReference` when ``κ`` is too small or parallel to
    the heading.
    """
    if math.sqrt(float(kappa @ kappa)) < KAPPA_MIN:
        raise DegenerateReference("kappa", f"|kappa| below {KAPPA_MIN} N (free-fall command)")
    b3, b3_d, b3_dd = unit_vector_derivatives(kappa, kappa_dot, kappa_ddot)
    nu = cross(b3, b1r)
    if math.sqrt(float(nu @ nu)) < NU_MIN:
        raise DegenerateReference("nu", "thrust axis parallel to the reference heading")
    nu_d = cross(b3_d, b1r) + cross(b3, b1r_dot)
    nu_dd = cross(b3_dd, b1r) + cross(b3, b1r_ddot) + 2.0 * cross(b3_d, b1r_dot)
    b2, b2_d, b2_dd = unit_vector_derivatives(nu, nu_d, nu_dd)
    b1 = cross(b2, b3)
    b1_d = cross(b2_d, b3) + cross(b2, b3_d)
    b1_dd = cross(b2_dd, b3) + cross(b2, b3_dd) + 2.0 * cross(b2_d, b3_d)

    R = np.array([b1, b2, b3]).T
    R_dot = np.array([b1_d, b2_d, b3_d]).T
    R_ddot = np.array([b1_dd, b2_dd, b3_dd]).T
    omega_d = _skew_part_vee(R.T @ R_dot)
    w_hat = hat(omega_d)
    alpha_d = _skew_part_vee(R.T @ R_ddot - w_hat @ w_hat)
    q_d = rotmat_to_quat(R, prev=prev_q)
    return AttitudeReference(q_d=q_d, omega_d=omega_d, alpha_d=alpha_d, R_d=R)


def _fallback_reference(kappa: Array) -> AttitudeReference:
    n = float(np.linalg.norm(kappa))
    if n < KAPPA_MIN:
        R = np.eye(3)
    else:
        b3 = kappa / n
        aux = np.array([1.0, 0.0, 0.0]) if abs(b3[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        b2 = cross(b3, aux)
        b2 /= np.linalg.norm(b2)
        R = np.column_stack([cross(b2, b3), b2, b3])
    return AttitudeReference(q_d=rotmat_to_quat(R), omega_d=np.zeros(3), alpha_d=np.zeros(3), R_d=R)


def attitude_reference(chain: KappaChain, ref: ReferenceSample,
                       prev: AttitudeReference | None = None) -> AttitudeReference:
    """Desired attitude for this step; degenerate steps hold ``prev`` and carry a flag."""
    try:
        return desired_attitude(chain.kappa, chain.kappa_dot, chain.kappa_ddot,
                                ref.b1, ref.b1_dot, ref.b1_ddot,
                                None if prev is None else prev.q_d)
    except DegenerateReference as exc:
        held = _fallback_reference(chain.kappa) if prev is None else prev
        return AttitudeReference(q_d=held.q_d.copy(), omega_d=held.omega_d.copy(),
                                 alpha_d=held.alpha_d.copy(), R_d=held.R_d.copy(), flag=exc.kind)


def sgn_plus(x: float) -> float:
    return 1.0 if x >= 0.0 else -1.0


def attitude_errors(state: VehicleState, ar: AttitudeReference) -> tuple[Array, Array]:
    q_e = quat_mul(quat_conj(ar.q_d), state.q)
    return q_e, state.omega - ar.omega_d


def attitude_smc_terms(state: VehicleState, ar: AttitudeReference, believed: VehicleParams,
                       gains: AttitudeSmcGains) -> tuple[Array, Array, Array, Array]:
    """Return ``(τ, s_q, q_e, ω_e)``."""
    q_e, w_e = attitude_errors(state, ar)
    lam = np.asarray(gains.lam)
    K = np.asarray(gains.K)
    J = believed.J_diag
    sigma = sgn_plus(q_e[0])
    qv = q_e[1:]
    s_q = w_e + lam * sigma * qv
    qv_dot = 0.5 * (q_e[0] * w_e + cross(qv, w_e))
    w = state.omega
    tau = J * ar.alpha_d + cross(w, J * w) - J * (lam * sigma * qv_dot) - K * np.tanh(s_q)
    return tau, s_q, q_e, w_e


def attitude_smc(state: VehicleState, ar: AttitudeReference, believed: VehicleParams,
                 gains: AttitudeSmcGains) -> Array:
    return attitude_smc_terms(state, ar, believed, gains)[0]


def lyapunov_monitor(s_xi: Array, s_q: Array, believed: VehicleParams) -> float:
    """``V = ½|s_ξ|² + ½ s_Δᵀ J s_Δ`` with ``s_Δ = s_q - tanh(s_q)``."""
    s_xi = np.asarray(s_xi, dtype=float)
    s_delta = np.asarray(s_q, dtype=float) - np.tanh(s_q)
    return 0.5 * float(s_xi @ s_xi) + 0.5 * float(s_delta @ (believed.J_diag * s_delta))


class CascadeController:
    """Shared outer loop: position SMC and desired-attitude generation.

    Memory (previous attitude reference, previous acceleration error, last
    control time) belongs to one simulation; call :meth:`reset` before reuse.
    The acceleration error comes from the believed model with the previous
    step's realized thrust; the jerk error is its backward difference.
    """

    name = "cascade"

    def __init__(self, believed: VehicleParams, position_gains: PositionSmcGains | None = None):
        self.believed = believed
        self.position_gains = position_gains or PositionSmcGains()
        self.reset()

    def reset(self) -> None:
        self._prev_ar: AttitudeReference | None = None
        self._prev_a_e: Array | None = None
        self._prev_t: float | None = None

    def outer_loop(self, t: float, state: VehicleState, ref: ReferenceSample,
                   realized: ControlCommand | None):
        if realized is None:
            # first step: no thrust has been applied yet, use the zero-error command
            thrust, _ = position_smc(state, ref, self.believed, self.position_gains)
        else:
            thrust = realized.f
        a_e = model_acceleration_error(state, ref, thrust, self.believed)
        if self._prev_a_e is None or self._prev_t is None or t <= self._prev_t:
            j_e = np.zeros(3)
        else:
            j_e = (a_e - self._prev_a_e) / (t - self._prev_t)
        f, chain = position_smc(state, ref, self.believed, self.position_gains, a_e, j_e)
        ar = attitude_reference(chain, ref, self._prev_ar)
        self._prev_ar = ar
        self._prev_a_e = a_e
        self._prev_t = t
        return f, chain, ar, a_e, j_e

    def attitude_law(self, state: VehicleState, ar: AttitudeReference):
        raise NotImplementedError

    def step(self, t: float, state: VehicleState, ref: ReferenceSample,
             realized: ControlCommand | None = None) -> ControllerOutput:
        f, chain, ar, a_e, j_e = self.outer_loop(t, state, ref, realized)
        tau, s_q, q_e, w_e = self.attitude_law(state, ar)
        diag = {
            "s_xi": chain.s, "s_q": s_q, "q_e": q_e, "omega_e": w_e,
            "V": lyapunov_monitor(chain.s, s_q, self.believed),
            "q_d": ar.q_d, "omega_d": ar.omega_d, "alpha_d": ar.alpha_d, "R_d": ar.R_d,
            "kappa": chain.kappa, "kappa_dot": chain.kappa_dot, "kappa_ddot": chain.kappa_ddot,
            "a_e": a_e, "j_e": j_e, "degenerate": ar.flag, "failed": False,
        }
        return ControllerOutput(f=f, tau=tau, diag=diag)


class ProposedController(CascadeController):
    name = "proposed"

    def __init__(self, believed: VehicleParams, position_gains: PositionSmcGains | None = None,
                 attitude_gains: AttitudeSmcGains | None = None):
        self.attitude_gains = attitude_gains or AttitudeSmcGains()
        super().__init__(believed, position_gains)

    def attitude_law(self, state, ar):
        return attitude_smc_terms(state, ar, self.believed, self.attitude_gains)
