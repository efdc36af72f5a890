"""Comparison controllers: geometric SE(3), Euler-angle SMC, quaternion PD.

These follow the standard textbook forms of each family. The Euler SMC keeps
its small-angle attitude model on purpose; its breakdown at large roll/pitch
is the behaviour being benchmarked.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..dynamics import ControlCommand, VehicleParams, VehicleState
from ..mathcore import (E3, EULER_EPS, cross, EulerSingularityError, body_z_axis, euler_rate_matrix,
                        euler_to_quat, hat, quat_conj, quat_mul, quat_to_euler, quat_to_rotmat, vee,
                        wrap_angle)
from ..reference import ReferenceSample
from .proposed import (AttitudeReference, CascadeController, ControllerOutput, DegenerateReference,
                       PositionSmcGains, _fallback_reference, attitude_errors, desired_attitude,
                       model_acceleration_error, position_errors)

Array = np.ndarray
NAN3 = np.full(3, np.nan)


@dataclass(frozen=True)
class GeometricGains:
    """Position gains are per unit mass and get multiplied by the believed mass."""

    K_xi: tuple = (5.0, 5.0, 15.0)
    K_v: tuple = (1.0, 1.0, 5.0)
    K_j: tuple = (0.01, 0.01, 0.01)
    K_R: tuple = (1.2, 0.5, 0.5)
    K_w: tuple = (0.02, 0.01, 0.01)

    def __post_init__(self):
        for g in (self.K_xi, self.K_v, self.K_j, self.K_R, self.K_w):
            if len(g) != 3 or min(g) < 0:
                raise ValueError("geometric gains need three non-negative entries")


@dataclass(frozen=True)
class EulerSmcGains:
    lam_xi: tuple = (2.0, 2.0, 2.0)
    K_xi: tuple = (4.0, 4.0, 30.0)
    lam_phi: tuple = (5.0, 5.0, 5.0)
    K_phi: tuple = (20.0, 20.0, 20.0)

    def __post_init__(self):
        if min(self.lam_xi) <= 0 or min(self.lam_phi) <= 0:
            raise ValueError("surface slopes must be positive")
        if min(self.K_xi) < 0 or min(self.K_phi) < 0:
            raise ValueError("reaching gains must be non-negative")


@dataclass(frozen=True)
class QuatPdGains:
    K_q: tuple = (0.05, 0.05, 0.05)
    K_w: tuple = (0.001, 0.001, 0.001)

    def __post_init__(self):
        if min(self.K_q) < 0 or min(self.K_w) < 0:
            raise ValueError("PD gains must be non-negative")


def geometric_attitude_errors(R: Array, R_d: Array, omega: Array, omega_d: Array) -> tuple[Array, Array]:
    """``e_R = ½(R_dᵀR - RᵀR_d)∨`` and ``e_ω = ω - RᵀR_d ω_d``."""
    e_R = 0.5 * vee(R_d.T @ R - R.T @ R_d)
    e_w = omega - R.T @ R_d @ omega_d
    return e_R, e_w


def geometric_torque(state: VehicleState, ar: AttitudeReference, believed: VehicleParams,
                     gains: GeometricGains) -> tuple[Array, Array, Array]:
    R = quat_to_rotmat(state.q)
    w = state.omega
    J = believed.J_diag
    e_R, e_w = geometric_attitude_errors(R, ar.R_d, w, ar.omega_d)
    RtRd = R.T @ ar.R_d
    tau = (-np.asarray(gains.K_R) * e_R - np.asarray(gains.K_w) * e_w + cross(w, J * w)
           - J * (hat(w) @ RtRd @ ar.omega_d - RtRd @ ar.alpha_d))
    return tau, e_R, e_w


class GeometricController:
    """PD-like force law plus SO(3) attitude tracking on the same desired-frame construction."""

    name = "geometric"

    def __init__(self, believed: VehicleParams, gains: GeometricGains | None = None):
        self.believed = believed
        self.gains = gains or GeometricGains()
        self.reset()

    def reset(self):
        self._prev_ar = None
        self._prev_a_e = None
        self._prev_t = None

    def force_chain(self, state, ref, a_e, j_e):
        m = self.believed.m
        Kx = m * np.asarray(self.gains.K_xi)
        Kv = m * np.asarray(self.gains.K_v)
        Kj = m * np.asarray(self.gains.K_j)
        xi_e, v_e = position_errors(state, ref)
        F = -Kx * xi_e - Kv * v_e - Kj * a_e + m * self.believed.g * E3 + m * ref.acc
        F_dot = -Kx * v_e - Kv * a_e - Kj * j_e + m * ref.jerk
        # snap error is not measured; its K_j term is dropped
        F_ddot = -Kx * a_e - Kv * j_e + m * ref.snap
        return F, F_dot, F_ddot

    def step(self, t: float, state: VehicleState, ref: ReferenceSample,
             realized: ControlCommand | None = None) -> ControllerOutput:
        zero = np.zeros(3)
        if realized is None:
            F, _, _ = self.force_chain(state, ref, zero, zero)
            thrust = float(F @ body_z_axis(state.q))
        else:
            thrust = realized.f
        a_e = model_acceleration_error(state, ref, thrust, self.believed)
        if self._prev_a_e is None or t <= self._prev_t:
            j_e = zero
        else:
            j_e = (a_e - self._prev_a_e) / (t - self._prev_t)
        F, F_dot, F_ddot = self.force_chain(state, ref, a_e, j_e)
        try:
            ar = desired_attitude(F, F_dot, F_ddot, ref.b1, ref.b1_dot, ref.b1_ddot,
                                  None if self._prev_ar is None else self._prev_ar.q_d)
        except DegenerateReference as exc:
            held = self._prev_ar or _fallback_reference(F)
            ar = AttitudeReference(held.q_d, held.omega_d, held.alpha_d, held.R_d, flag=exc.kind)
        self._prev_ar, self._prev_a_e, self._prev_t = ar, a_e, t
        f = float(F @ body_z_axis(state.q))
        tau, _, _ = geometric_torque(state, ar, self.believed, self.gains)
        q_e, w_e = attitude_errors(state, ar)
        diag = {
            "s_xi": NAN3, "s_q": NAN3, "q_e": q_e, "omega_e": w_e, "V": float("nan"),
            "q_d": ar.q_d, "omega_d": ar.omega_d, "alpha_d": ar.alpha_d, "R_d": ar.R_d,
            "kappa": F, "kappa_dot": F_dot, "kappa_ddot": F_ddot, "a_e": a_e, "j_e": j_e,
            "degenerate": ar.flag, "failed": False,
        }
        return ControllerOutput(f=f, tau=tau, diag=diag)


def small_angle_attitude(a_c: Array, psi_d: float, g: float) -> tuple[float, float]:
    """Roll/pitch that tilt hover thrust toward a horizontal acceleration (small-angle)."""
    s, c = math.sin(psi_d), math.cos(psi_d)
    phi_d = (a_c[0] * s - a_c[1] * c) / g
    theta_d = (a_c[0] * c + a_c[1] * s) / g
    return phi_d, theta_d


class EulerSmcController:
    """Per-axis SMC on position and on Euler angles with the small-angle attitude model.

    A step fails when the Euler-rate map is singular, when the Euler triple
    jumps branch between consecutive steps (roll and yaw both leaping by more
    than π/2, which is how a sampled trajectory crosses the singular pitch),
    or when ``cos φ cos θ <= eps`` so the thrust inversion breaks down. A
    failed step re-issues the last command and is flagged.
    """

    name = "euler-smc"

    def __init__(self, believed: VehicleParams, gains: EulerSmcGains | None = None, eps: float = EULER_EPS):
        self.believed = believed
        self.gains = gains or EulerSmcGains()
        self.eps = eps
        self.reset()

    def reset(self):
        self._prev_eta = None
        self._prev_eta_d = None
        self._prev_t = None
        self._last = None

    def _fail(self, t, state, eta_d, q_d, reason):
        if self._last is None:
            f, tau = self.believed.m * self.believed.g, np.zeros(3)
        else:
            f, tau = self._last
        q_e = quat_mul(quat_conj(q_d), state.q)
        diag = {
            "s_xi": NAN3, "s_q": NAN3, "q_e": q_e, "omega_e": state.omega.copy(), "V": float("nan"),
            "q_d": q_d, "omega_d": np.zeros(3), "alpha_d": np.zeros(3), "R_d": quat_to_rotmat(q_d),
            "degenerate": None, "failed": True, "failure": reason,
        }
        return ControllerOutput(f=f, tau=np.array(tau), diag=diag)

    def step(self, t: float, state: VehicleState, ref: ReferenceSample,
             realized: ControlCommand | None = None) -> ControllerOutput:
        gn = self.gains
        m, g = self.believed.m, self.believed.g
        Jx, Jy, Jz = self.believed.inertia
        xi_e, v_e = position_errors(state, ref)
        s = v_e + np.asarray(gn.lam_xi) * xi_e
        a_c = ref.acc - np.asarray(gn.lam_xi) * v_e - np.asarray(gn.K_xi) * np.tanh(s)
        psi_d = math.atan2(ref.b1[1], ref.b1[0])
        phi_d, theta_d = small_angle_attitude(a_c, psi_d, g)
        eta_d = np.array([phi_d, theta_d, psi_d])
        q_d = euler_to_quat(eta_d)

        eta, _ = quat_to_euler(state.q)
        prev_eta, self._prev_eta = self._prev_eta, eta
        try:
            H = euler_rate_matrix(eta, self.eps)
        except EulerSingularityError as exc:
            return self._fail(t, state, eta_d, q_d, str(exc))
        if prev_eta is not None:
            jump = [abs(wrap_angle(eta[i] - prev_eta[i])) for i in (0, 2)]
            if min(jump) > math.pi / 2:
                return self._fail(t, state, eta_d, q_d, "Euler angles crossed the pitch singularity")

        eta_dot = H @ state.omega
        if self._prev_eta_d is None or t <= self._prev_t:
            eta_d_dot = np.zeros(3)
        else:
            eta_d_dot = np.array([wrap_angle(eta_d[i] - self._prev_eta_d[i]) for i in range(3)])
            eta_d_dot /= t - self._prev_t
        self._prev_eta_d, self._prev_t = eta_d, t

        denom = math.cos(eta[0]) * math.cos(eta[1])
        if denom <= self.eps:
            # tilted past 90°: the thrust inversion has no positive solution
            return self._fail(t, state, eta_d, q_d, "thrust inversion singular (cos φ cos θ <= eps)")
        f = m * (a_c[2] + g) / denom

        e = np.array([wrap_angle(eta[i] - eta_d[i]) for i in range(3)])
        e_dot = eta_dot - eta_d_dot
        s_phi = e_dot + np.asarray(gn.lam_phi) * e
        acc_cmd = -np.asarray(gn.lam_phi) * e_dot - np.asarray(gn.K_phi) * np.tanh(s_phi)
        p_dot, t_dot, y_dot = eta_dot
        tau = np.array([
            Jx * (acc_cmd[0] - t_dot * y_dot * (Jy - Jz) / Jx),
            Jy * (acc_cmd[1] - p_dot * y_dot * (Jz - Jx) / Jy),
            Jz * (acc_cmd[2] - p_dot * t_dot * (Jx - Jy) / Jz),
        ])
        self._last = (f, tau.copy())
        q_e = quat_mul(quat_conj(q_d), state.q)
        diag = {
            "s_xi": s, "s_q": s_phi, "q_e": q_e, "omega_e": state.omega - eta_d_dot, "V": float("nan"),
            "q_d": q_d, "omega_d": eta_d_dot, "alpha_d": np.zeros(3), "R_d": quat_to_rotmat(q_d),
            "degenerate": None, "failed": False,
        }
        return ControllerOutput(f=f, tau=tau, diag=diag)


class QuatPdController(CascadeController):
    """Quaternion PD attitude law on the proposed outer loop, with no shortest-path handling."""

    name = "quat-pd"

    def __init__(self, believed: VehicleParams, position_gains: PositionSmcGains | None = None,
                 gains: QuatPdGains | None = None):
        self.gains = gains or QuatPdGains()
        super().__init__(believed, position_gains)

    def attitude_law(self, state, ar):
        q_e, w_e = attitude_errors(state, ar)
        J = self.believed.J_diag
        w = state.omega
        tau = (-np.asarray(self.gains.K_q) * q_e[1:] - np.asarray(self.gains.K_w) * w_e
               + cross(w, J * w) + J * ar.alpha_d)
        return tau, NAN3.copy(), q_e, w_e
