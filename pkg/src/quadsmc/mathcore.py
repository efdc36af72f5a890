"""Rotation primitives shared by the plant and every controller.

Conventions (fixed for the whole package):

* quaternions are scalar-first ``q = [w, x, y, z]`` and use the Hamilton product;
* a vehicle attitude ``q`` rotates body vectors into the inertial frame,
  ``v_I = q ⊗ [0, v_B] ⊗ q*``, with kinematics ``q̇ = ½ q ⊗ [0, ω]`` for a
  body-frame angular velocity ``ω``;
* ``quat_to_rotmat(q)`` returns the matching body-to-inertial matrix whose
  columns are the body axes expressed in the inertial frame;
* Euler angles are roll/pitch/yaw in the yaw-pitch-roll (Z-Y-X) sequence.
"""
from __future__ import annotations

import math

import numpy as np

Array = np.ndarray

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])

UNIT_TOL = 1e-6
SKEW_TOL = 1e-6
ORTHO_TOL = 1e-6
EULER_EPS = 1e-6
GIMBAL_FLAG_MARGIN = 1e-3


class EulerSingularityError(ValueError):
    """Pitch is too close to ±π/2 for the Euler-rate map to exist."""


def cross(a: Array, b: Array) -> Array:
    """3-vector cross product (``np.cross`` is slow for single vectors)."""
    return np.array([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


def quat_mul(a: Array, b: Array) -> Array:
    """Hamilton product ``a ⊗ b``."""
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_conj(q: Array) -> Array:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_normalize(q: Array) -> Array:
    q = np.asarray(q, dtype=float)
    n = math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    if n == 0.0 or not math.isfinite(n):
        raise ValueError(f"cannot normalize quaternion {q!r}")
    return q / n


def _check_unit(q: Array, tol: float = UNIT_TOL) -> None:
    n = math.sqrt(float(np.dot(q, q)))
    if abs(n - 1.0) > tol:
        raise ValueError(f"expected a unit quaternion, |q| = {n!r}")


def rotate_body_to_inertial(q: Array, v_body: Array) -> Array:
    """Express a body-frame vector in the inertial frame, ``q ⊗ v ⊗ q*``."""
    _check_unit(q)
    w, x, y, z = q
    vx, vy, vz = v_body
    # expanded q ⊗ [0, v] ⊗ q*; two cross products instead of two full products
    tx = 2.0 * (y * vz - z * vy)
    ty = 2.0 * (z * vx - x * vz)
    tz = 2.0 * (x * vy - y * vx)
    return np.array([
        vx + w * tx + (y * tz - z * ty),
        vy + w * ty + (z * tx - x * tz),
        vz + w * tz + (x * ty - y * tx),
    ])


def body_z_axis(q: Array) -> Array:
    """Third body axis in the inertial frame (the thrust direction)."""
    w, x, y, z = q
    return np.array([
        2.0 * (x * z + w * y),
        2.0 * (y * z - w * x),
        w * w - x * x - y * y + z * z,
    ])


def quat_to_rotmat(q: Array) -> Array:
    _check_unit(q)
    w, x, y, z = q
    return np.array([
        [w * w + x * x - y * y - z * z, 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), w * w - x * x + y * y - z * z, 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), w * w - x * x - y * y + z * z],
    ])


def rotmat_to_quat(R: Array, prev: Array | None = None) -> Array:
    """Convert a rotation matrix to a unit quaternion.

    Uses Shepperd's largest-pivot branch so the result stays accurate when
    ``w`` is near zero. Sign policy: closest to ``prev`` when given, otherwise
    ``w >= 0`` with ties broken by the first nonzero vector component positive.
    """
    R = np.asarray(R, dtype=float)
    err = np.abs(R.T @ R - np.eye(3)).max()
    if not err <= ORTHO_TOL:
        raise ValueError(f"matrix is not orthonormal (max |RᵀR - I| = {err:.3g})")
    det = (R[0, 0] * (R[1, 1] * R[2, 2] - R[1, 2] * R[2, 1])
           - R[0, 1] * (R[1, 0] * R[2, 2] - R[1, 2] * R[2, 0])
           + R[0, 2] * (R[1, 0] * R[2, 1] - R[1, 1] * R[2, 0]))
    if det < 0.0:
        raise ValueError("matrix is a reflection, not a rotation")

    tr = R[0, 0] + R[1, 1] + R[2, 2]
    pivots = (tr, R[0, 0], R[1, 1], R[2, 2])
    k = max(range(4), key=lambda i: pivots[i])
    if k == 0:
        r = math.sqrt(1.0 + tr)
        s = 0.5 / r
        q = np.array([0.5 * r, (R[2, 1] - R[1, 2]) * s, (R[0, 2] - R[2, 0]) * s, (R[1, 0] - R[0, 1]) * s])
    elif k == 1:
        r = math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        s = 0.5 / r
        q = np.array([(R[2, 1] - R[1, 2]) * s, 0.5 * r, (R[0, 1] + R[1, 0]) * s, (R[0, 2] + R[2, 0]) * s])
    elif k == 2:
        r = math.sqrt(1.0 - R[0, 0] + R[1, 1] - R[2, 2])
        s = 0.5 / r
        q = np.array([(R[0, 2] - R[2, 0]) * s, (R[0, 1] + R[1, 0]) * s, 0.5 * r, (R[1, 2] + R[2, 1]) * s])
    else:
        r = math.sqrt(1.0 - R[0, 0] - R[1, 1] + R[2, 2])
        s = 0.5 / r
        q = np.array([(R[1, 0] - R[0, 1]) * s, (R[0, 2] + R[2, 0]) * s, (R[1, 2] + R[2, 1]) * s, 0.5 * r])
    q = q / math.sqrt(float(q @ q))
    return canonical_sign(q, prev)


def canonical_sign(q: Array, prev: Array | None = None) -> Array:
    """Pick the representative of ``±q`` per the package sign policy."""
    if prev is not None:
        return q if np.dot(q, prev) >= 0.0 else -q
    if q[0] > 0.0:
        return q
    if q[0] < 0.0:
        return -q
    for c in q[1:]:
        if c != 0.0:
            return q if c > 0.0 else -q
    return q


def hat(v: Array) -> Array:
    """Skew matrix with ``hat(v) @ w == cross(v, w)``."""
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def vee(M: Array, tol: float = SKEW_TOL) -> Array:
    """Inverse of :func:`hat`; the skew part is used when ``M`` is nearly skew."""
    M = np.asarray(M, dtype=float)
    asym = np.abs(M + M.T).max()
    if asym > tol:
        raise ValueError(f"matrix is not skew-symmetric (max |M + Mᵀ| = {asym:.3g})")
    return np.array([M[2, 1] - M[1, 2], M[0, 2] - M[2, 0], M[1, 0] - M[0, 1]]) * 0.5


def euler_rate_matrix(eta: Array, eps: float = EULER_EPS) -> Array:
    """``H(η)`` mapping body rates to Euler-angle rates, ``η̇ = H(η) ω``."""
    phi, theta = eta[0], eta[1]
    if abs(theta) >= math.pi / 2 - eps:
        raise EulerSingularityError(f"pitch {theta!r} rad is within {eps} of ±π/2")
    sp, cp = math.sin(phi), math.cos(phi)
    ct, tt = math.cos(theta), math.tan(theta)
    return np.array([
        [1.0, sp * tt, cp * tt],
        [0.0, cp, -sp],
        [0.0, sp / ct, cp / ct],
    ])


def quat_to_euler(q: Array) -> tuple[Array, bool]:
    """Return ``((roll, pitch, yaw), gimbal_adjacent)``.

    ``gimbal_adjacent`` is set when ``|pitch| > π/2 - 1e-3``; no exception is
    raised so the caller decides what a near-singular attitude means.
    """
    R = quat_to_rotmat(q)
    theta = math.atan2(-R[2, 0], math.hypot(R[0, 0], R[1, 0]))
    phi = math.atan2(R[2, 1], R[2, 2])
    psi = math.atan2(R[1, 0], R[0, 0])
    eta = np.array([phi, theta, psi])
    return eta, abs(theta) > math.pi / 2 - GIMBAL_FLAG_MARGIN


def euler_to_quat(eta: Array) -> Array:
    phi, theta, psi = eta
    cr, sr = math.cos(phi / 2), math.sin(phi / 2)
    cp, sp = math.cos(theta / 2), math.sin(theta / 2)
    cy, sy = math.cos(psi / 2), math.sin(psi / 2)
    return np.array([
        cr * cp * cy + sr * sp * sy,
        sr * cp * cy - cr * sp * sy,
        cr * sp * cy + sr * cp * sy,
        cr * cp * sy - sr * sp * cy,
    ])


def wrap_angle(a: float) -> float:
    """Wrap to (-π, π]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


def rotation_angle(q: Array) -> float:
    """Geodesic angle of the rotation represented by ``q`` (0..π)."""
    return 2.0 * math.atan2(math.sqrt(q[1] * q[1] + q[2] * q[2] + q[3] * q[3]), abs(q[0]))
