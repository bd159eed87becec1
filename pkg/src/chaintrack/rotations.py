"""Quaternion-backed SO(3) kernel.

Conventions used throughout the package:

* Unit quaternions, Hamilton product, scalar-first storage ``(w, x, y, z)``.
* A ``Rotation`` maps body-frame coordinates into the parent frame,
  ``v_parent = R.apply(v_body)``.
* Rotation vectors are axis times angle in radians; ``log_so3`` returns
  angles in ``[0, pi]``.  At exactly pi the axis sign is chosen so that the
  first nonzero axis component is nonnegative.

The ``quat_*`` functions are vectorised kernels operating on arrays of
shape ``(..., 4)`` / ``(..., 3)``; the ``Rotation`` class is the scalar
value-type API built on top of them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Rotation",
    "skew",
    "exp_so3",
    "log_so3",
    "angular_distance",
    "integrate_gyro",
    "quat_multiply",
    "quat_conjugate",
    "quat_normalize",
    "quat_from_rotvec",
    "quat_to_rotvec",
    "quat_to_matrix",
    "quat_rotate",
    "quat_cumprod",
    "matrix_to_quat",
    "matrix_angles",
]

_SMALL_ANGLE = 1e-4
_PI_BRANCH = 1e-12


def skew(v) -> np.ndarray:
    """Cross-product matrix: ``skew(v) @ w == np.cross(v, w)``.

    Accepts ``(..., 3)`` input and returns ``(..., 3, 3)``.
    """
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    out[..., 0, 1] = -z
    out[..., 0, 2] = y
    out[..., 1, 0] = z
    out[..., 1, 2] = -x
    out[..., 2, 0] = -y
    out[..., 2, 1] = x
    return out


def quat_multiply(a, b) -> np.ndarray:
    """Hamilton product of scalar-first quaternion arrays ``(..., 4)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    w1, x1, y1, z1 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    w2, x2, y2, z2 = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ],
        axis=-1,
    )


def quat_conjugate(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    out = q.copy()
    out[..., 1:] = -out[..., 1:]
    return out


def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def quat_from_rotvec(phi) -> np.ndarray:
    """Exponential map so(3) -> unit quaternion, stable for small angles."""
    phi = np.asarray(phi, dtype=float)
    angle = np.linalg.norm(phi, axis=-1)
    half = 0.5 * angle
    # sin(angle/2)/angle with a Taylor branch below the switch point
    safe = np.where(angle < _SMALL_ANGLE, 1.0, angle)
    k = np.where(angle < _SMALL_ANGLE, 0.5 - angle**2 / 48.0, np.sin(half) / safe)
    out = np.empty(phi.shape[:-1] + (4,))
    out[..., 0] = np.cos(half)
    out[..., 1:] = phi * k[..., None]
    return out


def quat_to_rotvec(q) -> np.ndarray:
    """Logarithm map, inverse of :func:`quat_from_rotvec` for angles < pi.

    Output angle is in ``[0, pi]``.  At angle pi (shortest-path ambiguity)
    the axis is flipped, if needed, so its first nonzero component is
    nonnegative.
    """
    q = np.asarray(q, dtype=float)
    q = np.where(q[..., 0:1] < 0.0, -q, q)  # canonical hemisphere, w >= 0
    w = q[..., 0]
    xyz = q[..., 1:]
    n = np.linalg.norm(xyz, axis=-1)
    angle = 2.0 * np.arctan2(n, w)
    safe_n = np.where(n < _SMALL_ANGLE, 1.0, n)
    safe_w = np.where(w < _SMALL_ANGLE, 1.0, w)
    k_small = 2.0 / safe_w * (1.0 - (n / safe_w) ** 2 / 3.0)
    k = np.where(n < _SMALL_ANGLE, k_small, angle / safe_n)
    out = xyz * k[..., None]

    # deterministic axis at the pi branch
    at_pi = w < _PI_BRANCH
    if np.any(at_pi):
        axis = xyz / safe_n[..., None]
        c0, c1, c2 = axis[..., 0], axis[..., 1], axis[..., 2]
        lead = np.where(
            np.abs(c0) > _PI_BRANCH,
            np.sign(c0),
            np.where(np.abs(c1) > _PI_BRANCH, np.sign(c1), np.sign(c2)),
        )
        flipped = axis * np.where(lead < 0, -1.0, 1.0)[..., None]
        out = np.where(at_pi[..., None], flipped * angle[..., None], out)
    return out


def quat_to_matrix(q) -> np.ndarray:
    """Unit quaternion array ``(..., 4)`` to rotation matrices ``(..., 3, 3)``."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    out = np.empty(q.shape[:-1] + (3, 3))
    xx, yy, zz = x * x, y * y, z * z
    wx, wy, wz = w * x, w * y, w * z
    xy, xz, yz = x * y, x * z, y * z
    out[..., 0, 0] = 1.0 - 2.0 * (yy + zz)
    out[..., 0, 1] = 2.0 * (xy - wz)
    out[..., 0, 2] = 2.0 * (xz + wy)
    out[..., 1, 0] = 2.0 * (xy + wz)
    out[..., 1, 1] = 1.0 - 2.0 * (xx + zz)
    out[..., 1, 2] = 2.0 * (yz - wx)
    out[..., 2, 0] = 2.0 * (xz - wy)
    out[..., 2, 1] = 2.0 * (yz + wx)
    out[..., 2, 2] = 1.0 - 2.0 * (xx + yy)
    return out


def quat_rotate(q, v) -> np.ndarray:
    """Rotate vectors ``(..., 3)`` by quaternions ``(..., 4)`` (body to parent)."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    u = q[..., 1:]
    w = q[..., 0:1]
    uv = np.cross(u, v)
    return v + 2.0 * (w * uv + np.cross(u, uv))


def quat_cumprod(dq) -> np.ndarray:
    """Inclusive prefix products ``p[k] = dq[0] * ... * dq[k]``.

    Uses a doubling scan, so all estimators and the simulator that share this
    kernel produce bit-identical orientation sequences for identical inputs.
    """
    p = np.array(dq, dtype=float, copy=True)
    n = p.shape[0]
    shift = 1
    while shift < n:
        p[shift:] = quat_multiply(p[:-shift], p[shift:])
        shift *= 2
    return quat_normalize(p)


def matrix_to_quat(R) -> np.ndarray:
    """Single 3x3 rotation matrix to a scalar-first unit quaternion."""
    R = np.asarray(R, dtype=float)
    m00, m01, m02 = R[0]
    m10, m11, m12 = R[1]
    m20, m21, m22 = R[2]
    tr = m00 + m11 + m22
    if tr > 0.0:
        s = 2.0 * np.sqrt(tr + 1.0)
        q = np.array([0.25 * s, (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s])
    elif m00 >= m11 and m00 >= m22:
        s = 2.0 * np.sqrt(1.0 + m00 - m11 - m22)
        q = np.array([(m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s])
    elif m11 >= m22:
        s = 2.0 * np.sqrt(1.0 + m11 - m00 - m22)
        q = np.array([(m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s])
    else:
        s = 2.0 * np.sqrt(1.0 + m22 - m00 - m11)
        q = np.array([(m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s])
    return quat_normalize(q)


def matrix_angles(Ra, Rb) -> np.ndarray:
    """Geodesic angle between rotation-matrix stacks ``(..., 3, 3)``.

    Computes ``arccos((trace(Ra^T Rb) - 1) / 2)`` with the trace argument
    clamped to ``[-1, 1]``.
    """
    Ra = np.asarray(Ra, dtype=float)
    Rb = np.asarray(Rb, dtype=float)
    tr = np.einsum("...ij,...ij->...", Ra, Rb)
    return np.arccos(np.clip(0.5 * (tr - 1.0), -1.0, 1.0))


@dataclass(frozen=True)
class Rotation:
    """An element of SO(3), stored as a unit quaternion.

    The stored quaternion is normalized and sign-canonicalized (``w >= 0``)
    on construction and marked read-only; instances are immutable values and
    safe to share between threads.
    """

    q: np.ndarray

    def __post_init__(self):
        q = quat_normalize(np.asarray(self.q, dtype=float).reshape(4))
        if q[0] < 0.0:
            q = -q
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @staticmethod
    def identity() -> "Rotation":
        return Rotation(np.array([1.0, 0.0, 0.0, 0.0]))

    @staticmethod
    def from_quat(q) -> "Rotation":
        return Rotation(np.asarray(q, dtype=float))

    @staticmethod
    def from_matrix(R) -> "Rotation":
        return Rotation(matrix_to_quat(R))

    @staticmethod
    def from_rotvec(phi) -> "Rotation":
        return Rotation(quat_from_rotvec(np.asarray(phi, dtype=float).reshape(3)))

    @staticmethod
    def random(rng: np.random.Generator) -> "Rotation":
        """Uniformly distributed random rotation."""
        return Rotation(rng.standard_normal(4))

    def as_quat(self) -> np.ndarray:
        return self.q.copy()

    def as_matrix(self) -> np.ndarray:
        return quat_to_matrix(self.q)

    def as_rotvec(self) -> np.ndarray:
        return quat_to_rotvec(self.q)

    def apply(self, v) -> np.ndarray:
        """Rotate body-frame vectors ``(..., 3)`` into the parent frame."""
        return quat_rotate(self.q, v)

    def apply_inverse(self, v) -> np.ndarray:
        return quat_rotate(quat_conjugate(self.q), v)

    def inverse(self) -> "Rotation":
        return Rotation(quat_conjugate(self.q))

    def __matmul__(self, other: "Rotation") -> "Rotation":
        return Rotation(quat_multiply(self.q, other.q))


def exp_so3(phi) -> Rotation:
    """Rotation about axis ``phi / |phi|`` by angle ``|phi|`` radians."""
    return Rotation.from_rotvec(phi)


def log_so3(R: Rotation) -> np.ndarray:
    """Rotation vector of ``R``; inverse of :func:`exp_so3` below angle pi."""
    return quat_to_rotvec(R.q)


def angular_distance(Ra: Rotation, Rb: Rotation) -> float:
    """Smallest angle, in radians, rotating ``Ra`` onto ``Rb``.

    Symmetric and invariant under common left or right multiplication.
    """
    return float(matrix_angles(Ra.as_matrix()[None], Rb.as_matrix()[None])[0])


def integrate_gyro(R: Rotation, omega, dt: float) -> Rotation:
    """One zero-order-hold gyro step: ``R * exp_so3(omega * dt)``."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    omega = np.asarray(omega, dtype=float).reshape(3)
    return Rotation(quat_multiply(R.q, quat_from_rotvec(omega * dt)))
