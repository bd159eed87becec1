"""State-space models for a two-segment chain joined by a rotational joint.

Frames and signs:

* Navigation frame is z-up and gravity defaults to ``(0, 0, -9.81)`` m/s^2,
  so a stationary sensor with identity orientation measures a specific force
  of ``(0, 0, +9.81)``.
* ``r_ij`` is the lever arm from sensor i's origin to the joint centre,
  expressed in sensor-i coordinates (likewise ``r_ji`` for sensor j).

Two interchangeable formulations of the joint connection are provided: a
position residual (both sensors must agree on the joint-centre location) and
an acceleration residual (both sensors must agree on the joint-centre
specific force).  ``check_equivalence`` verifies numerically, with a
second-order finite difference, that the acceleration form is the second
time derivative of the position form along a sampled trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .rotations import Rotation, quat_conjugate, quat_rotate

__all__ = [
    "GRAVITY",
    "WorldConfig",
    "JointGeometry",
    "InputSample",
    "SegmentState",
    "RelativeState",
    "SegmentDerivative",
    "RelativeDerivative",
    "joint_center_specific_force",
    "position_constraint",
    "acceleration_constraint",
    "extended_dynamics",
    "relative_dynamics",
    "check_equivalence",
    "lever_acceleration",
]

GRAVITY = np.array([0.0, 0.0, -9.81])

TIME_ALIGNMENT_TOL = 1e-6  # seconds; samples of the two sensors must match


def _vec3(v, name: str) -> np.ndarray:
    out = np.asarray(v, dtype=float).reshape(3)
    if not np.all(np.isfinite(out)):
        raise ValidationError(f"{name} must be finite, got {out}")
    return out


@dataclass(frozen=True)
class WorldConfig:
    """Fixed world parameters; only gravity for now.

    A physical gravity magnitude is 9.7..9.9 m/s^2 but arbitrary vectors are
    accepted for synthetic tests.
    """

    gravity: np.ndarray = field(default_factory=lambda: GRAVITY.copy())

    def __post_init__(self):
        object.__setattr__(self, "gravity", _vec3(self.gravity, "gravity"))


@dataclass(frozen=True)
class JointGeometry:
    """Lever arms from each sensor origin to the shared joint centre."""

    r_ij: np.ndarray
    r_ji: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "r_ij", _vec3(self.r_ij, "r_ij"))
        object.__setattr__(self, "r_ji", _vec3(self.r_ji, "r_ji"))

    @property
    def is_point_joint(self) -> bool:
        """True when both lever arms are zero (joint collapses onto the
        sensor origins); allowed, but the lever terms carry no information."""
        return not (np.any(self.r_ij) or np.any(self.r_ji))


@dataclass(frozen=True)
class InputSample:
    """One IMU sample: specific force, angular velocity and, when available,
    angular acceleration.  ``omega_dot`` is None at stream boundaries where
    the differentiation stencil has no support."""

    t: float
    f: np.ndarray
    omega: np.ndarray
    omega_dot: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "f", _vec3(self.f, "f"))
        object.__setattr__(self, "omega", _vec3(self.omega, "omega"))
        if self.omega_dot is not None:
            object.__setattr__(self, "omega_dot", _vec3(self.omega_dot, "omega_dot"))

    @property
    def has_angular_acceleration(self) -> bool:
        return self.omega_dot is not None


@dataclass(frozen=True)
class SegmentState:
    """Absolute position, velocity and orientation of one sensor."""

    p: np.ndarray
    v: np.ndarray
    R: Rotation

    def __post_init__(self):
        object.__setattr__(self, "p", _vec3(self.p, "p"))
        object.__setattr__(self, "v", _vec3(self.v, "v"))


@dataclass(frozen=True)
class RelativeState:
    """Relative position/velocity of sensor i w.r.t. sensor j (in frame i)
    and the relative orientation mapping frame j into frame i."""

    p_rel: np.ndarray
    v_rel: np.ndarray
    R_rel: Rotation

    def __post_init__(self):
        object.__setattr__(self, "p_rel", _vec3(self.p_rel, "p_rel"))
        object.__setattr__(self, "v_rel", _vec3(self.v_rel, "v_rel"))


@dataclass(frozen=True)
class SegmentDerivative:
    """Time derivative of a SegmentState.  The orientation part is the
    body-frame tangent ``omega``, i.e. ``dR/dt = R [omega x]``."""

    dp: np.ndarray
    dv: np.ndarray
    omega_body: np.ndarray


@dataclass(frozen=True)
class RelativeDerivative:
    """Time derivative of a RelativeState; ``omega_body`` is the body-frame
    tangent of the relative orientation, ``omega_j - R_rel^T omega_i``."""

    dp_rel: np.ndarray
    dv_rel: np.ndarray
    omega_body: np.ndarray


def lever_acceleration(omega, omega_dot, r) -> np.ndarray:
    """Centripetal plus tangential acceleration of the joint centre relative
    to the sensor origin: ``omega x (omega x r) + omega_dot x r``.

    Broadcasts over leading axes; linear in ``r``.
    """
    omega = np.asarray(omega, dtype=float)
    omega_dot = np.asarray(omega_dot, dtype=float)
    r = np.asarray(r, dtype=float)
    return np.cross(omega, np.cross(omega, r)) + np.cross(omega_dot, r)


def joint_center_specific_force(sample: InputSample, r) -> np.ndarray:
    """Specific force of the joint centre as seen by one sensor, in that
    sensor's frame: ``f + (skew(omega)^2 + skew(omega_dot)) r``."""
    if not sample.has_angular_acceleration:
        raise ValidationError(
            f"sample at t={sample.t} has no angular acceleration; cannot "
            "transport the specific force to the joint centre"
        )
    r = _vec3(r, "r")
    return sample.f + lever_acceleration(sample.omega, sample.omega_dot, r)


def position_constraint(si: SegmentState, sj: SegmentState, geom: JointGeometry) -> np.ndarray:
    """Residual of the joint-position connection, in metres.

    Zero iff both sensors place the joint centre at the same navigation-frame
    point: ``p_i + R_i r_ij - p_j - R_j r_ji``.
    """
    return si.p + si.R.apply(geom.r_ij) - sj.p - sj.R.apply(geom.r_ji)


def acceleration_constraint(
    Ri: Rotation,
    Rj: Rotation,
    ui: InputSample,
    uj: InputSample,
    geom: JointGeometry,
    time_tolerance: float = TIME_ALIGNMENT_TOL,
) -> np.ndarray:
    """Residual of the joint-acceleration connection, in m/s^2.

    Zero iff both sensors agree on the navigation-frame specific force of the
    joint centre: ``R_i f_c,i - R_j f_c,j``.
    """
    if abs(ui.t - uj.t) > time_tolerance:
        raise ValidationError(
            f"sensor samples are not time aligned: {ui.t} vs {uj.t} "
            f"(tolerance {time_tolerance})"
        )
    fc_i = joint_center_specific_force(ui, geom.r_ij)
    fc_j = joint_center_specific_force(uj, geom.r_ji)
    return Ri.apply(fc_i) - Rj.apply(fc_j)


def extended_dynamics(s: SegmentState, u: InputSample, w: WorldConfig) -> SegmentDerivative:
    """Right-hand side of the full per-segment model:
    ``dp = v``, ``dv = R f + g``, ``dR = R [omega x]``."""
    return SegmentDerivative(
        dp=s.v.copy(),
        dv=s.R.apply(u.f) + w.gravity,
        omega_body=u.omega.copy(),
    )


def relative_dynamics(s: RelativeState, ui: InputSample, uj: InputSample) -> RelativeDerivative:
    """Right-hand side of the reduced relative-state model.

    ``dp_rel = -omega_i x p_rel + v_rel``,
    ``dv_rel = -omega_i x v_rel + f_i - R_rel f_j``, and the relative
    orientation evolves with body tangent ``omega_j - R_rel^T omega_i``.
    """
    wi = ui.omega
    return RelativeDerivative(
        dp_rel=-np.cross(wi, s.p_rel) + s.v_rel,
        dv_rel=-np.cross(wi, s.v_rel) + ui.f - s.R_rel.apply(uj.f),
        omega_body=uj.omega - s.R_rel.apply_inverse(wi),
    )


def check_equivalence(trajectory, geom: JointGeometry, world: WorldConfig | None = None) -> float:
    """Numerically verify that the acceleration-form connection is the second
    time derivative of the position-form connection along a trajectory.

    For each segment the joint-centre position series ``p + R r`` is
    differentiated twice with a central finite difference and compared
    against ``R f_c + g`` computed from the ideal IMU quantities.  The
    returned value is the maximum norm of the difference over the interior
    samples of both segments; for a consistent trajectory it is limited by
    the O(dt^2) truncation error of the stencil and shrinks accordingly when
    the sampling interval is halved.

    Parameters
    ----------
    trajectory:
        Sampled ground truth with attributes ``t``, ``p_i``, ``q_i``,
        ``omega_i``, ``omega_dot_i``, ``a_i`` (and the ``_j`` variants),
        e.g. a :class:`chaintrack.sim.GroundTruth`.
    geom:
        Lever arms used for the acceleration form.  Passing a geometry that
        differs from the one the trajectory was generated with exposes the
        inconsistency as a nonzero deviation.
    world:
        Gravity convention; defaults to ``WorldConfig()``.
    """
    if world is None:
        world = WorldConfig()
    t = np.asarray(trajectory.t, dtype=float)
    n = t.shape[0]
    if n < 5:
        raise ValidationError(f"trajectory too short for the equivalence check: {n} < 5 samples")
    dt = float(t[1] - t[0])
    g = world.gravity

    worst = 0.0
    for p, q, omega, omega_dot, acc, r in (
        (trajectory.p_i, trajectory.q_i, trajectory.omega_i, trajectory.omega_dot_i, trajectory.a_i, geom.r_ij),
        (trajectory.p_j, trajectory.q_j, trajectory.omega_j, trajectory.omega_dot_j, trajectory.a_j, geom.r_ji),
    ):
        centre = p + quat_rotate(q, np.broadcast_to(r, p.shape))
        fd2 = (centre[2:] - 2.0 * centre[1:-1] + centre[:-2]) / dt**2
        f_body = quat_rotate(quat_conjugate(q), acc - g)
        fc_body = f_body + lever_acceleration(omega, omega_dot, r)
        accel_form = quat_rotate(q, fc_body) + g
        dev = np.linalg.norm(fd2 - accel_form[1:-1], axis=1)
        worst = max(worst, float(dev.max()))
    return worst
