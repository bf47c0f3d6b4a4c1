"""Robot Cartesian handover path and simulated user approach motion."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation, Slerp

from .kinematics import N_JOINTS, as_joint_vector


class TrajectoryError(ValueError):
    pass


@dataclass(frozen=True)
class Pose:
    position: np.ndarray
    quaternion: np.ndarray  # (x, y, z, w), unit norm

    def __post_init__(self):
        p = np.array(self.position, dtype=float)
        q = np.array(self.quaternion, dtype=float)
        if p.shape != (3,) or q.shape != (4,):
            raise TrajectoryError("pose needs a 3-vector position and an xyzw quaternion")
        nq = np.linalg.norm(q)
        if not np.isfinite(nq) or nq == 0:
            raise TrajectoryError("quaternion must be non-zero")
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "quaternion", q / nq)

    @classmethod
    def from_matrix(cls, mat) -> "Pose":
        mat = np.asarray(mat, dtype=float)
        return cls(mat[:3, 3], Rotation.from_matrix(mat[:3, :3]).as_quat())


def clamped_uniform_knots(n_ctrl: int, degree: int) -> np.ndarray:
    n_inner = n_ctrl - degree - 1
    if n_inner < 0:
        raise TrajectoryError("need at least degree + 1 control points")
    inner = np.arange(1, n_inner + 1) / (n_inner + 1)
    return np.concatenate([np.zeros(degree + 1), inner, np.ones(degree + 1)])


def find_span(u: float, knots: np.ndarray, degree: int, side: str = "right") -> int:
    """Index k with knots[k] <= u < knots[k+1] ("right") or knots[k] < u <= knots[k+1] ("left")."""
    n_ctrl = len(knots) - degree - 1
    if u >= knots[n_ctrl]:
        return n_ctrl - 1
    if u <= knots[degree]:
        return degree
    k = int(np.searchsorted(knots, u, side=side)) - 1
    return min(max(k, degree), n_ctrl - 1)


def de_boor(u: float, ctrl: np.ndarray, knots: np.ndarray, degree: int, span: int | None = None):
    """Evaluate a B-spline at ``u`` with de Boor's recursion.

    ``span`` selects the polynomial piece explicitly, which lets callers
    evaluate both one-sided limits at an interior knot.
    """
    ctrl = np.asarray(ctrl, dtype=float)
    k = find_span(u, knots, degree) if span is None else span
    d = [ctrl[j + k - degree].copy() for j in range(degree + 1)]
    for r in range(1, degree + 1):
        for j in range(degree, r - 1, -1):
            i = j + k - degree
            den = knots[i + degree + 1 - r] - knots[i]
            a = 0.0 if den == 0 else (u - knots[i]) / den
            # increment form keeps coincident control points exact
            d[j] = d[j - 1] + a * (d[j] - d[j - 1])
    return d[degree]


def derivative_spline(ctrl: np.ndarray, knots: np.ndarray, degree: int):
    """Control points, knots and degree of the spline's first derivative."""
    ctrl = np.asarray(ctrl, dtype=float)
    n = len(ctrl)
    out = []
    for i in range(n - 1):
        den = knots[i + degree + 1] - knots[i + 1]
        out.append(np.zeros_like(ctrl[0]) if den == 0 else degree * (ctrl[i + 1] - ctrl[i]) / den)
    return np.array(out), knots[1:-1], degree - 1


@dataclass(frozen=True)
class CartesianTrajectory:
    """Clamped B-spline position path with quaternion blending.

    ``progress`` holds the scalar control values (0 -> 1) of the same basis;
    orientation is the slerp of start/goal quaternions at that progress.
    """

    degree: int
    control_points: np.ndarray  # (n, 3)
    progress: np.ndarray  # (n,)
    knots: np.ndarray
    duration: float
    start: Pose
    goal: Pose

    def _u(self, t: float) -> float:
        return min(max(t / self.duration, 0.0), 1.0)

    def position(self, t: float, span: int | None = None) -> np.ndarray:
        u = self._u(t)
        if span is None and u in (0.0, 1.0):
            # clamped knots: the curve passes through the end control points
            return self.control_points[0 if u == 0.0 else -1].copy()
        return de_boor(u, self.control_points, self.knots, self.degree, span)

    def progress_at(self, t: float) -> float:
        return float(de_boor(self._u(t), self.progress, self.knots, self.degree))

    def velocity(self, t: float) -> np.ndarray:
        ctrl, knots, deg = derivative_spline(self.control_points, self.knots, self.degree)
        return de_boor(self._u(t), ctrl, knots, deg) / self.duration

    def orientation(self, t: float) -> np.ndarray:
        s = self.progress_at(t)
        if s <= 0.0:
            return self.start.quaternion.copy()
        if s >= 1.0:
            return self.goal.quaternion.copy()
        rots = Rotation.from_quat(np.vstack([self.start.quaternion, self.goal.quaternion]))
        return Slerp([0.0, 1.0], rots)([s]).as_quat()[0]


def plan_bspline(start: Pose, goal: Pose, duration: float = 3.0, degree: int = 5) -> CartesianTrajectory:
    """Clamped uniform B-spline from ``start`` to ``goal`` at rest on both ends.

    The first and last ``(degree + 1) // 2`` control points repeat the end
    poses, so velocity (and for degree 5 acceleration) vanishes there; two
    evenly spaced interior points carry the motion.
    """
    if degree not in (3, 5):
        raise TrajectoryError(f"degree must be 3 or 5, got {degree}")
    if not (duration > 0 and math.isfinite(duration)):
        raise TrajectoryError(f"duration must be positive, got {duration}")
    n_ctrl = degree + 3
    rep = (degree + 1) // 2
    n_mid = n_ctrl - 2 * rep
    progress = np.concatenate(
        [np.zeros(rep), np.arange(1, n_mid + 1) / (n_mid + 1), np.ones(rep)]
    )
    delta = goal.position - start.position
    ctrl = start.position + progress[:, None] * delta
    # exact endpoints regardless of rounding in start + 1 * delta
    ctrl[-rep:] = goal.position
    return CartesianTrajectory(
        degree=degree,
        control_points=ctrl,
        progress=progress,
        knots=clamped_uniform_knots(n_ctrl, degree),
        duration=float(duration),
        start=start,
        goal=goal,
    )


def _sample_times(duration: float, dt: float) -> np.ndarray:
    if not (dt > 0 and math.isfinite(dt)):
        raise TrajectoryError(f"dt must be positive, got {dt}")
    steps = max(1, math.ceil(duration / dt - 1e-9))
    return np.arange(steps + 1) * dt


def sample_cartesian(traj: CartesianTrajectory, dt: float):
    """Uniformly timed samples ``(times, positions (K,3), quaternions (K,4))``.

    Samples run from 0 in steps of ``dt``; when the duration is not a
    multiple of ``dt`` the last sample lies past it and holds the goal.
    """
    times = _sample_times(traj.duration, dt)
    pos = np.array([traj.position(t) for t in times])
    quat = np.array([traj.orientation(t) for t in times])
    return times, pos, quat


@dataclass(frozen=True)
class JointTrajectory:
    times: np.ndarray
    q: np.ndarray  # (K, N_JOINTS) radians
    dt: float
    resampled: bool = False  # set when built by interpolating a non-uniform log

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        q = np.asarray(self.q, dtype=float)
        if q.ndim != 2 or q.shape[1] != N_JOINTS or q.shape[0] != times.shape[0]:
            raise TrajectoryError(f"expected ({times.shape[0]}, {N_JOINTS}) joint samples, got {q.shape}")
        if times.size < 2:
            raise TrajectoryError("a trajectory needs at least 2 samples")
        if not (self.dt > 0):
            raise TrajectoryError("dt must be positive")
        steps = np.diff(times)
        if np.max(np.abs(steps - self.dt)) > 1e-9 * max(1.0, abs(times[-1])):
            raise TrajectoryError("samples must be uniformly spaced by dt")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "dt", float(self.dt))

    def __len__(self):
        return self.q.shape[0]

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])


def min_jerk_profile(tau):
    tau = np.clip(tau, 0.0, 1.0)
    return tau**3 * (10.0 - 15.0 * tau + 6.0 * tau**2)


def min_jerk_joint_motion(q_start, q_goal, duration: float, dt: float) -> JointTrajectory:
    """Per-joint quintic from rest to rest (zero velocity and acceleration)."""
    q_start = as_joint_vector(q_start)
    q_goal = as_joint_vector(q_goal)
    if not (duration > 0 and math.isfinite(duration)):
        raise TrajectoryError(f"duration must be positive, got {duration}")
    times = _sample_times(duration, dt)
    s = min_jerk_profile(times / duration)
    q = q_start + s[:, None] * (q_goal - q_start)
    q[-1] = q_goal if times[-1] >= duration else q[-1]
    return JointTrajectory(times, q, dt)
