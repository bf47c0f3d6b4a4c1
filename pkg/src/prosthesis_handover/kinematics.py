"""Trunk + arm kinematic chain of the prosthesis user.

Eight revolute joints, standard (distal) Denavit-Hartenberg convention:

    T_i = Rz(theta_i) Tz(d_i) Tx(a_i) Rx(alpha_i)

World frame: pelvis at the origin, +z up, user facing +x, +y to the user's
left.  The modelled arm is the right one, so the shoulder sits at -y.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from numba import njit

N_JOINTS = 8

JOINT_NAMES = (
    "spine_flexion",
    "shoulder_abduction",
    "shoulder_flexion",
    "shoulder_rotation",
    "elbow_flexion",
    "forearm_pronation",
    "wrist_flexion",
    "wrist_deviation",
)

LANDMARKS = ("pelvis", "spine", "shoulder", "elbow", "wrist", "hand")

# landmark -> index into the (N_JOINTS + 1) stack of chain frames
_LANDMARK_FRAME = {
    "pelvis": 0,
    "spine": 1,
    "shoulder": 3,
    "elbow": 4,
    "wrist": 6,
    "hand": 8,
}

# DH frame 0 expressed in the world: x0 up the spine, y0 forward, z0 lateral
# (the spine flexion axis).
BASE_ROTATION = np.array(
    [
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0],
    ]
)

# Segment ratios to body height.  Only the z components of the three
# segments are dominant (they carry the segment length); spine y is the
# lateral shoulder offset.  Sources: Winter-style anthropometric tables.
DEFAULT_RATIOS = {
    "spine": (0.0, 0.129, 0.288),
    "humerus": (0.0, 0.0, 0.186),
    "radius": (0.0, 0.0, 0.146),
}

DOMINANT_AXIS = 2


class DimensionError(ValueError):
    """Body dimensions that cannot produce a valid chain."""


class AnthropometryError(ValueError):
    """Subject height or ratio table outside the supported range."""


def _vec3(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (3,):
        raise DimensionError(f"{name} must be a 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionError(f"{name} has non-finite components: {arr}")
    return arr


@dataclass(frozen=True)
class BodyDimensions:
    """Segment vectors (m) with components ordered (x, y, z)."""

    spine: np.ndarray
    humerus: np.ndarray
    radius: np.ndarray

    def __post_init__(self):
        for name in ("spine", "humerus", "radius"):
            arr = _vec3(getattr(self, name), name)
            if arr[DOMINANT_AXIS] < 0:
                raise DimensionError(
                    f"{name} dominant (z) length must be >= 0, got {arr[DOMINANT_AXIS]}"
                )
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def zeros(cls) -> "BodyDimensions":
        return cls(np.zeros(3), np.zeros(3), np.zeros(3))

    def dominant_lengths(self) -> np.ndarray:
        return np.array(
            [self.spine[DOMINANT_AXIS], self.humerus[DOMINANT_AXIS], self.radius[DOMINANT_AXIS]]
        )


@dataclass(frozen=True)
class DHRow:
    joint_index: int
    theta_offset: float
    a: float
    alpha: float
    d: float


@dataclass(frozen=True)
class RigidTransform:
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        rot = np.array(self.rotation, dtype=float)
        trans = np.array(self.translation, dtype=float)
        if rot.shape != (3, 3) or trans.shape != (3,):
            raise ValueError("rotation must be 3x3 and translation a 3-vector")
        if not np.allclose(rot @ rot.T, np.eye(3), atol=1e-9) or np.linalg.det(rot) < 0:
            raise ValueError("rotation must be orthonormal with det +1")
        rot.setflags(write=False)
        trans.setflags(write=False)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", trans)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls()

    @classmethod
    def from_matrix(cls, mat: np.ndarray) -> "RigidTransform":
        mat = np.asarray(mat, dtype=float)
        return cls(mat[:3, :3], mat[:3, 3])

    def as_matrix(self) -> np.ndarray:
        out = np.eye(4)
        out[:3, :3] = self.rotation
        out[:3, 3] = self.translation
        return out

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """Return ``self * other`` (apply ``other`` in this frame)."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )


@dataclass(frozen=True)
class KinematicModel:
    dims: BodyDimensions
    rows: tuple[DHRow, ...]
    base: np.ndarray

    @property
    def total_length(self) -> float:
        """Sum of all link offsets; an upper bound on any frame's reach."""
        return float(sum(abs(r.a) + abs(r.d) for r in self.rows))


@dataclass(frozen=True)
class SegmentPoses:
    """World poses (4x4 homogeneous) of the body landmarks.

    ``frames`` keeps the raw DH frames 0..8; ``spine`` is the top of the
    spine on the body midline (frame 1 without the lateral shoulder offset).
    """

    frames: np.ndarray
    spine: np.ndarray

    def pose(self, landmark: str) -> np.ndarray:
        if landmark == "spine":
            return self.spine
        return self.frames[_LANDMARK_FRAME[landmark]]

    def position(self, landmark: str) -> np.ndarray:
        return self.pose(landmark)[:3, 3]

    def positions(self) -> np.ndarray:
        """(len(LANDMARKS), 3) positions in LANDMARKS order."""
        return np.array([self.position(name) for name in LANDMARKS])


def build_model(dims: BodyDimensions) -> KinematicModel:
    """Fill the DH table of the trunk+arm chain with the given dimensions."""
    if not isinstance(dims, BodyDimensions):
        raise DimensionError("dims must be a BodyDimensions instance")
    ls, lh, lr = dims.spine, dims.humerus, dims.radius
    half_pi = math.pi / 2
    rows = (
        DHRow(1, 0.0, ls[2], -half_pi, -ls[1]),
        DHRow(2, 0.0, 0.0, half_pi, -ls[0]),
        DHRow(3, half_pi, 0.0, half_pi, 0.0),
        DHRow(4, -half_pi, -lh[0], half_pi, -lh[2]),
        DHRow(5, math.pi, 0.0, half_pi, -lh[1]),
        DHRow(6, half_pi, -lr[1], half_pi, -lr[2]),
        DHRow(7, half_pi, 0.0, half_pi, -lr[0]),
        DHRow(8, 0.0, 0.0, 0.0, 0.0),
    )
    rows = tuple(
        DHRow(r.joint_index, r.theta_offset, float(r.a) + 0.0, r.alpha, float(r.d) + 0.0)
        for r in rows
    )
    base = np.eye(4)
    base[:3, :3] = BASE_ROTATION
    base.setflags(write=False)
    return KinematicModel(dims=dims, rows=rows, base=base)


def as_joint_vector(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (N_JOINTS,):
        raise ValueError(f"joint vector must have {N_JOINTS} entries, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValueError("joint vector has non-finite entries")
    return q


def dh_matrix(theta: float, a: float, alpha: float, d: float) -> np.ndarray:
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(alpha), math.sin(alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, a * ct],
            [st, ct * ca, -ct * sa, a * st],
            [0.0, sa, ca, d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def chain_frames(model: KinematicModel, q) -> np.ndarray:
    """World transforms of DH frames 0..8 as a (9, 4, 4) array."""
    q = as_joint_vector(q)
    frames = np.empty((N_JOINTS + 1, 4, 4))
    frames[0] = model.base
    for i, row in enumerate(model.rows):
        frames[i + 1] = frames[i] @ dh_matrix(q[i] + row.theta_offset, row.a, row.alpha, row.d)
    return frames


def forward_kinematics(model: KinematicModel, q) -> SegmentPoses:
    frames = chain_frames(model, q)
    spine = frames[1].copy()
    spine[:3, 3] -= model.rows[0].d * frames[0, :3, 2]
    return SegmentPoses(frames, spine)


def object_pose(model: KinematicModel, q, grasp_offset: RigidTransform | None = None) -> RigidTransform:
    hand = RigidTransform.from_matrix(chain_frames(model, q)[N_JOINTS])
    if grasp_offset is None:
        return hand
    return hand.compose(grasp_offset)


def point_jacobian(frames: np.ndarray, point: np.ndarray, n_active: int) -> np.ndarray:
    """Position Jacobian (3 x N_JOINTS) of a point rigidly attached to frame ``n_active``.

    Joint i turns about the z axis of frame i-1, so column i is
    z_{i-1} x (p - o_{i-1}); joints distal to the carrying frame contribute 0.
    """
    jac = np.zeros((3, N_JOINTS))
    axes = frames[:n_active, :3, 2]
    origins = frames[:n_active, :3, 3]
    jac[:, :n_active] = np.cross(axes, point - origins).T
    return jac


def horizontal_distance(a, b) -> float:
    """Distance between the ground-plane projections of two points."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(math.hypot(a[0] - b[0], a[1] - b[1]))


def scale_from_anthropometry(
    height: float, ratio_table: Mapping[str, object] | None = None
) -> BodyDimensions:
    """Scale segment vectors with body height.

    Every entry of ``ratio_table`` is a 3-vector of height ratios; missing
    segments fall back to :data:`DEFAULT_RATIOS`.
    """
    if not (0.5 < height < 2.5) or not math.isfinite(height):
        raise AnthropometryError(f"height must lie in (0.5, 2.5) m, got {height}")
    table = dict(DEFAULT_RATIOS)
    if ratio_table:
        unknown = set(ratio_table) - set(DEFAULT_RATIOS)
        if unknown:
            raise AnthropometryError(f"unknown segments in ratio table: {sorted(unknown)}")
        table.update(ratio_table)
    vecs = {}
    for name, ratios in table.items():
        r = np.asarray(ratios, dtype=float)
        if r.shape != (3,) or not np.all(np.isfinite(r)):
            raise AnthropometryError(f"ratio for {name} must be 3 finite values")
        if r[DOMINANT_AXIS] < 0:
            raise AnthropometryError(f"dominant ratio for {name} must be >= 0")
        vecs[name] = height * r
    return BodyDimensions(**vecs)


@njit(cache=True)
def _reach_kernel(q, theta_offset, a, cos_alpha, sin_alpha, d, base, grasp):
    # Object and elbow positions with their position Jacobians; the hot path
    # of the posture solvers.  Mirrors chain_frames + point_jacobian.
    frames = np.empty((N_JOINTS + 1, 4, 4))
    frames[0] = base
    step = np.zeros((4, 4))
    step[3, 3] = 1.0
    for i in range(N_JOINTS):
        th = q[i] + theta_offset[i]
        ct = math.cos(th)
        st = math.sin(th)
        step[0, 0] = ct
        step[0, 1] = -st * cos_alpha[i]
        step[0, 2] = st * sin_alpha[i]
        step[0, 3] = a[i] * ct
        step[1, 0] = st
        step[1, 1] = ct * cos_alpha[i]
        step[1, 2] = -ct * sin_alpha[i]
        step[1, 3] = a[i] * st
        step[2, 1] = sin_alpha[i]
        step[2, 2] = cos_alpha[i]
        step[2, 3] = d[i]
        frames[i + 1] = frames[i] @ step
    obj = frames[N_JOINTS] @ grasp
    p_obj = obj[:3, 3].copy()
    p_elb = frames[4, :3, 3].copy()
    j_obj = np.zeros((3, N_JOINTS))
    j_elb = np.zeros((3, N_JOINTS))
    for i in range(N_JOINTS):
        z = frames[i, :3, 2]
        o = frames[i, :3, 3]
        r0 = p_obj[0] - o[0]
        r1 = p_obj[1] - o[1]
        r2 = p_obj[2] - o[2]
        j_obj[0, i] = z[1] * r2 - z[2] * r1
        j_obj[1, i] = z[2] * r0 - z[0] * r2
        j_obj[2, i] = z[0] * r1 - z[1] * r0
        if i < 4:
            r0 = p_elb[0] - o[0]
            r1 = p_elb[1] - o[1]
            r2 = p_elb[2] - o[2]
            j_elb[0, i] = z[1] * r2 - z[2] * r1
            j_elb[1, i] = z[2] * r0 - z[0] * r2
            j_elb[2, i] = z[0] * r1 - z[1] * r0
    return p_obj, j_obj, p_elb, j_elb


class ReachEvaluator:
    """Object/elbow positions and Jacobians for one model and grasp offset."""

    def __init__(self, model: KinematicModel, grasp_offset: RigidTransform | None = None):
        rows = model.rows
        self.args = (
            np.array([r.theta_offset for r in rows]),
            np.array([r.a for r in rows]),
            np.array([math.cos(r.alpha) for r in rows]),
            np.array([math.sin(r.alpha) for r in rows]),
            np.array([r.d for r in rows]),
            np.ascontiguousarray(model.base, dtype=float),
            (grasp_offset or RigidTransform.identity()).as_matrix(),
        )

    def __call__(self, q):
        """Return ``(x_obj, J_obj, x_elbow, J_elbow)``."""
        return _reach_kernel(np.ascontiguousarray(q, dtype=float), *self.args)
