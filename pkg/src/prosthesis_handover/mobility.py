"""Residual mobility of the user: impairment weights, impaired range of
motion, compensation cost and the posture objective."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .kinematics import N_JOINTS, as_joint_vector

log = logging.getLogger(__name__)


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class ImpairmentModel:
    """Diagonal of the impairment matrix.

    ``weights[i]`` is the fraction of mobility lost at joint i: 1 for a
    blocked joint, 0 for a fully healthy one.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.shape != (N_JOINTS,):
            raise ParameterError(f"impairment needs {N_JOINTS} weights, got shape {w.shape}")
        if not np.all(np.isfinite(w)) or np.any(w < 0) or np.any(w > 1):
            raise ParameterError(f"impairment weights must lie in [0, 1], got {w}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def healthy(cls) -> "ImpairmentModel":
        return cls(np.zeros(N_JOINTS))

    @classmethod
    def blocked(cls, indices) -> "ImpairmentModel":
        w = np.zeros(N_JOINTS)
        w[list(indices)] = 1.0
        return cls(w)

    @property
    def complement(self) -> np.ndarray:
        return 1.0 - self.weights

    @property
    def blocked_indices(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.weights == 1.0))


@dataclass(frozen=True)
class RoMBounds:
    q_min: np.ndarray
    q_max: np.ndarray
    clamped: tuple[int, ...] = ()

    def __post_init__(self):
        lo = as_joint_vector(self.q_min).copy()
        hi = as_joint_vector(self.q_max).copy()
        if np.any(lo > hi):
            bad = np.flatnonzero(lo > hi).tolist()
            raise ParameterError(f"q_min > q_max at joints {bad}")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "q_min", lo)
        object.__setattr__(self, "q_max", hi)

    def contains(self, q, tol: float = 0.0) -> bool:
        q = np.asarray(q, dtype=float)
        return bool(np.all(q >= self.q_min - tol) and np.all(q <= self.q_max + tol))

    def clip(self, q) -> np.ndarray:
        return np.clip(q, self.q_min, self.q_max)

    @property
    def width(self) -> np.ndarray:
        return self.q_max - self.q_min


@dataclass(frozen=True)
class PostureContext:
    """Measured posture, natural posture and the two tuning parameters."""

    q_m: np.ndarray
    q_n: np.ndarray
    alpha: float = 0.10
    zeta: float = np.deg2rad(5.0)

    def __post_init__(self):
        if not (self.alpha >= 0 and np.isfinite(self.alpha)):
            raise ParameterError(f"alpha must be >= 0, got {self.alpha}")
        if not (self.zeta >= 0 and np.isfinite(self.zeta)):
            raise ParameterError(f"zeta must be >= 0, got {self.zeta}")
        for name in ("q_m", "q_n"):
            q = as_joint_vector(getattr(self, name)).copy()
            q.setflags(write=False)
            object.__setattr__(self, name, q)


def compensation_cost(q, q_n, w: ImpairmentModel) -> float:
    """Squared deviation of the functioning joints from the natural posture."""
    r = w.complement * (np.asarray(q, dtype=float) - q_n)
    return float(r @ r)


def impaired_bounds(healthy: RoMBounds, w: ImpairmentModel, q_m, zeta: float) -> RoMBounds:
    """Shrink the healthy range of motion towards the measured posture.

    A blocked joint (w=1) keeps only ``q_m +/- zeta``; a healthy one keeps
    its full range.  ``q_m`` outside the healthy range is clamped first and
    the offending joints are listed in ``clamped``; the resulting interval is
    also clamped to the healthy range.
    """
    if zeta < 0 or not np.isfinite(zeta):
        raise ParameterError(f"zeta must be >= 0, got {zeta}")
    q_m = as_joint_vector(q_m)
    outside = (q_m < healthy.q_min) | (q_m > healthy.q_max)
    clamped = tuple(int(i) for i in np.flatnonzero(outside))
    if clamped:
        log.warning("measured posture outside healthy range at joints %s; clamped", clamped)
        q_m = healthy.clip(q_m)
    W = w.weights
    # convex-combination form: exact at W = 0 and W = 1
    lo = (1.0 - W) * healthy.q_min + W * (q_m - zeta)
    hi = (1.0 - W) * healthy.q_max + W * (q_m + zeta)
    lo_c = np.maximum(lo, healthy.q_min)
    hi_c = np.minimum(hi, healthy.q_max)
    edge = np.flatnonzero((lo_c != lo) | (hi_c != hi))
    if edge.size:
        clamped = tuple(sorted(set(clamped) | {int(i) for i in edge}))
    return RoMBounds(lo_c, hi_c, clamped)


def objective(q, ctx: PostureContext, w: ImpairmentModel) -> float:
    q = np.asarray(q, dtype=float)
    a = w.weights * (q - ctx.q_m)
    b = w.complement * (q - ctx.q_n)
    return float(a @ a + ctx.alpha * (b @ b))


def objective_gradient(q, ctx: PostureContext, w: ImpairmentModel) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    W = w.weights
    C = w.complement
    return 2.0 * W * W * (q - ctx.q_m) + 2.0 * ctx.alpha * C * C * (q - ctx.q_n)


def unconstrained_minimizer(ctx: PostureContext, w: ImpairmentModel) -> np.ndarray:
    """Closed-form argmin of the diagonal quadratic objective.

    Joints with zero curvature (w=0 and alpha=0) are left at ``q_n``.
    """
    a = w.weights**2
    b = ctx.alpha * w.complement**2
    den = a + b
    out = np.array(ctx.q_n, dtype=float)
    nz = den > 0
    out[nz] = (a[nz] * ctx.q_m[nz] + b[nz] * ctx.q_n[nz]) / den[nz]
    return out
