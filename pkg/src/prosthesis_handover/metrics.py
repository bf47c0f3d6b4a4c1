"""Evaluation metrics over joint trajectories and condition comparison."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .kinematics import as_joint_vector
from .mobility import ImpairmentModel, compensation_cost
from .trajectory import JointTrajectory

METRIC_NAMES = ("T_f", "psi_bar", "psi_interaction", "J", "wrist_excursion_max")
ONSET_SPEED_DEG = 2.0


class MetricInputError(ValueError):
    pass


@dataclass(frozen=True)
class MetricReport:
    T_f: float
    psi_bar: float
    psi_interaction: float
    J: float
    wrist_excursion_max: float  # degrees
    K_f: int
    label: str = ""

    def __post_init__(self):
        for name in METRIC_NAMES:
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise MetricInputError(f"{name} must be finite and >= 0, got {v}")
        if self.K_f < 2:
            raise MetricInputError(f"K_f must be >= 2, got {self.K_f}")

    def as_dict(self) -> dict:
        return asdict(self)


def _samples(traj) -> np.ndarray:
    q = traj.q if isinstance(traj, JointTrajectory) else np.asarray(traj, dtype=float)
    if q.ndim != 2 or q.shape[0] == 0:
        raise MetricInputError("trajectory is empty")
    return q


def mean_compensation_cost(traj, q_n, w: ImpairmentModel) -> float:
    q = _samples(traj)
    r = w.complement * (q - as_joint_vector(q_n))
    return float(np.mean(np.einsum("ij,ij->i", r, r)))


def interaction_cost(q_final, q_n, w: ImpairmentModel) -> float:
    return compensation_cost(q_final, q_n, w)


def joint_jerk(traj: JointTrajectory) -> np.ndarray:
    """Third time derivative by repeated second-order finite differences.

    Interior points use central differences, the two ends one-sided
    second-order stencils; polynomials up to degree 2 give zero jerk.
    Differencing runs on unit spacing and is scaled once at the end, which
    keeps exactly representable inputs free of rounding.
    """
    if len(traj) < 4:
        raise MetricInputError(f"jerk needs at least 4 samples, got {len(traj)}")
    d = traj.q - traj.q[0]
    for _ in range(3):
        d = np.gradient(d, axis=0, edge_order=2)
    return d / traj.dt**3


def jerk_cost(traj: JointTrajectory) -> float:
    jerk = joint_jerk(traj)
    return float(traj.dt * np.sum(jerk * jerk))


def wrist_excursion(traj, q_ref, blocked_indices) -> float:
    """Largest norm of blocked-joint deviation from ``q_ref``, in degrees."""
    idx = list(blocked_indices)
    if not idx:
        raise MetricInputError("blocked joint set is empty")
    q = _samples(traj)
    dev = q[:, idx] - as_joint_vector(q_ref)[idx]
    return float(np.rad2deg(np.max(np.linalg.norm(dev, axis=1))))


def movement_onset(traj: JointTrajectory, threshold_deg_s: float = ONSET_SPEED_DEG) -> int:
    """Index of the first sample whose joint speed exceeds the threshold.

    Returns 0 when no sample moves faster than the threshold.
    """
    vel = np.gradient(traj.q, traj.dt, axis=0)
    speed = np.rad2deg(np.linalg.norm(vel, axis=1))
    hits = np.flatnonzero(speed > threshold_deg_s)
    return int(hits[0]) if hits.size else 0


def evaluate(traj: JointTrajectory, q_n, w: ImpairmentModel, *, q_ref=None, T_f=None, label="") -> MetricReport:
    """All metrics for one approach.  ``T_f`` defaults to the trajectory span."""
    blocked = w.blocked_indices
    exc = wrist_excursion(traj, q_ref if q_ref is not None else traj.q[0], blocked) if blocked else 0.0
    return MetricReport(
        T_f=float(traj.duration if T_f is None else T_f),
        psi_bar=mean_compensation_cost(traj, q_n, w),
        psi_interaction=interaction_cost(traj.q[-1], q_n, w),
        J=jerk_cost(traj),
        wrist_excursion_max=exc,
        K_f=len(traj),
        label=label,
    )


@dataclass(frozen=True)
class ComparisonSummary:
    mean_percent_change: dict  # metric -> float or None
    per_scenario: dict  # label -> metric -> float or None
    undefined: list = field(default_factory=list)  # (label, metric) with A == 0

    def as_dict(self) -> dict:
        return {
            "mean_percent_change": self.mean_percent_change,
            "per_scenario": self.per_scenario,
            "undefined": [list(u) for u in self.undefined],
        }


def percent_change(a: float, b: float):
    if a == 0:
        return None
    return 100.0 * (b - a) / a


def compare_conditions(a, b, metrics=METRIC_NAMES) -> ComparisonSummary:
    """Percent change of condition B relative to A, matched by report label."""
    if not a or not b:
        raise MetricInputError("both conditions need at least one report")
    ma = {r.label: r for r in a}
    mb = {r.label: r for r in b}
    if len(ma) != len(a) or len(mb) != len(b):
        raise MetricInputError("duplicate scenario labels")
    if set(ma) != set(mb):
        raise MetricInputError(f"scenario sets differ: {sorted(set(ma) ^ set(mb))}")
    per, undefined = {}, []
    for label in sorted(ma):
        row = {}
        for m in metrics:
            pc = percent_change(getattr(ma[label], m), getattr(mb[label], m))
            if pc is None:
                undefined.append((label, m))
            row[m] = pc
        per[label] = row
    means = {}
    for m in metrics:
        vals = [per[k][m] for k in per if per[k][m] is not None]
        means[m] = float(np.mean(vals)) if vals else None
    return ComparisonSummary(means, per, undefined)
