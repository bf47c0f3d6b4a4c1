"""Simulated handover sessions, motion-log ingestion and file export."""
from __future__ import annotations

import csv
import decimal
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .kinematics import LANDMARKS, N_JOINTS, forward_kinematics, object_pose
from .metrics import MetricReport, compare_conditions, evaluate, movement_onset
from .optimizer import (
    InfeasibleScenarioError,
    OptimizationResult,
    constraint_residuals,
    resolve_ik_posture,
    solve_posture,
)
from .mobility import impaired_bounds
from .scenario import Scenario
from .trajectory import (
    CartesianTrajectory,
    JointTrajectory,
    Pose,
    min_jerk_joint_motion,
    plan_bspline,
    sample_cartesian,
)

log = logging.getLogger(__name__)

CONDITIONS = ("HP", "RP")
FRAME_POINTS = LANDMARKS + ("object",)
JOINT_COLUMNS = tuple(f"q{i + 1}_deg" for i in range(N_JOINTS))
FRAME_COLUMNS = (
    ("t_s",)
    + tuple(f"{p}_{c}" for p in FRAME_POINTS for c in "xyz")
    + ("condition", "p_task_m", "sample")
    + JOINT_COLUMNS
)
LOG_COLUMNS = ("time_s",) + JOINT_COLUMNS


class IngestError(ValueError):
    def __init__(self, msg: str, row: Optional[int] = None):
        super().__init__(msg if row is None else f"row {row}: {msg}")
        self.row = row


@dataclass
class SessionEntry:
    p_task: float
    result: OptimizationResult
    status: str  # "converged" or "infeasible"
    trajectory: Optional[JointTrajectory] = None
    metrics: Optional[MetricReport] = None
    target: Optional[np.ndarray] = None  # HP only: passer's object position
    robot: Optional[CartesianTrajectory] = None  # RP only

    @property
    def label(self) -> str:
        return label_for(self.p_task)


@dataclass
class SessionReport:
    condition: str
    scenario: str
    seed: int
    entries: list = field(default_factory=list)

    @property
    def any_feasible(self) -> bool:
        return any(e.status == "converged" for e in self.entries)

    def metric_reports(self) -> list:
        return [e.metrics for e in self.entries if e.metrics is not None]


def label_for(p_task: float) -> str:
    return f"p_task={p_task!r}"


# --- sessions ----------------------------------------------------------------


def _approach(scn: Scenario, q_goal) -> JointTrajectory:
    return min_jerk_joint_motion(scn.subject.q_m, q_goal, scn.approach_duration, scn.dt)


def _entry(scn: Scenario, p_task: float, res: OptimizationResult, **extra) -> SessionEntry:
    status = "converged" if res.converged else "infeasible"
    entry = SessionEntry(p_task=p_task, result=res, status=status, **extra)
    if res.converged:
        entry.trajectory = _approach(scn, res.q_star)
        entry.metrics = evaluate(
            entry.trajectory,
            scn.subject.q_n,
            scn.impairment,
            q_ref=scn.subject.q_m,
            T_f=scn.approach_duration,
            label=entry.label,
        )
    else:
        log.warning("%s infeasible: %s", label_for(p_task), res.message)
    return entry


def _robot_path(scn: Scenario, model, q_star) -> CartesianTrajectory:
    goal = Pose.from_matrix(object_pose(model, q_star, scn.grasp_offset).as_matrix())
    start = Pose(scn.robot_home, goal.quaternion)
    return plan_bspline(start, goal, scn.robot_duration, scn.bspline_degree)


def run_session(scn: Scenario, condition: str, seed: Optional[int] = None) -> SessionReport:
    """Simulate one condition over every commanded offset.

    RP: the robot brings the object to the optimised handover posture.
    HP: the heuristic passer picks the object position and the user finds
    the least-compensation posture that reaches it.  In both cases the
    user's approach is a minimum-jerk joint motion from the measured
    posture.  An infeasible offset is recorded and the sweep continues.
    """
    if condition not in CONDITIONS:
        raise ValueError(f"condition must be one of {CONDITIONS}, got {condition!r}")
    seed = scn.seed if seed is None else seed
    model = scn.model()
    ctx = scn.context()
    w = scn.impairment
    report = SessionReport(condition, scn.subject.name, seed)
    for p in scn.p_task:
        if condition == "RP":
            try:
                tc = scn.constraints(p)
            except InfeasibleScenarioError as exc:
                log.warning("%s: %s", label_for(p), exc)
                continue
            res = solve_posture(
                model, ctx, w, scn.subject.healthy, tc, scn.grasp_offset, n_starts=scn.n_starts, seed=seed
            )
            robot = _robot_path(scn, model, res.q_star) if res.converged else None
            report.entries.append(_entry(scn, p, res, robot=robot))
        else:
            target = scn.hp_target(p)
            res = resolve_ik_posture(
                model, target, w, scn.subject.healthy, ctx, scn.grasp_offset, n_starts=scn.n_starts, seed=seed
            )
            report.entries.append(_entry(scn, p, res, target=target))
    return report


def run_sessions(scn: Scenario, conditions=CONDITIONS, seed: Optional[int] = None):
    """Run several conditions; the comparison (RP relative to HP) is None
    unless both are present and have matching feasible offsets."""
    reports = {c: run_session(scn, c, seed) for c in conditions}
    comparison = None
    if "HP" in reports and "RP" in reports:
        a, b = reports["HP"].metric_reports(), reports["RP"].metric_reports()
        la, lb = {r.label for r in a}, {r.label for r in b}
        common = la & lb
        if common:
            comparison = compare_conditions(
                [r for r in a if r.label in common], [r for r in b if r.label in common]
            )
    return reports, comparison


# --- report file -------------------------------------------------------------


def _floats(v) -> list:
    return [float(x) for x in np.asarray(v).ravel()]


def entry_record(scn: Scenario, entry: SessionEntry) -> dict:
    res = entry.result
    rec = {
        "p_task_m": float(entry.p_task),
        "status": entry.status,
        "message": res.message,
        "q_star_deg": _floats(np.rad2deg(res.q_star)),
        "objective": float(res.objective_value),
        "psi": float(res.psi),
        "constraints": res.constraint_report.as_dict(),
        "starts_used": int(res.starts_used),
        "metrics": entry.metrics.as_dict() if entry.metrics is not None else None,
    }
    if entry.target is not None:
        rec["hp_target_m"] = _floats(entry.target)
    if res.closest_approach is not None:
        rec["closest_approach_m"] = float(res.closest_approach)
    if entry.robot is not None:
        rec["robot_goal_m"] = _floats(entry.robot.goal.position)
    return rec


def report_dict(scn: Scenario, reports: dict, comparison=None) -> dict:
    out = {
        "scenario": scn.subject.name,
        "subject_height_m": scn.subject.height,
        "dt_s": scn.dt,
        "sessions": {
            c: {"seed": r.seed, "entries": [entry_record(scn, e) for e in r.entries]}
            for c, r in reports.items()
        },
        "comparison": None if comparison is None else comparison.as_dict(),
    }
    return out


def dumps_report(data: dict) -> str:
    return json.dumps(data, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_report(path, data: dict) -> Path:
    path = Path(path)
    path.write_text(dumps_report(data), encoding="utf-8")
    return path


def read_report(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def metric_reports_from(data: dict, condition: str) -> list:
    try:
        entries = data["sessions"][condition]["entries"]
    except KeyError:
        raise IngestError(f"report has no {condition} session") from None
    return [MetricReport(**e["metrics"]) for e in entries if e.get("metrics")]


# --- frame export ------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


# Angles in motion logs carry 21 significant digits and are converted with
# decimal arithmetic, so export followed by ingest returns the same doubles.
# Jerk scales sample errors by 1/dt^3, so a single ulp would show.
_DEC = decimal.Context(prec=50)
_PI = decimal.Decimal("3.14159265358979323846264338327950288419716939937510")


def _rad_to_deg_text(x: float) -> str:
    d = _DEC.divide(_DEC.multiply(decimal.Decimal(float(x)), 180), _PI)
    return format(_DEC.plus(d).normalize(decimal.Context(prec=21)), "g")


def _deg_text_to_rad(text: str) -> float:
    return float(_DEC.divide(_DEC.multiply(decimal.Decimal(text.strip()), _PI), 180))


def frame_rows(scn: Scenario, report: SessionReport, model=None):
    """One row per time step of every approach trajectory."""
    model = scn.model() if model is None else model
    for entry in report.entries:
        if entry.trajectory is None:
            continue
        traj = entry.trajectory
        for k in range(len(traj)):
            q = traj.q[k]
            poses = forward_kinematics(model, q)
            pts = [poses.position(name) for name in LANDMARKS]
            pts.append(object_pose(model, q, scn.grasp_offset).translation)
            row = [_fmt(traj.times[k])]
            row += [_fmt(c) for p in pts for c in p]
            row += [report.condition, _fmt(entry.p_task), str(k)]
            row += [_fmt(v) for v in np.rad2deg(q)]
            yield row


def export_frames(scn: Scenario, report: SessionReport, path) -> int:
    """Write the skeleton frames of ``report`` as CSV; returns the row count."""
    if not report.entries:
        raise ValueError("report has no entries")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FRAME_COLUMNS)
    n = 0
    for row in frame_rows(scn, report):
        writer.writerow(row)
        n += 1
    Path(path).write_text(buf.getvalue(), encoding="utf-8")
    return n


def read_frames(path) -> dict:
    """Frame CSV as a dict of numpy columns (``condition`` stays text)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    cols = {}
    for name in FRAME_COLUMNS:
        vals = [r[name] for r in rows]
        cols[name] = vals if name == "condition" else np.array(vals, dtype=float)
    return cols


def export_robot_trajectory(report: SessionReport, path, dt: float) -> int:
    """Sampled robot B-spline paths (position and xyzw quaternion)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("t_s", "p_task_m", "x_m", "y_m", "z_m", "qx", "qy", "qz", "qw"))
    n = 0
    for entry in report.entries:
        if entry.robot is None:
            continue
        times, pos, quat = sample_cartesian(entry.robot, dt)
        for t, p, q in zip(times, pos, quat):
            writer.writerow([_fmt(t), _fmt(entry.p_task)] + [_fmt(v) for v in p] + [_fmt(v) for v in q])
            n += 1
    Path(path).write_text(buf.getvalue(), encoding="utf-8")
    return n


# --- motion logs -------------------------------------------------------------


def write_motion_log(traj: JointTrajectory, path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LOG_COLUMNS)
    for t, q in zip(traj.times, traj.q):
        writer.writerow([_fmt(t)] + [_rad_to_deg_text(v) for v in q])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _uniform(times: np.ndarray, dt: float) -> bool:
    return bool(np.max(np.abs(np.diff(times) - dt)) <= 1e-9 * max(1.0, abs(times[-1])))


def ingest_motion_log(path, dt: Optional[float] = None) -> JointTrajectory:
    """Read a ``time_s, q1_deg .. q8_deg`` CSV into a uniform trajectory.

    Uniformly sampled logs are kept as they are when ``dt`` is omitted or
    matches their spacing.  Otherwise samples are linearly interpolated onto
    a grid of step ``dt`` (the mean spacing when ``dt`` is omitted) and the
    trajectory is flagged ``resampled``.  Row numbers in errors count the
    header as row 1.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise IngestError(f"not UTF-8: {exc}") from None
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise IngestError("empty file", 1)
    header = [h.strip() for h in header]
    missing = [c for c in LOG_COLUMNS if c not in header]
    if missing:
        raise IngestError(f"missing columns {missing}", 1)
    idx = [header.index(c) for c in LOG_COLUMNS]
    data = []
    for rowno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < len(header):
            raise IngestError(f"expected {len(header)} fields, got {len(row)}", rowno)
        try:
            vals = [float(row[idx[0]])] + [_deg_text_to_rad(row[i]) for i in idx[1:]]
        except (ValueError, decimal.InvalidOperation):
            raise IngestError("non-numeric entry", rowno) from None
        if not all(math.isfinite(v) for v in vals):
            raise IngestError("non-finite entry", rowno)
        if data and vals[0] <= data[-1][1][0]:
            raise IngestError("time is not strictly increasing", rowno)
        data.append((rowno, vals))
    if len(data) < 2:
        raise IngestError(f"need at least 2 samples, got {len(data)}")
    arr = np.array([v for _, v in data])
    times, q = arr[:, 0], arr[:, 1:]
    span = times[-1] - times[0]
    step = span / (len(times) - 1)
    if dt is not None and not (dt > 0 and math.isfinite(dt)):
        raise IngestError(f"dt must be positive, got {dt}")
    if _uniform(times, step) and (dt is None or abs(dt - step) <= 1e-9 * max(1.0, step)):
        return JointTrajectory(times - times[0], q, step)
    dt = step if dt is None else dt
    n = int(math.floor(span / dt + 1e-9)) + 1
    if n < 2:
        raise IngestError(f"log span {span} s is shorter than dt {dt} s")
    grid = np.arange(n) * dt
    rel = times - times[0]
    qi = np.column_stack([np.interp(grid, rel, q[:, j]) for j in range(N_JOINTS)])
    log.info("motion log resampled to dt=%g s (%d samples)", dt, n)
    return JointTrajectory(grid, qi, dt, resampled=True)


def log_metrics(scn: Scenario, traj: JointTrajectory, label: str = "log") -> MetricReport:
    """Metrics of a recorded approach; T_f runs from movement onset to the end."""
    onset = movement_onset(traj)
    return evaluate(
        traj,
        scn.subject.q_n,
        scn.impairment,
        q_ref=scn.subject.q_m,
        T_f=float(traj.times[-1] - traj.times[onset]),
        label=label,
    )


def rp_residuals(scn: Scenario, entry: SessionEntry, q=None):
    """Constraint residuals of an RP entry at ``q`` (default its q_star)."""
    model = scn.model()
    bounds = impaired_bounds(scn.subject.healthy, scn.impairment, scn.subject.q_m, scn.zeta)
    return constraint_residuals(
        model, entry.result.q_star if q is None else q, bounds, scn.constraints(entry.p_task), scn.grasp_offset
    )
