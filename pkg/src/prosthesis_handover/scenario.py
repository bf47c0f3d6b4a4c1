"""Scenario files: YAML description of a subject, impairment and task sweep.

Angles are written in degrees and converted to radians on load.  See
README.md for the full schema; ``data/subject1.scn`` is a complete example.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .kinematics import (
    N_JOINTS,
    AnthropometryError,
    KinematicModel,
    RigidTransform,
    build_model,
    scale_from_anthropometry,
)
from .mobility import ImpairmentModel, ParameterError, PostureContext, RoMBounds
from .optimizer import AXES, InfeasibleScenarioError, TaskConstraints, TaskSpace

log = logging.getLogger(__name__)

DEFAULT_DT = 1.0 / 60.0


class ScenarioError(ValueError):
    """Invalid scenario; ``field`` is the dotted path of the offending entry."""

    def __init__(self, field: str, msg: str):
        super().__init__(f"{field}: {msg}")
        self.field = field


@dataclass(frozen=True)
class Subject:
    name: str
    height: float
    pelvis_height_ratio: float
    ratios: dict
    q_n: np.ndarray
    q_m: np.ndarray
    healthy: RoMBounds


@dataclass(frozen=True)
class PasserModel:
    """Fixed human passer used for the human-passing baseline."""

    shoulder_x: float = 0.9
    chest_height_ratio: float = 0.72


@dataclass(frozen=True)
class Scenario:
    subject: Subject
    impairment: ImpairmentModel
    alpha: float
    zeta: float
    d_safe_th: float
    d_elbow_th: float
    dt: float
    approach_duration: float
    robot_duration: float
    bspline_degree: int
    equality_axis: str
    p_task: tuple
    task_space: TaskSpace
    grasp_offset: RigidTransform
    robot_home: np.ndarray
    passer: PasserModel
    n_starts: int = 8
    seed: int = 0
    source: Optional[str] = field(default=None, compare=False)

    def model(self) -> KinematicModel:
        return build_model(scale_from_anthropometry(self.subject.height, self.subject.ratios))

    def context(self) -> PostureContext:
        return PostureContext(self.subject.q_m, self.subject.q_n, self.alpha, self.zeta)

    def constraints(self, p_task: float) -> TaskConstraints:
        return TaskConstraints(
            self.task_space, self.equality_axis, float(p_task), self.d_safe_th, self.d_elbow_th
        )

    def hp_target(self, p_task: float) -> np.ndarray:
        """Object position chosen by the heuristic passer, pelvis frame.

        Midway between the passer's shoulder and the user's pelvis, at the
        user's chest height, shifted to the commanded offset along the
        equality axis.
        """
        h = self.subject.height
        target = np.array(
            [
                0.5 * self.passer.shoulder_x,
                0.0,
                (self.passer.chest_height_ratio - self.subject.pelvis_height_ratio) * h,
            ]
        )
        target[AXES[self.equality_axis]] = p_task
        return target

    def replace(self, **changes) -> "Scenario":
        from dataclasses import replace

        return replace(self, **changes)


# --- field readers ---------------------------------------------------------


def _get(tree: dict, path: str, default=...):
    node = tree
    for key in path.split("."):
        if not isinstance(node, dict) or key not in node:
            if default is ...:
                raise ScenarioError(path, "missing")
            return default
        node = node[key]
    return node


def _num(tree, path, default=..., *, lo=None, hi=None, lo_open=False) -> float:
    raw = _get(tree, path, default)
    if isinstance(raw, bool):
        raise ScenarioError(path, f"expected a number, got {raw!r}")
    try:
        v = float(raw)
    except (TypeError, ValueError):
        raise ScenarioError(path, f"expected a number, got {raw!r}") from None
    if not math.isfinite(v):
        raise ScenarioError(path, "must be finite")
    if lo is not None and (v < lo or (lo_open and v == lo)):
        raise ScenarioError(path, f"must be {'>' if lo_open else '>='} {lo}, got {v}")
    if hi is not None and v > hi:
        raise ScenarioError(path, f"must be <= {hi}, got {v}")
    return v


def _vec(tree, path, n, default=...) -> np.ndarray:
    raw = _get(tree, path, default)
    try:
        v = np.array(raw, dtype=float)
    except (TypeError, ValueError):
        raise ScenarioError(path, f"expected {n} numbers") from None
    if v.shape != (n,):
        raise ScenarioError(path, f"expected {n} numbers, got {raw!r}")
    if not np.all(np.isfinite(v)):
        raise ScenarioError(path, "entries must be finite")
    return v


def _deg_vec(tree, path, default=...) -> np.ndarray:
    return np.deg2rad(_vec(tree, path, N_JOINTS, default))


# --- loader -----------------------------------------------------------------


def _subject(tree) -> Subject:
    height = _num(tree, "subject.height_m")
    ratios = _get(tree, "subject.segment_ratios", None) or {}
    if not isinstance(ratios, dict):
        raise ScenarioError("subject.segment_ratios", "expected a mapping")
    for name in ratios:
        _vec(tree, f"subject.segment_ratios.{name}", 3)
    try:
        scale_from_anthropometry(height, ratios)
    except AnthropometryError as exc:
        raise ScenarioError("subject", str(exc)) from None
    q_n = _deg_vec(tree, "subject.natural_posture_deg")
    if _get(tree, "subject.measured_posture_deg", None) is None:
        q_m = q_n.copy()
    else:
        q_m = _deg_vec(tree, "subject.measured_posture_deg")
    try:
        healthy = RoMBounds(_deg_vec(tree, "subject.rom_deg.min"), _deg_vec(tree, "subject.rom_deg.max"))
    except ParameterError as exc:
        raise ScenarioError("subject.rom_deg", str(exc)) from None
    return Subject(
        name=str(_get(tree, "subject.name", "subject")),
        height=height,
        pelvis_height_ratio=_num(tree, "subject.pelvis_height_ratio", 0.53, lo=0.0, hi=1.0),
        ratios={k: tuple(float(x) for x in v) for k, v in ratios.items()},
        q_n=q_n,
        q_m=q_m,
        healthy=healthy,
    )


def _impairment(tree) -> ImpairmentModel:
    if _get(tree, "impairment", None) is None:
        log.info("no impairment block; assuming a healthy user (all weights 0)")
        return ImpairmentModel.healthy()
    w = _vec(tree, "impairment.weights", N_JOINTS)
    if np.any(w < 0) or np.any(w > 1):
        raise ScenarioError("impairment.weights", "weights must lie in [0, 1]")
    return ImpairmentModel(w)


def _task_space(tree) -> TaskSpace:
    base = "task.task_space"
    if not isinstance(_get(tree, base), dict):
        raise ScenarioError(base, "expected a mapping")
    kw = {}
    if _get(tree, f"{base}.center_m", None) is not None or _get(tree, f"{base}.radius_m", None) is not None:
        kw["center"] = _vec(tree, f"{base}.center_m", 3)
        kw["radius"] = _num(tree, f"{base}.radius_m", lo=0.0, lo_open=True)
    if _get(tree, f"{base}.box_min_m", None) is not None or _get(tree, f"{base}.box_max_m", None) is not None:
        kw["box_min"] = _vec(tree, f"{base}.box_min_m", 3)
        kw["box_max"] = _vec(tree, f"{base}.box_max_m", 3)
    try:
        return TaskSpace(**kw)
    except ValueError as exc:
        raise ScenarioError(base, str(exc)) from None


def parse_scenario(tree, source: Optional[str] = None) -> Scenario:
    """Validate a parsed scenario mapping and build a :class:`Scenario`."""
    if not isinstance(tree, dict):
        raise ScenarioError("<root>", "scenario must be a mapping")
    subject = _subject(tree)
    impairment = _impairment(tree)
    alpha = _num(tree, "parameters.alpha", 0.10, lo=0.0)
    zeta = math.radians(_num(tree, "parameters.zeta_deg", 5.0, lo=0.0))
    axis = str(_get(tree, "task.equality_axis", "y"))
    if axis not in AXES:
        raise ScenarioError("task.equality_axis", f"must be one of x, y, z, got {axis!r}")
    raw_p = _get(tree, "task.p_task_m")
    if not isinstance(raw_p, list) or not raw_p:
        raise ScenarioError("task.p_task_m", "expected a non-empty list")
    p_task = tuple(_num({"p": v}, "p") for v in raw_p)
    degree = _get(tree, "parameters.bspline_degree", 5)
    if degree not in (3, 5):
        raise ScenarioError("parameters.bspline_degree", f"must be 3 or 5, got {degree!r}")
    n_starts = _get(tree, "solver.n_starts", 8)
    if not isinstance(n_starts, int) or isinstance(n_starts, bool) or n_starts < 1:
        raise ScenarioError("solver.n_starts", f"must be a positive integer, got {n_starts!r}")
    seed = _get(tree, "seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ScenarioError("seed", f"must be a non-negative integer, got {seed!r}")
    scn = Scenario(
        subject=subject,
        impairment=impairment,
        alpha=alpha,
        zeta=zeta,
        d_safe_th=_num(tree, "parameters.d_safe_th_m", 0.20, lo=0.0),
        d_elbow_th=_num(tree, "parameters.d_elbow_th_m", 0.25, lo=0.0),
        dt=_num(tree, "parameters.dt_s", DEFAULT_DT, lo=0.0, lo_open=True),
        approach_duration=_num(tree, "parameters.approach_duration_s", 1.5, lo=0.0, lo_open=True),
        robot_duration=_num(tree, "parameters.robot_duration_s", 3.0, lo=0.0, lo_open=True),
        bspline_degree=int(degree),
        equality_axis=axis,
        p_task=p_task,
        task_space=_task_space(tree),
        grasp_offset=RigidTransform(np.eye(3), _vec(tree, "task.grasp_offset_m", 3, [-0.08, 0.0, 0.0])),
        robot_home=_vec(tree, "task.robot_home_m", 3, [0.75, -0.2, 0.35]),
        passer=PasserModel(
            shoulder_x=_num(tree, "hp_passer.shoulder_x_m", 0.9),
            chest_height_ratio=_num(tree, "hp_passer.chest_height_ratio", 0.72, lo=0.0, hi=1.0),
        ),
        n_starts=n_starts,
        seed=seed,
        source=source,
    )
    validate_task_planes(scn)
    return scn


def validate_task_planes(scn: Scenario) -> None:
    for i, p in enumerate(scn.p_task):
        try:
            scn.constraints(p)
        except InfeasibleScenarioError as exc:
            raise ScenarioError(f"task.p_task_m[{i}]", str(exc)) from None


def load_scenario(path) -> Scenario:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        tree = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError("<file>", f"not valid YAML: {exc}") from None
    return parse_scenario(tree, source=str(path))


def bundled_scenario_path(name: str) -> Path:
    """Path of a scenario shipped with the package, e.g. ``"subject1"``."""
    fname = name if name.endswith(".scn") else f"{name}.scn"
    ref = resources.files("prosthesis_handover") / "data" / fname
    if not ref.is_file():
        raise FileNotFoundError(f"no bundled scenario {fname!r}")
    return Path(str(ref))


def resolve_scenario(name_or_path: str) -> Scenario:
    """Load from a path, or from a bundled name when no such file exists."""
    p = Path(name_or_path)
    if p.exists():
        return load_scenario(p)
    return load_scenario(bundled_scenario_path(name_or_path))


__all__ = [
    "DEFAULT_DT",
    "PasserModel",
    "Scenario",
    "ScenarioError",
    "Subject",
    "bundled_scenario_path",
    "load_scenario",
    "parse_scenario",
    "resolve_scenario",
]
