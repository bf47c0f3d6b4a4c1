"""Handover pose optimisation for upper-limb prosthesis users."""
from .kinematics import (
    JOINT_NAMES,
    LANDMARKS,
    N_JOINTS,
    BodyDimensions,
    KinematicModel,
    RigidTransform,
    build_model,
    forward_kinematics,
    object_pose,
    scale_from_anthropometry,
)
from .metrics import MetricReport, compare_conditions, interaction_cost, jerk_cost, mean_compensation_cost, wrist_excursion
from .mobility import (
    ImpairmentModel,
    PostureContext,
    RoMBounds,
    compensation_cost,
    impaired_bounds,
    objective,
    objective_gradient,
)
from .optimizer import (
    OptimizationResult,
    TaskConstraints,
    TaskSpace,
    constraint_residuals,
    multi_start_oracle,
    resolve_ik_posture,
    solve_posture,
)
from .scenario import Scenario, ScenarioError, load_scenario, resolve_scenario
from .session import ingest_motion_log, export_frames, run_session, run_sessions
from .trajectory import JointTrajectory, CartesianTrajectory, Pose, min_jerk_joint_motion, plan_bspline, sample_cartesian

__version__ = "0.1.0"
