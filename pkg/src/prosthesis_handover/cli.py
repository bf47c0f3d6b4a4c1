"""Command-line entry point: ``handover {solve,session,compare,ingest}``.

Results go to stdout as tab-separated lines.  Exit codes: 0 success,
2 validation error, 3 no feasible offset, 4 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .kinematics import JOINT_NAMES
from .metrics import METRIC_NAMES, MetricInputError, compare_conditions
from .mobility import ParameterError
from .optimizer import InfeasibleScenarioError, solve_posture
from .scenario import ScenarioError, resolve_scenario
from .session import (
    CONDITIONS,
    IngestError,
    export_frames,
    export_robot_trajectory,
    ingest_motion_log,
    log_metrics,
    metric_reports_from,
    read_report,
    report_dict,
    run_sessions,
    write_report,
)
from .trajectory import TrajectoryError

EXIT_OK, EXIT_VALIDATION, EXIT_INFEASIBLE, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("prosthesis_handover")


def _emit(*fields) -> None:
    print("\t".join(str(f) for f in fields))


def _load(args):
    scn = resolve_scenario(args.scenario)
    if getattr(args, "dt", None) is not None:
        if not args.dt > 0:
            raise ScenarioError("--dt", f"must be positive, got {args.dt}")
        scn = scn.replace(dt=args.dt)
    if getattr(args, "p_task", None):
        scn = scn.replace(p_task=tuple(args.p_task))
    return scn


def cmd_solve(args) -> int:
    scn = _load(args)
    p = scn.p_task[0]
    seed = scn.seed if args.seed is None else args.seed
    res = solve_posture(
        scn.model(),
        scn.context(),
        scn.impairment,
        scn.subject.healthy,
        scn.constraints(p),
        scn.grasp_offset,
        n_starts=scn.n_starts,
        seed=seed,
    )
    _emit("p_task_m", p)
    _emit("status", "converged" if res.converged else "infeasible")
    _emit("objective", repr(res.objective_value))
    _emit("psi", repr(res.psi))
    for name, v in zip(JOINT_NAMES, np.rad2deg(res.q_star)):
        _emit("q_deg", name, repr(float(v)))
    for key, v in res.constraint_report.as_dict().items():
        if isinstance(v, list):
            _emit("residual", key, *(repr(x) for x in v))
        else:
            _emit("residual", key, repr(v))
    return EXIT_OK if res.converged else EXIT_INFEASIBLE


def cmd_session(args) -> int:
    scn = _load(args)
    conditions = CONDITIONS if args.condition == "both" else (args.condition,)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reports, comparison = run_sessions(scn, conditions, args.seed)
    write_report(out / "report.json", report_dict(scn, reports, comparison))
    for cond, rep in reports.items():
        if rep.entries:
            export_frames(scn, rep, out / f"frames_{cond}.csv")
        if cond == "RP":
            export_robot_trajectory(rep, out / "robot_RP.csv", scn.dt)
    if not args.no_plots:
        from .plotting import render_session_figures

        render_session_figures(scn, reports, comparison, out)
    _emit("condition", "p_task_m", "status", *METRIC_NAMES)
    for cond, rep in reports.items():
        for e in rep.entries:
            vals = [repr(getattr(e.metrics, m)) for m in METRIC_NAMES] if e.metrics else ["nan"] * len(METRIC_NAMES)
            _emit(cond, e.p_task, e.status, *vals)
    if comparison is not None:
        for m, v in comparison.mean_percent_change.items():
            _emit("percent_change_RP_vs_HP", m, "undefined" if v is None else repr(v))
    if not all(r.any_feasible for r in reports.values()):
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_compare(args) -> int:
    a = metric_reports_from(read_report(args.report_a), args.condition_a)
    b = metric_reports_from(read_report(args.report_b), args.condition_b)
    summary = compare_conditions(a, b)
    _emit("scope", "metric", "percent_change")
    for m, v in summary.mean_percent_change.items():
        _emit("mean", m, "undefined" if v is None else repr(v))
    for label, row in summary.per_scenario.items():
        for m, v in row.items():
            _emit(label, m, "undefined" if v is None else repr(v))
    return EXIT_OK


def cmd_ingest(args) -> int:
    scn = _load(args)
    traj = ingest_motion_log(args.log, args.dt)
    rep = log_metrics(scn, traj, label=Path(args.log).name)
    _emit("resampled", traj.resampled)
    for m in METRIC_NAMES + ("K_f",):
        _emit(m, repr(getattr(rep, m)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="handover", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_arg(p):
        p.add_argument("--scenario", required=True, help="scenario file, or bundled name (subject1, subject2)")

    p = sub.add_parser("solve", help="optimise the handover posture for one offset")
    scenario_arg(p)
    p.add_argument("--p-task", type=float, nargs=1, help="offset along the equality axis [m]")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("session", help="simulate HP and/or RP over every offset")
    scenario_arg(p)
    p.add_argument("--condition", choices=CONDITIONS + ("both",), default="both")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", default="out")
    p.add_argument("--dt", type=float, help="sampling step [s]")
    p.add_argument("--p-task", type=float, nargs="+", help="override the offsets [m]")
    p.add_argument("--no-plots", action="store_true", help="skip the PNG figures")
    p.set_defaults(func=cmd_session)

    p = sub.add_parser("compare", help="percent change of report B vs report A")
    p.add_argument("report_a")
    p.add_argument("report_b")
    p.add_argument("--condition-a", default="HP")
    p.add_argument("--condition-b", default="RP")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("ingest", help="metrics of a recorded motion log")
    scenario_arg(p)
    p.add_argument("log")
    p.add_argument("--dt", type=float, help="resample to this step [s]")
    p.set_defaults(func=cmd_ingest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, IngestError, ParameterError, MetricInputError, TrajectoryError, InfeasibleScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
