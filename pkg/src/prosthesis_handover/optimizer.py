"""Constrained posture optimisation.

The recommended posture minimises the mobility objective subject to the
impaired range of motion and the handover task constraints.  Two
independent local methods are provided: an augmented Lagrangian (the
production solver) and a plain quadratic-penalty descent used as a
multi-start verification oracle.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numba import njit
from scipy.optimize import minimize

from .kinematics import (
    N_JOINTS,
    KinematicModel,
    ReachEvaluator,
    RigidTransform,
    _reach_kernel,
    as_joint_vector,
    forward_kinematics,
    horizontal_distance,
    object_pose,
)
from .mobility import (
    ImpairmentModel,
    PostureContext,
    RoMBounds,
    compensation_cost,
    impaired_bounds,
    objective,
    objective_gradient,
)

log = logging.getLogger(__name__)

AXES = {"x": 0, "y": 1, "z": 2}
# Initial AL penalties.  Objective values are O(1) and constraints are in
# metres, so 100 makes a 1 cm violation comparable to the objective.
DEFAULT_RHO0 = 100.0
RHO0_PORTFOLIO = (10.0, 100.0)
RETRY_RHO0 = (1000.0,)
FEAS_TOL = 1e-6
PELVIS = np.zeros(3)


class InfeasibleScenarioError(ValueError):
    """Task constraints that cannot be met by any posture."""


@dataclass(frozen=True)
class TaskSpace:
    """Region the robot can reach: a sphere, a box, or their intersection."""

    center: Optional[np.ndarray] = None
    radius: Optional[float] = None
    box_min: Optional[np.ndarray] = None
    box_max: Optional[np.ndarray] = None

    def __post_init__(self):
        has_sphere = self.center is not None and self.radius is not None
        has_box = self.box_min is not None and self.box_max is not None
        if not (has_sphere or has_box):
            raise ValueError("task space needs a sphere (center, radius) and/or a box")
        if has_sphere:
            c = np.array(self.center, dtype=float)
            if c.shape != (3,) or not np.all(np.isfinite(c)):
                raise ValueError("task space center must be a finite 3-vector")
            if not (self.radius > 0 and math.isfinite(self.radius)):
                raise ValueError("task space radius must be positive")
            object.__setattr__(self, "center", c)
            object.__setattr__(self, "radius", float(self.radius))
        if has_box:
            lo = np.array(self.box_min, dtype=float)
            hi = np.array(self.box_max, dtype=float)
            if lo.shape != (3,) or hi.shape != (3,) or np.any(lo >= hi):
                raise ValueError("task space box must satisfy box_min < box_max on every axis")
            object.__setattr__(self, "box_min", lo)
            object.__setattr__(self, "box_max", hi)

    @property
    def kind(self) -> str:
        if self.radius is None:
            return "box"
        return "sphere" if self.box_min is None else "sphere+box"

    def _parts(self, x):
        """Signed-distance pieces and their gradients (each <= 0 inside)."""
        vals, grads = [], []
        if self.radius is not None:
            diff = x - self.center
            n = float(np.linalg.norm(diff))
            vals.append(n - self.radius)
            grads.append(diff / n if n > 0 else np.zeros(3))
        if self.box_min is not None:
            eye = np.eye(3)
            for k in range(3):
                vals.append(self.box_min[k] - x[k])
                grads.append(-eye[k])
                vals.append(x[k] - self.box_max[k])
                grads.append(eye[k])
        return np.array(vals), np.array(grads)

    def signed_distance(self, x) -> float:
        return float(np.max(self._parts(np.asarray(x, dtype=float))[0]))

    def contains(self, x, tol: float = 0.0) -> bool:
        return self.signed_distance(x) <= tol

    def plane_intersects(self, axis: str, value: float) -> bool:
        """Whether the plane ``{axis = value}`` cuts the region with positive area."""
        k = AXES[axis]
        others = [i for i in range(3) if i != k]
        if self.box_min is not None and not (self.box_min[k] < value < self.box_max[k]):
            return False
        if self.radius is None:
            return True
        off = abs(value - self.center[k])
        if off >= self.radius:
            return False
        disk_r = math.sqrt(self.radius**2 - off**2)
        if self.box_min is None:
            return True
        c2 = self.center[others]
        nearest = np.clip(c2, self.box_min[others], self.box_max[others])
        return float(np.linalg.norm(c2 - nearest)) < disk_r


@dataclass(frozen=True)
class TaskConstraints:
    task_space: TaskSpace
    equality_axis: Optional[str] = "y"
    p_task: float = 0.0
    d_safe_th: float = 0.20
    d_elbow_th: float = 0.25

    def __post_init__(self):
        if self.equality_axis is not None and self.equality_axis not in AXES:
            raise ValueError(f"equality_axis must be one of x, y, z, got {self.equality_axis!r}")
        if self.d_safe_th < 0 or self.d_elbow_th < 0:
            raise ValueError("distance thresholds must be >= 0")
        if self.equality_axis is not None and not self.task_space.plane_intersects(
            self.equality_axis, self.p_task
        ):
            raise InfeasibleScenarioError(
                f"plane {self.equality_axis} = {self.p_task} does not intersect the task space"
            )


@dataclass(frozen=True)
class ConstraintReport:
    """Constraint residuals; a residual <= 0 means satisfied.

    ``equality`` is the largest absolute equality error (0 when no equality
    is imposed), so it is satisfied when it is within tolerance.
    """

    bounds: np.ndarray
    task_space: float
    equality: float
    safety: float
    elbow: float

    def max_violation(self) -> float:
        return float(
            max(
                0.0,
                float(np.max(self.bounds)),
                self.task_space,
                self.equality,
                self.safety,
                self.elbow,
            )
        )

    def satisfied(self, tol: float = FEAS_TOL) -> bool:
        return self.max_violation() <= tol

    def as_dict(self) -> dict:
        """Plain-float view; constraints that do not apply (-inf) become None."""

        def f(v):
            v = float(v)
            return v if math.isfinite(v) else None

        return {
            "bounds_rad": [float(v) for v in self.bounds],
            "task_space_m": f(self.task_space),
            "equality_m": f(self.equality),
            "safety_m": f(self.safety),
            "elbow_m": f(self.elbow),
            "max_violation": self.max_violation(),
        }


@dataclass
class OptimizationResult:
    q_star: np.ndarray
    objective_value: float
    constraint_report: ConstraintReport
    converged: bool
    iterations: int
    starts_used: int
    message: str = ""
    psi: float = float("nan")
    closest_approach: Optional[float] = None

    @property
    def feasible(self) -> bool:
        return self.converged and self.constraint_report.satisfied()


@dataclass
class ALResult:
    x: np.ndarray
    converged: bool
    iterations: int
    violation: float
    eq_multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    ineq_multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))


# x -> (f, grad f, h, dh/dx, c, dc/dx) for  min f  s.t.  h = 0, c <= 0
Terms = Callable[[np.ndarray], tuple]


def augmented_lagrangian(
    terms: Terms,
    x0,
    lower,
    upper,
    *,
    ctol: float = 1e-6,
    inner_tol: float = 1e-8,
    max_outer: int = 50,
    inner_maxiter: int = 500,
    rho0: float = DEFAULT_RHO0,
    rho_growth: float = 10.0,
    rho_max: float = 1e10,
) -> ALResult:
    """Minimise a smooth function under equality, inequality and box constraints.

    Box bounds are kept exactly by the bound-constrained quasi-Newton inner
    solver (L-BFGS-B); the other constraints enter the
    Powell-Hestenes-Rockafellar augmented Lagrangian

        f + lam.h + rho/2 |h|^2 + 1/(2 rho) sum(max(0, mu + rho c)^2 - mu^2)

    with first-order multiplier updates after every inner solve.  The
    penalty grows when the violation fails to drop by a factor of four.
    Convergence requires feasibility and complementarity within ``ctol``.
    ``terms`` may carry an ``al_merit(x, lam, mu, rho)`` attribute computing
    the same merit faster.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    x = np.clip(np.asarray(x0, dtype=float), lower, upper)
    _, _, h, _, c, _ = terms(x)
    lam = np.zeros(h.size)
    mu = np.zeros(c.size)
    rho = rho0
    bounds = list(zip(lower, upper))

    compiled = getattr(terms, "al_merit", None)

    def merit(z):
        if compiled is not None:
            return compiled(z, lam, mu, rho)
        f, g, h, jh, c, jc = terms(z)
        shifted = np.maximum(0.0, mu + rho * c)
        val = f + lam @ h + 0.5 * rho * (h @ h) + (shifted @ shifted - mu @ mu) / (2.0 * rho)
        grad = g + jh.T @ (lam + rho * h) + jc.T @ shifted
        return val, grad

    prev_viol = math.inf
    viol = math.inf
    for it in range(1, max_outer + 1):
        res = minimize(
            merit,
            x,
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options={"maxiter": inner_maxiter, "gtol": inner_tol, "ftol": 1e-15},
        )
        x = np.clip(res.x, lower, upper)
        _, _, h, _, c, _ = terms(x)
        viol = max(
            float(np.max(np.abs(h))) if h.size else 0.0,
            float(np.max(c)) if c.size else 0.0,
            0.0,
        )
        lam = lam + rho * h
        mu = np.maximum(0.0, mu + rho * c)
        # complementarity with the updated multipliers; stationarity is the
        # inner solver's job
        compl = float(np.max(np.minimum(-c, mu))) if c.size else 0.0
        if viol <= ctol and compl <= ctol and res.success:
            return ALResult(x, True, it, viol, lam, mu)
        if viol > 0.25 * prev_viol:
            rho = min(rho * rho_growth, rho_max)
        prev_viol = viol
    return ALResult(x, False, max_outer, viol, lam, mu)


@njit(cache=True)
def _al_merit(x, lam, mu, rho, args):
    f, g, h, jh, c, jc = _posture_terms(x, *args)
    shifted = np.maximum(0.0, mu + rho * c)
    val = f + lam @ h + 0.5 * rho * (h @ h) + (shifted @ shifted - mu @ mu) / (2.0 * rho)
    grad = g + jh.T @ (lam + rho * h) + jc.T @ shifted
    return val, grad


@njit(cache=True)
def _penalised(x, weight, args):
    # Penalty value, gradient, and the Gauss-Newton curvature of the
    # penalty terms (violated inequalities and all equalities).
    f, g, h, jh, c, jc = _posture_terms(x, *args)
    cp = np.maximum(c, 0.0)
    val = f + 0.5 * weight * (h @ h + cp @ cp)
    grad = g + weight * (jh.T @ h + jc.T @ cp)
    gn = weight * (jh.T @ jh)
    for k in range(c.size):
        if c[k] > 0:
            gn += weight * np.outer(jc[k], jc[k])
    return val, grad, gn


@njit(cache=True)
def _projected_newton(x, lo, hi, weight, args, tol, maxiter):
    # Projected structured quasi-Newton descent.  The model Hessian is the
    # exact (diagonal) objective Hessian, refined by BFGS, plus the
    # Gauss-Newton term of the penalty; steps are restricted to the free
    # variables and accepted by Armijo backtracking along the projection arc.
    n = x.size
    weights, alpha = args[0], args[1]
    B0 = np.diag(2.0 * weights**2 + 2.0 * alpha * (1.0 - weights) ** 2 + 1e-12)
    B = B0.copy()
    f, g, gn = _penalised(x, weight, args)
    for _ in range(maxiter):
        pg = x - np.minimum(np.maximum(x - g, lo), hi)
        if np.max(np.abs(pg)) <= tol:
            break
        # variables pinned at a bound by the gradient stay fixed this step
        free_idx = []
        for i in range(n):
            eps = min(1e-10, hi[i] - lo[i])
            if not ((x[i] <= lo[i] + eps and g[i] > 0) or (x[i] >= hi[i] - eps and g[i] < 0)):
                free_idx.append(i)
        m = len(free_idx)
        d = np.zeros(n)
        if m > 0:
            K = np.empty((m, m))
            r = np.empty(m)
            for a in range(m):
                r[a] = -g[free_idx[a]]
                for b in range(m):
                    K[a, b] = B[free_idx[a], free_idx[b]] + gn[free_idx[a], free_idx[b]]
            step = np.linalg.solve(K, r)
            for a in range(m):
                d[free_idx[a]] = step[a]
        if g @ d >= 0:
            B = B0.copy()
            d = -pg
        t = 1.0
        accepted = False
        while t > 1e-20:
            xn = np.minimum(np.maximum(x + t * d, lo), hi)
            fn, gnew, gn_new = _penalised(xn, weight, args)
            if fn <= f + 1e-4 * (g @ (xn - x)):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        s = xn - x
        y = gnew - g - gn_new @ s
        sy = s @ y
        Bs = B @ s
        sBs = s @ Bs
        if sy > 1e-10 * math.sqrt((s @ s) * (y @ y)) and sBs > 0:
            B = B + np.outer(y, y) / sy - np.outer(Bs, Bs) / sBs
        done = abs(f - fn) <= 1e-16 * max(1.0, abs(f)) and np.max(np.abs(s)) <= 1e-14
        x, f, g, gn = xn, fn, gnew, gn_new
        if done:
            break
    return x


def quadratic_penalty(
    problem: "_PostureProblem",
    x0,
    lower,
    upper,
    *,
    weights: Sequence[float] = (1e2, 1e4, 1e6, 1e8, 1e10),
    inner_tol: float = 1e-10,
    inner_maxiter: int = 500,
) -> np.ndarray:
    """Sequential quadratic-penalty descent, warm-started across weights.

    No multipliers: the final weight alone has to push the violation below
    tolerance.  Each stage is solved by a compiled projected quasi-Newton method, so this
    path shares neither the outer method nor the inner solver with
    :func:`augmented_lagrangian`.
    """
    lower = np.ascontiguousarray(lower, dtype=float)
    upper = np.ascontiguousarray(upper, dtype=float)
    x = np.clip(np.asarray(x0, dtype=float), lower, upper)
    for weight in weights:
        x = _projected_newton(x, lower, upper, float(weight), problem.args, inner_tol, inner_maxiter)
    return x


@njit(cache=True)
def _posture_terms(
    q, weights, alpha, q_m, q_n, kin_args,
    eq_mode, eq_axis, eq_target,
    use_ineq, has_sphere, center, radius, has_box, box_lo, box_hi, d_safe, d_elbow,
):
    # Objective, equality and inequality values with their gradients, in
    # one compiled pass.  eq_mode: 0 none, 1 one coordinate, 2 full point.
    p_obj, j_obj, p_elb, j_elb = _reach_kernel(q, *kin_args)
    comp = 1.0 - weights
    a = weights * (q - q_m)
    b = comp * (q - q_n)
    f = a @ a + alpha * (b @ b)
    g = 2.0 * weights * a + 2.0 * alpha * comp * b

    if eq_mode == 2:
        h = p_obj - eq_target
        jh = j_obj.copy()
    elif eq_mode == 1:
        h = np.array([p_obj[eq_axis] - eq_target[eq_axis]])
        jh = j_obj[eq_axis : eq_axis + 1].copy()
    else:
        h = np.zeros(0)
        jh = np.zeros((0, N_JOINTS))

    if not use_ineq:
        return f, g, h, jh, np.zeros(0), np.zeros((0, N_JOINTS))
    m = 2 + (1 if has_sphere else 0) + (6 if has_box else 0)
    c = np.empty(m)
    jc = np.zeros((m, N_JOINTS))
    k = 0
    if has_sphere:
        diff = p_obj - center
        nrm = math.sqrt(diff @ diff)
        c[k] = nrm - radius
        if nrm > 0:
            jc[k] = (diff / nrm) @ j_obj
        k += 1
    if has_box:
        for ax in range(3):
            c[k] = box_lo[ax] - p_obj[ax]
            jc[k] = -j_obj[ax]
            c[k + 1] = p_obj[ax] - box_hi[ax]
            jc[k + 1] = j_obj[ax]
            k += 2
    for point, jac, th in ((p_obj, j_obj, d_safe), (p_elb, j_elb, d_elbow)):
        dist = math.hypot(point[0], point[1])
        c[k] = th - dist
        if dist > 1e-12:
            jc[k] = -(point[0] / dist) * jac[0] - (point[1] / dist) * jac[1]
        k += 1
    return f, g, h, jh, c, jc


class _PostureProblem:
    """Compiled objective/constraint evaluation for one posture solve."""

    def __init__(
        self,
        model: KinematicModel,
        ctx: PostureContext,
        w: ImpairmentModel,
        bounds: RoMBounds,
        grasp_offset: Optional[RigidTransform],
        tc: Optional[TaskConstraints] = None,
        target: Optional[np.ndarray] = None,
    ):
        self.model = model
        self.ctx = ctx
        self.w = w
        self.bounds = bounds
        self.tc = tc
        self.grasp_offset = grasp_offset
        self.reach = ReachEvaluator(model, grasp_offset)
        eq_target = np.zeros(3)
        eq_mode, eq_axis = 0, 0
        if target is not None:
            eq_mode, eq_target = 2, np.asarray(target, dtype=float)
        elif tc is not None and tc.equality_axis is not None:
            eq_mode, eq_axis = 1, AXES[tc.equality_axis]
            eq_target[eq_axis] = tc.p_task
        ts = tc.task_space if tc is not None else None
        has_sphere = ts is not None and ts.radius is not None
        has_box = ts is not None and ts.box_min is not None
        self._args = (
            np.ascontiguousarray(w.weights),
            float(ctx.alpha),
            np.ascontiguousarray(ctx.q_m),
            np.ascontiguousarray(ctx.q_n),
            self.reach.args,
            eq_mode,
            eq_axis,
            eq_target,
            tc is not None,
            has_sphere,
            ts.center if has_sphere else np.zeros(3),
            ts.radius if has_sphere else 0.0,
            has_box,
            ts.box_min if has_box else np.zeros(3),
            ts.box_max if has_box else np.zeros(3),
            tc.d_safe_th if tc is not None else 0.0,
            tc.d_elbow_th if tc is not None else 0.0,
        )

    @property
    def args(self):
        return self._args

    def __call__(self, q):
        return _posture_terms(np.ascontiguousarray(q, dtype=float), *self._args)

    def al_merit(self, x, lam, mu, rho):
        return _al_merit(np.ascontiguousarray(x, dtype=float), lam, mu, float(rho), self._args)


def constraint_residuals(
    model: KinematicModel,
    q,
    bounds: RoMBounds,
    tc: TaskConstraints,
    grasp_offset: Optional[RigidTransform] = None,
) -> ConstraintReport:
    """Residual of every constraint of the posture problem at ``q``."""
    q = as_joint_vector(q)
    bound_res = np.maximum(q - bounds.q_max, bounds.q_min - q)
    x_obj = object_pose(model, q, grasp_offset).translation
    elbow = forward_kinematics(model, q).position("elbow")
    if tc.equality_axis is None:
        eq_res = 0.0
    else:
        eq_res = abs(float(x_obj[AXES[tc.equality_axis]]) - tc.p_task)
    return ConstraintReport(
        bounds=bound_res,
        task_space=tc.task_space.signed_distance(x_obj),
        equality=eq_res,
        safety=tc.d_safe_th - horizontal_distance(x_obj, PELVIS),
        elbow=tc.d_elbow_th - horizontal_distance(elbow, PELVIS),
    )


def _ik_report(model, q, bounds, target, grasp_offset) -> ConstraintReport:
    q = as_joint_vector(q)
    x_obj = object_pose(model, q, grasp_offset).translation
    return ConstraintReport(
        bounds=np.maximum(q - bounds.q_max, bounds.q_min - q),
        task_space=-math.inf,
        equality=float(np.max(np.abs(x_obj - target))),
        safety=-math.inf,
        elbow=-math.inf,
    )


def default_starts(ctx: PostureContext, bounds: RoMBounds, n_random: int, seed) -> list:
    """``q_m``, then ``q_n`` (both clipped to the bounds), then seeded uniform draws."""
    rng = np.random.default_rng(seed)
    starts = [bounds.clip(ctx.q_m), bounds.clip(ctx.q_n)]
    for _ in range(max(0, n_random)):
        starts.append(rng.uniform(bounds.q_min, bounds.q_max))
    return starts


def _pick_best(candidates):
    """First feasible candidate with the lowest objective, in start order."""
    best = None
    for cand in candidates:
        if not cand[2]:
            continue
        if best is None or cand[1] < best[1] - 1e-12 * (1.0 + abs(best[1])):
            best = cand
    return best


def _result_from(problem, q, conv, iters, n_starts, report, msg=""):
    return OptimizationResult(
        q_star=np.array(q),
        objective_value=objective(q, problem.ctx, problem.w),
        constraint_report=report,
        converged=conv,
        iterations=iters,
        starts_used=n_starts,
        message=msg,
        psi=compensation_cost(q, problem.ctx.q_n, problem.w),
    )


def _run_starts(problem, jobs, local, report_fn) -> list:
    runs = []
    for job in jobs:
        q, ok, iters = local(job)
        report = report_fn(q)
        feasible = ok and report.satisfied()
        runs.append((q, objective(q, problem.ctx, problem.w), feasible, iters, report))
    return runs


def _best_result(problem, runs, n_starts):
    best = _pick_best(runs)
    if best is not None:
        return _result_from(problem, best[0], True, best[3], n_starts, best[4], "converged")
    fallback = min(runs, key=lambda r: (r[4].max_violation(), r[1]))
    return _result_from(
        problem,
        fallback[0],
        False,
        fallback[3],
        n_starts,
        fallback[4],
        f"infeasible: no start converged (best violation {fallback[4].max_violation():.3g})",
    )


def _solve_multistart(problem, starts, local, report_fn):
    return _best_result(problem, _run_starts(problem, starts, local, report_fn), len(starts))


def solve_posture(
    model: KinematicModel,
    ctx: PostureContext,
    w: ImpairmentModel,
    healthy: RoMBounds,
    tc: TaskConstraints,
    grasp_offset: Optional[RigidTransform] = None,
    *,
    n_starts: int = 8,
    seed=0,
    max_outer: int = 50,
) -> OptimizationResult:
    """Recommended handover posture for the user.

    Runs the augmented Lagrangian from ``n_starts`` deterministic starts
    (see :func:`default_starts`) and keeps the best feasible optimum.  If no
    start converges, the starts are retried with the initial penalties in
    ``RETRY_RHO0``.  When all fail the result carries the least-violating
    attempt with ``converged=False``.
    """
    bounds = impaired_bounds(healthy, w, ctx.q_m, ctx.zeta)
    problem = _PostureProblem(model, ctx, w, bounds, grasp_offset, tc=tc)
    starts = default_starts(ctx, bounds, n_starts - 2, seed)[: max(1, n_starts)]
    report_fn = lambda q: constraint_residuals(model, q, bounds, tc, grasp_offset)  # noqa: E731
    return _al_multistart(problem, starts, report_fn, max_outer)


def _al_multistart(problem, starts, report_fn, max_outer: int = 50) -> OptimizationResult:
    """Every start under each initial penalty of ``RHO0_PORTFOLIO``, best feasible wins.

    A small initial penalty lets the objective steer early iterates towards
    its own basin; a larger one keeps them near their start, preserving the
    diversity of the starts.  Neither dominates, so both are tried.
    """
    lo, hi = problem.bounds.q_min, problem.bounds.q_max

    def local(job):
        x0, rho0 = job
        r = augmented_lagrangian(problem, x0, lo, hi, max_outer=max_outer, rho0=rho0)
        return r.x, r.converged, r.iterations

    runs = []
    for group in (RHO0_PORTFOLIO, RETRY_RHO0):
        runs += _run_starts(problem, [(x0, rho0) for rho0 in group for x0 in starts], local, report_fn)
        if _pick_best(runs) is not None:
            break
    return _best_result(problem, runs, len(starts))


def multi_start_oracle(
    model: KinematicModel,
    ctx: PostureContext,
    w: ImpairmentModel,
    healthy: RoMBounds,
    tc: TaskConstraints,
    grasp_offset: Optional[RigidTransform] = None,
    n_starts: int = 64,
    seed=0,
    *,
    starts: Optional[Sequence] = None,
) -> OptimizationResult:
    """Brute-force reference optimum by quadratic-penalty descent.

    Starts are ``q_m``, ``q_n`` and ``n_starts`` uniform draws inside the
    impaired bounds, unless ``starts`` is given explicitly.
    """
    if starts is None and n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    bounds = impaired_bounds(healthy, w, ctx.q_m, ctx.zeta)
    problem = _PostureProblem(model, ctx, w, bounds, grasp_offset, tc=tc)
    if starts is None:
        starts = default_starts(ctx, bounds, n_starts, seed)
    else:
        starts = [bounds.clip(as_joint_vector(s)) for s in starts]

    def local(x0):
        q = quadratic_penalty(problem, x0, bounds.q_min, bounds.q_max)
        return q, True, 1

    return _solve_multistart(
        problem, starts, local, lambda q: constraint_residuals(model, q, bounds, tc, grasp_offset)
    )


def resolve_ik_posture(
    model: KinematicModel,
    target_object_position,
    w: ImpairmentModel,
    healthy: RoMBounds,
    ctx: PostureContext,
    grasp_offset: Optional[RigidTransform] = None,
    *,
    n_starts: int = 4,
    seed=0,
) -> OptimizationResult:
    """Least-compensation posture that puts the object at a fixed point.

    Used for the human-passing baseline: the passer chooses the object
    position and the user adapts.  Task-space and distance constraints do
    not apply; the three object coordinates are equality constraints.
    Unreachable targets return ``converged=False`` with the closest
    approach distance (m) in ``closest_approach``.
    """
    target = np.asarray(target_object_position, dtype=float)
    if target.shape != (3,) or not np.all(np.isfinite(target)):
        raise ValueError("target must be a finite 3-vector")
    bounds = impaired_bounds(healthy, w, ctx.q_m, ctx.zeta)
    problem = _PostureProblem(model, ctx, w, bounds, grasp_offset, target=target)
    starts = default_starts(ctx, bounds, n_starts - 2, seed)[: max(1, n_starts)]
    report_fn = lambda q: _ik_report(model, q, bounds, target, grasp_offset)  # noqa: E731

    reach = model.total_length + (
        0.0 if grasp_offset is None else float(np.linalg.norm(grasp_offset.translation))
    )
    if np.linalg.norm(target - model.base[:3, 3]) > reach:
        result = _result_from(
            problem, starts[0], False, 0, 0, report_fn(starts[0]), "infeasible: target out of reach"
        )
    else:
        result = _al_multistart(problem, starts, report_fn)
    if not result.converged:
        result.closest_approach = _closest_approach(problem, starts, target)
    return result


def _closest_approach(problem: _PostureProblem, starts, target) -> float:
    def dist2(q):
        p, j, _, _ = problem.reach(q)
        r = p - target
        return float(r @ r), 2.0 * (j.T @ r)

    lo, hi = problem.bounds.q_min, problem.bounds.q_max
    best = math.inf
    for x0 in starts:
        res = minimize(dist2, x0, jac=True, method="L-BFGS-B", bounds=list(zip(lo, hi)))
        best = min(best, math.sqrt(max(res.fun, 0.0)))
    return best
