import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import quintic_jerk_integral

from prosthesis_handover.kinematics import N_JOINTS
from prosthesis_handover.metrics import (
    MetricInputError,
    MetricReport,
    compare_conditions,
    interaction_cost,
    jerk_cost,
    mean_compensation_cost,
    movement_onset,
    wrist_excursion,
)
from prosthesis_handover.mobility import ImpairmentModel, compensation_cost
from prosthesis_handover.trajectory import JointTrajectory, min_jerk_joint_motion

Q_N = np.radians([0, 0, 0, 0, 90, 0, 0, 0])
W = ImpairmentModel.blocked([6, 7])


def _traj(q, dt=0.01):
    q = np.asarray(q, dtype=float)
    return JointTrajectory(np.arange(len(q)) * dt, q, dt)


def _random_traj(seed, k=20):
    rng = np.random.default_rng(seed)
    return _traj(rng.normal(size=(k, N_JOINTS)))


def test_psi_bar_examples():
    assert mean_compensation_cost(_traj(np.tile(Q_N, (5, 1))), Q_N, W) == 0.0
    q = np.tile(Q_N, (2, 1))
    q[1, 0] += math.sqrt(0.02)
    assert math.isclose(mean_compensation_cost(_traj(q), Q_N, W), 0.01, rel_tol=1e-12)
    with pytest.raises(MetricInputError):
        mean_compensation_cost(np.zeros((0, N_JOINTS)), Q_N, W)


def test_psi_bar_matches_loop_oracle():
    traj = _random_traj(1)
    total = 0.0
    for q in traj.q:
        for i in range(N_JOINTS):
            total += ((1 - W.weights[i]) * (q[i] - Q_N[i])) ** 2
    assert math.isclose(mean_compensation_cost(traj, Q_N, W), total / len(traj), rel_tol=1e-12)


def test_interaction_cost_examples():
    assert interaction_cost(Q_N, Q_N, W) == 0.0
    q = Q_N.copy()
    q[1] += 0.1
    assert math.isclose(interaction_cost(q, Q_N, W), 0.01, rel_tol=1e-12)
    rng = np.random.default_rng(2)
    q = rng.normal(size=N_JOINTS)
    assert interaction_cost(q, Q_N, W) == compensation_cost(q, Q_N, W)


def test_jerk_needs_four_samples():
    with pytest.raises(MetricInputError):
        jerk_cost(_traj(np.zeros((3, N_JOINTS))))


def test_jerk_zero_for_low_order_polynomials():
    dt = 1.0 / 256
    t = np.arange(300) * dt
    lin = np.outer(0.5 + 0.25 * t, np.ones(N_JOINTS))
    quad = np.outer(0.125 - 0.5 * t + 2.0 * t * t, np.ones(N_JOINTS))
    assert jerk_cost(JointTrajectory(t, lin, dt)) == 0.0
    assert jerk_cost(JointTrajectory(t, quad, dt)) == 0.0


def test_jerk_of_quintic_converges_to_closed_form():
    exact = quintic_jerk_integral()
    assert math.isclose(exact, 720.0, rel_tol=1e-12)
    errs = []
    for dt in (1 / 60, 1 / 240, 1 / 960):
        q1 = np.zeros(N_JOINTS)
        q1[0] = 1.0
        j = jerk_cost(min_jerk_joint_motion(np.zeros(N_JOINTS), q1, 1.0, dt))
        errs.append(abs(j - exact) / exact)
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.02


def test_jerk_scales_with_amplitude_and_duration():
    q1 = np.full(N_JOINTS, 0.5)
    base = jerk_cost(min_jerk_joint_motion(np.zeros(N_JOINTS), q1, 1.0, 1 / 240))
    twice = jerk_cost(min_jerk_joint_motion(np.zeros(N_JOINTS), 2 * q1, 1.0, 1 / 240))
    assert math.isclose(twice, 4 * base, rel_tol=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.floats(-5, 5), st.floats(0.1, 10))
def test_jerk_offset_invariant_and_quadratic_scaling(seed, offset, s):
    traj = _random_traj(seed)
    j = jerk_cost(traj)
    shifted = jerk_cost(_traj(traj.q + offset))
    scaled = jerk_cost(_traj(traj.q * s))
    assert math.isclose(shifted, j, rel_tol=1e-6)
    assert math.isclose(scaled, s * s * j, rel_tol=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_psi_bar_of_concatenation_is_mean(seed):
    a, b = _random_traj(seed), _random_traj(seed + 1)
    both = _traj(np.vstack([a.q, b.q]))
    expected = 0.5 * (mean_compensation_cost(a, Q_N, W) + mean_compensation_cost(b, Q_N, W))
    assert math.isclose(mean_compensation_cost(both, Q_N, W), expected, rel_tol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_wrist_excursion_ignores_other_joints(seed):
    a = _random_traj(seed)
    b = a.q.copy()
    b[:, :6] = np.random.default_rng(seed + 7).normal(size=(len(b), 6))
    assert wrist_excursion(a, Q_N, (6, 7)) == wrist_excursion(_traj(b), Q_N, (6, 7))


def test_wrist_excursion_examples():
    q = np.tile(Q_N, (4, 1))
    assert wrist_excursion(_traj(q), Q_N, (6, 7)) == 0.0
    q[2, 6] += math.radians(6)
    assert math.isclose(wrist_excursion(_traj(q), Q_N, (6, 7)), 6.0, rel_tol=1e-12)
    with pytest.raises(MetricInputError):
        wrist_excursion(_traj(q), Q_N, ())


def _report(label, j=1.0, psi=1.0):
    return MetricReport(1.5, psi, psi, j, 1.0, 10, label)


def test_compare_identity_and_halving():
    a = [_report("x", 4.0), _report("y", 2.0)]
    same = compare_conditions(a, a)
    assert all(v == 0.0 for v in same.mean_percent_change.values())
    half = compare_conditions(a, [_report("x", 2.0), _report("y", 1.0)])
    assert half.mean_percent_change["J"] == -50.0
    assert half.per_scenario["x"]["J"] == -50.0


def test_compare_flags_zero_baseline_and_mismatch():
    s = compare_conditions([_report("x", psi=0.0)], [_report("x", psi=1.0)])
    assert s.per_scenario["x"]["psi_bar"] is None
    assert ("x", "psi_bar") in s.undefined
    with pytest.raises(MetricInputError):
        compare_conditions([_report("x")], [_report("y")])
    with pytest.raises(MetricInputError):
        compare_conditions([], [])


def test_metric_report_validation():
    with pytest.raises(MetricInputError):
        MetricReport(1.0, -1.0, 0.0, 0.0, 0.0, 5)
    with pytest.raises(MetricInputError):
        MetricReport(1.0, 0.0, 0.0, float("nan"), 0.0, 5)
    with pytest.raises(MetricInputError):
        MetricReport(1.0, 0.0, 0.0, 0.0, 0.0, 1)


def test_movement_onset_threshold():
    dt = 0.01
    q = np.zeros((50, N_JOINTS))
    q[20:, 0] = np.radians(1.0) * np.arange(30)  # 100 deg/s after sample 20
    k = movement_onset(JointTrajectory(np.arange(50) * dt, q, dt))
    assert k in (19, 20)
    assert movement_onset(JointTrajectory(np.arange(50) * dt, np.zeros((50, N_JOINTS)), dt)) == 0
