import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import brute_objective_blend

from prosthesis_handover.kinematics import N_JOINTS
from prosthesis_handover.mobility import (
    ImpairmentModel,
    ParameterError,
    PostureContext,
    RoMBounds,
    compensation_cost,
    impaired_bounds,
    objective,
    objective_gradient,
    unconstrained_minimizer,
)

from conftest import ROM_MAX, ROM_MIN, Q_N

vec = st.lists(st.floats(-1.5, 1.5), min_size=N_JOINTS, max_size=N_JOINTS).map(np.array)
unit = st.lists(st.floats(0.0, 1.0), min_size=N_JOINTS, max_size=N_JOINTS).map(np.array)


def test_weights_validated():
    with pytest.raises(ParameterError):
        ImpairmentModel(np.full(N_JOINTS, 1.5))
    with pytest.raises(ParameterError):
        ImpairmentModel(np.zeros(5))
    assert ImpairmentModel.blocked([6, 7]).blocked_indices == (6, 7)


def test_context_validated():
    with pytest.raises(ParameterError):
        PostureContext(Q_N, Q_N, alpha=-0.1)
    with pytest.raises(ParameterError):
        PostureContext(Q_N, Q_N, zeta=-1.0)


def test_compensation_cost_examples():
    w = ImpairmentModel.healthy()
    assert compensation_cost(Q_N, Q_N, w) == 0.0
    q = Q_N.copy()
    q[0] += 0.1
    assert math.isclose(compensation_cost(q, Q_N, w), 0.01, rel_tol=1e-12)
    # blocked joints do not count
    q = Q_N.copy()
    q[6] += 0.3
    assert compensation_cost(q, Q_N, ImpairmentModel.blocked([6])) == 0.0


def test_impaired_bounds_extremes(healthy):
    zeta = math.radians(5)
    q_m = np.radians([10, -20, -30, 10, 80, 5, 3, -2])
    b0 = impaired_bounds(healthy, ImpairmentModel.healthy(), q_m, zeta)
    assert np.array_equal(b0.q_min, healthy.q_min) and np.array_equal(b0.q_max, healthy.q_max)
    b1 = impaired_bounds(healthy, ImpairmentModel(np.ones(N_JOINTS)), q_m, zeta)
    assert np.array_equal(b1.q_min, q_m - zeta) and np.array_equal(b1.q_max, q_m + zeta)


def test_impaired_bounds_half_weight(healthy):
    zeta = math.radians(5)
    # elbow: healthy [0, 145] deg, q_m = 90 deg -> [(0 + 85)/2, (145 + 95)/2]
    q_m = np.radians([0, 0, 0, 0, 90, 0, 0, 0])
    b = impaired_bounds(healthy, ImpairmentModel(np.full(N_JOINTS, 0.5)), q_m, zeta)
    assert abs(b.q_min[4] - math.radians(42.5)) <= 1e-12
    assert abs(b.q_max[4] - math.radians(120.0)) <= 1e-12
    assert np.allclose(b.q_min, 0.5 * (healthy.q_min + (q_m - zeta)), rtol=0, atol=1e-12)
    assert np.allclose(b.q_max, 0.5 * (healthy.q_max + (q_m + zeta)), rtol=0, atol=1e-12)


def test_measured_posture_outside_range_is_clamped(healthy, caplog):
    q_m = np.radians([0, 0, 0, 0, 170, 0, 0, 0])  # elbow beyond 145
    with caplog.at_level(logging.WARNING):
        b = impaired_bounds(healthy, ImpairmentModel.blocked([4]), q_m, math.radians(5))
    assert 4 in b.clamped
    assert "clamped" in caplog.text
    assert b.q_max[4] <= healthy.q_max[4] and b.q_min[4] <= b.q_max[4]


@settings(max_examples=200, deadline=None)
@given(unit, unit, st.floats(0.0, 0.2))
def test_impaired_bounds_nest_inside_healthy(w, frac, zeta):
    healthy = RoMBounds(ROM_MIN, ROM_MAX)
    q_m = ROM_MIN + frac * (ROM_MAX - ROM_MIN)
    b = impaired_bounds(healthy, ImpairmentModel(w), q_m, zeta)
    assert np.all(b.q_min >= healthy.q_min) and np.all(b.q_max <= healthy.q_max)
    assert np.all(b.q_min <= b.q_max)


@settings(max_examples=100, deadline=None)
@given(unit, st.floats(0.0, 0.5))
def test_impaired_width_monotone_in_weight(w, extra):
    healthy = RoMBounds(ROM_MIN, ROM_MAX)
    q_m = 0.5 * (ROM_MIN + ROM_MAX)
    zeta = math.radians(5)
    w2 = np.minimum(w + extra, 1.0)
    narrow = impaired_bounds(healthy, ImpairmentModel(w2), q_m, zeta)
    wide = impaired_bounds(healthy, ImpairmentModel(w), q_m, zeta)
    assert np.all(narrow.width <= wide.width + 1e-12)


@settings(max_examples=200, deadline=None)
@given(vec, vec, vec, unit, st.floats(0.0, 1.0))
def test_gradient_matches_finite_differences(q, q_m, q_n, w, alpha):
    ctx = PostureContext(q_m, q_n, alpha)
    imp = ImpairmentModel(w)
    g = objective_gradient(q, ctx, imp)
    h = 1e-6
    fd = np.array(
        [(objective(q + h * e, ctx, imp) - objective(q - h * e, ctx, imp)) / (2 * h) for e in np.eye(N_JOINTS)]
    )
    assert np.allclose(g, fd, rtol=1e-5, atol=1e-7)


@settings(max_examples=100, deadline=None)
@given(vec, vec, unit, st.floats(0.0, 1.0))
def test_objective_nonnegative_and_zero_at_blend_for_equal_postures(q, q_m, w, alpha):
    ctx = PostureContext(q_m, q_m, alpha)
    imp = ImpairmentModel(w)
    assert objective(q, ctx, imp) >= 0.0
    assert objective(q_m, ctx, imp) == 0.0


def test_closed_form_matches_grid_oracle():
    rng = np.random.default_rng(3)
    for _ in range(5):
        w = rng.uniform(0, 1, N_JOINTS)
        q_m, q_n = rng.uniform(-1, 1, (2, N_JOINTS))
        ctx = PostureContext(q_m, q_n, 0.1)
        got = unconstrained_minimizer(ctx, ImpairmentModel(w))
        ref = brute_objective_blend(w, 0.1, q_m, q_n)
        assert np.allclose(got, ref, atol=2e-5)
        assert np.allclose(objective_gradient(got, ctx, ImpairmentModel(w)), 0.0, atol=1e-12)


def test_closed_form_flat_joint_stays_at_natural():
    ctx = PostureContext(np.ones(N_JOINTS), np.zeros(N_JOINTS), alpha=0.0)
    q = unconstrained_minimizer(ctx, ImpairmentModel.healthy())
    assert np.array_equal(q, np.zeros(N_JOINTS))
