import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from rlgl.dynamics import clamp_input, propagate, step
from rlgl.model import RobotState, Status
from rlgl.nominal import estimated_braking_time_axis

from oracles import euler_step

KL, KU = 0.0141, 0.2368


def test_clamp_interior():
    assert np.array_equal(clamp_input((0.1, 0.2), 0.5), [0.1, 0.2])


def test_clamp_both_axes():
    assert np.array_equal(clamp_input((0.9, -0.7), 0.5), [0.5, -0.5])


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(0.01, 5))
def test_clamp_idempotent(ux, uy, U):
    once = clamp_input((ux, uy), U)
    assert np.array_equal(clamp_input(once, U), once)
    assert np.all(np.abs(once) <= U)


def test_free_decay_example():
    s = step(RobotState((0, 0), (1, 0)), (0, 0), 0.1, 1.0)
    assert s.v[0] == pytest.approx(math.exp(-0.1), rel=1e-15)
    assert s.v[1] == 0.0
    assert s.v[0] == pytest.approx(0.904837, abs=1e-6)
    _, v_ref = euler_step((0, 0), (1, 0), (0, 0), 0.1, 1.0)
    assert np.max(np.abs(s.v - v_ref)) <= 1e-6


def test_friction_cancelling_input_is_equilibrium():
    v = np.array([0.7, -1.3])
    kappa = 0.05
    s = step(RobotState((1, 2), v), kappa * v, kappa, 0.37)
    assert np.allclose(s.v, v, rtol=1e-15, atol=0)


def test_braking_time_round_trip():
    """Accelerate, then brake at full authority with the lowest friction:
    the stopping time equals the closed-form braking estimate."""
    U = 0.3
    p, v = propagate(np.zeros(2), np.zeros(2), np.array([0.0, U]), KL, 5.0)
    t_hat = estimated_braking_time_axis(v[1], U, KL)

    def vy_after(t):
        return propagate(p, v, np.array([0.0, -U]), KL, t)[1][1]

    t_stop = brentq(vy_after, 1e-9, 2 * t_hat + 1, xtol=1e-14)
    assert abs(t_stop - t_hat) <= 1e-9


def test_eliminated_robot_does_not_move():
    s = RobotState((1, 1), (0, 0), Status.ELIMINATED, 3.0)
    assert step(s, (0.5, 0.5), 0.1, 0.01) is s


def test_rejects_bad_step():
    with pytest.raises(ValueError):
        step(RobotState((0, 0), (0, 0)), (0, 0), 0.1, 0.0)


def random_steps(n, seed):
    rng = np.random.default_rng(seed)
    p = rng.uniform(-20, 20, (n, 2))
    v = rng.uniform(-2, 2, (n, 2))
    u = rng.uniform(-0.5, 0.5, (n, 2))
    kappa = rng.uniform(KL, KU, n)
    dt = rng.uniform(1e-3, 2.0, n)
    return p, v, u, kappa, dt


def test_free_decay_property():
    p, v, _, kappa, dt = random_steps(1000, 1)
    for k in range(1000):
        _, v1 = propagate(p[k], v[k], np.zeros(2), kappa[k], dt[k])
        expected = math.exp(-kappa[k] * dt[k]) * np.hypot(*v[k])
        assert abs(np.hypot(*v1) - expected) <= 1e-12 * expected


def test_semigroup_property():
    p, v, u, kappa, dt = random_steps(1000, 2)
    rng = np.random.default_rng(3)
    split = rng.uniform(0, 1, 1000)
    for k in range(1000):
        a, b = dt[k] * split[k], dt[k] * (1 - split[k])
        p1, v1 = propagate(*propagate(p[k], v[k], u[k], kappa[k], a), u[k], kappa[k], b)
        p2, v2 = propagate(p[k], v[k], u[k], kappa[k], a + b)
        scale_p = 1 + np.abs(p2).max()
        scale_v = 1 + np.abs(v2).max()
        assert np.abs(p1 - p2).max() <= 1e-12 * scale_p
        assert np.abs(v1 - v2).max() <= 1e-12 * scale_v


@settings(max_examples=200)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.2, 0.5), st.floats(KL, KU),
       st.floats(1e-3, 10))
def test_terminal_speed_is_invariant(sv, su, U, kappa, dt):
    v = sv * U / kappa
    u = su * U
    _, v1 = propagate(np.zeros(2), np.array([v, -v]), np.array([u, -u]), kappa, dt)
    assert np.all(np.abs(v1) <= U / kappa * (1 + 1e-12))


def test_matches_fine_euler():
    p, v, u, kappa, dt = random_steps(20, 4)
    dt = np.minimum(dt, 0.05)
    for k in range(20):
        p1, v1 = propagate(p[k], v[k], u[k], kappa[k], dt[k])
        p2, v2 = euler_step(p[k], v[k], u[k], kappa[k], dt[k])
        assert np.abs(p1 - p2).max() <= 1e-6
        assert np.abs(v1 - v2).max() <= 1e-6
