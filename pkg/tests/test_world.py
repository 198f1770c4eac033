"""Unicycle kinematics, wheel mapping, waypoints and world stepping."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from personfollow.errors import InvariantViolation, NonPositiveDt
from personfollow.world import (
    PersonSpec,
    Pose2,
    RobotParams,
    Twist,
    WheelSpeeds,
    initial_world,
    integrate_unicycle,
    step_world,
    twist_to_wheels,
    waypoint_position,
    wheels_to_twist,
    wrap_angle,
)


@pytest.mark.example
def test_straight_line():
    p = integrate_unicycle(Pose2(0, 0, 0), Twist(1, 0), 1)
    assert (p.x, p.y, p.theta) == (1, 0, 0)


@pytest.mark.example
def test_quarter_circle():
    # oracle: radius v/w = 1, a quarter turn from the origin heading +x ends at (1, 1)
    r = (math.pi / 2) / (math.pi / 2)
    assert (r * math.sin(math.pi / 2), r * (1 - math.cos(math.pi / 2))) == pytest.approx((1, 1))
    p = integrate_unicycle(Pose2(0, 0, 0), Twist(math.pi / 2, math.pi / 2), 1)
    assert p.x == pytest.approx(1, abs=1e-9)
    assert p.y == pytest.approx(1, abs=1e-9)
    assert p.theta == pytest.approx(math.pi / 2, abs=1e-9)


@pytest.mark.example
def test_rotation_in_place_wraps_to_pi():
    p = integrate_unicycle(Pose2(0, 0, 0), Twist(0, 1), math.pi)
    assert p.theta == math.pi
    assert (p.x, p.y) == (0, 0)


def test_wrap_angle_half_open_interval():
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)
    assert wrap_angle(0.5) == 0.5


def test_nonpositive_dt():
    with pytest.raises(NonPositiveDt):
        integrate_unicycle(Pose2(), Twist(1, 0), 0)


@pytest.mark.example
def test_wheels_straight():
    assert twist_to_wheels(Twist(1, 0), RobotParams(track_width=0.23, wheel_speed_max=2)) == WheelSpeeds(1, 1)


@pytest.mark.example
def test_wheels_spin():
    # oracle: v -/+ w L / 2 = 0 -/+ 2 * 0.5 / 2
    assert (0 - 2 * 0.5 / 2, 0 + 2 * 0.5 / 2) == (-0.5, 0.5)
    assert twist_to_wheels(Twist(0, 2), RobotParams(track_width=0.5, wheel_speed_max=2)) == WheelSpeeds(-0.5, 0.5)


@pytest.mark.example
def test_wheels_saturate_by_common_factor():
    ws = twist_to_wheels(Twist(1, 0), RobotParams(wheel_speed_max=0.5))
    assert ws == WheelSpeeds(0.5, 0.5)


def test_saturation_preserves_curvature():
    params = RobotParams(wheel_speed_max=0.5)
    cmd = Twist(0.6, 2.0)
    out = wheels_to_twist(twist_to_wheels(cmd, params), params)
    assert out.omega / out.v == pytest.approx(cmd.omega / cmd.v)


WPS = ((0, 0, 0), (10, 10, 0))


@pytest.mark.parametrize("t, xy", [(0, (0, 0)), (5, (5, 0)), (99, (10, 0))])
@pytest.mark.example
def test_waypoints(t, xy):
    assert waypoint_position(PersonSpec(WPS), t) == xy


def test_waypoints_must_increase_in_time():
    with pytest.raises(InvariantViolation):
        PersonSpec(((0, 0, 0), (0, 1, 0)))


def test_world_time_is_exact_tick_multiple():
    dt = 1 / 30
    w = initial_world(Pose2(), [PersonSpec(WPS)], dt=dt)
    for _ in range(300):
        w = step_world(w, [PersonSpec(WPS)], Twist(0, 0))
    assert w.time == 300 * dt
    assert (w.persons[0].x, w.persons[0].y) == waypoint_position(PersonSpec(WPS), 300 * dt)


speed = st.floats(-2, 2, allow_nan=False)
theta = st.floats(-math.pi, math.pi, allow_nan=False)


@given(theta, speed, speed, st.floats(0.001, 1.0))
def test_one_step_equals_two_half_steps(th, v, w, dt):
    p = Pose2(0.3, -0.2, th)
    one = integrate_unicycle(p, Twist(v, w), dt)
    two = integrate_unicycle(integrate_unicycle(p, Twist(v, w), dt / 2), Twist(v, w), dt / 2)
    assert one.x == pytest.approx(two.x, abs=1e-9)
    assert one.y == pytest.approx(two.y, abs=1e-9)
    assert abs(wrap_angle(one.theta - two.theta)) <= 1e-9


@given(st.floats(-0.3, 0.3), st.floats(-1.5, 1.5))
def test_wheel_mapping_round_trip(v, w):
    params = RobotParams()
    ws = twist_to_wheels(Twist(v, w), params)
    if max(abs(ws.v_left), abs(ws.v_right)) < params.wheel_speed_max:
        back = wheels_to_twist(ws, params)
        assert back.v == pytest.approx(v, abs=1e-12)
        assert back.omega == pytest.approx(w, abs=1e-12)


def test_theta_stays_wrapped_over_a_million_steps():
    rng = np.random.default_rng(0)
    vs = rng.uniform(-1, 1, 1_000_000)
    ws = rng.uniform(-10, 10, 1_000_000)
    p = Pose2()
    lo, hi = math.inf, -math.inf
    for v, w in zip(vs.tolist(), ws.tolist()):
        p = integrate_unicycle(p, Twist(v, w), 0.1)
        lo, hi = min(lo, p.theta), max(hi, p.theta)
    assert -math.pi < lo and hi <= math.pi
