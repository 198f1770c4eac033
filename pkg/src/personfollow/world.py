"""Deterministic ground-plane world: differential-drive robot and scripted actors."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace

from .errors import InvariantViolation, NonPositiveDt

TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    a = math.remainder(theta, TWO_PI)
    if a <= -math.pi:
        a += TWO_PI
    return a


@dataclass(frozen=True)
class Pose2:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(self.theta))


@dataclass(frozen=True)
class Twist:
    v: float = 0.0
    omega: float = 0.0


@dataclass(frozen=True)
class WheelSpeeds:
    v_left: float
    v_right: float


@dataclass(frozen=True)
class RobotParams:
    # Kobuki-like defaults; the camera sits on a mast so heads stay in view.
    track_width: float = 0.23
    v_max: float = 0.7
    omega_max: float = 3.14
    wheel_speed_max: float = 0.7
    camera_height: float = 1.2

    def __post_init__(self):
        for f in ("track_width", "v_max", "omega_max", "wheel_speed_max", "camera_height"):
            if not getattr(self, f) > 0:
                raise InvariantViolation(f, "must be > 0")


@dataclass(frozen=True)
class PersonSpec:
    """A scripted actor: piecewise-linear path through (t, x, y) waypoints.

    The body is a vertical plan-view segment of ``body_width`` metres that
    always faces the robot, reaching up to the bottom of the head.
    """

    waypoints: tuple[tuple[float, float, float], ...]
    head_height: float = 1.7
    head_radius: float = 0.11
    body_width: float = 0.45

    def __post_init__(self):
        wps = tuple(tuple(float(c) for c in wp) for wp in self.waypoints)
        object.__setattr__(self, "waypoints", wps)
        if not wps:
            raise InvariantViolation("waypoints", "need at least one waypoint")
        if any(len(wp) != 3 for wp in wps):
            raise InvariantViolation("waypoints", "each waypoint is [t, x, y]")
        ts = [wp[0] for wp in wps]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise InvariantViolation("waypoints", "times must be strictly increasing")
        if not self.head_radius > 0:
            raise InvariantViolation("head_radius", "must be > 0")
        if not self.head_height > self.head_radius:
            raise InvariantViolation("head_height", "must exceed head_radius")
        if self.body_width < 0:
            raise InvariantViolation("body_width", "must be >= 0")


@dataclass(frozen=True)
class Occluder:
    """Vertical wall segment in plan view, from the ground up to ``height``."""

    x1: float
    y1: float
    x2: float
    y2: float
    height: float

    def __post_init__(self):
        if not self.height > 0:
            raise InvariantViolation("height", "must be > 0")
        if self.x1 == self.x2 and self.y1 == self.y2:
            raise InvariantViolation("occluder", "segment has zero length")


@dataclass(frozen=True)
class PersonState:
    x: float
    y: float
    head_height: float
    head_radius: float
    body_width: float


@dataclass(frozen=True)
class WorldState:
    tick: int
    dt: float
    robot: Pose2
    persons: tuple[PersonState, ...]
    occluders: tuple[Occluder, ...] = field(default=())

    @property
    def time(self) -> float:
        return self.tick * self.dt


def integrate_unicycle(p: Pose2, cmd: Twist, dt: float) -> Pose2:
    """Exact constant-twist arc integration over ``dt``."""
    if not dt > 0:
        raise NonPositiveDt(f"dt must be > 0, got {dt}")
    v, w = cmd.v, cmd.omega
    if abs(w) < 1e-9:
        return Pose2(p.x + v * dt * math.cos(p.theta), p.y + v * dt * math.sin(p.theta), p.theta)
    th1 = p.theta + w * dt
    r = v / w
    return Pose2(
        p.x + r * (math.sin(th1) - math.sin(p.theta)),
        p.y - r * (math.cos(th1) - math.cos(p.theta)),
        th1,
    )


def twist_to_wheels(cmd: Twist, params: RobotParams) -> WheelSpeeds:
    """Map (v, omega) to rim speeds, saturating both wheels by a common factor."""
    half = cmd.omega * params.track_width / 2.0
    vl, vr = cmd.v - half, cmd.v + half
    peak = max(abs(vl), abs(vr))
    if peak > params.wheel_speed_max:
        s = params.wheel_speed_max / peak
        vl, vr = vl * s, vr * s
    return WheelSpeeds(vl, vr)


def wheels_to_twist(ws: WheelSpeeds, params: RobotParams) -> Twist:
    return Twist((ws.v_left + ws.v_right) / 2.0, (ws.v_right - ws.v_left) / params.track_width)


def waypoint_position(spec: PersonSpec, t: float) -> tuple[float, float]:
    wps = spec.waypoints
    if t <= wps[0][0]:
        return (wps[0][1], wps[0][2])
    if t >= wps[-1][0]:
        return (wps[-1][1], wps[-1][2])
    i = bisect.bisect_right([wp[0] for wp in wps], t)
    t0, x0, y0 = wps[i - 1]
    t1, x1, y1 = wps[i]
    a = (t - t0) / (t1 - t0)
    return (x0 + a * (x1 - x0), y0 + a * (y1 - y0))


def person_state(spec: PersonSpec, t: float) -> PersonState:
    x, y = waypoint_position(spec, t)
    return PersonState(x, y, spec.head_height, spec.head_radius, spec.body_width)


def initial_world(
    robot: Pose2,
    persons: list[PersonSpec] | tuple[PersonSpec, ...],
    occluders=(),
    dt: float = 1.0 / 30.0,
) -> WorldState:
    if not dt > 0:
        raise NonPositiveDt(f"dt must be > 0, got {dt}")
    return WorldState(
        tick=0,
        dt=dt,
        robot=robot,
        persons=tuple(person_state(s, 0.0) for s in persons),
        occluders=tuple(occluders),
    )


def step_world(state: WorldState, persons, cmd: Twist) -> WorldState:
    """Advance robot and actors by one tick of ``state.dt``."""
    tick = state.tick + 1
    t = tick * state.dt
    return replace(
        state,
        tick=tick,
        robot=integrate_unicycle(state.robot, cmd, state.dt),
        persons=tuple(person_state(s, t) for s in persons),
    )
