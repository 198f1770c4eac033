"""Two-PID visual servo for a differential-drive follower.

The angular loop drives the target's normalized horizontal image offset to
zero; the linear loop drives the smoothed target depth to the following
distance. Each loop has a hysteretic deadband: it engages once its error
leaves the band and releases (resetting its PID) once the error has been
driven down to ``release_ratio`` times the band.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

from .errors import InvariantViolation, NonPositiveDepth, NonPositiveDt
from .estimation import DepthEstimate
from .geometry import BoundingBox, CameraIntrinsics
from .tracker import TrackStatus
from .world import RobotParams, Twist


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


@dataclass(frozen=True)
class PidConfig:
    kp: float = 0.0
    ki: float = 0.0
    kd: float = 0.0
    i_min: float = -math.inf
    i_max: float = math.inf
    out_min: float = -math.inf
    out_max: float = math.inf
    deriv_on_measurement: bool = True

    def __post_init__(self):
        for f in ("kp", "ki", "kd"):
            if not getattr(self, f) >= 0:
                raise InvariantViolation(f, "gains must be >= 0")
        if not self.i_min <= 0.0 <= self.i_max:
            raise InvariantViolation("i_min", "need i_min <= 0 <= i_max")
        if not self.out_min < self.out_max:
            raise InvariantViolation("out_min", "need out_min < out_max")


@dataclass(frozen=True)
class PidState:
    integral: float = 0.0
    prev_error: float = 0.0
    prev_measurement: float = 0.0
    primed: bool = False


def pid_step(
    s: PidState, cfg: PidConfig, error: float, measurement: float, dt: float
) -> tuple[PidState, float]:
    """One discrete PID update with conditional-integration anti-windup.

    ``error`` is taken as setpoint minus ``measurement``; the derivative term
    relies on that sign convention when ``deriv_on_measurement`` is set.
    """
    if not dt > 0:
        raise NonPositiveDt(f"dt must be > 0, got {dt}")
    p = cfg.kp * error
    if not s.primed:
        d = 0.0
    elif cfg.deriv_on_measurement:
        d = -cfg.kd * (measurement - s.prev_measurement) / dt
    else:
        d = cfg.kd * (error - s.prev_error) / dt

    raw = p + s.integral + d
    saturating = (raw > cfg.out_max and error > 0) or (raw < cfg.out_min and error < 0)
    integral = s.integral
    if not saturating:
        integral = _clamp(integral + cfg.ki * error * dt, cfg.i_min, cfg.i_max)

    out = _clamp(p + integral + d, cfg.out_min, cfg.out_max)
    return PidState(integral, error, measurement, True), out


class LostPolicy(str, enum.Enum):
    STOP = "Stop"
    HOLD_LAST_OMEGA = "HoldLastOmega"


def _default_angular() -> PidConfig:
    return PidConfig(kp=1.2, ki=0.1, kd=0.05, i_min=-0.5, i_max=0.5, out_min=-3.14, out_max=3.14)


def _default_linear() -> PidConfig:
    return PidConfig(kp=1.2, ki=0.05, kd=0.0, i_min=-0.3, i_max=0.3, out_min=-0.7, out_max=0.7)


@dataclass(frozen=True)
class ServoConfig:
    angular_pid: PidConfig = field(default_factory=_default_angular)
    linear_pid: PidConfig = field(default_factory=_default_linear)
    d_ref: float = 1.5
    bearing_deadband: float = 0.03
    distance_deadband: float = 0.05
    release_ratio: float = 0.2
    lost_policy: LostPolicy = LostPolicy.STOP
    search_rate: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "lost_policy", LostPolicy(self.lost_policy))
        if not self.d_ref > 0:
            raise InvariantViolation("d_ref", "must be > 0")
        for f in ("bearing_deadband", "distance_deadband", "search_rate"):
            if not getattr(self, f) >= 0:
                raise InvariantViolation(f, "must be >= 0")
        if not 0.0 <= self.release_ratio <= 1.0:
            raise InvariantViolation("release_ratio", "must lie in [0, 1]")


@dataclass(frozen=True)
class ServoState:
    angular: PidState = PidState()
    linear: PidState = PidState()
    angular_engaged: bool = False
    linear_engaged: bool = False
    last_omega: float = 0.0


def angular_error(b: BoundingBox, k: CameraIntrinsics) -> float:
    """Normalized horizontal offset of the box centre; positive = right of centre."""
    half = k.width / 2.0
    return _clamp((b.center()[0] - half) / half, -1.0, 1.0)


def linear_error(depth: float, cfg: ServoConfig) -> float:
    """Depth minus following distance; positive = target too far."""
    if not depth > 0:
        raise NonPositiveDepth(f"depth must be > 0, got {depth}")
    return depth - cfg.d_ref


def _gate(engaged: bool, error: float, band: float, release: float) -> bool:
    if engaged:
        return abs(error) > release
    return abs(error) > band


def servo_step(
    servo: ServoState,
    cfg: ServoConfig,
    bbox: BoundingBox | None,
    depth: DepthEstimate | None,
    status: TrackStatus,
    dt: float,
    k: CameraIntrinsics,
    limits: RobotParams,
) -> tuple[ServoState, Twist]:
    if not dt > 0:
        raise NonPositiveDt(f"dt must be > 0, got {dt}")
    if status is TrackStatus.LOST or bbox is None:
        if cfg.lost_policy is LostPolicy.HOLD_LAST_OMEGA:
            sign = -1.0 if servo.last_omega < 0 else 1.0
            omega = _clamp(sign * cfg.search_rate, -limits.omega_max, limits.omega_max)
            return ServoState(last_omega=servo.last_omega), Twist(0.0, omega)
        return ServoState(last_omega=servo.last_omega), Twist(0.0, 0.0)

    # both errors are "measurement minus setpoint", so the PIDs see -measurement
    e_ang = angular_error(bbox, k)
    ang_on = _gate(servo.angular_engaged, e_ang, cfg.bearing_deadband,
                   cfg.bearing_deadband * cfg.release_ratio)
    if status is TrackStatus.COASTING and not servo.angular_engaged:
        # a coasting prediction may keep a turn going but never starts one
        ang_on = False
    if ang_on:
        ang_state, u_ang = pid_step(servo.angular, cfg.angular_pid, e_ang, -e_ang, dt)
        omega = _clamp(-u_ang, -limits.omega_max, limits.omega_max)
    else:
        ang_state, omega = PidState(), 0.0

    # while coasting the box is a prediction and depth may be the occluder's:
    # hold still, but keep the linear loop's memory for when the match returns
    lin_on, lin_state, v = servo.linear_engaged, servo.linear, 0.0
    if status is not TrackStatus.TRACKING:
        pass
    elif depth is None or not depth.initialized:
        lin_on, lin_state = False, PidState()
    else:
        e_lin = linear_error(depth.smoothed, cfg)
        lin_on = _gate(servo.linear_engaged, e_lin, cfg.distance_deadband,
                       cfg.distance_deadband * cfg.release_ratio)
        if lin_on:
            lin_state, u_lin = pid_step(servo.linear, cfg.linear_pid, e_lin, -depth.smoothed, dt)
            v = _clamp(u_lin, -limits.v_max, limits.v_max)

    last = omega if omega != 0.0 else servo.last_omega
    new = replace(
        servo,
        angular=ang_state,
        linear=lin_state,
        angular_engaged=ang_on,
        linear_engaged=lin_on,
        last_omega=last,
    )
    return new, Twist(v, omega)
