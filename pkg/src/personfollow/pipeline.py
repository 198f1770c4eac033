"""Closed-loop person following: detect -> track -> depth -> control -> actuate."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .config import ScenarioConfig
from .control import ServoState, angular_error, linear_error, servo_step
from .errors import AcquisitionTimeout, EmptyIntersection, EmptyTrace, NoDetections, NoValidSamples
from .estimation import DepthEstimate, ewma_update, median_depth
from .geometry import BoundingBox, CameraPoint, project_head_bbox, project_point
from .perception import (
    Detection,
    build_scene,
    detect_heads,
    sample_depth_patch,
    target_occlusion,
    to_camera,
)
from .tracker import IouTracker, TrackStatus
from .world import Pose2, initial_world, step_world, twist_to_wheels, wheels_to_twist

# Trace-only status: no track exists yet (or any more) and the detector is being polled.
SEARCHING = "Searching"

STAGES = ("detect", "track", "depth", "control", "actuate")


@dataclass(frozen=True)
class TraceRecord:
    """One simulation step. Field order is the CSV column order."""

    time: float
    robot_x: float
    robot_y: float
    robot_theta: float
    target_x: float
    target_y: float
    status: str
    bbox_x: float | None
    bbox_y: float | None
    bbox_w: float | None
    bbox_h: float | None
    raw_median: float | None
    smoothed: float | None
    e_ang: float | None
    e_lin: float | None
    v: float
    omega: float
    v_left: float
    v_right: float
    occlusion_fraction: float

    @property
    def bbox(self) -> BoundingBox | None:
        if self.bbox_x is None:
            return None
        return BoundingBox(self.bbox_x, self.bbox_y, self.bbox_w, self.bbox_h)

    @property
    def pose(self) -> Pose2:
        return Pose2(self.robot_x, self.robot_y, self.robot_theta)


@dataclass
class Metrics:
    mean_abs_bearing_error: float
    mean_abs_distance_error: float
    pct_target_in_fov: float
    time_to_reacquire: list = field(default_factory=list)
    control_smoothness: float = 0.0
    steps_lost: int = 0

    def to_dict(self) -> dict:
        return {
            "mean_abs_bearing_error": self.mean_abs_bearing_error,
            "mean_abs_distance_error": self.mean_abs_distance_error,
            "pct_target_in_fov": self.pct_target_in_fov,
            "time_to_reacquire": list(self.time_to_reacquire),
            "control_smoothness": self.control_smoothness,
            "steps_lost": self.steps_lost,
        }


def select_target(detections: Sequence[Detection]) -> Detection:
    """Highest-confidence detection; ties go to the leftmost, then topmost box."""
    if not detections:
        raise NoDetections("no detections to select from")
    return min(detections, key=lambda d: (-d.confidence, d.bbox.x, d.bbox.y))


def target_camera_point(cfg: ScenarioConfig, pose: Pose2, x: float, y: float) -> CameraPoint:
    return to_camera(pose, cfg.robot, x, y, cfg.target.head_height)


def ground_truth_bbox(cfg: ScenarioConfig, rec: TraceRecord) -> BoundingBox | None:
    """Noise-free head box of the intended target at a trace step, if in front of the camera."""
    c = target_camera_point(cfg, rec.pose, rec.target_x, rec.target_y)
    if c.Z <= cfg.target.head_radius:
        return None
    return project_head_bbox(cfg.camera, c, cfg.target.head_radius)


def target_in_fov(cfg: ScenarioConfig, rec: TraceRecord) -> bool:
    c = target_camera_point(cfg, rec.pose, rec.target_x, rec.target_y)
    if c.Z <= cfg.target.head_radius:
        return False
    u, _ = project_point(cfg.camera, c)
    return 0.0 <= u < cfg.camera.width


def _opt(box: BoundingBox | None, attr: str):
    return None if box is None else getattr(box, attr)


def run_scenario(
    cfg: ScenarioConfig,
    on_stage: Callable[[str], None] | None = None,
) -> tuple[list[TraceRecord], Metrics]:
    """Run the full follow loop for ``cfg.duration`` seconds.

    ``on_stage`` is called with each stage name in ``STAGES`` as it executes.
    """
    log = on_stage or (lambda _stage: None)
    rng = np.random.default_rng(cfg.seed)
    cam, robot, dt = cfg.camera, cfg.robot, cfg.dt
    world = initial_world(cfg.initial_pose, cfg.persons, cfg.occluders, dt)
    tracker = IouTracker(cfg.tracker)
    tracking = False
    search_start = 0
    est = DepthEstimate(alpha=cfg.estimation.alpha)
    servo = ServoState()
    trace: list[TraceRecord] = []

    for step in range(cfg.n_steps):
        scene = build_scene(world, robot)
        detections = detect_heads(world, cam, robot, cfg.noise, rng, scene)
        log("detect")

        bbox = None
        if tracking:
            bbox = tracker.update(detections, dt)
            status = tracker.status.value
        else:
            try:
                chosen = select_target(detections)
            except NoDetections:
                if (step - search_start) * dt >= cfg.max_acquire_seconds:
                    err = AcquisitionTimeout(
                        f"no target acquired within {cfg.max_acquire_seconds} s (t={step * dt:.3f} s)"
                    )
                    err.trace = trace
                    raise err from None
                status = SEARCHING
            else:
                tracker.init(chosen)
                tracking = True
                bbox = chosen.bbox
                status = TrackStatus.TRACKING.value
                est = DepthEstimate(alpha=cfg.estimation.alpha)
        log("track")

        raw = None
        if bbox is not None and status != TrackStatus.LOST.value:
            try:
                patch = sample_depth_patch(
                    world, bbox, cam, robot, cfg.noise, rng, cfg.estimation.stride, scene
                )
                raw = median_depth(patch)
            except (EmptyIntersection, NoValidSamples):
                raw = None
            # coasting medians may be the occluder's depth; the estimate is held
            if raw is not None and status == TrackStatus.TRACKING.value:
                est = ewma_update(est, raw)
        log("depth")

        servo_status = TrackStatus.LOST if status == SEARCHING else TrackStatus(status)
        servo, twist = servo_step(servo, cfg.servo, bbox, est, servo_status, dt, cam, robot)
        wheels = twist_to_wheels(twist, robot)
        log("control")

        e_ang = angular_error(bbox, cam) if bbox is not None else None
        e_lin = linear_error(est.smoothed, cfg.servo) if est.initialized and bbox is not None else None
        target = world.persons[cfg.target_index]
        trace.append(
            TraceRecord(
                time=world.time,
                robot_x=world.robot.x,
                robot_y=world.robot.y,
                robot_theta=world.robot.theta,
                target_x=target.x,
                target_y=target.y,
                status=status,
                bbox_x=_opt(bbox, "x"),
                bbox_y=_opt(bbox, "y"),
                bbox_w=_opt(bbox, "w"),
                bbox_h=_opt(bbox, "h"),
                raw_median=raw,
                smoothed=est.smoothed if est.initialized else None,
                e_ang=e_ang,
                e_lin=e_lin,
                v=twist.v,
                omega=twist.omega,
                v_left=wheels.v_left,
                v_right=wheels.v_right,
                occlusion_fraction=target_occlusion(world, robot, cfg.target_index, scene),
            )
        )

        world = step_world(world, cfg.persons, wheels_to_twist(wheels, robot))
        log("actuate")

        if status == TrackStatus.LOST.value:
            tracking = False
            search_start = step + 1

    return trace, compute_metrics(trace, cfg)


def compute_metrics(trace: Sequence[TraceRecord], cfg: ScenarioConfig) -> Metrics:
    if not trace:
        raise EmptyTrace("cannot compute metrics of an empty trace")
    tracked = [r for r in trace if r.status == TrackStatus.TRACKING.value]
    bearing = [abs(r.e_ang) for r in tracked if r.e_ang is not None]
    dist = [abs(r.e_lin) for r in tracked if r.e_lin is not None]
    in_fov = sum(1 for r in trace if target_in_fov(cfg, r))

    threshold = cfg.noise.occlusion_drop_threshold
    reacquire = []
    start = None
    for r in trace:
        if start is None:
            if r.occlusion_fraction > threshold:
                start = r.time
        elif r.status == TrackStatus.TRACKING.value:
            reacquire.append(r.time - start)
            start = None
    if start is not None:
        reacquire.append(None)  # occlusion event never resolved within the run

    if len(trace) > 1:
        dv = np.abs(np.diff([r.v for r in trace]))
        dw = np.abs(np.diff([r.omega for r in trace]))
        smooth = float(dv.mean() + dw.mean())
    else:
        smooth = 0.0

    lost = sum(1 for r in trace if r.status in (TrackStatus.LOST.value, SEARCHING))
    return Metrics(
        mean_abs_bearing_error=float(np.mean(bearing)) if bearing else 0.0,
        mean_abs_distance_error=float(np.mean(dist)) if dist else 0.0,
        pct_target_in_fov=100.0 * in_fov / len(trace),
        time_to_reacquire=reacquire,
        control_smoothness=smooth,
        steps_lost=lost,
    )


def head_distance(cfg: ScenarioConfig, rec: TraceRecord) -> float:
    """True forward (camera Z) distance to the target's head centre."""
    return target_camera_point(cfg, rec.pose, rec.target_x, rec.target_y).Z


__all__ = [
    "Metrics",
    "SEARCHING",
    "STAGES",
    "TraceRecord",
    "compute_metrics",
    "ground_truth_bbox",
    "head_distance",
    "run_scenario",
    "select_target",
    "target_in_fov",
]
