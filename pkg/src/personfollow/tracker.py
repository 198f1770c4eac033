"""Single-object bounding-box tracking.

Any tracker usable by the pipeline implements the :class:`Tracker` protocol:
``init`` with the detector's box, then ``update`` once per frame returning
the box estimate for that frame. The built-in :class:`IouTracker` is a
geometric tracker: constant-velocity prediction, IoU-gated blending toward
the best-overlapping detection, and coasting through missed frames.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Protocol, Sequence

from .errors import InvariantViolation, NonPositiveDt
from .geometry import BoundingBox, iou
from .perception import Detection

MIN_SIZE = 2.0


class TrackStatus(str, enum.Enum):
    TRACKING = "Tracking"
    COASTING = "Coasting"
    LOST = "Lost"


@dataclass(frozen=True)
class TrackerConfig:
    gate_iou: float = 0.3
    blend_pos: float = 0.5
    blend_vel: float = 0.3
    coast_limit: int = 45

    def __post_init__(self):
        if not 0.0 < self.gate_iou < 1.0:
            raise InvariantViolation("gate_iou", "must lie in (0, 1)")
        for f in ("blend_pos", "blend_vel"):
            if not 0.0 < getattr(self, f) <= 1.0:
                raise InvariantViolation(f, "must lie in (0, 1]")
        if int(self.coast_limit) != self.coast_limit or self.coast_limit < 1:
            raise InvariantViolation("coast_limit", "must be an integer >= 1")


@dataclass(frozen=True)
class TrackerState:
    bbox: BoundingBox
    vel: tuple[float, float] = (0.0, 0.0)
    size_vel: tuple[float, float] = (0.0, 0.0)
    frames_since_match: int = 0
    status: TrackStatus = TrackStatus.TRACKING
    # last matched measurement; velocities are finite differences between matches
    last_measurement: BoundingBox | None = None


def tracker_init(d: Detection) -> TrackerState:
    return TrackerState(bbox=d.bbox, last_measurement=d.bbox)


def tracker_predict(s: TrackerState, dt: float) -> BoundingBox:
    if not dt > 0:
        raise NonPositiveDt(f"dt must be > 0, got {dt}")
    u, v = s.bbox.center()
    w = max(MIN_SIZE, s.bbox.w + s.size_vel[0] * dt)
    h = max(MIN_SIZE, s.bbox.h + s.size_vel[1] * dt)
    return BoundingBox.from_center(u + s.vel[0] * dt, v + s.vel[1] * dt, w, h)


def _blend(a: float, b: float, gain: float) -> float:
    return a + gain * (b - a)


def tracker_update(
    s: TrackerState, cfg: TrackerConfig, detections: Sequence[Detection], dt: float
) -> tuple[TrackerState, BoundingBox]:
    pred = tracker_predict(s, dt)
    best, best_iou = None, 0.0
    if s.status is not TrackStatus.LOST:
        for d in detections:
            o = iou(pred, d.bbox)
            if o > best_iou:
                best, best_iou = d, o
    if best is None or best_iou < cfg.gate_iou:
        missed = s.frames_since_match + 1
        status = TrackStatus.LOST if missed > cfg.coast_limit else TrackStatus.COASTING
        new = replace(s, bbox=pred, frames_since_match=missed, status=status)
        return new, pred

    m = best.bbox
    pu, pv = pred.center()
    mu, mv = m.center()
    g = cfg.blend_pos
    bbox = BoundingBox.from_center(
        _blend(pu, mu, g),
        _blend(pv, mv, g),
        max(MIN_SIZE, _blend(pred.w, m.w, g)),
        max(MIN_SIZE, _blend(pred.h, m.h, g)),
    )
    last = s.last_measurement if s.last_measurement is not None else s.bbox
    elapsed = (s.frames_since_match + 1) * dt
    lu, lv = last.center()
    gv = cfg.blend_vel
    vel = (_blend(s.vel[0], (mu - lu) / elapsed, gv), _blend(s.vel[1], (mv - lv) / elapsed, gv))
    size_vel = (
        _blend(s.size_vel[0], (m.w - last.w) / elapsed, gv),
        _blend(s.size_vel[1], (m.h - last.h) / elapsed, gv),
    )
    new = TrackerState(bbox, vel, size_vel, 0, TrackStatus.TRACKING, m)
    return new, bbox


class Tracker(Protocol):
    """What the pipeline needs from a tracker."""

    status: TrackStatus

    def init(self, detection: Detection) -> None: ...

    def update(self, detections: Sequence[Detection], dt: float) -> BoundingBox: ...


class IouTracker:
    """Stateful wrapper around the pure tracker transition functions."""

    def __init__(self, config: TrackerConfig | None = None):
        self.config = config or TrackerConfig()
        self.state: TrackerState | None = None

    @property
    def status(self) -> TrackStatus:
        return TrackStatus.LOST if self.state is None else self.state.status

    def init(self, detection: Detection) -> None:
        self.state = tracker_init(detection)

    def update(self, detections: Sequence[Detection], dt: float) -> BoundingBox:
        if self.state is None:
            raise RuntimeError("tracker used before init()")
        self.state, box = tracker_update(self.state, self.config, detections, dt)
        return box
