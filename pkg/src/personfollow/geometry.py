"""Pinhole / stereo camera math and bounding-box algebra.

Camera frame: Z forward, X right, Y down. All boxes are continuous-valued
(top-left corner plus extents, in pixels).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import (
    DegenerateBox,
    InvariantViolation,
    NonPositiveDepth,
    NonPositiveDisparity,
)


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float = 525.0
    fy: float = 525.0
    cx: float = 320.0
    cy: float = 240.0
    width: int = 640
    height: int = 480
    baseline: float = 0.12

    def __post_init__(self):
        for name in ("fx", "fy", "width", "height", "baseline"):
            if not getattr(self, name) > 0:
                raise InvariantViolation(name, "must be > 0")
        if not 0 <= self.cx < self.width:
            raise InvariantViolation("cx", "must lie in [0, width)")
        if not 0 <= self.cy < self.height:
            raise InvariantViolation("cy", "must lie in [0, height)")

    @property
    def hfov(self) -> float:
        """Horizontal field of view in radians."""
        return math.atan2(self.cx, self.fx) + math.atan2(self.width - self.cx, self.fx)


@dataclass(frozen=True)
class BoundingBox:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise DegenerateBox(f"box extents must be positive, got w={self.w}, h={self.h}")

    @classmethod
    def from_center(cls, u: float, v: float, w: float, h: float) -> BoundingBox:
        return cls(u - w / 2.0, v - h / 2.0, w, h)

    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h


@dataclass(frozen=True)
class CameraPoint:
    X: float
    Y: float
    Z: float


def project_point(k: CameraIntrinsics, p: CameraPoint) -> tuple[float, float]:
    """Pinhole projection. The result may fall outside the image."""
    if not p.Z > 0:
        raise NonPositiveDepth(f"cannot project point with Z={p.Z}")
    return (k.fx * p.X / p.Z + k.cx, k.fy * p.Y / p.Z + k.cy)


def back_project(k: CameraIntrinsics, u: float, v: float, Z: float) -> CameraPoint:
    if not Z > 0:
        raise NonPositiveDepth(f"cannot back-project at Z={Z}")
    return CameraPoint((u - k.cx) * Z / k.fx, (v - k.cy) * Z / k.fy, Z)


def depth_from_disparity(k: CameraIntrinsics, d: float) -> float:
    if not d > 0:
        raise NonPositiveDisparity(f"disparity must be > 0, got {d}")
    return k.fx * k.baseline / d


def disparity_from_depth(k: CameraIntrinsics, Z: float) -> float:
    if not Z > 0:
        raise NonPositiveDepth(f"depth must be > 0, got {Z}")
    return k.fx * k.baseline / Z


def project_head_bbox(k: CameraIntrinsics, center: CameraPoint, radius: float) -> BoundingBox:
    """Image box of a spherical head.

    Uses the small-sphere approximation: the box is centred on the projected
    centre with side 2*f*r/Z. The error against the exact conic outline is
    O((r/Z)^2), negligible at following distances.
    """
    if not center.Z > radius:
        raise NonPositiveDepth(f"head centre Z={center.Z} must exceed radius {radius}")
    u, v = project_point(k, center)
    w = 2.0 * k.fx * radius / center.Z
    h = 2.0 * k.fy * radius / center.Z
    return BoundingBox.from_center(u, v, w, h)


def intersection(a: BoundingBox, b: BoundingBox) -> float:
    iw = min(a.x2, b.x2) - max(a.x, b.x)
    ih = min(a.y2, b.y2) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    return iw * ih


def iou(a: BoundingBox, b: BoundingBox) -> float:
    inter = intersection(a, b)
    if inter == 0.0:
        return 0.0
    if a == b:
        return 1.0
    union = a.area + b.area - inter
    return min(1.0, max(0.0, inter / union))


def clip_to_image(b: BoundingBox, k: CameraIntrinsics) -> BoundingBox | None:
    """Intersection of the box with the image rectangle, or None if empty."""
    x1, y1 = max(b.x, 0.0), max(b.y, 0.0)
    x2, y2 = min(b.x2, float(k.width)), min(b.y2, float(k.height))
    if x2 <= x1 or y2 <= y1:
        return None
    return BoundingBox(x1, y1, x2 - x1, y2 - y1)
