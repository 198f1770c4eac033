"""Synthetic stereo camera and head detector.

Everything here works in the camera frame (Z forward, X right, Y down) of a
level camera mounted ``camera_height`` above the robot's origin. The scene is
made of head spheres and vertical rectangles (walls, person bodies), and a
single ray caster serves occlusion tests and depth sampling alike.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyIntersection, InvariantViolation, NonPositiveDepth
from .geometry import (
    BoundingBox,
    CameraIntrinsics,
    CameraPoint,
    clip_to_image,
    project_head_bbox,
    project_point,
)
from .world import Pose2, RobotParams, WorldState

BASE_CONFIDENCE = 0.9
OCCLUSION_RAYS = 21
MAX_RANGE = 20.0


@dataclass(frozen=True)
class Detection:
    bbox: BoundingBox
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise InvariantViolation("confidence", "must lie in [0, 1]")


@dataclass(frozen=True)
class NoiseModel:
    pixel_sigma: float = 0.5
    depth_sigma0: float = 0.01
    depth_k: float = 0.01
    miss_rate: float = 0.02
    occlusion_drop_threshold: float = 0.5
    confidence_sigma: float = 0.02

    def __post_init__(self):
        for f in ("pixel_sigma", "depth_sigma0", "depth_k", "miss_rate", "confidence_sigma"):
            if not getattr(self, f) >= 0:
                raise InvariantViolation(f, "must be >= 0")
        if not 0.0 <= self.miss_rate <= 1.0:
            raise InvariantViolation("miss_rate", "must lie in [0, 1]")
        if not 0.0 <= self.occlusion_drop_threshold <= 1.0:
            raise InvariantViolation("occlusion_drop_threshold", "must lie in [0, 1]")

    @classmethod
    def noiseless(cls) -> NoiseModel:
        return cls(0.0, 0.0, 0.0, 0.0, 0.5, 0.0)

    def depth_sigma(self, z):
        return self.depth_sigma0 + self.depth_k * z * z


@dataclass
class DepthPatch:
    """Depth samples on a stride grid inside a box; invalid cells hold NaN."""

    samples: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.samples.shape != self.valid.shape or self.samples.size == 0:
            raise InvariantViolation("samples", "shape mismatch or empty patch")
        good = self.samples[self.valid]
        if not (np.all(np.isfinite(good)) and np.all(good > 0)):
            raise InvariantViolation("samples", "valid samples must be finite and > 0")

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    def valid_samples(self) -> np.ndarray:
        return self.samples[self.valid]


@dataclass(frozen=True)
class Wall:
    """Vertical rectangle in the camera frame.

    Plan-view endpoints (X1, Z1)-(X2, Z2); spans camera-frame Y from
    ``y_top`` (upper edge, smaller Y) to ``y_bottom``.
    """

    X1: float
    Z1: float
    X2: float
    Z2: float
    y_top: float
    y_bottom: float


@dataclass
class Scene:
    walls: list[Wall] = field(default_factory=list)
    spheres: list[tuple[CameraPoint, float]] = field(default_factory=list)
    wall_owner: list[int] = field(default_factory=list)
    sphere_owner: list[int] = field(default_factory=list)

    def without(self, owner: int) -> Scene:
        """Scene minus everything belonging to actor ``owner``."""
        walls = [(w, o) for w, o in zip(self.walls, self.wall_owner) if o != owner]
        spheres = [(s, o) for s, o in zip(self.spheres, self.sphere_owner) if o != owner]
        return Scene(
            [w for w, _ in walls],
            [s for s, _ in spheres],
            [o for _, o in walls],
            [o for _, o in spheres],
        )

    def cast(self, dirs: np.ndarray) -> np.ndarray:
        """Ray parameter t of the nearest hit for rays ``t * dirs`` from the origin.

        Returns inf where nothing is hit.
        """
        dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
        best = np.full(dirs.shape[0], np.inf)
        if self.spheres:
            C = np.array([[c.X, c.Y, c.Z] for c, _ in self.spheres])
            r = np.array([rad for _, rad in self.spheres])
            a = np.einsum("ij,ij->i", dirs, dirs)[:, None]
            b = dirs @ C.T
            c = np.einsum("ij,ij->i", C, C) - r * r
            disc = b * b - a * c[None, :]
            with np.errstate(invalid="ignore"):
                t = (b - np.sqrt(disc)) / a
            t = np.where((disc >= 0) & (t > 0) & (c[None, :] > 0), t, np.inf)
            best = np.minimum(best, t.min(axis=1))
        if self.walls:
            W = np.array([[w.X1, w.Z1, w.X2, w.Z2, w.y_top, w.y_bottom] for w in self.walls])
            px, pz = W[:, 0], W[:, 1]
            ex, ez = W[:, 2] - px, W[:, 3] - pz
            dx, dy, dz = dirs[:, 0:1], dirs[:, 1:2], dirs[:, 2:3]
            denom = dx * ez - dz * ex
            with np.errstate(divide="ignore", invalid="ignore"):
                t = (px * ez - pz * ex) / denom
                s = (px * dz - pz * dx) / denom
            y = t * dy
            hit = (
                (denom != 0)
                & (t > 0)
                & (s >= 0)
                & (s <= 1)
                & (y >= W[:, 4])
                & (y <= W[:, 5])
            )
            t = np.where(hit, t, np.inf)
            best = np.minimum(best, t.min(axis=1))
        return best


def to_camera(pose: Pose2, params: RobotParams, x: float, y: float, height: float) -> CameraPoint:
    """World point (x, y, height above ground) into the robot's camera frame."""
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    dx, dy = x - pose.x, y - pose.y
    fwd = c * dx + s * dy
    left = -s * dx + c * dy
    return CameraPoint(-left, params.camera_height - height, fwd)


def head_center(world: WorldState, params: RobotParams, i: int) -> CameraPoint:
    p = world.persons[i]
    return to_camera(world.robot, params, p.x, p.y, p.head_height)


def build_scene(world: WorldState, params: RobotParams) -> Scene:
    scene = Scene()
    ground = params.camera_height
    for occ in world.occluders:
        a = to_camera(world.robot, params, occ.x1, occ.y1, 0.0)
        b = to_camera(world.robot, params, occ.x2, occ.y2, 0.0)
        scene.walls.append(Wall(a.X, a.Z, b.X, b.Z, ground - occ.height, ground))
        scene.wall_owner.append(-1)
    for i, p in enumerate(world.persons):
        c = to_camera(world.robot, params, p.x, p.y, p.head_height)
        scene.spheres.append((c, p.head_radius))
        scene.sphere_owner.append(i)
        rho = math.hypot(c.X, c.Z)
        if p.body_width > 0 and rho > 1e-9:
            # body faces the camera: perpendicular to the line of sight in plan
            ux, uz = c.Z / rho, -c.X / rho
            half = p.body_width / 2.0
            top = ground - (p.head_height - p.head_radius)
            scene.walls.append(
                Wall(c.X - half * ux, c.Z - half * uz, c.X + half * ux, c.Z + half * uz, top, ground)
            )
            scene.wall_owner.append(i)
    return scene


def occlusion_fraction(target_center: CameraPoint, target_radius: float, occluders) -> float:
    """Fraction of the head's horizontal angular extent hidden by nearer occluders.

    Casts ``OCCLUSION_RAYS`` rays evenly across the head's width, each aimed at
    the head-centre elevation. ``occluders`` is a Scene (which must not
    contain the target itself) or a sequence of Wall.
    """
    if not target_center.Z > 0:
        raise NonPositiveDepth(f"target Z={target_center.Z} must be > 0")
    scene = occluders if isinstance(occluders, Scene) else Scene(walls=list(occluders))
    if not scene.walls and not scene.spheres:
        return 0.0
    X, Y, Z = target_center.X, target_center.Y, target_center.Z
    rho = math.hypot(X, Z)
    half = math.asin(min(1.0, target_radius / rho))
    phi = math.atan2(X, Z) + np.linspace(-half, half, OCCLUSION_RAYS)
    dirs = np.column_stack([np.sin(phi), np.full_like(phi, Y / rho), np.cos(phi)])
    t = scene.cast(dirs)
    return float(np.count_nonzero(t < rho)) / OCCLUSION_RAYS


def target_occlusion(world: WorldState, params: RobotParams, i: int, scene: Scene | None = None) -> float:
    """Occlusion fraction of person ``i``'s head; 1.0 when it is behind the camera."""
    c = head_center(world, params, i)
    if c.Z <= 0:
        return 1.0
    scene = scene if scene is not None else build_scene(world, params)
    return occlusion_fraction(c, world.persons[i].head_radius, scene.without(i))


def head_in_fov(world: WorldState, k: CameraIntrinsics, params: RobotParams, i: int) -> bool:
    c = head_center(world, params, i)
    if c.Z <= world.persons[i].head_radius:
        return False
    u, _ = project_point(k, c)
    return 0.0 <= u < k.width


def detect_heads(
    world: WorldState,
    k: CameraIntrinsics,
    params: RobotParams,
    noise: NoiseModel,
    rng: np.random.Generator,
    scene: Scene | None = None,
) -> list[Detection]:
    """Confidence-scored head boxes for every visible person.

    Random draws are made for every person regardless of visibility, so the
    generator stream does not depend on what happens to be in view.
    """
    scene = scene if scene is not None else build_scene(world, params)
    out = []
    for i, person in enumerate(world.persons):
        miss, jx, jy, jw, jh, jc = rng.random(), *rng.standard_normal(5)
        c = head_center(world, params, i)
        r = person.head_radius
        if c.Z <= r:
            continue
        u, _ = project_point(k, c)
        if not 0.0 <= u < k.width:
            continue
        box = project_head_bbox(k, c, r)
        if clip_to_image(box, k) is None:
            continue
        occ = occlusion_fraction(c, r, scene.without(i))
        if occ > noise.occlusion_drop_threshold:
            continue
        if miss < noise.miss_rate:
            continue
        s = noise.pixel_sigma
        if s > 0:
            cu, cv = box.center()
            box = BoundingBox.from_center(
                cu + s * jx, cv + s * jy, max(2.0, box.w + s * jw), max(2.0, box.h + s * jh)
            )
        conf = BASE_CONFIDENCE * (1.0 - occ) + noise.confidence_sigma * jc
        out.append(Detection(box, min(1.0, max(0.0, conf))))
    return out


def pixel_grid(bbox: BoundingBox, k: CameraIntrinsics, stride: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Integer pixel columns and rows on a stride grid inside bbox∩image."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    clipped = clip_to_image(bbox, k)
    if clipped is None:
        raise EmptyIntersection(f"box {bbox} does not intersect the {k.width}x{k.height} image")
    us = np.arange(math.ceil(clipped.x), math.ceil(clipped.x2), stride)
    vs = np.arange(math.ceil(clipped.y), math.ceil(clipped.y2), stride)
    if us.size == 0:
        us = np.array([min(k.width - 1, math.floor(clipped.x))])
    if vs.size == 0:
        vs = np.array([min(k.height - 1, math.floor(clipped.y))])
    return us, vs


def sample_depth_patch(
    world: WorldState,
    bbox: BoundingBox,
    k: CameraIntrinsics,
    params: RobotParams,
    noise: NoiseModel,
    rng: np.random.Generator,
    stride: int = 4,
    scene: Scene | None = None,
) -> DepthPatch:
    us, vs = pixel_grid(bbox, k, stride)
    scene = scene if scene is not None else build_scene(world, params)
    uu, vv = np.meshgrid(us, vs)
    dirs = np.column_stack(
        [((uu - k.cx) / k.fx).ravel(), ((vv - k.cy) / k.fy).ravel(), np.ones(uu.size)]
    )
    z = scene.cast(dirs)  # dirs have unit Z component, so t is depth
    rng_range = z * np.linalg.norm(dirs, axis=1)
    jitter = rng.standard_normal(z.size)
    valid = rng_range <= MAX_RANGE
    with np.errstate(invalid="ignore"):
        noisy = z + jitter * noise.depth_sigma(z)
    valid &= noisy > 0
    samples = np.where(valid, noisy, np.nan)
    return DepthPatch(samples.reshape(uu.shape), valid.reshape(uu.shape))
