"""Scenario description and its strict JSON reader.

Every field is optional except ``persons``; unknown keys are rejected with
their full dotted path so that a mistyped gain never goes unnoticed.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import math
import typing
from dataclasses import dataclass, field
from importlib import resources

from .control import LostPolicy, PidConfig, ServoConfig
from .errors import ConfigInvalid, InvariantViolation, ScenarioSyntaxError, UnknownKey
from .geometry import CameraIntrinsics
from .perception import NoiseModel
from .tracker import TrackerConfig
from .world import Occluder, PersonSpec, Pose2, RobotParams

BUILTIN_SCENARIOS = (
    "static_target",
    "walking_line",
    "partial_occlusion",
    "full_occlusion_crossing",
    "two_person_confuser",
)


@dataclass(frozen=True)
class EstimationConfig:
    alpha: float = 0.3
    stride: int = 4

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise InvariantViolation("alpha", "must lie in (0, 1]")
        if not (isinstance(self.stride, int) and self.stride >= 1):
            raise InvariantViolation("stride", "must be an integer >= 1")


@dataclass(frozen=True)
class ScenarioConfig:
    persons: tuple[PersonSpec, ...]
    seed: int = 0
    dt: float = 1.0 / 30.0
    duration: float = 20.0
    max_acquire_seconds: float = 5.0
    target_index: int = 0
    camera: CameraIntrinsics = field(default_factory=CameraIntrinsics)
    robot: RobotParams = field(default_factory=RobotParams)
    initial_pose: Pose2 = field(default_factory=Pose2)
    occluders: tuple[Occluder, ...] = ()
    noise: NoiseModel = field(default_factory=NoiseModel)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    estimation: EstimationConfig = field(default_factory=EstimationConfig)
    servo: ServoConfig = field(default_factory=ServoConfig)

    def __post_init__(self):
        object.__setattr__(self, "persons", tuple(self.persons))
        object.__setattr__(self, "occluders", tuple(self.occluders))
        if not (isinstance(self.seed, int) and self.seed >= 0):
            raise InvariantViolation("seed", "must be a non-negative integer")
        if not self.dt > 0:
            raise InvariantViolation("dt", "must be > 0")
        if not self.duration > 0:
            raise InvariantViolation("duration", "must be > 0")
        if not self.max_acquire_seconds > 0:
            raise InvariantViolation("max_acquire_seconds", "must be > 0")
        if not self.persons:
            raise InvariantViolation("persons", "need at least one person")
        if not 0 <= self.target_index < len(self.persons):
            raise InvariantViolation("target_index", "must index into persons")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    @property
    def target(self) -> PersonSpec:
        return self.persons[self.target_index]


# -- field reference ---------------------------------------------------------

DESCRIPTIONS = {
    "seed": "RNG seed for all sensor noise and detector misses",
    "dt": "control/simulation step (s)",
    "duration": "simulated time (s); the trace has duration/dt rows",
    "max_acquire_seconds": "give up if no target is found for this long (s)",
    "target_index": "which person the metrics treat as the intended target",
    "camera": "pinhole intrinsics (pixels) and stereo baseline (m)",
    "robot": "differential-drive limits; initial_pose is [x, y, theta]",
    "robot.camera_height": "camera height above the ground (m); camera is level",
    "persons": "REQUIRED list of scripted actors",
    "persons[].waypoints": "list of [t, x, y]; piecewise-linear, holds at both ends",
    "persons[].body_width": "width of the body occluder (m); 0 disables it",
    "occluders": "static walls, each [x1, y1, x2, y2, height] or an object",
    "noise.pixel_sigma": "detector box centre/size jitter (px)",
    "noise.depth_sigma0": "base depth noise (m)",
    "noise.depth_k": "quadratic depth noise coefficient: sigma = sigma0 + k*Z^2",
    "noise.miss_rate": "probability a visible head is not detected",
    "noise.occlusion_drop_threshold": "heads occluded beyond this fraction are not detected",
    "noise.confidence_sigma": "gaussian jitter on detection confidence",
    "tracker.gate_iou": "minimum IoU between prediction and detection to match",
    "tracker.coast_limit": "missed frames tolerated before the track is Lost",
    "estimation.alpha": "EWMA weight of the newest median depth",
    "estimation.stride": "pixel stride of the depth sampling grid",
    "servo.d_ref": "following distance (m)",
    "servo.bearing_deadband": "normalized bearing error that engages the angular loop",
    "servo.distance_deadband": "distance error (m) that engages the linear loop",
    "servo.release_ratio": "a loop releases once |error| <= release_ratio * deadband",
    "servo.lost_policy": "Stop | HoldLastOmega",
    "servo.search_rate": "turn rate (rad/s) used by HoldLastOmega",
}


def _hints(cls) -> dict:
    return typing.get_type_hints(cls)


def _defaults(cls) -> dict:
    out = {}
    for f in dataclasses.fields(cls):
        if f.default is not dataclasses.MISSING:
            out[f.name] = f.default
        elif f.default_factory is not dataclasses.MISSING:
            out[f.name] = f.default_factory()
    return out


def schema_lines() -> list[str]:
    """Human-readable reference of every config key and its default."""
    lines = []

    def walk(cls, prefix: str):
        defaults = _defaults(cls)
        for f in dataclasses.fields(cls):
            name = f.name
            if cls is ScenarioConfig and name == "initial_pose":
                continue
            path = f"{prefix}{name}"
            hint = _hints(cls)[name]
            if dataclasses.is_dataclass(hint):
                lines.append(f"{path}:  {DESCRIPTIONS.get(path, '')}".rstrip())
                walk(hint, path + ".")
                if hint is RobotParams:
                    lines.append(f"  {path}.initial_pose = [0.0, 0.0, 0.0]")
                continue
            if name == "persons":
                lines.append(f"persons:  {DESCRIPTIONS['persons']}")
                walk(PersonSpec, "persons[].")
                continue
            if name not in defaults:
                shown = "<required>"
            else:
                default = defaults[name]
                shown = json.dumps(default.value if isinstance(default, enum.Enum) else default)
            desc = DESCRIPTIONS.get(path, "")
            indent = "  " * prefix.count(".")
            lines.append(f"{indent}{path} = {shown}" + (f"    # {desc}" if desc else ""))

    walk(ScenarioConfig, "")
    return lines


# -- parsing -----------------------------------------------------------------


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _number(val, path: str) -> float:
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise InvariantViolation(path, f"expected a number, got {val!r}")
    if math.isnan(val):
        raise InvariantViolation(path, "NaN is not allowed")
    return float(val)


def _integer(val, path: str) -> int:
    if isinstance(val, bool) or not isinstance(val, int):
        if isinstance(val, float) and val.is_integer():
            return int(val)
        raise InvariantViolation(path, f"expected an integer, got {val!r}")
    return val


def _object(val, path: str) -> dict:
    if not isinstance(val, dict):
        raise InvariantViolation(path or "<root>", f"expected an object, got {type(val).__name__}")
    return val


def _construct(cls, kwargs: dict, path: str):
    try:
        return cls(**kwargs)
    except InvariantViolation as e:
        raise InvariantViolation(_join(path, e.field), e.reason) from None


def _build(cls, data, path: str, base=None):
    """Build ``cls`` from a JSON object; keys it omits come from ``base`` or the defaults."""
    data = _object(data, path)
    hints = _hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    defaults = _defaults(cls) if base is None else {n: getattr(base, n) for n in names}
    kwargs = {} if base is None else dict(defaults)
    for key, val in data.items():
        sub = _join(path, key)
        if key not in names:
            raise UnknownKey(sub)
        hint = hints[key]
        if dataclasses.is_dataclass(hint):
            kwargs[key] = _build(hint, val, sub, defaults.get(key))
        elif hint is float:
            kwargs[key] = _number(val, sub)
        elif hint is int:
            kwargs[key] = _integer(val, sub)
        elif hint is bool:
            if not isinstance(val, bool):
                raise InvariantViolation(sub, f"expected true/false, got {val!r}")
            kwargs[key] = val
        elif isinstance(hint, type) and issubclass(hint, enum.Enum):
            try:
                kwargs[key] = hint(val)
            except ValueError:
                allowed = ", ".join(m.value for m in hint)
                raise InvariantViolation(sub, f"expected one of {allowed}") from None
        else:  # pragma: no cover - every config field is handled above or specially
            raise TypeError(f"unsupported config field type at {sub}: {hint}")
    return _construct(cls, kwargs, path)


def _pose(val, path: str) -> Pose2:
    if isinstance(val, dict):
        return _build(Pose2, val, path)
    if not isinstance(val, list) or len(val) != 3:
        raise InvariantViolation(path, "expected [x, y, theta]")
    return Pose2(*(_number(v, f"{path}[{i}]") for i, v in enumerate(val)))


def _person(val, path: str) -> PersonSpec:
    data = dict(_object(val, path))
    if "waypoints" not in data:
        raise InvariantViolation(_join(path, "waypoints"), "required")
    raw = data.pop("waypoints")
    wp_path = _join(path, "waypoints")
    if not isinstance(raw, list):
        raise InvariantViolation(wp_path, "expected a list of [t, x, y]")
    wps = []
    for i, wp in enumerate(raw):
        if not isinstance(wp, list) or len(wp) != 3:
            raise InvariantViolation(f"{wp_path}[{i}]", "expected [t, x, y]")
        wps.append(tuple(_number(c, f"{wp_path}[{i}]") for c in wp))
    names = {f.name for f in dataclasses.fields(PersonSpec)}
    kwargs = {"waypoints": tuple(wps)}
    for key, v in data.items():
        if key not in names:
            raise UnknownKey(_join(path, key))
        kwargs[key] = _number(v, _join(path, key))
    return _construct(PersonSpec, kwargs, path)


def _occluder(val, path: str) -> Occluder:
    if isinstance(val, list):
        if len(val) != 5:
            raise InvariantViolation(path, "expected [x1, y1, x2, y2, height]")
        return _construct(Occluder, dict(zip(("x1", "y1", "x2", "y2", "height"),
                                             (_number(v, path) for v in val))), path)
    return _build(Occluder, val, path)


def config_from_dict(data) -> ScenarioConfig:
    data = dict(_object(data, ""))
    kwargs = {}
    if "persons" not in data:
        raise InvariantViolation("persons", "required")
    persons = data.pop("persons")
    if not isinstance(persons, list):
        raise InvariantViolation("persons", "expected a list")
    kwargs["persons"] = tuple(_person(p, f"persons[{i}]") for i, p in enumerate(persons))

    occs = data.pop("occluders", [])
    if not isinstance(occs, list):
        raise InvariantViolation("occluders", "expected a list")
    kwargs["occluders"] = tuple(_occluder(o, f"occluders[{i}]") for i, o in enumerate(occs))

    if "robot" in data:
        robot = dict(_object(data.pop("robot"), "robot"))
        if "initial_pose" in robot:
            kwargs["initial_pose"] = _pose(robot.pop("initial_pose"), "robot.initial_pose")
        kwargs["robot"] = _build(RobotParams, robot, "robot")

    if "initial_pose" in data:
        raise UnknownKey("initial_pose")
    rest = _build(_TopLevel, data, "")
    for key in data:
        kwargs[key] = getattr(rest, key)
    return _construct(ScenarioConfig, kwargs, "")


@dataclass(frozen=True)
class _TopLevel:
    """Scalar and plain-nested part of ScenarioConfig, parsed generically."""

    seed: int = 0
    dt: float = 1.0 / 30.0
    duration: float = 20.0
    max_acquire_seconds: float = 5.0
    target_index: int = 0
    camera: CameraIntrinsics = field(default_factory=CameraIntrinsics)
    noise: NoiseModel = field(default_factory=NoiseModel)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    estimation: EstimationConfig = field(default_factory=EstimationConfig)
    servo: ServoConfig = field(default_factory=ServoConfig)


def parse_scenario(text: bytes | str) -> ScenarioConfig:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ScenarioSyntaxError(f"not UTF-8: {e.reason}", 1, e.start + 1) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioSyntaxError(e.msg, e.lineno, e.colno) from None
    return config_from_dict(data)


def load_scenario(path_or_name: str) -> ScenarioConfig:
    """Read a scenario file, or a built-in scenario by name."""
    return parse_scenario(read_scenario_text(path_or_name))


def read_scenario_text(path_or_name: str) -> bytes:
    from pathlib import Path

    p = Path(path_or_name)
    if p.is_file():
        return p.read_bytes()
    if path_or_name in BUILTIN_SCENARIOS:
        return builtin_scenario_text(path_or_name)
    raise FileNotFoundError(path_or_name)


def builtin_scenario_text(name: str) -> bytes:
    if name not in BUILTIN_SCENARIOS:
        raise ConfigInvalid(f"no built-in scenario named {name!r}")
    return resources.files("personfollow.scenarios").joinpath(f"{name}.json").read_bytes()


def builtin_scenario(name: str) -> ScenarioConfig:
    return parse_scenario(builtin_scenario_text(name))


__all__ = [
    "BUILTIN_SCENARIOS",
    "EstimationConfig",
    "LostPolicy",
    "PidConfig",
    "ScenarioConfig",
    "builtin_scenario",
    "config_from_dict",
    "load_scenario",
    "parse_scenario",
    "schema_lines",
]
