"""Exception hierarchy shared across the package."""


class PersonFollowError(Exception):
    """Base class for all errors raised by personfollow."""


class NonPositiveDepth(PersonFollowError, ValueError):
    pass


class NonPositiveDisparity(PersonFollowError, ValueError):
    pass


class DegenerateBox(PersonFollowError, ValueError):
    pass


class NonPositiveDt(PersonFollowError, ValueError):
    pass


class EmptyIntersection(PersonFollowError, ValueError):
    """The requested box does not overlap the image at all."""


class NoValidSamples(PersonFollowError):
    """A depth patch had no valid sample to take the median of."""


class NoDetections(PersonFollowError):
    pass


class AcquisitionTimeout(PersonFollowError):
    """No target could be acquired within the configured time."""


class EmptyTrace(PersonFollowError, ValueError):
    pass


class ConfigInvalid(PersonFollowError, ValueError):
    """Base class for scenario configuration errors."""


class ScenarioSyntaxError(ConfigInvalid):
    def __init__(self, msg: str, line: int, column: int):
        super().__init__(f"{msg} (line {line}, column {column})")
        self.line = line
        self.column = column


class UnknownKey(ConfigInvalid):
    def __init__(self, path: str):
        super().__init__(f"unknown key: {path}")
        self.path = path


class InvariantViolation(ConfigInvalid):
    """A field value breaks the invariant of the type it belongs to."""

    def __init__(self, field: str, reason: str = ""):
        msg = f"invalid value for {field}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)
        self.field = field
        self.reason = reason
