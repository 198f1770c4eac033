"""Robust target depth: median over the box, then an exponentially weighted moving average."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvariantViolation, NonPositiveDepth, NoValidSamples
from .perception import DepthPatch


@dataclass(frozen=True)
class DepthEstimate:
    raw_median: float | None = None
    smoothed: float | None = None
    initialized: bool = False
    alpha: float = 0.3

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise InvariantViolation("alpha", "must lie in (0, 1]")
        if self.initialized and not (self.smoothed is not None and self.smoothed > 0):
            raise InvariantViolation("smoothed", "must be > 0 once initialized")


def median_depth(patch: DepthPatch) -> float:
    """Median of the valid samples; mean of the middle pair for even counts."""
    vals = np.sort(patch.valid_samples())
    n = vals.size
    if n == 0:
        raise NoValidSamples("depth patch has no valid samples")
    mid = n // 2
    if n % 2:
        return float(vals[mid])
    return float((vals[mid - 1] + vals[mid]) / 2.0)


def ewma_update(est: DepthEstimate, measurement: float) -> DepthEstimate:
    if not measurement > 0:
        raise NonPositiveDepth(f"depth measurement must be > 0, got {measurement}")
    if not est.initialized:
        return replace(est, raw_median=measurement, smoothed=measurement, initialized=True)
    smoothed = est.alpha * measurement + (1.0 - est.alpha) * est.smoothed
    return replace(est, raw_median=measurement, smoothed=smoothed)
