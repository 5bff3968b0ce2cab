"""Six-pose min/max calibration of IMU linear accelerations and sample averaging.

Two sensors mounted with identical orientation still disagree on raw
acceleration readings, so each axis is calibrated from a pair of stationary
windows recorded with the axis pointing straight down (minimum reading) and
straight up (maximum reading).  A raw reading is then mapped affinely so the
recorded extremes land exactly on -g and +g.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cloud_io import ImuSample
from .errors import DegenerateCalibration, EmptyWindow

# Standard gravity, fixed by the sensor datasheet.
STANDARD_GRAVITY = 9.80665

_COMPONENT = {"x": "gx", "y": "gy", "z": "gz"}


@dataclass(frozen=True)
class AxisCalibration:
    """Time-averaged extreme readings for one axis; g_max must exceed g_min."""

    axis: str
    g_min: float
    g_max: float

    def __post_init__(self):
        if self.axis not in _COMPONENT:
            raise ValueError(f"axis must be x|y|z, got {self.axis!r}")
        if not self.g_max > self.g_min:
            raise DegenerateCalibration(
                f"axis {self.axis}: g_max {self.g_max} must be > g_min {self.g_min}"
            )


@dataclass(frozen=True)
class CalibrationProfile:
    x: AxisCalibration
    y: AxisCalibration
    z: AxisCalibration

    def __post_init__(self):
        for cal, axis in zip((self.x, self.y, self.z), "xyz"):
            if cal.axis != axis:
                raise ValueError(f"calibration for slot {axis} has axis {cal.axis!r}")

    def for_axis(self, axis: str) -> AxisCalibration:
        return getattr(self, axis)


def _axis_values(samples: Sequence[ImuSample], axis: str) -> np.ndarray:
    attr = _COMPONENT[axis]
    return np.array([getattr(s, attr) for s in samples])


def build_axis_calibration(min_window: Sequence[ImuSample],
                           max_window: Sequence[ImuSample],
                           axis: str) -> AxisCalibration:
    """Average each stationary window along ``axis`` into the (g_min, g_max) pair."""
    if axis not in _COMPONENT:
        raise ValueError(f"axis must be x|y|z, got {axis!r}")
    if not min_window or not max_window:
        raise EmptyWindow(f"axis {axis}: calibration windows must be non-empty")
    g_min = float(_axis_values(min_window, axis).mean())
    g_max = float(_axis_values(max_window, axis).mean())
    return AxisCalibration(axis, g_min, g_max)


def correct_reading(raw: float, cal: AxisCalibration) -> float:
    """Affine correction mapping (g_min, g_max) onto (-g, +g); extrapolates outside."""
    span = cal.g_max - cal.g_min
    return 2.0 * STANDARD_GRAVITY * (raw - cal.g_min) / span - STANDARD_GRAVITY


def correct_sample(sample: ImuSample, profile: CalibrationProfile) -> np.ndarray:
    return np.array([
        correct_reading(sample.gx, profile.x),
        correct_reading(sample.gy, profile.y),
        correct_reading(sample.gz, profile.z),
    ])


def average_corrected(samples: Sequence[ImuSample],
                      profile: CalibrationProfile) -> np.ndarray:
    """Per-axis mean of corrected readings over a stationary window.

    Uses exactly-rounded summation, so the result does not depend on the
    order of the samples.
    """
    if not samples:
        raise EmptyWindow("cannot average an empty sample window")
    corrected = [correct_sample(s, profile) for s in samples]
    n = len(corrected)
    return np.array([math.fsum(v[i] for v in corrected) / n for i in range(3)])
