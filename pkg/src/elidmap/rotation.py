"""Relative orientation between two sensors.

Roll and pitch come from the calibrated gravity vectors of the two (stationary)
sensors; yaw comes from comparing the apparent slope of the same wall stretch
in the middle point ring of each cloud.  Both gravity formulas are evaluated
with the four-quadrant arctangent of their printed numerator/denominator pair,
so relative angles beyond +-90 degrees keep their quadrant.

Sign convention: with sensor M purely rolled by phi0 relative to the
reference sensor S, ``estimate_roll`` returns +phi0, which is exactly the
angle that maps M's points into S's frame.  ``estimate_yaw`` instead measures
how the *scene content* of segment M is rotated relative to segment S (a
segment physically equal to the reference segment rotated by +20 degrees
yields +20 degrees); the transform assembly in :mod:`elidmap.pipeline` negates
it accordingly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DanglingIndex,
    DegenerateOrientation,
    EmptyList,
    MixedRings,
    NoConsensus,
    NonConsecutiveIndices,
    NonGravitationalReading,
    NotMiddleRing,
    TooFewPoints,
    TooFewRings,
    UndefinedMean,
    VerticalLine,
)
from .geometry import PointCloud, normalize_angle
from .imu import STANDARD_GRAVITY

# Accept gravity magnitudes within +-50% of standard gravity (stationary gate).
_GRAVITY_BAND = (0.5 * STANDARD_GRAVITY, 1.5 * STANDARD_GRAVITY)
# Below this x-spread (meters) a segment cannot be modelled as y = m*x + c.
VERTICAL_SPREAD_EPS = 1e-6


@dataclass(frozen=True)
class LineFit:
    """First-order polynomial y = m*x + c chosen by consensus."""

    gradient_m: float
    intercept_c: float
    inlier_count: int
    inlier_indices: frozenset[int]


@dataclass(frozen=True)
class RingSegment:
    """Consecutive middle-ring points of one cloud, projected onto the xy plane."""

    cloud_id: str
    point_indices: tuple[int, ...]
    points_xy: np.ndarray

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points_xy, dtype=np.float64).reshape(-1, 2)
        pts.flags.writeable = False
        object.__setattr__(self, "points_xy", pts)
        if len(self.point_indices) != len(pts):
            raise ValueError("indices and points must have equal length")


def extract_middle_ring(cloud: PointCloud) -> int:
    """Index of the ring closest to the sensor's horizontal plane."""
    if cloud.ring_count < 3:
        raise TooFewRings(f"middle ring needs ring_count >= 3, got {cloud.ring_count}")
    return cloud.ring_count // 2


def build_ring_segment(cloud: PointCloud, indices, cloud_id: str = "") -> RingSegment:
    """Resolve selected indices into a validated middle-ring segment.

    The indices must name at least three points, all on the cloud's middle
    ring, occupying consecutive positions along that ring's stored order.
    """
    indices = tuple(int(i) for i in indices)
    if len(indices) < 3:
        raise TooFewPoints(f"segment needs at least 3 points, got {len(indices)}")
    n = len(cloud)
    for i in indices:
        if not 0 <= i < n:
            raise DanglingIndex(f"index {i} out of range for cloud of size {n}")
    rings = set(int(cloud.ring[i]) for i in indices)
    if len(rings) != 1:
        raise MixedRings(f"segment spans rings {sorted(rings)}")
    middle = extract_middle_ring(cloud)
    (ring,) = rings
    if ring != middle:
        raise NotMiddleRing(f"segment is on ring {ring}, middle ring is {middle}")
    ring_order = cloud.ring_indices(middle)
    pos = {int(g): p for p, g in enumerate(ring_order)}
    positions = sorted(pos[i] for i in indices)
    if positions != list(range(positions[0], positions[0] + len(indices))):
        raise NonConsecutiveIndices("segment points must be consecutive along the ring")
    ordered = tuple(int(ring_order[p]) for p in positions)
    return RingSegment(cloud_id or cloud.frame_id, ordered, cloud.xyz[list(ordered), :2])


def _gravity_gate(g_m: np.ndarray, g_s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    g_m = np.asarray(g_m, dtype=np.float64).reshape(3)
    g_s = np.asarray(g_s, dtype=np.float64).reshape(3)
    for name, v in (("g_M", g_m), ("g_S", g_s)):
        mag = float(np.linalg.norm(v))
        if not _GRAVITY_BAND[0] <= mag <= _GRAVITY_BAND[1]:
            raise NonGravitationalReading(
                f"{name} magnitude {mag:.3f} m/s^2 outside "
                f"[{_GRAVITY_BAND[0]:.2f}, {_GRAVITY_BAND[1]:.2f}]"
            )
    return g_m, g_s


def _quadrant_atan(num: float, den: float) -> float:
    if math.hypot(num, den) < 1e-9 * STANDARD_GRAVITY**2:
        raise DegenerateOrientation("arctangent operands vanish; orientation undefined")
    return math.atan2(num, den)


def estimate_roll(g_m, g_s) -> float:
    """Relative roll (rad) of sensor M with respect to sensor S."""
    g_m, g_s = _gravity_gate(g_m, g_s)
    xm = math.hypot(g_m[0], g_m[2])
    xs = math.hypot(g_s[0], g_s[2])
    num = g_m[1] * xs - g_s[1] * xm
    den = g_m[1] * g_s[1] + xm * xs
    return _quadrant_atan(num, den)


def estimate_pitch(g_m, g_s) -> float:
    """Relative pitch (rad) of sensor M with respect to sensor S."""
    g_m, g_s = _gravity_gate(g_m, g_s)
    num = g_s[0] * g_m[2] - g_m[0] * g_s[2]
    den = g_m[2] * g_s[2] + g_m[0] * g_s[0]
    return _quadrant_atan(num, den)


def ransac_line_fit(points_xy, iterations: int = 100, inlier_threshold: float = 0.02,
                    seed: int | None = None,
                    rng: np.random.Generator | None = None) -> LineFit:
    """Consensus line fit over 2D points; deterministic for a given seed.

    Candidate lines pass through random point pairs; inliers are points within
    ``inlier_threshold`` perpendicular distance.  The returned gradient and
    intercept are the least-squares fit over the winning inlier set.
    """
    pts = np.asarray(points_xy, dtype=np.float64).reshape(-1, 2)
    n = len(pts)
    if n < 3:
        raise TooFewPoints(f"RANSAC needs >= 3 points, got {n}")
    if inlier_threshold <= 0.0:
        raise ValueError("inlier_threshold must be positive")
    full_spread = float(pts[:, 0].max() - pts[:, 0].min())
    if full_spread < VERTICAL_SPREAD_EPS:
        raise VerticalLine(f"x-spread {full_spread:.2e} m cannot carry a slope model")
    if rng is None:
        rng = np.random.default_rng(seed)

    best_mask = None
    best_count = 0
    for _ in range(iterations):
        i, j = rng.choice(n, size=2, replace=False)
        dx = pts[j, 0] - pts[i, 0]
        if abs(dx) < 1e-12:
            continue  # slope model cannot represent this candidate
        m = (pts[j, 1] - pts[i, 1]) / dx
        c = pts[i, 1] - m * pts[i, 0]
        dist = np.abs(m * pts[:, 0] - pts[:, 1] + c) / math.sqrt(m * m + 1.0)
        mask = dist <= inlier_threshold
        count = int(mask.sum())
        if count > best_count:
            best_count = count
            best_mask = mask

    if best_mask is None or best_count < 3:
        raise NoConsensus(f"best consensus set has {best_count} < 3 inliers")
    inliers = pts[best_mask]
    spread = float(inliers[:, 0].max() - inliers[:, 0].min())
    if spread < VERTICAL_SPREAD_EPS:
        raise VerticalLine(f"inlier x-spread {spread:.2e} m is effectively vertical")
    m_fit, c_fit = np.polyfit(inliers[:, 0], inliers[:, 1], 1)
    return LineFit(float(m_fit), float(c_fit), best_count,
                   frozenset(int(i) for i in np.nonzero(best_mask)[0]))


def estimate_yaw(segment_m: RingSegment, segment_s: RingSegment,
                 iterations: int = 100, inlier_threshold: float = 0.02,
                 seed: int | None = None,
                 rng: np.random.Generator | None = None) -> float:
    """One instantaneous relative-yaw reading (rad) from a pair of segments."""
    if rng is None:
        rng = np.random.default_rng(seed)
    fit_m = ransac_line_fit(segment_m.points_xy, iterations, inlier_threshold, rng=rng)
    fit_s = ransac_line_fit(segment_s.points_xy, iterations, inlier_threshold, rng=rng)
    return normalize_angle(math.atan(fit_m.gradient_m) - math.atan(fit_s.gradient_m))


def average_yaw(estimates) -> float:
    """Circular mean of yaw readings, normalized to (-pi, pi]."""
    estimates = list(estimates)
    if not estimates:
        raise EmptyList("no yaw estimates to average")
    s = math.fsum(math.sin(e) for e in estimates)
    c = math.fsum(math.cos(e) for e in estimates)
    if math.hypot(s, c) < 1e-9:
        raise UndefinedMean("yaw estimates cancel; circular mean undefined")
    return normalize_angle(math.atan2(s, c))
