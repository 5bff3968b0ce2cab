"""Per-axis linear offsets between the rotated cloud and the reference.

The operator picks one point per cloud on flat surfaces facing each other
along the axis of interest.  Each pick is expanded to a 5-point neighborhood
(the point, its two azimuth neighbors on the same ring, and the nearest point
on the rings above and below), the two neighborhoods are registered with
point-to-point ICP, and only the requested component of the resulting
translation is kept.  Doing this once per axis yields the full translation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .cloud_io import AXIS_INDEX
from .errors import DegenerateConfiguration, DuplicateAxis, EdgeRing, SparseRing
from .geometry import PointCloud, RigidTransform

# Above this size, ICP correspondence search switches to a k-d tree.
_BRUTE_FORCE_LIMIT = 64


@dataclass(frozen=True)
class NeighborSet:
    """Exactly five points: selection, two same-ring neighbors, ring above, ring below."""

    points: np.ndarray          # (5, 3), row 0 is the selected point
    indices: tuple[int, ...]    # global cloud indices, same order

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        if pts.shape != (5, 3):
            raise ValueError(f"neighbor set must be 5x3, got {pts.shape}")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)


@dataclass(frozen=True)
class AxisOffsetEstimate:
    axis: str
    offset: float
    icp_iterations_used: int
    final_rms: float


@dataclass(frozen=True)
class IcpResult:
    transform: RigidTransform
    final_rms: float
    iterations: int
    converged: bool


def filter_neighbors(cloud: PointCloud, point_index: int) -> NeighborSet:
    """Five-point neighborhood of a selected point.

    Same-ring neighbors are the cyclic predecessor/successor in the ring's
    stored azimuth order; the above/below points are the Euclidean-nearest
    returns on the adjacent rings.
    """
    if not 0 <= point_index < len(cloud):
        raise ValueError(f"point index {point_index} out of range")
    ring = int(cloud.ring[point_index])
    if ring == 0 or ring == cloud.ring_count - 1:
        raise EdgeRing(f"point on ring {ring} has no ring above and below")

    same = cloud.ring_indices(ring)
    if len(same) < 3:
        raise SparseRing(f"ring {ring} has only {len(same)} points")
    pos = int(np.nonzero(same == point_index)[0][0])
    prev_idx = int(same[(pos - 1) % len(same)])
    next_idx = int(same[(pos + 1) % len(same)])

    target = cloud.xyz[point_index]
    picked = [point_index, prev_idx, next_idx]
    for adjacent in (ring + 1, ring - 1):
        members = cloud.ring_indices(adjacent)
        if len(members) == 0:
            raise SparseRing(f"ring {adjacent} adjacent to the selection is empty")
        d2 = np.sum((cloud.xyz[members] - target) ** 2, axis=1)
        picked.append(int(members[int(np.argmin(d2))]))

    return NeighborSet(cloud.xyz[picked], tuple(picked))


def _best_rigid(source: np.ndarray, target: np.ndarray) -> RigidTransform:
    """Closed-form least-squares rigid motion source -> target (paired rows)."""
    cs = source.mean(axis=0)
    ct = target.mean(axis=0)
    h = (source - cs).T @ (target - ct)
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    if d == 0.0:
        d = 1.0
    # Reflection guard: force det(R) = +1 for near-planar configurations.
    r = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    return RigidTransform(r, ct - r @ cs)


def _nearest(target: np.ndarray, query: np.ndarray,
             tree: cKDTree | None) -> np.ndarray:
    if tree is not None:
        return tree.query(query)[1]
    d2 = np.sum((query[:, None, :] - target[None, :, :]) ** 2, axis=2)
    return np.argmin(d2, axis=1)


# Rotation identifiability gate.  On the tiny near-planar correspondence sets
# this pipeline feeds ICP, rotation is often unidentifiable (the matched set's
# second principal extent sits at the noise floor), and a spurious rotation
# corrupts the translation through the patch's origin lever arm.  A rotation
# update is kept only when the matched configuration is conditioned well above
# the residual the full fit leaves behind; the margin corresponds to roughly a
# 3-degree rotation precision floor.
_CONDITIONING_MARGIN = 20.0


def _rms(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.sum((a - b) ** 2, axis=1))))


def _second_extent_rms(points: np.ndarray) -> float:
    sv = np.linalg.svd(points - points.mean(axis=0), compute_uv=False)
    return float(sv[1]) / math.sqrt(len(points))


def icp_rigid(source, target, max_iterations: int = 50,
              convergence_tol: float = 1e-6) -> IcpResult:
    """Point-to-point ICP returning the cumulative source -> target transform.

    The sets are first brought together by centroid alignment (the per-axis
    offsets this package estimates can be meters, far beyond the patch size),
    then nearest-neighbor correspondence and the closed-form rigid fit iterate
    until the RMS change drops below ``convergence_tol`` or the iteration cap
    is hit (reported via ``converged=False``, never raised).
    """
    source = np.asarray(source, dtype=np.float64).reshape(-1, 3)
    target = np.asarray(target, dtype=np.float64).reshape(-1, 3)
    if len(source) < 3 or len(target) < 3:
        raise ValueError("ICP needs at least 3 points in each set")
    sv = np.linalg.svd(source - source.mean(axis=0), compute_uv=False)
    if sv[1] <= 1e-9 * max(sv[0], 1.0):
        raise DegenerateConfiguration("source points are collinear; rotation underdetermined")

    tree = cKDTree(target) if len(target) > _BRUTE_FORCE_LIMIT else None
    transform = RigidTransform(np.eye(3), target.mean(axis=0) - source.mean(axis=0))
    current = transform.apply_points(source)
    prev_rms = math.inf
    rms = math.inf
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        matched = target[_nearest(target, current, tree)]
        # Refit from the original source each round; the correspondences carry
        # the iteration state, so this is the cumulative transform directly.
        rot = transform.rotation
        keep = RigidTransform(rot, matched.mean(axis=0) - rot @ source.mean(axis=0))
        keep_rms = _rms(keep.apply_points(source), matched)
        full = _best_rigid(source, matched)
        full_rms = _rms(full.apply_points(source), matched)
        identifiable = _second_extent_rms(matched) > _CONDITIONING_MARGIN * full_rms
        if identifiable and full_rms <= keep_rms:
            transform, rms = full, full_rms
        else:
            transform, rms = keep, keep_rms
        current = transform.apply_points(source)
        if abs(prev_rms - rms) < convergence_tol:
            return IcpResult(transform, rms, iterations, True)
        prev_rms = rms
    return IcpResult(transform, rms, iterations, False)


def estimate_axis_offset(m_set: NeighborSet, s_set: NeighborSet, axis: str,
                         max_iterations: int = 50,
                         convergence_tol: float = 1e-6) -> AxisOffsetEstimate:
    """Register the two neighborhoods and keep only the ``axis`` translation."""
    if axis not in AXIS_INDEX:
        raise ValueError(f"axis must be x|y|z, got {axis!r}")
    result = icp_rigid(m_set.points, s_set.points, max_iterations, convergence_tol)
    offset = float(result.transform.translation[AXIS_INDEX[axis]])
    return AxisOffsetEstimate(axis, offset, result.iterations, result.final_rms)


def assemble_translation(x_est: AxisOffsetEstimate, y_est: AxisOffsetEstimate,
                         z_est: AxisOffsetEstimate) -> np.ndarray:
    """Combine three per-axis estimates into the translation vector."""
    axes = (x_est.axis, y_est.axis, z_est.axis)
    if len(set(axes)) != 3:
        raise DuplicateAxis(f"estimates cover axes {axes}, need x, y and z")
    t = np.zeros(3)
    for est in (x_est, y_est, z_est):
        t[AXIS_INDEX[est.axis]] = est.offset
    return t
