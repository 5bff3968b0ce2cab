"""Core geometric types: ring-structured point clouds, Euler angles, rigid transforms.

Conventions used throughout the package:

* Positions are column vectors transformed as ``p' = R @ p + t``.  The 4x4
  homogeneous matrix is a serialization view (rotation upper-left, translation
  in the fourth column, fourth row ``0 0 0 1``).
* Rotation matrices compose yaw-about-z, then pitch-about-y, then roll-about-x:
  ``R = Rz(psi) @ Ry(theta) @ Rx(phi)``.
* Angles are radians, normalized to the half-open interval (-pi, pi].
* Clouds are immutable after construction; transforming a cloud allocates a
  new one and preserves intensity, ring index, point count and ordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonOrthonormalRotation

# Tolerance for accepting a matrix as a rotation (orthonormal, det +1).
ROTATION_GATE = 1e-6


def normalize_angle(a: float) -> float:
    """Wrap an angle (radians) into (-pi, pi]."""
    r = math.remainder(a, 2.0 * math.pi)
    if r <= -math.pi:
        r = math.pi
    return r


@dataclass(frozen=True)
class EulerAngles:
    """Roll/pitch/yaw about x/y/z, normalized to (-pi, pi] at construction."""

    roll_phi: float
    pitch_theta: float
    yaw_psi: float

    def __post_init__(self):
        for v in (self.roll_phi, self.pitch_theta, self.yaw_psi):
            if not math.isfinite(v):
                raise ValueError("euler angles must be finite")
        object.__setattr__(self, "roll_phi", normalize_angle(self.roll_phi))
        object.__setattr__(self, "pitch_theta", normalize_angle(self.pitch_theta))
        object.__setattr__(self, "yaw_psi", normalize_angle(self.yaw_psi))

    @classmethod
    def from_degrees(cls, roll: float, pitch: float, yaw: float) -> "EulerAngles":
        return cls(math.radians(roll), math.radians(pitch), math.radians(yaw))


@dataclass(frozen=True)
class Point:
    """One LiDAR return: position (m), reflectance in [0, 1], ring index."""

    x: float
    y: float
    z: float
    intensity: float
    ring: int


class PointCloud:
    """Ring-structured point cloud backed by numpy arrays.

    ``xyz`` is (N, 3) float64, ``intensity`` (N,) float64, ``ring`` (N,) int32.
    Points belonging to one ring are stored in azimuth order as produced by
    the sensor; transforms keep that ordering.

    Input arrays are adopted and frozen (``writeable = False``) rather than
    copied, so clouds are cheap to build from freshly computed arrays and safe
    to share across threads.
    """

    __slots__ = ("xyz", "intensity", "ring", "ring_count", "frame_id", "timestamp_ns")

    def __init__(self, xyz, intensity, ring, ring_count: int,
                 frame_id: str = "", timestamp_ns: int = 0):
        xyz = np.ascontiguousarray(xyz, dtype=np.float64).reshape(-1, 3)
        intensity = np.ascontiguousarray(intensity, dtype=np.float64).reshape(-1)
        ring = np.ascontiguousarray(ring, dtype=np.int32).reshape(-1)
        if not (len(xyz) == len(intensity) == len(ring)):
            raise ValueError("xyz, intensity and ring must have equal length")
        if ring_count < 1:
            raise ValueError("ring_count must be positive")
        if len(xyz) and not np.all(np.isfinite(xyz)):
            raise ValueError("cloud coordinates must be finite")
        if len(ring) and (ring.min() < 0 or ring.max() >= ring_count):
            raise ValueError("ring indices must be in [0, ring_count)")
        for a in (xyz, intensity, ring):
            a.flags.writeable = False
        self.xyz = xyz
        self.intensity = intensity
        self.ring = ring
        self.ring_count = int(ring_count)
        self.frame_id = frame_id
        self.timestamp_ns = int(timestamp_ns)

    @classmethod
    def from_points(cls, points, ring_count: int, frame_id: str = "",
                    timestamp_ns: int = 0) -> "PointCloud":
        xyz = np.array([(p.x, p.y, p.z) for p in points], dtype=np.float64).reshape(-1, 3)
        inten = np.array([p.intensity for p in points], dtype=np.float64)
        ring = np.array([p.ring for p in points], dtype=np.int32)
        return cls(xyz, inten, ring, ring_count, frame_id, timestamp_ns)

    def __len__(self) -> int:
        return len(self.xyz)

    def point(self, i: int) -> Point:
        x, y, z = self.xyz[i]
        return Point(float(x), float(y), float(z), float(self.intensity[i]), int(self.ring[i]))

    def ring_indices(self, k: int) -> np.ndarray:
        """Global indices of ring ``k`` in stored (azimuth) order."""
        return np.nonzero(self.ring == k)[0]

    def replace(self, *, xyz=None, frame_id=None, timestamp_ns=None) -> "PointCloud":
        return PointCloud(
            self.xyz if xyz is None else xyz,
            self.intensity,
            self.ring,
            self.ring_count,
            self.frame_id if frame_id is None else frame_id,
            self.timestamp_ns if timestamp_ns is None else timestamp_ns,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointCloud):
            return NotImplemented
        return (
            self.ring_count == other.ring_count
            and self.frame_id == other.frame_id
            and self.timestamp_ns == other.timestamp_ns
            and self.xyz.shape == other.xyz.shape
            and np.array_equal(self.xyz, other.xyz)
            and np.array_equal(self.intensity, other.intensity)
            and np.array_equal(self.ring, other.ring)
        )


def build_rotation_matrix(angles: EulerAngles) -> np.ndarray:
    """Rotation matrix ``Rz(yaw) @ Ry(pitch) @ Rx(roll)``, in that factor order."""
    phi, theta, psi = angles.roll_phi, angles.pitch_theta, angles.yaw_psi
    cps, sps = math.cos(psi), math.sin(psi)
    cth, sth = math.cos(theta), math.sin(theta)
    cph, sph = math.cos(phi), math.sin(phi)
    rz = np.array([[cps, -sps, 0.0], [sps, cps, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cth, 0.0, sth], [0.0, 1.0, 0.0], [-sth, 0.0, cth]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cph, -sph], [0.0, sph, cph]])
    return rz @ ry @ rx


def rotation_defect(rotation: np.ndarray) -> float:
    """Largest per-entry deviation from orthonormality / unit determinant."""
    rotation = np.asarray(rotation, dtype=np.float64)
    if rotation.shape != (3, 3):
        return math.inf
    ortho = np.abs(rotation.T @ rotation - np.eye(3)).max()
    det = abs(np.linalg.det(rotation) - 1.0)
    return float(max(ortho, det))


@dataclass(frozen=True)
class RigidTransform:
    """Rotation + translation; ``homogeneous`` is the derived 4x4 matrix.

    Like PointCloud, input arrays are adopted and frozen in place.
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rot = np.ascontiguousarray(self.rotation, dtype=np.float64)
        tra = np.ascontiguousarray(self.translation, dtype=np.float64).reshape(3)
        rot.flags.writeable = False
        tra.flags.writeable = False
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", tra)

    @property
    def homogeneous(self) -> np.ndarray:
        t = np.eye(4)
        t[:3, :3] = self.rotation
        t[:3, 3] = self.translation
        return t

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    def apply_points(self, xyz: np.ndarray) -> np.ndarray:
        return xyz @ self.rotation.T + self.translation


def compose_transform(rotation, translation) -> RigidTransform:
    """Build a RigidTransform, rejecting rotations that fail the orthonormality gate."""
    rotation = np.asarray(rotation, dtype=np.float64)
    translation = np.asarray(translation, dtype=np.float64).reshape(3)
    defect = rotation_defect(rotation)
    if defect > ROTATION_GATE:
        raise NonOrthonormalRotation(
            f"rotation fails orthonormality/determinant check (defect {defect:.3e})"
        )
    return RigidTransform(rotation, translation)


def apply_transform(cloud: PointCloud, t: RigidTransform) -> PointCloud:
    """Return a new cloud with positions mapped through ``t``; attributes untouched."""
    return cloud.replace(xyz=t.apply_points(cloud.xyz))


def invert_transform(t: RigidTransform) -> RigidTransform:
    rt = t.rotation.T
    return RigidTransform(rt, -(rt @ t.translation))


def chain_transforms(second: RigidTransform, first: RigidTransform) -> RigidTransform:
    """Transform equal to applying ``first`` then ``second``."""
    return RigidTransform(second.rotation @ first.rotation,
                          second.rotation @ first.translation + second.translation)
