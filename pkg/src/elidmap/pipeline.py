"""Setup-stage orchestration and map merging.

For every non-reference cloud the one-time setup estimates a rigid transform
in two steps: rotation first (IMU roll/pitch + ring-segment yaw), then the
translation of the rotated intermediate cloud from per-axis point-pair ICP.
Once transforms exist, frames are merged by transforming each cloud and
accumulating it onto the reference; the merged map keeps per-point provenance
so downstream consumers can color or filter by source sensor.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import cloud_io
from .config import PipelineConfig
from .errors import ArityMismatch, IncompleteSelections, IndexOutOfRange
from .geometry import (
    EulerAngles,
    PointCloud,
    RigidTransform,
    apply_transform,
    build_rotation_matrix,
    compose_transform,
)
from .rotation import average_yaw, build_ring_segment, estimate_pitch, estimate_roll, estimate_yaw
from .session import Session
from .translation import assemble_translation, estimate_axis_offset, filter_neighbors


@dataclass(frozen=True)
class RegistrationResult:
    cloud_id: str
    roll: float
    pitch: float
    yaw: float
    yaw_readings: int
    offsets: dict
    transform: RigidTransform


@dataclass(frozen=True)
class ElidMap:
    """Merged multi-sensor cloud with per-point source ids."""

    cloud: PointCloud
    provenance: tuple[str, ...]
    created_at: int  # ns; max input timestamp, so merging stays deterministic

    def __post_init__(self):
        if len(self.provenance) != len(self.cloud):
            raise ValueError("provenance must cover every point")


def _derived_rng(seed: int, cloud_id: str) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence([seed & 0xFFFFFFFF, zlib.crc32(cloud_id.encode())])
    )


def calibrate_from_windows(session: Session, cloud_id: str):
    """Build a sensor's calibration profile from its six recorded windows."""
    from .imu import CalibrationProfile, build_axis_calibration

    cals = {
        axis: build_axis_calibration(
            session.load_window(cloud_id, axis, "min"),
            session.load_window(cloud_id, axis, "max"),
            axis,
        )
        for axis in cloud_io.AXES
    }
    return CalibrationProfile(cals["x"], cals["y"], cals["z"])


def estimate_rotation_angles(session: Session, cloud_id: str,
                             config: PipelineConfig | None = None) -> tuple[float, float, float, int]:
    """(roll, pitch, yaw, yaw_reading_count) of ``cloud_id`` relative to the reference."""
    config = config or session.config
    ref_id = session.reference
    profile_m = session.load_profile(cloud_id)
    profile_s = session.load_profile(ref_id)
    from .imu import average_corrected

    g_m = average_corrected(session.load_imu(cloud_id), profile_m)
    g_s = average_corrected(session.load_imu(ref_id), profile_s)
    roll = estimate_roll(g_m, g_s)
    pitch = estimate_pitch(g_m, g_s)

    selection = session.load_selection()
    seg_m_sel = selection.segment_for(cloud_id)
    seg_s_sel = selection.segment_for(ref_id)
    missing = []
    if seg_m_sel is None:
        missing.append(f"segment for {cloud_id}")
    if seg_s_sel is None:
        missing.append(f"segment for {ref_id}")
    if missing:
        raise IncompleteSelections("missing " + ", ".join(missing))

    frames_m = session.frame_paths(cloud_id)
    frames_s = session.frame_paths(ref_id)
    readings = min(len(frames_m), len(frames_s), config.yaw_frames)
    rng = _derived_rng(config.seed, cloud_id)
    estimates = []
    for k in range(readings):
        cloud_m = cloud_io.read_cloud(frames_m[k])
        cloud_s = cloud_io.read_cloud(frames_s[k])
        seg_m = build_ring_segment(cloud_m, seg_m_sel.indices, cloud_id)
        seg_s = build_ring_segment(cloud_s, seg_s_sel.indices, ref_id)
        estimates.append(estimate_yaw(
            seg_m, seg_s,
            iterations=config.ransac.iterations,
            inlier_threshold=config.ransac.inlier_threshold,
            rng=rng,
        ))
    # Segment slopes measure how the scene content appears rotated inside each
    # frame; the frame-to-reference rotation is the opposite sense.
    yaw = -average_yaw(estimates)
    return roll, pitch, yaw, readings


def estimate_registration(session: Session, cloud_id: str,
                          config: PipelineConfig | None = None) -> RegistrationResult:
    """Full two-step estimate for one cloud: Eq.-style rotation, then translation."""
    config = config or session.config
    ref_id = session.reference
    if cloud_id == ref_id:
        raise ValueError("the reference cloud has no transform (identity implied)")

    roll, pitch, yaw, readings = estimate_rotation_angles(session, cloud_id, config)
    rotation = build_rotation_matrix(EulerAngles(roll, pitch, yaw))

    cloud = session.load_cloud(cloud_id)
    reference = session.load_cloud(ref_id)
    intermediate = apply_transform(cloud, RigidTransform(rotation, np.zeros(3)))

    selection = session.load_selection()
    estimates = {}
    missing = []
    for axis in cloud_io.AXES:
        pair = selection.pair_for(cloud_id, axis)
        if pair is None or pair.ref_cloud_id != ref_id:
            missing.append(f"{axis}-axis point pair for {cloud_id}")
            continue
        m_set = filter_neighbors(intermediate, pair.index)
        s_set = filter_neighbors(reference, pair.ref_index)
        estimates[axis] = estimate_axis_offset(
            m_set, s_set, axis,
            max_iterations=config.icp.max_iterations,
            convergence_tol=config.icp.convergence_tol,
        )
    if missing:
        raise IncompleteSelections("missing " + ", ".join(missing))

    t = assemble_translation(estimates["x"], estimates["y"], estimates["z"])
    return RegistrationResult(
        cloud_id=cloud_id,
        roll=roll, pitch=pitch, yaw=yaw, yaw_readings=readings,
        offsets=estimates,
        transform=compose_transform(rotation, t),
    )


def estimate_transform(session: Session, cloud_id: str,
                       config: PipelineConfig | None = None) -> RigidTransform:
    return estimate_registration(session, cloud_id, config).transform


def _source_id(cloud: PointCloud, index: int) -> str:
    return cloud.frame_id if cloud.frame_id else f"cloud{index}"


def accumulate_map(transformed: Sequence[PointCloud], reference: PointCloud) -> ElidMap:
    """Concatenate already-transformed clouds onto the reference.

    Concatenation is an accumulator: each cloud is appended onto the running
    map in input order, the reference last, mirroring how merged frames are
    assembled during the operation stage.
    """
    acc_xyz = np.empty((0, 3))
    acc_int = np.empty(0)
    acc_ring = np.empty(0, dtype=np.int32)
    provenance: list[str] = []
    ring_count = reference.ring_count
    created_at = reference.timestamp_ns

    for i, cloud in enumerate(transformed):
        acc_xyz = np.concatenate([acc_xyz, cloud.xyz])
        acc_int = np.concatenate([acc_int, cloud.intensity])
        acc_ring = np.concatenate([acc_ring, cloud.ring])
        provenance.extend([_source_id(cloud, i)] * len(cloud))
        ring_count = max(ring_count, cloud.ring_count)
        created_at = max(created_at, cloud.timestamp_ns)

    acc_xyz = np.concatenate([acc_xyz, reference.xyz])
    acc_int = np.concatenate([acc_int, reference.intensity])
    acc_ring = np.concatenate([acc_ring, reference.ring])
    provenance.extend([_source_id(reference, len(transformed))] * len(reference))

    merged = PointCloud(acc_xyz, acc_int, acc_ring, ring_count,
                        frame_id=reference.frame_id, timestamp_ns=created_at)
    return ElidMap(merged, tuple(provenance), created_at)


def build_map(clouds: Sequence[PointCloud], transforms: Sequence[RigidTransform],
              reference: PointCloud) -> ElidMap:
    """Transform every cloud with its paired transform and accumulate, reference last."""
    if len(clouds) != len(transforms):
        raise ArityMismatch(f"{len(clouds)} clouds but {len(transforms)} transforms")
    moved = [apply_transform(cloud, t) for cloud, t in zip(clouds, transforms)]
    return accumulate_map(moved, reference)


def measure_distance(elid_map: ElidMap, index_a: int, index_b: int) -> float:
    """Euclidean distance between two map points, the Rviz-style tape measure."""
    n = len(elid_map.cloud)
    for idx in (index_a, index_b):
        if not 0 <= idx < n:
            raise IndexOutOfRange(f"index {idx} out of range for map of {n} points")
    return float(np.linalg.norm(elid_map.cloud.xyz[index_a] - elid_map.cloud.xyz[index_b]))


def write_map(elid_map: ElidMap, path) -> None:
    cloud_io.write_cloud(elid_map.cloud, path, sources=elid_map.provenance)


def read_map(path) -> ElidMap:
    cloud, sources = cloud_io.read_cloud_with_sources(path)
    return ElidMap(cloud, tuple(sources), cloud.timestamp_ns)
