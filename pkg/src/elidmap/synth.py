"""Build complete synthetic registration sessions from a scene description.

This is the test-bench side of the package: it renders every sensor of a
scene into session files (clouds, yaw-averaging frames, IMU logs, calibration
windows) and synthesizes the selections a human operator would click, using
the simulator's knowledge of which surface every ray hit.  Selection rules
follow the operator guidance: yaw segments come from a straight wall stretch
seen by all sensors, and each axis pair sits on a flat surface facing the
sensor along that axis (the long far wall for x/y, a low horizontal surface
such as a bench top for z).
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from . import cloud_io
from .cloud_io import PointPairSelection, SegmentSelection, SelectionSet
from .config import PipelineConfig
from .errors import MalformedScene, SparseRing
from .geometry import EulerAngles, PointCloud
from .session import Session, load_session, save_manifest
from .simulator import (
    Box,
    ImuBias,
    SceneSpec,
    SensorPose,
    TraceResult,
    face_code,
    render_calibration_window,
    render_frame,
    render_imu,
    trace_frame,
)
from .translation import filter_neighbors

FRAME_PERIOD_NS = 50_000_000  # 20 Hz


def canonical_scene() -> SceneSpec:
    """Two-sensor room mirroring the reference measurements: 3.12 m x 5.00 m
    footprint, sensors elevated with a 2 m offset along x, and a low bench
    whose top provides the z-facing surface."""
    room = Box(np.zeros(3), np.array([3.12, 5.00, 3.00]))
    bench = Box(np.array([0.20, 3.20, 0.01]), np.array([2.90, 4.70, 0.90]))
    sensors = (
        SensorPose(np.array([0.56, 1.20, 1.60]), EulerAngles.from_degrees(0.4, -0.3, 1.5)),
        SensorPose(np.array([2.56, 1.20, 1.60]), EulerAngles.from_degrees(-0.3, 0.5, -12.0)),
    )
    return SceneSpec(room, (bench,), sensors)


def _segment_run(trace: TraceResult, cloud: PointCloud, face: int,
                 axis: int, lo: float, hi: float, max_len: int = 48) -> tuple[int, ...]:
    """Longest consecutive middle-ring run on ``face`` within a world window."""
    middle = cloud.ring_count // 2
    order = cloud.ring_indices(middle)
    world = trace.points_world
    ok = (trace.faces[order] == face) & (world[order, axis] >= lo) & (world[order, axis] <= hi)

    best_start, best_len, start = 0, 0, None
    for pos, flag in enumerate(ok):
        if flag and start is None:
            start = pos
        if (not flag or pos == len(ok) - 1) and start is not None:
            end = pos + 1 if flag else pos
            if end - start > best_len:
                best_start, best_len = start, end - start
            start = None
    if best_len < 3:
        raise MalformedScene(
            "no straight middle-ring wall stretch visible; pick segments manually"
        )
    if best_len > max_len:
        best_start += (best_len - max_len) // 2
        best_len = max_len
    run = tuple(int(order[p]) for p in range(best_start, best_start + best_len))
    xs = cloud.xyz[list(run), 0]
    if float(xs.max() - xs.min()) < 1e-3:
        raise MalformedScene("wall segment is near-vertical in the sensor frame")
    return run


def _pick_axis_point(trace: TraceResult, cloud: PointCloud, allowed_faces,
                     target_world, tries: int = 250) -> int:
    """Nearest point to ``target_world`` on an allowed face whose whole
    5-point neighborhood lies on that same face."""
    rings = trace.rings
    mask = np.isin(trace.faces, list(allowed_faces)) \
        & (rings >= 1) & (rings <= cloud.ring_count - 2)
    candidates = np.nonzero(mask)[0]
    if len(candidates) == 0:
        raise MalformedScene("no candidate surface points for axis selection")
    world = trace.points_world
    d2 = np.sum((world[candidates] - np.asarray(target_world)) ** 2, axis=1)
    for idx in candidates[np.argsort(d2)][:tries]:
        idx = int(idx)
        try:
            ns = filter_neighbors(cloud, idx)
        except SparseRing:
            continue
        if all(trace.faces[j] == trace.faces[idx] for j in ns.indices):
            return idx
    raise MalformedScene("no axis selection with a coplanar neighborhood found")


def plan_selections(scene: SceneSpec, reference_index: int = 0,
                    traces: list[TraceResult] | None = None) -> SelectionSet:
    """Synthesize operator selections for every sensor of ``scene``.

    Requires a scene where the +y room wall is visible on the middle ring of
    every sensor and at least one obstacle exposes its top surface.
    """
    if len(scene.sensors) < 2:
        raise MalformedScene("selection planning needs at least two sensors")
    if traces is None:
        traces = [trace_frame(scene, i) for i in range(len(scene.sensors))]
    clouds = [
        render_frame(scene, i, 0.0, seed=0, trace=traces[i])
        for i in range(len(scene.sensors))
    ]
    room_hi = scene.room.max_corner
    wall_y = face_code(0, 1, 1)          # the +y room wall
    wall_x = face_code(0, 0, 1)          # the +x room wall
    tops = [face_code(k + 1, 2, 1) for k in range(len(scene.obstacles))]
    if not tops:
        raise MalformedScene("z-axis selection needs an obstacle with a visible top")

    cx = float(room_hi[0]) / 2.0
    window = (cx - 0.65, cx + 0.65)
    # Shared world targets: sampling the same wall region from every sensor
    # cancels the in-frame wall tilt a yawed reference introduces (different
    # regions of a long wall differ along the axis by sin(yaw) * separation).
    mean_pos = np.mean([s.position for s in scene.sensors], axis=0)

    segments = []
    picks: list[dict[str, int]] = []
    for i, sensor in enumerate(scene.sensors):
        run = _segment_run(traces[i], clouds[i], wall_y, axis=0,
                           lo=window[0], hi=window[1])
        segments.append(SegmentSelection(f"s{i}", run))
        # Placing the x target deep along the wall keeps its distance (and so
        # the raster spacing of the 5-point patch) comparable for sensors
        # that are themselves separated along x.
        far_y = mean_pos[1] + 0.75 * (room_hi[1] - mean_pos[1])
        picks.append({
            "x": _pick_axis_point(traces[i], clouds[i], [wall_x],
                                  (room_hi[0], far_y, mean_pos[2])),
            "y": _pick_axis_point(traces[i], clouds[i], [wall_y],
                                  (mean_pos[0], room_hi[1], mean_pos[2])),
            "z": _pick_axis_point(traces[i], clouds[i], tops,
                                  (mean_pos[0], mean_pos[1] + 2.7, 0.0)),
        })

    ref = f"s{reference_index}"
    pairs = []
    for i in range(len(scene.sensors)):
        if i == reference_index:
            continue
        for axis in cloud_io.AXES:
            pairs.append(PointPairSelection(
                axis, f"s{i}", picks[i][axis], ref, picks[reference_index][axis]))
    return SelectionSet(tuple(segments), tuple(pairs))


def build_synthetic_session(scene: SceneSpec, out_dir, *, reference_index: int = 0,
                            cloud_sigma: float = 0.03, imu_sigma: float = 0.05,
                            seed: int = 7, yaw_frames: int = 12,
                            imu_samples: int = 400, window_samples: int = 300,
                            config: PipelineConfig | None = None) -> Session:
    """Render a full session directory and return the loaded Session."""
    if not 0 <= reference_index < len(scene.sensors):
        raise MalformedScene(f"reference index {reference_index} out of range")
    out_dir = Path(out_dir)
    for sub in ("clouds", "imu", "calibration", "transforms"):
        (out_dir / sub).mkdir(parents=True, exist_ok=True)

    root_ss = np.random.SeedSequence(seed)
    seeds = root_ss.generate_state(8 * len(scene.sensors) + 8)

    def seed_at(k: int) -> int:
        return int(seeds[k])

    n = len(scene.sensors)
    traces = [trace_frame(scene, i) for i in range(n)]
    ids = [f"s{i}" for i in range(n)]

    bias_rng = np.random.default_rng(seed_at(0))
    biases = [
        ImuBias(gain=1.0 + bias_rng.uniform(-0.03, 0.03, 3),
                offset=bias_rng.uniform(-0.30, 0.30, 3))
        for _ in range(n)
    ]

    for i, sensor in enumerate(scene.sensors):
        base = 8 + 8 * i
        cloud = render_frame(scene, i, cloud_sigma, seed=seed_at(base),
                             timestamp_ns=0, trace=traces[i])
        cloud_io.write_cloud(cloud, out_dir / "clouds" / f"{ids[i]}.cloud")

        frames_dir = out_dir / "clouds" / f"{ids[i]}.frames"
        frames_dir.mkdir(exist_ok=True)
        frame_rng = np.random.default_rng(seed_at(base + 1))
        for k in range(max(0, yaw_frames - 1)):
            frame = render_frame(scene, i, cloud_sigma,
                                 seed=int(frame_rng.integers(0, 2**32)),
                                 timestamp_ns=(k + 1) * FRAME_PERIOD_NS,
                                 trace=traces[i])
            cloud_io.write_cloud(frame, frames_dir / f"{k:03d}.cloud")

        samples = render_imu(sensor, imu_sigma, biases[i], imu_samples,
                             seed=seed_at(base + 2))
        cloud_io.write_imu_log(samples, out_dir / "imu" / f"{ids[i]}.imu")
        for a_i, axis in enumerate(cloud_io.AXES):
            for s_i, side in enumerate(("min", "max")):
                window = render_calibration_window(
                    axis, side, biases[i], imu_sigma, window_samples,
                    seed=seed_at(base + 3) + 2 * a_i + s_i)
                cloud_io.write_imu_log(
                    window, out_dir / "imu" / f"{ids[i]}.cal.{axis}.{side}.imu")

    selection = plan_selections(scene, reference_index, traces)
    cloud_io.write_selection(selection, out_dir / "selections.sel")

    overrides = {
        "seed": seed,
        "yaw_frames": yaw_frames,
        "ransac": {"inlier_threshold": max(0.02, 3.0 * cloud_sigma)},
    }
    if config is not None:
        overrides = {
            "seed": config.seed,
            "yaw_frames": config.yaw_frames,
            "ransac": {"iterations": config.ransac.iterations,
                       "inlier_threshold": config.ransac.inlier_threshold},
            "icp": {"max_iterations": config.icp.max_iterations,
                    "convergence_tol": config.icp.convergence_tol},
        }
    save_manifest(out_dir, ids[reference_index], ids, overrides)
    return load_session(out_dir)
