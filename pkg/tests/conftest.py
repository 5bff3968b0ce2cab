import numpy as np
import pytest

from elidmap import cloud_io
from elidmap.geometry import EulerAngles, PointCloud
from elidmap.pipeline import calibrate_from_windows
from elidmap.session import load_session
from elidmap.simulator import Box, SceneSpec, SensorPose
from elidmap.synth import build_synthetic_session, canonical_scene


def make_cloud(points_xyz, rings, ring_count: int = 16, frame_id: str = "c",
               intensity: float = 0.5, timestamp_ns: int = 0) -> PointCloud:
    xyz = np.asarray(points_xyz, dtype=float).reshape(-1, 3)
    return PointCloud(xyz, np.full(len(xyz), intensity), np.asarray(rings),
                      ring_count, frame_id, timestamp_ns)


def small_scene() -> SceneSpec:
    """Canonical-room layout at a coarse azimuth raster, for fast tests."""
    room = Box(np.zeros(3), np.array([3.12, 5.00, 3.00]))
    bench = Box(np.array([0.20, 3.20, 0.01]), np.array([2.90, 4.70, 0.90]))
    sensors = (
        SensorPose(np.array([0.56, 1.20, 1.60]), EulerAngles.from_degrees(0.4, -0.3, 1.5),
                   azimuth_steps=512),
        SensorPose(np.array([2.56, 1.20, 1.60]), EulerAngles.from_degrees(-0.3, 0.5, -12.0),
                   azimuth_steps=512),
    )
    return SceneSpec(room, (bench,), sensors)


def calibrate_session(session) -> None:
    for cid in session.cloud_ids:
        profile = calibrate_from_windows(session, cid)
        path = session.profile_path(cid)
        path.parent.mkdir(parents=True, exist_ok=True)
        cloud_io.write_profile(profile, path)


@pytest.fixture(scope="session")
def small_session(tmp_path_factory):
    """Low-noise session on the coarse scene; shared by pipeline/service/cli tests."""
    root = tmp_path_factory.mktemp("small_session")
    session = build_synthetic_session(
        small_scene(), root, cloud_sigma=0.01, imu_sigma=0.02,
        seed=5, yaw_frames=4, imu_samples=200, window_samples=120,
    )
    calibrate_session(session)
    return load_session(root)


@pytest.fixture(scope="session")
def canonical_session(tmp_path_factory):
    """Full-noise canonical session used by the acceptance suite."""
    root = tmp_path_factory.mktemp("canonical_session")
    session = build_synthetic_session(
        canonical_scene(), root, cloud_sigma=0.03, imu_sigma=0.05,
        seed=7, yaw_frames=12, imu_samples=400, window_samples=300,
    )
    calibrate_session(session)
    return load_session(root)
