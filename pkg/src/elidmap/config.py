"""Runtime configuration: estimator parameters, voxel defaults, drive speeds.

Configuration lives in a JSON file (see ``--config``), may be partially
overridden by a session manifest, and individual CLI flags win over both.
Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import FileNotFound, MalformedConfig


@dataclass(frozen=True)
class RansacConfig:
    iterations: int = 100
    inlier_threshold: float = 0.02  # meters, matched to LiDAR range noise


@dataclass(frozen=True)
class IcpConfig:
    max_iterations: int = 50
    convergence_tol: float = 1e-6  # meters of RMS change


@dataclass(frozen=True)
class PipelineConfig:
    ransac: RansacConfig = RansacConfig()
    icp: IcpConfig = IcpConfig()
    yaw_frames: int = 50  # readings averaged per yaw estimate
    seed: int = 0


@dataclass(frozen=True)
class VoxelConfig:
    voxel_size: float = 0.10
    min_points_per_voxel: int = 1
    inflation_radius: float = 0.25
    z_min: float = 0.05
    z_max: float = 0.60


@dataclass(frozen=True)
class DriveConfig:
    linear_speed: float = 0.30       # m/s
    angular_speed: float = 90.0      # deg/s
    diagonals: bool = False


@dataclass(frozen=True)
class AppConfig:
    pipeline: PipelineConfig = PipelineConfig()
    voxel: VoxelConfig = VoxelConfig()
    drive: DriveConfig = DriveConfig()


def _merge_dataclass(base, data: dict, where: str):
    known = {f.name: f for f in fields(base)}
    updates = {}
    for key, value in data.items():
        if key not in known:
            raise MalformedConfig(f"{where}: unknown key {key!r}")
        current = getattr(base, key)
        if isinstance(value, dict):
            updates[key] = _merge_dataclass(current, value, f"{where}.{key}")
        else:
            try:
                updates[key] = type(current)(value) if not isinstance(value, bool) or isinstance(current, bool) else value
            except (TypeError, ValueError) as exc:
                raise MalformedConfig(f"{where}.{key}: bad value {value!r}") from exc
    return replace(base, **updates)


def merge_pipeline_config(base: PipelineConfig, data: dict) -> PipelineConfig:
    if not isinstance(data, dict):
        raise MalformedConfig("pipeline config override must be an object")
    return _merge_dataclass(base, data, "config")


def load_config(path) -> AppConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise FileNotFound(str(path)) from exc
    except UnicodeDecodeError as exc:
        raise MalformedConfig(f"{path}: not valid UTF-8 text") from exc
    except OSError as exc:
        raise MalformedConfig(f"{path}: {exc}") from exc
    try:
        data = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedConfig(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise MalformedConfig(f"{path}: top level must be an object")
    return _merge_dataclass(AppConfig(), data, str(path))
