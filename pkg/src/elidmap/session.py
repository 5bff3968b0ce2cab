"""Registration session directory layout.

A session pairs everything one registration run needs::

    <session>/
      session.json                 manifest: reference id, cloud ids, config
      clouds/<id>.cloud            canonical frame per sensor
      clouds/<id>.frames/NNN.cloud extra frames for yaw averaging (optional)
      imu/<id>.imu                 stationary gravity log per sensor
      imu/<id>.cal.<axis>.min.imu  calibration window, axis pointing down
      imu/<id>.cal.<axis>.max.imu  calibration window, axis pointing up
      calibration/<id>.cal         per-sensor calibration profile
      selections.sel               human (or synthetic) selections
      transforms/<id>.tf           estimated homogeneous transforms

The manifest's optional ``config`` block overrides pipeline defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from . import cloud_io
from .config import PipelineConfig, merge_pipeline_config
from .errors import FileNotFound, MalformedSession
from .geometry import PointCloud

MANIFEST_NAME = "session.json"
MANIFEST_FORMAT = "elid-session-1"


@dataclass(frozen=True)
class Session:
    root: Path
    reference: str | None  # None only for sessions with no clouds yet
    cloud_ids: tuple[str, ...]
    config: PipelineConfig

    # --- paths ---------------------------------------------------------

    def cloud_path(self, cloud_id: str) -> Path:
        return self.root / "clouds" / f"{cloud_id}.cloud"

    def frames_dir(self, cloud_id: str) -> Path:
        return self.root / "clouds" / f"{cloud_id}.frames"

    def imu_path(self, cloud_id: str) -> Path:
        return self.root / "imu" / f"{cloud_id}.imu"

    def window_path(self, cloud_id: str, axis: str, side: str) -> Path:
        return self.root / "imu" / f"{cloud_id}.cal.{axis}.{side}.imu"

    def profile_path(self, cloud_id: str) -> Path:
        return self.root / "calibration" / f"{cloud_id}.cal"

    def selection_path(self) -> Path:
        return self.root / "selections.sel"

    def transform_path(self, cloud_id: str) -> Path:
        return self.root / "transforms" / f"{cloud_id}.tf"

    # --- loading -------------------------------------------------------

    def _check_id(self, cloud_id: str) -> None:
        if cloud_id not in self.cloud_ids:
            raise MalformedSession(f"cloud {cloud_id!r} is not part of this session")

    def load_cloud(self, cloud_id: str) -> PointCloud:
        self._check_id(cloud_id)
        return cloud_io.read_cloud(self.cloud_path(cloud_id))

    def frame_paths(self, cloud_id: str) -> list[Path]:
        """Canonical frame first, then any extra frames in name order."""
        self._check_id(cloud_id)
        paths = [self.cloud_path(cloud_id)]
        frames = self.frames_dir(cloud_id)
        if frames.is_dir():
            paths.extend(sorted(frames.glob("*.cloud")))
        return paths

    def load_imu(self, cloud_id: str):
        self._check_id(cloud_id)
        return cloud_io.read_imu_log(self.imu_path(cloud_id))

    def load_window(self, cloud_id: str, axis: str, side: str):
        self._check_id(cloud_id)
        return cloud_io.read_imu_log(self.window_path(cloud_id, axis, side))

    def load_profile(self, cloud_id: str):
        self._check_id(cloud_id)
        return cloud_io.read_profile(self.profile_path(cloud_id))

    def cloud_sizes(self) -> dict[str, int]:
        return {cid: len(self.load_cloud(cid)) for cid in self.cloud_ids}

    def load_selection(self) -> cloud_io.SelectionSet:
        path = self.selection_path()
        if not path.exists():
            return cloud_io.SelectionSet()
        return cloud_io.read_selection(path, self.cloud_sizes())


def save_manifest(root: Path, reference: str, cloud_ids, config_overrides: dict | None = None) -> None:
    manifest = {
        "format": MANIFEST_FORMAT,
        "reference": reference,
        "clouds": list(cloud_ids),
    }
    if config_overrides:
        manifest["config"] = config_overrides
    (root / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def load_session(root, base_config: PipelineConfig | None = None) -> Session:
    root = Path(root)
    manifest_path = root / MANIFEST_NAME
    try:
        text = manifest_path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise FileNotFound(f"{manifest_path} (not a session directory?)") from exc
    except UnicodeDecodeError as exc:
        raise MalformedSession(f"{manifest_path}: not valid UTF-8 text") from exc
    except OSError as exc:
        raise MalformedSession(f"{manifest_path}: {exc}") from exc
    try:
        data = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedSession(f"{manifest_path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict) or data.get("format") != MANIFEST_FORMAT:
        raise MalformedSession(f"{manifest_path}: expected format {MANIFEST_FORMAT!r}")
    reference = data.get("reference")
    clouds = data.get("clouds")
    if not isinstance(clouds, list) or not all(isinstance(c, str) for c in clouds):
        raise MalformedSession(f"{manifest_path}: 'clouds' must be a list of ids")
    if clouds:
        if not isinstance(reference, str) or reference not in clouds:
            raise MalformedSession(
                f"{manifest_path}: reference {reference!r} not in clouds list")
    elif reference is not None:
        raise MalformedSession(f"{manifest_path}: reference given but clouds list is empty")
    if len(set(clouds)) != len(clouds):
        raise MalformedSession(f"{manifest_path}: duplicate cloud ids")
    config = base_config if base_config is not None else PipelineConfig()
    overrides = data.get("config", {})
    if overrides:
        config = merge_pipeline_config(config, overrides)
    return Session(root, reference, tuple(clouds), config)
