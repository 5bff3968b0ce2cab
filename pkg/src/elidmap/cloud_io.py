"""Text file formats for clouds, IMU logs, selections, transforms and commands.

All formats are line-oriented, space-separated, UTF-8.  Lines that are blank
or start with ``#`` are ignored.  Positions and accelerations are written with
6 decimal places (1 um / 1e-6 m/s^2, below sensor noise), which makes a
write -> read -> write cycle byte-stable.

Formats:

* Cloud file      -- header ``ELIDPC1 <point_count> <ring_count> <frame_id>
  <timestamp_ns>`` followed by ``point_count`` rows ``x y z intensity ring``.
  Merged-map files append a sixth ``src`` column (the source cloud id);
  :func:`read_cloud` ignores it, :func:`read_cloud_with_sources` requires it.
* IMU log         -- rows ``gx gy gz timestamp_ns``, timestamps non-decreasing.
* Selection file  -- records ``SEGMENT <cloud_id> <idx...>`` (>= 3 indices)
  and ``POINTPAIR <axis> <cloud_id> <idx> <ref_cloud_id> <ref_idx>``.
* Transform file  -- 4 rows of 4 numbers, the homogeneous matrix row-major.
* Calibration     -- exactly three rows ``axis g_min g_max`` (axes x, y, z).
* Command file    -- rows ``TURN <degrees>`` / ``MOVE <seconds>``.

Parsers never raise anything but :class:`~elidmap.errors.ElidError` subclasses
on malformed input.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DanglingIndex,
    DegenerateCalibration,
    EmptyLog,
    FileNotFound,
    IoError,
    MalformedHeader,
    MalformedRow,
    NonOrthonormalRotation,
    RingIndexOutOfRange,
)
from .geometry import PointCloud, RigidTransform, rotation_defect, ROTATION_GATE

CLOUD_MAGIC = "ELIDPC1"

AXES = ("x", "y", "z")
AXIS_INDEX = {"x": 0, "y": 1, "z": 2}


# --- shared helpers -------------------------------------------------------

def _read_lines(path) -> list[str]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read()
    except FileNotFoundError as exc:
        raise FileNotFound(str(path)) from exc
    except IsADirectoryError as exc:
        raise FileNotFound(f"{path} is a directory") from exc
    except UnicodeDecodeError as exc:
        raise MalformedRow(f"{path}: not valid UTF-8 text") from exc
    except OSError as exc:
        raise IoError(f"{path}: {exc}") from exc
    lines = []
    for n, line in enumerate(raw.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        lines.append((n, stripped))
    return lines


def _atomic_write(path, text: str) -> None:
    """Write via a temp file + rename so readers never see partial content."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except OSError as exc:
        if tmp.exists():
            tmp.unlink(missing_ok=True)
        raise IoError(f"{path}: {exc}") from exc


def _parse_float(token: str, where: str) -> float:
    try:
        v = float(token)
    except ValueError as exc:
        raise MalformedRow(f"{where}: {token!r} is not a number") from exc
    if not math.isfinite(v):
        raise MalformedRow(f"{where}: {token!r} is not finite")
    return v


def _parse_int(token: str, where: str) -> int:
    try:
        return int(token)
    except ValueError as exc:
        raise MalformedRow(f"{where}: {token!r} is not an integer") from exc


def _check_id(token: str, what: str) -> str:
    if not token or any(c.isspace() for c in token) or token.startswith("#"):
        raise MalformedRow(f"{what} {token!r} must be non-empty without whitespace")
    return token


# --- cloud files ----------------------------------------------------------

def write_cloud(cloud: PointCloud, path, sources: Sequence[str] | None = None) -> None:
    """Serialize a cloud; ``sources`` adds the per-point provenance column."""
    if sources is not None and len(sources) != len(cloud):
        raise IoError("sources must have one entry per point")
    frame = cloud.frame_id if cloud.frame_id else "-"
    _check_id(frame, "frame_id")
    out = [f"{CLOUD_MAGIC} {len(cloud)} {cloud.ring_count} {frame} {cloud.timestamp_ns}"]
    for i in range(len(cloud)):
        x, y, z = cloud.xyz[i]
        row = f"{x:.6f} {y:.6f} {z:.6f} {cloud.intensity[i]:.6f} {cloud.ring[i]}"
        if sources is not None:
            row += f" {_check_id(str(sources[i]), 'src')}"
        out.append(row)
    _atomic_write(path, "\n".join(out) + "\n")


def _read_cloud_rows(path, want_sources: bool):
    lines = _read_lines(path)
    if not lines:
        raise MalformedHeader(f"{path}: missing header line")
    n, header = lines[0]
    tokens = header.split()
    if len(tokens) != 5 or tokens[0] != CLOUD_MAGIC:
        raise MalformedHeader(f"{path}:{n}: expected '{CLOUD_MAGIC} <count> <rings> <frame> <ts>'")
    try:
        count = _parse_int(tokens[1], f"{path}:{n} point_count")
        ring_count = _parse_int(tokens[2], f"{path}:{n} ring_count")
        frame_id = tokens[3]
        ts = _parse_int(tokens[4], f"{path}:{n} timestamp")
    except MalformedRow as exc:
        raise MalformedHeader(str(exc)) from exc
    if count < 0 or ring_count < 1:
        raise MalformedHeader(f"{path}:{n}: invalid counts in header")
    rows = lines[1:]
    if len(rows) != count:
        raise MalformedHeader(f"{path}: header says {count} points, file has {len(rows)} rows")

    xyz = np.empty((count, 3))
    inten = np.empty(count)
    ring = np.empty(count, dtype=np.int32)
    srcs: list[str] = []
    for i, (ln, row) in enumerate(rows):
        t = row.split()
        if want_sources:
            if len(t) != 6:
                raise MalformedRow(f"{path}:{ln}: expected 'x y z intensity ring src'")
        elif len(t) not in (5, 6):
            raise MalformedRow(f"{path}:{ln}: expected 5 columns (6 with src)")
        where = f"{path}:{ln}"
        xyz[i, 0] = _parse_float(t[0], where)
        xyz[i, 1] = _parse_float(t[1], where)
        xyz[i, 2] = _parse_float(t[2], where)
        inten[i] = _parse_float(t[3], where)
        if not 0.0 <= inten[i] <= 1.0:
            raise MalformedRow(f"{where}: intensity {t[3]} outside [0, 1]")
        r = _parse_int(t[4], where)
        if not 0 <= r < ring_count:
            raise RingIndexOutOfRange(f"{where}: ring {r} with ring_count {ring_count}")
        ring[i] = r
        if want_sources:
            srcs.append(t[5])
    frame = "" if frame_id == "-" else frame_id
    cloud = PointCloud(xyz, inten, ring, ring_count, frame, ts)
    return (cloud, srcs) if want_sources else cloud


def read_cloud(path) -> PointCloud:
    return _read_cloud_rows(path, want_sources=False)


def read_cloud_with_sources(path) -> tuple[PointCloud, list[str]]:
    """Parse a merged-map file: cloud plus its per-point source ids."""
    return _read_cloud_rows(path, want_sources=True)


# --- IMU logs ---------------------------------------------------------------

@dataclass(frozen=True)
class ImuSample:
    """Linear accelerations along sensor x/y/z in m/s^2."""

    gx: float
    gy: float
    gz: float
    timestamp_ns: int

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.gx, self.gy, self.gz])


def write_imu_log(samples: Iterable[ImuSample], path) -> None:
    out = [f"{s.gx:.6f} {s.gy:.6f} {s.gz:.6f} {s.timestamp_ns}" for s in samples]
    _atomic_write(path, "\n".join(out) + ("\n" if out else ""))


def read_imu_log(path) -> list[ImuSample]:
    lines = _read_lines(path)
    samples: list[ImuSample] = []
    prev_ts = None
    for ln, row in lines:
        t = row.split()
        if len(t) != 4:
            raise MalformedRow(f"{path}:{ln}: expected 'gx gy gz timestamp_ns'")
        where = f"{path}:{ln}"
        gx, gy, gz = (_parse_float(tok, where) for tok in t[:3])
        ts = _parse_int(t[3], where)
        if prev_ts is not None and ts < prev_ts:
            raise MalformedRow(f"{where}: timestamp {ts} out of order (previous {prev_ts})")
        prev_ts = ts
        samples.append(ImuSample(gx, gy, gz, ts))
    if not samples:
        raise EmptyLog(str(path))
    return samples


# --- selection files --------------------------------------------------------

@dataclass(frozen=True)
class SegmentSelection:
    """>= 3 middle-ring point indices, consecutive along the ring."""

    cloud_id: str
    indices: tuple[int, ...]


@dataclass(frozen=True)
class PointPairSelection:
    """One point per cloud on surfaces facing each other along ``axis``."""

    axis: str
    cloud_id: str
    index: int
    ref_cloud_id: str
    ref_index: int


@dataclass(frozen=True)
class SelectionSet:
    segments: tuple[SegmentSelection, ...] = ()
    pairs: tuple[PointPairSelection, ...] = ()

    def segment_for(self, cloud_id: str) -> SegmentSelection | None:
        for s in self.segments:
            if s.cloud_id == cloud_id:
                return s
        return None

    def pair_for(self, cloud_id: str, axis: str) -> PointPairSelection | None:
        for p in self.pairs:
            if p.cloud_id == cloud_id and p.axis == axis:
                return p
        return None


def write_selection(selection: SelectionSet, path) -> None:
    out = []
    for s in selection.segments:
        out.append(f"SEGMENT {_check_id(s.cloud_id, 'cloud_id')} "
                   + " ".join(str(i) for i in s.indices))
    for p in selection.pairs:
        out.append(
            f"POINTPAIR {p.axis} {_check_id(p.cloud_id, 'cloud_id')} {p.index} "
            f"{_check_id(p.ref_cloud_id, 'cloud_id')} {p.ref_index}"
        )
    _atomic_write(path, "\n".join(out) + ("\n" if out else ""))


def _check_index(cloud_id: str, idx: int, sizes: Mapping[str, int], where: str) -> None:
    if cloud_id not in sizes:
        raise DanglingIndex(f"{where}: unknown cloud {cloud_id!r}")
    if not 0 <= idx < sizes[cloud_id]:
        raise DanglingIndex(f"{where}: index {idx} out of range for cloud "
                            f"{cloud_id!r} of size {sizes[cloud_id]}")


def read_selection(path, sizes: Mapping[str, int]) -> SelectionSet:
    """Parse selections, validating every index against ``sizes`` (id -> point count)."""
    lines = _read_lines(path)
    segments: list[SegmentSelection] = []
    pairs: list[PointPairSelection] = []
    for ln, row in lines:
        t = row.split()
        where = f"{path}:{ln}"
        if t[0] == "SEGMENT":
            if len(t) < 5:
                raise MalformedRow(f"{where}: SEGMENT needs a cloud id and >= 3 indices")
            cloud_id = t[1]
            idx = tuple(_parse_int(tok, where) for tok in t[2:])
            for i in idx:
                _check_index(cloud_id, i, sizes, where)
            segments.append(SegmentSelection(cloud_id, idx))
        elif t[0] == "POINTPAIR":
            if len(t) != 6:
                raise MalformedRow(f"{where}: expected 'POINTPAIR axis cloud idx ref_cloud idx'")
            axis = t[1]
            if axis not in AXES:
                raise MalformedRow(f"{where}: axis must be one of x|y|z, got {axis!r}")
            idx = _parse_int(t[3], where)
            ref_idx = _parse_int(t[5], where)
            _check_index(t[2], idx, sizes, where)
            _check_index(t[4], ref_idx, sizes, where)
            pairs.append(PointPairSelection(axis, t[2], idx, t[4], ref_idx))
        else:
            raise MalformedRow(f"{where}: unknown record {t[0]!r}")
    return SelectionSet(tuple(segments), tuple(pairs))


# --- transform files ----------------------------------------------------------

def write_transform(transform: RigidTransform, path) -> None:
    rows = [" ".join(f"{v:.17g}" for v in row) for row in transform.homogeneous]
    _atomic_write(path, "\n".join(rows) + "\n")


def read_transform(path) -> RigidTransform:
    lines = _read_lines(path)
    if len(lines) != 4:
        raise MalformedRow(f"{path}: expected 4 matrix rows, found {len(lines)}")
    mat = np.empty((4, 4))
    for i, (ln, row) in enumerate(lines):
        t = row.split()
        if len(t) != 4:
            raise MalformedRow(f"{path}:{ln}: expected 4 numbers per row")
        for j, tok in enumerate(t):
            mat[i, j] = _parse_float(tok, f"{path}:{ln}")
    if not np.allclose(mat[3], [0.0, 0.0, 0.0, 1.0], atol=1e-9):
        raise MalformedRow(f"{path}: fourth row must be '0 0 0 1'")
    if rotation_defect(mat[:3, :3]) > ROTATION_GATE:
        raise NonOrthonormalRotation(f"{path}: rotation block is not orthonormal")
    return RigidTransform(mat[:3, :3], mat[:3, 3])


# --- calibration profile files ---------------------------------------------

def write_profile(profile, path) -> None:
    """``profile`` is a CalibrationProfile from :mod:`elidmap.imu`."""
    out = [
        f"{axis} {cal.g_min:.6f} {cal.g_max:.6f}"
        for axis, cal in zip(AXES, (profile.x, profile.y, profile.z))
    ]
    _atomic_write(path, "\n".join(out) + "\n")


def read_profile(path):
    from .imu import AxisCalibration, CalibrationProfile  # avoid import cycle

    lines = _read_lines(path)
    found: dict[str, AxisCalibration] = {}
    for ln, row in lines:
        t = row.split()
        where = f"{path}:{ln}"
        if len(t) != 3:
            raise MalformedRow(f"{where}: expected 'axis g_min g_max'")
        axis = t[0]
        if axis not in AXES:
            raise MalformedRow(f"{where}: axis must be x|y|z, got {axis!r}")
        if axis in found:
            raise MalformedRow(f"{where}: duplicate axis {axis!r}")
        g_min = _parse_float(t[1], where)
        g_max = _parse_float(t[2], where)
        if g_max <= g_min:
            raise DegenerateCalibration(f"{where}: g_max {g_max} <= g_min {g_min}")
        found[axis] = AxisCalibration(axis, g_min, g_max)
    if set(found) != set(AXES):
        raise MalformedHeader(f"{path}: profile must contain axes x, y and z exactly once")
    return CalibrationProfile(found["x"], found["y"], found["z"])


# --- command files -----------------------------------------------------------

def write_commands(commands, path) -> None:
    """``commands`` is a sequence of NavCommand from :mod:`elidmap.planner`."""
    out = []
    for c in commands:
        if c.kind == "TURN":
            out.append(f"TURN {c.value:.6f}")
        elif c.kind == "MOVE":
            out.append(f"MOVE {c.value:.6f}")
        else:
            raise IoError(f"unknown command kind {c.kind!r}")
    _atomic_write(path, "\n".join(out) + ("\n" if out else ""))


def read_commands(path):
    from .planner import NavCommand  # avoid import cycle

    lines = _read_lines(path)
    commands = []
    for ln, row in lines:
        t = row.split()
        where = f"{path}:{ln}"
        if len(t) != 2 or t[0] not in ("TURN", "MOVE"):
            raise MalformedRow(f"{where}: expected 'TURN <deg>' or 'MOVE <sec>'")
        value = _parse_float(t[1], where)
        if t[0] == "TURN" and not -180.0 < value <= 180.0:
            raise MalformedRow(f"{where}: TURN angle must be in (-180, 180]")
        if t[0] == "MOVE" and value <= 0.0:
            raise MalformedRow(f"{where}: MOVE duration must be positive")
        commands.append(NavCommand(t[0], value))
    return commands
