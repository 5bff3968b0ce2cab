"""Synthetic LiDAR scene oracle.

Generates ring-structured point clouds and IMU gravity readings for sensors
with known poses inside axis-aligned box rooms.  Because every surface is an
axis-aligned plane, ray intersections are analytic and the rendered geometry
can be trusted as ground truth for registration and planning tests.

Sensor model: ``ring_count`` elevation channels spread uniformly across the
vertical field of view, ``azimuth_steps`` rays per revolution, range noise
drawn along the ray.  Clouds are emitted in sensor coordinates, ring-major,
azimuth-ascending within each ring.

IMU model: the reaction to gravity (+g on z for a level sensor) expressed in
the sensor frame, pushed through a per-axis affine distortion ``raw = gain *
true + offset`` plus white noise.  The min/max calibration procedure in
:mod:`elidmap.imu` is the exact inverse of that distortion by construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cloud_io import ImuSample
from .errors import MalformedScene
from .geometry import EulerAngles, PointCloud, RigidTransform, build_rotation_matrix
from .imu import STANDARD_GRAVITY

ROOM_INTENSITY = 0.8
OBSTACLE_INTENSITY = 0.4


@dataclass(frozen=True)
class Box:
    min_corner: np.ndarray
    max_corner: np.ndarray

    def __post_init__(self):
        lo = np.ascontiguousarray(self.min_corner, dtype=np.float64).reshape(3)
        hi = np.ascontiguousarray(self.max_corner, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise MalformedScene("box corners must be finite")
        if not np.all(hi > lo):
            raise MalformedScene(f"box must have positive extent, got {lo} .. {hi}")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "min_corner", lo)
        object.__setattr__(self, "max_corner", hi)

    def contains(self, p, strict: bool = False) -> bool:
        p = np.asarray(p, dtype=np.float64)
        if strict:
            return bool(np.all(p > self.min_corner) and np.all(p < self.max_corner))
        return bool(np.all(p >= self.min_corner) and np.all(p <= self.max_corner))


@dataclass(frozen=True)
class SensorPose:
    position: np.ndarray
    orientation: EulerAngles
    ring_count: int = 16
    azimuth_steps: int = 1024
    vertical_fov_deg: float = 33.2

    def __post_init__(self):
        pos = np.ascontiguousarray(self.position, dtype=np.float64).reshape(3)
        pos.flags.writeable = False
        object.__setattr__(self, "position", pos)
        if self.ring_count < 3:
            raise MalformedScene(f"ring_count must be >= 3, got {self.ring_count}")
        if self.azimuth_steps < 8:
            raise MalformedScene(f"azimuth_steps must be >= 8, got {self.azimuth_steps}")
        if not 0.0 < self.vertical_fov_deg < 180.0:
            raise MalformedScene("vertical_fov_deg must be in (0, 180)")

    @property
    def rotation(self) -> np.ndarray:
        return build_rotation_matrix(self.orientation)


@dataclass(frozen=True)
class SceneSpec:
    room: Box
    obstacles: tuple[Box, ...] = ()
    sensors: tuple[SensorPose, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "sensors", tuple(self.sensors))
        for i, ob in enumerate(self.obstacles):
            inside = np.all(ob.min_corner > self.room.min_corner) and \
                np.all(ob.max_corner < self.room.max_corner)
            if not inside:
                raise MalformedScene(f"obstacle {i} is not strictly inside the room")
        for i, s in enumerate(self.sensors):
            if not self.room.contains(s.position, strict=True):
                raise MalformedScene(f"sensor {i} origin is outside the room")
            for j, ob in enumerate(self.obstacles):
                if ob.contains(s.position):
                    raise MalformedScene(f"sensor {i} origin is inside obstacle {j}")


# --- scene JSON -------------------------------------------------------------

def parse_scene(data) -> SceneSpec:
    if not isinstance(data, dict):
        raise MalformedScene("scene must be a JSON object")
    unknown = set(data) - {"room", "obstacles", "sensors"}
    if unknown:
        raise MalformedScene(f"unknown scene keys: {sorted(unknown)}")
    room_spec = data.get("room")
    if not isinstance(room_spec, dict) or "size" not in room_spec:
        raise MalformedScene("scene needs room: {size: [w, l, h]}")
    size = room_spec["size"]
    if not (isinstance(size, list) and len(size) == 3
            and all(isinstance(v, (int, float)) for v in size)):
        raise MalformedScene("room size must be three numbers")
    room = Box(np.zeros(3), np.array(size, dtype=np.float64))

    obstacles = []
    for i, ob in enumerate(data.get("obstacles", [])):
        if not isinstance(ob, dict) or "min" not in ob or "max" not in ob:
            raise MalformedScene(f"obstacle {i} needs min/max corners")
        for key in ("min", "max"):
            v = ob[key]
            if not (isinstance(v, list) and len(v) == 3
                    and all(isinstance(x, (int, float)) for x in v)):
                raise MalformedScene(f"obstacle {i} corner {key} must be three numbers")
        obstacles.append(Box(np.array(ob["min"], dtype=np.float64),
                             np.array(ob["max"], dtype=np.float64)))

    sensors = []
    for i, sp in enumerate(data.get("sensors", [])):
        if not isinstance(sp, dict) or "position" not in sp:
            raise MalformedScene(f"sensor {i} needs a position")
        pos = sp["position"]
        if not (isinstance(pos, list) and len(pos) == 3
                and all(isinstance(x, (int, float)) for x in pos)):
            raise MalformedScene(f"sensor {i} position must be three numbers")
        rpy = sp.get("orientation_deg", [0.0, 0.0, 0.0])
        if not (isinstance(rpy, list) and len(rpy) == 3
                and all(isinstance(x, (int, float)) for x in rpy)):
            raise MalformedScene(f"sensor {i} orientation_deg must be three numbers")
        try:
            sensors.append(SensorPose(
                np.array(pos, dtype=np.float64),
                EulerAngles.from_degrees(*rpy),
                ring_count=int(sp.get("ring_count", 16)),
                azimuth_steps=int(sp.get("azimuth_steps", 1024)),
                vertical_fov_deg=float(sp.get("vertical_fov_deg", 33.2)),
            ))
        except (TypeError, ValueError) as exc:
            raise MalformedScene(f"sensor {i}: {exc}") from exc
    return SceneSpec(room, tuple(obstacles), tuple(sensors))


def load_scene(path) -> SceneSpec:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        from .errors import FileNotFound
        raise FileNotFound(str(path)) from exc
    except UnicodeDecodeError as exc:
        raise MalformedScene(f"{path}: not valid UTF-8 text") from exc
    except OSError as exc:
        raise MalformedScene(f"{path}: {exc}") from exc
    try:
        data = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedScene(f"{path}: invalid JSON ({exc})") from exc
    return parse_scene(data)


def scene_to_dict(scene: SceneSpec) -> dict:
    return {
        "room": {"size": [float(v) for v in scene.room.max_corner]},
        "obstacles": [
            {"min": [float(v) for v in ob.min_corner],
             "max": [float(v) for v in ob.max_corner]}
            for ob in scene.obstacles
        ],
        "sensors": [
            {
                "position": [float(v) for v in s.position],
                "orientation_deg": [
                    math.degrees(s.orientation.roll_phi),
                    math.degrees(s.orientation.pitch_theta),
                    math.degrees(s.orientation.yaw_psi),
                ],
                "ring_count": s.ring_count,
                "azimuth_steps": s.azimuth_steps,
                "vertical_fov_deg": s.vertical_fov_deg,
            }
            for s in scene.sensors
        ],
    }


# --- ray tracing -------------------------------------------------------------

# A face code packs (box, axis, side): box 0 is the room, box k+1 obstacle k;
# side 0 is the min-coordinate face, side 1 the max face.

def face_code(box: int, axis: int, side: int) -> int:
    return box * 6 + axis * 2 + side


def face_normal(code: int) -> np.ndarray:
    """Surface normal pointing toward the open space the sensor sits in."""
    box, rem = divmod(int(code), 6)
    axis, side = divmod(rem, 2)
    n = np.zeros(3)
    if box == 0:
        n[axis] = 1.0 if side == 0 else -1.0  # room walls face inward
    else:
        n[axis] = -1.0 if side == 0 else 1.0  # obstacle faces point outward
    return n


@dataclass(frozen=True)
class TraceResult:
    """Noiseless geometry of one frame, kept for oracle checks."""

    scene: SceneSpec
    sensor_index: int
    dirs_sensor: np.ndarray   # (N, 3) unit rays in the sensor frame
    distances: np.ndarray     # (N,) meters to the hit surface
    rings: np.ndarray         # (N,) ring index per ray
    faces: np.ndarray         # (N,) face codes

    @property
    def sensor(self) -> SensorPose:
        return self.scene.sensors[self.sensor_index]

    @property
    def points_sensor(self) -> np.ndarray:
        return self.dirs_sensor * self.distances[:, None]

    @property
    def points_world(self) -> np.ndarray:
        s = self.sensor
        return self.points_sensor @ s.rotation.T + s.position


def _ray_directions(sensor: SensorPose) -> tuple[np.ndarray, np.ndarray]:
    fov = math.radians(sensor.vertical_fov_deg)
    elevations = -fov / 2.0 + fov * np.arange(sensor.ring_count) / (sensor.ring_count - 1)
    azimuths = 2.0 * math.pi * np.arange(sensor.azimuth_steps) / sensor.azimuth_steps
    elev = np.repeat(elevations, sensor.azimuth_steps)
    az = np.tile(azimuths, sensor.ring_count)
    dirs = np.column_stack([
        np.cos(elev) * np.cos(az),
        np.cos(elev) * np.sin(az),
        np.sin(elev),
    ])
    rings = np.repeat(np.arange(sensor.ring_count, dtype=np.int32), sensor.azimuth_steps)
    return dirs, rings


def trace_frame(scene: SceneSpec, sensor_index: int) -> TraceResult:
    """Cast every (ring, azimuth) ray and record hit distance and surface."""
    sensor = scene.sensors[sensor_index]
    dirs_sensor, rings = _ray_directions(sensor)
    d = dirs_sensor @ sensor.rotation.T
    o = sensor.position

    with np.errstate(divide="ignore", invalid="ignore"):
        # Room: the sensor is inside, so the hit is the exit crossing.
        t_exit_axis = np.where(
            d > 0,
            (scene.room.max_corner - o) / d,
            np.where(d < 0, (scene.room.min_corner - o) / d, np.inf),
        )
        best_t = t_exit_axis.min(axis=1)
        exit_axis = t_exit_axis.argmin(axis=1)
        exit_side = (np.take_along_axis(d, exit_axis[:, None], axis=1)[:, 0] > 0).astype(np.int64)
        best_face = exit_axis * 2 + exit_side  # face_code(0, axis, side)

        # Obstacles: entry crossing of the slab intersection, if in front.
        for k, ob in enumerate(scene.obstacles):
            t1 = (ob.min_corner - o) / d
            t2 = (ob.max_corner - o) / d
            t_lo = np.minimum(t1, t2)
            t_hi = np.maximum(t1, t2)
            # Rays parallel to a slab outside it never hit: force the slab empty.
            parallel_miss = (d == 0) & ((o < ob.min_corner) | (o > ob.max_corner))
            t_lo = np.where(parallel_miss, np.inf, t_lo)
            t_hi = np.where(parallel_miss, -np.inf, t_hi)
            t_near = t_lo.max(axis=1)
            near_axis = t_lo.argmax(axis=1)
            t_far = t_hi.min(axis=1)
            hit = (t_near <= t_far) & (t_near > 1e-9) & (t_near < best_t)
            side = (np.take_along_axis(d, near_axis[:, None], axis=1)[:, 0] < 0).astype(np.int64)
            codes = (k + 1) * 6 + near_axis * 2 + side  # face_code(k + 1, axis, side)
            best_face = np.where(hit, codes, best_face)
            best_t = np.where(hit, t_near, best_t)

    keep = np.isfinite(best_t)
    return TraceResult(scene, sensor_index, dirs_sensor[keep], best_t[keep],
                       rings[keep], best_face[keep])


def render_frame(scene: SceneSpec, sensor_index: int, range_noise_sigma: float = 0.0,
                 seed: int = 0, timestamp_ns: int = 0,
                 trace: TraceResult | None = None) -> PointCloud:
    """One noisy frame in sensor coordinates; deterministic per seed.

    Pass a precomputed ``trace`` to amortize ray casting across frames.
    """
    if trace is None:
        trace = trace_frame(scene, sensor_index)
    rng = np.random.default_rng(seed)
    dist = trace.distances + rng.normal(0.0, range_noise_sigma, size=len(trace.distances))
    xyz = trace.dirs_sensor * dist[:, None]
    intensity = np.where(trace.faces < 6, ROOM_INTENSITY, OBSTACLE_INTENSITY)
    return PointCloud(xyz, intensity, trace.rings,
                      scene.sensors[sensor_index].ring_count,
                      frame_id=f"s{sensor_index}", timestamp_ns=timestamp_ns)


def ground_truth_transform(scene: SceneSpec, sensor_a: int, sensor_b: int) -> RigidTransform:
    """Exact transform mapping sensor_b's frame into sensor_a's frame."""
    a = scene.sensors[sensor_a]
    b = scene.sensors[sensor_b]
    ra_t = a.rotation.T
    return RigidTransform(ra_t @ b.rotation, ra_t @ (b.position - a.position))


# --- IMU rendering ------------------------------------------------------------

@dataclass(frozen=True)
class ImuBias:
    """Per-axis affine distortion of true accelerations: raw = gain * true + offset."""

    gain: np.ndarray = field(default_factory=lambda: np.ones(3))
    offset: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        g = np.ascontiguousarray(self.gain, dtype=np.float64).reshape(3)
        o = np.ascontiguousarray(self.offset, dtype=np.float64).reshape(3)
        if np.any(g <= 0):
            raise ValueError("bias gains must be positive")
        g.flags.writeable = False
        o.flags.writeable = False
        object.__setattr__(self, "gain", g)
        object.__setattr__(self, "offset", o)

    def distort(self, true: np.ndarray) -> np.ndarray:
        return self.gain * true + self.offset


def _samples_from_truth(true: np.ndarray, bias: ImuBias, noise_sigma: float,
                        n_samples: int, seed: int, rate_hz: float,
                        t0_ns: int) -> list[ImuSample]:
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    raw = bias.distort(true) + rng.normal(0.0, noise_sigma, size=(n_samples, 3))
    period_ns = int(round(1e9 / rate_hz))
    return [
        ImuSample(float(r[0]), float(r[1]), float(r[2]), t0_ns + i * period_ns)
        for i, r in enumerate(raw)
    ]


def render_imu(pose: SensorPose, noise_sigma: float = 0.0,
               bias: ImuBias | None = None, n_samples: int = 1, seed: int = 0,
               rate_hz: float = 100.0, t0_ns: int = 0) -> list[ImuSample]:
    """Stationary accelerometer log: gravity reaction in the sensor frame."""
    bias = bias or ImuBias()
    true = pose.rotation.T @ np.array([0.0, 0.0, STANDARD_GRAVITY])
    return _samples_from_truth(true, bias, noise_sigma, n_samples, seed, rate_hz, t0_ns)


def render_calibration_window(axis: str, side: str, bias: ImuBias | None = None,
                              noise_sigma: float = 0.0, n_samples: int = 1,
                              seed: int = 0, rate_hz: float = 100.0,
                              t0_ns: int = 0) -> list[ImuSample]:
    """Readings with the given axis pointing straight down (min) or up (max)."""
    axes = {"x": 0, "y": 1, "z": 2}
    if axis not in axes:
        raise ValueError(f"axis must be x|y|z, got {axis!r}")
    if side not in ("min", "max"):
        raise ValueError(f"side must be min|max, got {side!r}")
    bias = bias or ImuBias()
    true = np.zeros(3)
    true[axes[axis]] = -STANDARD_GRAVITY if side == "min" else STANDARD_GRAVITY
    return _samples_from_truth(true, bias, noise_sigma, n_samples, seed, rate_hz, t0_ns)
