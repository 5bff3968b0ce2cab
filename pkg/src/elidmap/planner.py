"""Occupancy-grid planning over a merged map.

The map is quantized into a 3D voxel grid covering its bounding box; cells
containing enough returns inside the height band of interest are occupied,
and occupancy is inflated by the robot radius plus the half-voxel
quantization margin so planned paths keep clearance.  Paths are planar
(ground robot): breadth-first search on the uniform 4-connected grid by
default, Dijkstra with sqrt(2)/sqrt(3) step costs when diagonal moves are
enabled.  A planned path compresses into TURN/MOVE command scripts that an
ideal differential-drive robot can replay for collision checking.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .errors import (
    DegenerateBand,
    EmptyMap,
    GoalBlocked,
    MalformedGrid,
    NoPath,
    StartBlocked,
)
from .geometry import PointCloud, normalize_angle

GRID_MAGIC = "ELIDVOX1"

Cell = tuple[int, int, int]


@dataclass(frozen=True)
class VoxelGrid:
    origin: np.ndarray        # world position of the (0,0,0) cell corner
    voxel_size: float
    dims: tuple[int, int, int]
    occupied: np.ndarray      # bool (nx, ny, nz)
    inflated: np.ndarray      # bool, superset of occupied
    inflation_radius: float

    def __post_init__(self):
        origin = np.ascontiguousarray(self.origin, dtype=np.float64).reshape(3)
        origin.flags.writeable = False
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if self.occupied.shape != self.dims or self.inflated.shape != self.dims:
            raise ValueError("occupancy arrays must match dims")
        if np.any(self.occupied & ~self.inflated):
            raise ValueError("inflated cells must cover occupied cells")

    def in_bounds(self, cell: Cell) -> bool:
        return all(0 <= c < d for c, d in zip(cell, self.dims))

    def is_blocked(self, cell: Cell) -> bool:
        return bool(self.inflated[cell])

    def cell_center(self, cell: Cell) -> np.ndarray:
        return self.origin + (np.asarray(cell, dtype=np.float64) + 0.5) * self.voxel_size

    def world_to_cell(self, point) -> Cell | None:
        rel = (np.asarray(point, dtype=np.float64) - self.origin) / self.voxel_size
        cell = tuple(int(v) for v in np.floor(rel))
        return cell if self.in_bounds(cell) else None


@dataclass(frozen=True)
class NavPath:
    cells: tuple[Cell, ...]
    start: Cell
    goal: Cell
    total_cost: float  # meters


@dataclass(frozen=True)
class NavCommand:
    kind: str     # "TURN" or "MOVE"
    value: float  # degrees in (-180, 180] or seconds > 0


@dataclass(frozen=True)
class ReplayResult:
    trajectory: np.ndarray          # (n, 3) rows of x, y, heading
    collisions: tuple[tuple[float, float, Cell], ...]
    duration_s: float


def voxelize(source, voxel_size: float, z_band: tuple[float, float],
             inflation_radius: float, min_points_per_voxel: int = 1) -> VoxelGrid:
    """Quantize map points whose z lies in ``z_band`` into an occupancy grid.

    The grid covers the full bounding box of the map; ``inflation_radius``
    should be at least the robot radius plus half a voxel to absorb the
    quantization offset.
    """
    cloud: PointCloud = source.cloud if hasattr(source, "cloud") else source
    if len(cloud) == 0:
        raise EmptyMap("cannot voxelize an empty map")
    if voxel_size <= 0:
        raise ValueError("voxel_size must be positive")
    if inflation_radius < 0:
        raise ValueError("inflation_radius must be >= 0")
    z_min, z_max = z_band
    if not z_min < z_max:
        raise DegenerateBand(f"z band [{z_min}, {z_max}] is empty")

    lo = cloud.xyz.min(axis=0)
    hi = cloud.xyz.max(axis=0)
    dims = tuple(max(1, int(math.ceil((h - l) / voxel_size))) for l, h in zip(lo, hi))
    # Points exactly on the upper boundary clamp into the last cell.
    idx = np.floor((cloud.xyz - lo) / voxel_size).astype(np.int64)
    idx = np.minimum(idx, np.array(dims) - 1)

    in_band = (cloud.xyz[:, 2] >= z_min) & (cloud.xyz[:, 2] <= z_max)
    counts = np.zeros(dims, dtype=np.int64)
    np.add.at(counts, tuple(idx[in_band].T), 1)
    occupied = counts >= max(1, int(min_points_per_voxel))

    r_cells = int(math.floor(inflation_radius / voxel_size + 1e-12))
    if r_cells == 0:
        inflated = occupied.copy()
    else:
        offs = np.arange(-r_cells, r_cells + 1)
        ox, oy, oz = np.meshgrid(offs, offs, offs, indexing="ij")
        stencil = (ox**2 + oy**2 + oz**2) * voxel_size**2 <= inflation_radius**2 + 1e-12
        inflated = ndimage.binary_dilation(occupied, structure=stencil)
    return VoxelGrid(lo, float(voxel_size), dims, occupied, inflated,
                     float(inflation_radius))


def _neighbor_offsets(diagonals: bool, planar: bool) -> list[tuple[Cell, float]]:
    offsets = []
    rng = (-1, 0, 1)
    for dx in rng:
        for dy in rng:
            for dz in (0,) if planar else rng:
                if dx == dy == dz == 0:
                    continue
                if not diagonals and abs(dx) + abs(dy) + abs(dz) != 1:
                    continue
                offsets.append(((dx, dy, dz), math.sqrt(dx * dx + dy * dy + dz * dz)))
    offsets.sort(key=lambda item: item[0])
    return offsets


def shortest_path(grid: VoxelGrid, start: Cell, goal: Cell,
                  diagonals: bool = False, planar: bool = True) -> NavPath:
    """Minimal-cost free path; BFS while costs are uniform, Dijkstra otherwise.

    Ties break deterministically by lexicographic cell order.
    """
    start = tuple(int(v) for v in start)
    goal = tuple(int(v) for v in goal)
    if not grid.in_bounds(start) or grid.is_blocked(start):
        raise StartBlocked(f"start cell {start} is occupied, inflated or outside the grid")
    if not grid.in_bounds(goal) or grid.is_blocked(goal):
        raise GoalBlocked(f"goal cell {goal} is occupied, inflated or outside the grid")

    offsets = _neighbor_offsets(diagonals, planar)
    parents: dict[Cell, Cell | None] = {start: None}
    costs: dict[Cell, float] = {start: 0.0}

    if not diagonals:
        queue: deque[Cell] = deque([start])
        while queue:
            cell = queue.popleft()
            if cell == goal:
                break
            for off, step in offsets:
                nxt = (cell[0] + off[0], cell[1] + off[1], cell[2] + off[2])
                if nxt in parents or not grid.in_bounds(nxt) or grid.is_blocked(nxt):
                    continue
                parents[nxt] = cell
                costs[nxt] = costs[cell] + step * grid.voxel_size
                queue.append(nxt)
    else:
        heap: list[tuple[float, Cell]] = [(0.0, start)]
        settled: set[Cell] = set()
        while heap:
            cost, cell = heapq.heappop(heap)
            if cell in settled:
                continue
            settled.add(cell)
            if cell == goal:
                break
            for off, step in offsets:
                nxt = (cell[0] + off[0], cell[1] + off[1], cell[2] + off[2])
                if nxt in settled or not grid.in_bounds(nxt) or grid.is_blocked(nxt):
                    continue
                ncost = cost + step * grid.voxel_size
                if ncost < costs.get(nxt, math.inf) - 1e-12:
                    costs[nxt] = ncost
                    parents[nxt] = cell
                    heapq.heappush(heap, (ncost, nxt))

    if goal not in parents:
        raise NoPath(f"no free path from {start} to {goal}")
    cells = [goal]
    while parents[cells[-1]] is not None:
        cells.append(parents[cells[-1]])
    cells.reverse()
    return NavPath(tuple(cells), start, goal, costs[goal])


def path_to_commands(path: NavPath, voxel_size: float, linear_speed: float,
                     angular_speed: float) -> list[NavCommand]:
    """Compress a planar path into TURN/MOVE commands.

    The robot is assumed to start already facing the first run's direction;
    each heading change emits one signed TURN (CCW positive), each collinear
    run one MOVE at ``linear_speed``.
    """
    if linear_speed <= 0 or angular_speed <= 0:
        raise ValueError("speeds must be positive")
    if len(path.cells) < 2:
        return []
    steps = []
    for a, b in zip(path.cells, path.cells[1:]):
        d = (b[0] - a[0], b[1] - a[1], b[2] - a[2])
        if d[2] != 0:
            raise ValueError("command generation requires a planar (single-layer) path")
        steps.append(d)

    runs: list[tuple[tuple[int, int, int], int]] = []
    for d in steps:
        if runs and runs[-1][0] == d:
            runs[-1] = (d, runs[-1][1] + 1)
        else:
            runs.append((d, 1))

    commands: list[NavCommand] = []
    heading = math.atan2(runs[0][0][1], runs[0][0][0])
    for d, count in runs:
        target = math.atan2(d[1], d[0])
        turn = math.degrees(normalize_angle(target - heading))
        if abs(turn) > 1e-9:
            commands.append(NavCommand("TURN", turn))
            heading = target
        length = count * math.hypot(d[0], d[1]) * voxel_size
        commands.append(NavCommand("MOVE", length / linear_speed))
    return commands


def replay_commands(commands: Sequence[NavCommand], start_pose, grid: VoxelGrid,
                    z_layer: int, linear_speed: float,
                    angular_speed: float = 90.0,
                    sample_step: float | None = None) -> ReplayResult:
    """Integrate an ideal differential-drive point robot through the script.

    Collision samples are checked against *pre-inflation* occupancy on the
    given z layer.  TURNs rotate in place (no translation, so they only
    contribute time).
    """
    if sample_step is None:
        sample_step = grid.voxel_size / 5.0
    x, y, heading = (float(v) for v in start_pose)
    z_center = float(grid.origin[2] + (z_layer + 0.5) * grid.voxel_size)
    trajectory = [(x, y, heading)]
    collisions: list[tuple[float, float, Cell]] = []
    duration = 0.0

    def check(px: float, py: float) -> None:
        cell = grid.world_to_cell((px, py, z_center))
        if cell is not None and grid.occupied[cell]:
            collisions.append((px, py, cell))

    check(x, y)
    for cmd in commands:
        if cmd.kind == "TURN":
            heading = normalize_angle(heading + math.radians(cmd.value))
            duration += abs(cmd.value) / angular_speed
            trajectory.append((x, y, heading))
        elif cmd.kind == "MOVE":
            distance = cmd.value * linear_speed
            n = max(1, int(math.ceil(distance / sample_step)))
            for i in range(1, n + 1):
                px = x + math.cos(heading) * distance * i / n
                py = y + math.sin(heading) * distance * i / n
                check(px, py)
                trajectory.append((px, py, heading))
            x += math.cos(heading) * distance
            y += math.sin(heading) * distance
            duration += cmd.value
        else:
            raise ValueError(f"unknown command kind {cmd.kind!r}")
    return ReplayResult(np.array(trajectory), tuple(collisions), duration)


# --- grid serialization ------------------------------------------------------

_CHARS = {(False, False): ".", (False, True): "+", (True, True): "X"}


def write_grid(grid: VoxelGrid, path) -> None:
    """Dump occupancy as textual z-slices: '.' free, '+' inflated, 'X' occupied."""
    from .cloud_io import _atomic_write  # shared atomic writer

    nx, ny, nz = grid.dims
    out = [
        f"{GRID_MAGIC} {nx} {ny} {nz}",
        "ORIGIN {:.6f} {:.6f} {:.6f}".format(*grid.origin),
        f"VOXEL {grid.voxel_size:.6f}",
        f"INFLATION {grid.inflation_radius:.6f}",
    ]
    for k in range(nz):
        out.append(f"LAYER {k}")
        for j in range(ny):
            out.append("".join(
                _CHARS[(bool(grid.occupied[i, j, k]), bool(grid.inflated[i, j, k]))]
                for i in range(nx)
            ))
    _atomic_write(path, "\n".join(out) + "\n")


def read_grid(path) -> VoxelGrid:
    from .cloud_io import _parse_float, _parse_int, _read_lines

    lines = _read_lines(path)
    if len(lines) < 4:
        raise MalformedGrid(f"{path}: truncated grid file")
    header = lines[0][1].split()
    if len(header) != 4 or header[0] != GRID_MAGIC:
        raise MalformedGrid(f"{path}: expected '{GRID_MAGIC} nx ny nz'")
    nx, ny, nz = (_parse_int(tok, f"{path} dims") for tok in header[1:])
    if min(nx, ny, nz) < 1:
        raise MalformedGrid(f"{path}: dims must be positive")

    def field(line_no: int, name: str, count: int) -> list[float]:
        tokens = lines[line_no][1].split()
        if len(tokens) != count + 1 or tokens[0] != name:
            raise MalformedGrid(f"{path}: expected '{name}' line")
        return [_parse_float(t, f"{path} {name}") for t in tokens[1:]]

    origin = field(1, "ORIGIN", 3)
    voxel = field(2, "VOXEL", 1)[0]
    inflation = field(3, "INFLATION", 1)[0]
    if voxel <= 0 or inflation < 0:
        raise MalformedGrid(f"{path}: bad voxel size or inflation radius")

    occupied = np.zeros((nx, ny, nz), dtype=bool)
    inflated = np.zeros((nx, ny, nz), dtype=bool)
    cursor = 4
    for k in range(nz):
        if cursor >= len(lines) or lines[cursor][1] != f"LAYER {k}":
            raise MalformedGrid(f"{path}: expected 'LAYER {k}'")
        cursor += 1
        for j in range(ny):
            if cursor >= len(lines):
                raise MalformedGrid(f"{path}: truncated at layer {k} row {j}")
            row = lines[cursor][1]
            if len(row) != nx or any(c not in ".+X" for c in row):
                raise MalformedGrid(f"{path}:{lines[cursor][0]}: bad occupancy row")
            for i, c in enumerate(row):
                occupied[i, j, k] = c == "X"
                inflated[i, j, k] = c in "+X"
            cursor += 1
    if cursor != len(lines):
        raise MalformedGrid(f"{path}: trailing content after last layer")
    return VoxelGrid(np.array(origin), voxel, (nx, ny, nz), occupied, inflated, inflation)
