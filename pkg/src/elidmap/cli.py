"""Command-line entry point for every pipeline stage.

Each subcommand is a thin wrapper over the library: it parses flags, loads
files, calls one pipeline function and writes the result.  Given fixed seeds,
every subcommand is a pure function of its inputs, so reruns are
byte-identical.  Typed failures exit nonzero after printing
``ERROR <Name>: <detail>`` on stderr.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import cloud_io, pipeline, planner
from .config import AppConfig, load_config
from .errors import ElidError
from .session import load_session
from .simulator import load_scene
from .synth import build_synthetic_session, canonical_scene
from .simulator import scene_to_dict

SESSION_ENV = "ELID_SESSION_DIR"


def _session_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--session",
        default=os.environ.get(SESSION_ENV),
        help=f"session directory (defaults to ${SESSION_ENV})",
    )


def _require_session(args) -> Path:
    if not args.session:
        raise ElidError(f"no session directory given (use --session or ${SESSION_ENV})")
    return Path(args.session)


def _parse_point(text: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != 3:
        raise ElidError(f"expected 'x,y,z', got {text!r}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as exc:
        raise ElidError(f"bad coordinate in {text!r}") from exc


def _load_app_config(args) -> AppConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    return AppConfig()


# --- subcommand handlers ----------------------------------------------------


def cmd_simulate(args) -> int:
    if args.scene:
        scene = load_scene(args.scene)
    else:
        scene = canonical_scene()
    out = Path(args.out)
    build_synthetic_session(
        scene, out,
        reference_index=args.reference,
        cloud_sigma=args.noise, imu_sigma=args.imu_noise,
        seed=args.seed, yaw_frames=args.frames,
        imu_samples=args.imu_samples, window_samples=args.window_samples,
    )
    if not args.scene:
        import json
        (out / "scene.json").write_text(
            json.dumps(scene_to_dict(scene), indent=2) + "\n", encoding="utf-8")
    print(f"session written to {out}")
    return 0


def cmd_calibrate(args) -> int:
    session = load_session(_require_session(args))
    cloud_ids = [args.cloud] if args.cloud else list(session.cloud_ids)
    for cid in cloud_ids:
        profile = pipeline.calibrate_from_windows(session, cid)
        path = session.profile_path(cid)
        path.parent.mkdir(parents=True, exist_ok=True)
        cloud_io.write_profile(profile, path)
        print(f"{cid}: x [{profile.x.g_min:+.4f}, {profile.x.g_max:+.4f}] "
              f"y [{profile.y.g_min:+.4f}, {profile.y.g_max:+.4f}] "
              f"z [{profile.z.g_min:+.4f}, {profile.z.g_max:+.4f}] -> {path}")
    return 0


def cmd_register(args) -> int:
    config = _load_app_config(args).pipeline
    session = load_session(_require_session(args), base_config=config)
    if args.cloud == session.reference:
        raise ElidError(f"{args.cloud} is the reference cloud; it keeps the identity transform")
    cloud_ids = [args.cloud] if args.cloud else \
        [c for c in session.cloud_ids if c != session.reference]
    for cid in cloud_ids:
        result = pipeline.estimate_registration(session, cid)
        path = session.transform_path(cid)
        path.parent.mkdir(parents=True, exist_ok=True)
        cloud_io.write_transform(result.transform, path)
        t = result.transform.translation
        print(f"{cid}: roll {math.degrees(result.roll):+.3f} deg, "
              f"pitch {math.degrees(result.pitch):+.3f} deg, "
              f"yaw {math.degrees(result.yaw):+.3f} deg "
              f"({result.yaw_readings} readings), "
              f"t = ({t[0]:+.3f}, {t[1]:+.3f}, {t[2]:+.3f}) m -> {path}")
    return 0


def cmd_merge(args) -> int:
    session = load_session(_require_session(args))
    others = [c for c in session.cloud_ids if c != session.reference]
    clouds = [session.load_cloud(c) for c in others]
    transforms = [cloud_io.read_transform(session.transform_path(c)) for c in others]
    reference = session.load_cloud(session.reference)
    elid_map = pipeline.build_map(clouds, transforms, reference)
    pipeline.write_map(elid_map, args.out)
    print(f"map with {len(elid_map.cloud)} points "
          f"from {len(others) + 1} clouds -> {args.out}")
    return 0


def cmd_measure(args) -> int:
    elid_map = pipeline.read_map(args.map)
    d = pipeline.measure_distance(elid_map, args.a, args.b)
    print(f"{d:.6f}")
    return 0


def cmd_voxelize(args) -> int:
    cfg = _load_app_config(args).voxel
    elid_map = pipeline.read_map(args.map)
    grid = planner.voxelize(
        elid_map,
        voxel_size=args.voxel_size if args.voxel_size is not None else cfg.voxel_size,
        z_band=(args.zmin if args.zmin is not None else cfg.z_min,
                args.zmax if args.zmax is not None else cfg.z_max),
        inflation_radius=(args.inflation if args.inflation is not None
                          else cfg.inflation_radius),
        min_points_per_voxel=(args.min_points if args.min_points is not None
                              else cfg.min_points_per_voxel),
    )
    planner.write_grid(grid, args.out)
    nx, ny, nz = grid.dims
    print(f"grid {nx}x{ny}x{nz} @ {grid.voxel_size} m, "
          f"{int(grid.occupied.sum())} occupied cells -> {args.out}")
    return 0


def cmd_plan(args) -> int:
    cfg = _load_app_config(args).drive
    grid = planner.read_grid(args.grid)
    start = grid.world_to_cell(_parse_point(args.start))
    goal = grid.world_to_cell(_parse_point(args.goal))
    if start is None:
        raise ElidError(f"start {args.start} is outside the grid")
    if goal is None:
        raise ElidError(f"goal {args.goal} is outside the grid")
    diagonals = args.diagonals or cfg.diagonals
    path = planner.shortest_path(grid, start, goal, diagonals=diagonals)
    speed = args.speed if args.speed is not None else cfg.linear_speed
    angular = args.angular_speed if args.angular_speed is not None else cfg.angular_speed
    commands = planner.path_to_commands(path, grid.voxel_size, speed, angular)
    cloud_io.write_commands(commands, args.out)
    if args.path_out:
        rows = "\n".join(f"{c[0]} {c[1]} {c[2]}" for c in path.cells)
        Path(args.path_out).write_text(rows + "\n", encoding="utf-8")
    print(f"path of {len(path.cells)} cells, cost {path.total_cost:.3f} m, "
          f"{len(commands)} commands -> {args.out}")
    return 0


def cmd_bench(args) -> int:
    counts = [int(v) for v in args.lidars.split(",") if v]
    report = bench_mod.run_bench(counts, points_per_cloud=args.points,
                                 duration_s=args.duration, seed=args.seed)
    Path(args.out).write_text(bench_mod.to_csv(report), encoding="utf-8")
    print(bench_mod.summary(report))
    print(f"csv -> {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(_require_session(args), ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elidmap",
        description="Multi-LiDAR registration, merged-map measurement and path planning.",
    )
    parser.add_argument("--config", help="JSON config file for estimator/voxel/drive defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="render a synthetic session from a scene spec")
    p.add_argument("--scene", help="scene JSON (omit for the built-in two-sensor room)")
    p.add_argument("--out", required=True, help="session directory to create")
    p.add_argument("--reference", type=int, default=0, help="reference sensor index")
    p.add_argument("--noise", type=float, default=0.03, help="range noise sigma in m")
    p.add_argument("--imu-noise", type=float, default=0.05, help="IMU noise sigma in m/s^2")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--frames", type=int, default=12, help="frames kept for yaw averaging")
    p.add_argument("--imu-samples", type=int, default=400)
    p.add_argument("--window-samples", type=int, default=300)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("calibrate", help="build calibration profiles from recorded windows")
    _session_flag(p)
    p.add_argument("--cloud", help="calibrate a single cloud id (default: all)")
    p.set_defaults(handler=cmd_calibrate)

    p = sub.add_parser("register", help="estimate per-cloud transforms from the session")
    _session_flag(p)
    p.add_argument("--cloud", help="register a single cloud id (default: all non-reference)")
    p.set_defaults(handler=cmd_register)

    p = sub.add_parser("merge", help="apply transforms and merge clouds into a map file")
    _session_flag(p)
    p.add_argument("--out", required=True, help="output map file")
    p.set_defaults(handler=cmd_merge)

    p = sub.add_parser("measure", help="distance between two map points")
    p.add_argument("--map", required=True)
    p.add_argument("--a", type=int, required=True, help="first point index")
    p.add_argument("--b", type=int, required=True, help="second point index")
    p.set_defaults(handler=cmd_measure)

    p = sub.add_parser("voxelize", help="quantize a map into an occupancy grid dump")
    p.add_argument("--map", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--voxel-size", type=float)
    p.add_argument("--zmin", type=float)
    p.add_argument("--zmax", type=float)
    p.add_argument("--inflation", type=float)
    p.add_argument("--min-points", type=int)
    p.set_defaults(handler=cmd_voxelize)

    p = sub.add_parser("plan", help="shortest path on a grid plus a drive-command script")
    p.add_argument("--grid", required=True)
    p.add_argument("--start", required=True, help="world coordinates 'x,y,z'")
    p.add_argument("--goal", required=True, help="world coordinates 'x,y,z'")
    p.add_argument("--out", required=True, help="command file to write")
    p.add_argument("--path-out", help="optional cell-path dump")
    p.add_argument("--speed", type=float, help="linear speed m/s")
    p.add_argument("--angular-speed", type=float, help="turn rate deg/s")
    p.add_argument("--diagonals", action="store_true",
                   help="allow diagonal moves (Dijkstra with sqrt-2 costs)")
    p.set_defaults(handler=cmd_plan)

    p = sub.add_parser("bench", help="transform-vs-concatenation timing per sensor count")
    p.add_argument("--out", required=True, help="CSV report path")
    p.add_argument("--lidars", default="1,2,3,4,5", help="comma-separated sensor counts")
    p.add_argument("--points", type=int, default=bench_mod.DEFAULT_POINTS)
    p.add_argument("--duration", type=float, default=30.0, help="seconds per setup")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("serve", help="run the selection service for the browser UI")
    _session_flag(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ui", help="directory of built UI assets to serve at /ui")
    p.set_defaults(handler=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ElidError as exc:
        print(f"ERROR {exc.name}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
