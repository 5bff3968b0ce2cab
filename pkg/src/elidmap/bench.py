"""Timing study: per-sensor-count cost of transform application vs concatenation.

For each sensor count the harness synthesizes one set of OS1-16-sized clouds,
then repeatedly (a) applies the fixed per-cloud transforms and (b) accumulates
the transformed clouds plus the reference into a merged map, timing the two
phases separately over a fixed wall-clock window.  Timing values are
measurements: reports assert nothing, and consumers should only rely on
trends (means non-decreasing with sensor count, concatenation growing faster
than transformation) rather than absolute numbers.  The per-frame total for
five sensors is reported against the 50 ms frame budget of a 20 Hz stream but
never hard-checked, because it depends on the host.
"""

from __future__ import annotations

import io
import math
import platform
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import EulerAngles, apply_transform
from .pipeline import accumulate_map
from .simulator import Box, SceneSpec, SensorPose, ground_truth_transform, render_frame

FRAME_BUDGET_MS = 50.0  # one 20 Hz frame interval
DEFAULT_POINTS = 16 * 1024  # OS1-16: 16 rings x 1024 azimuth steps


@dataclass(frozen=True)
class BenchEntry:
    n_lidars: int
    transform_ms_mean: float
    transform_ms_std: float
    concat_ms_mean: float
    concat_ms_std: float
    samples: int


@dataclass(frozen=True)
class BenchReport:
    entries: tuple[BenchEntry, ...]
    points_per_cloud: int
    duration_s: float
    host: str
    parallelism: int = 1  # single-threaded baseline


def _bench_scene(n_lidars: int, points_per_cloud: int) -> SceneSpec:
    azimuth = max(8, points_per_cloud // 16)
    width = 2.0 * n_lidars + 2.0
    room = Box(np.zeros(3), np.array([width, 6.0, 3.0]))
    sensors = tuple(
        SensorPose(np.array([1.0 + 2.0 * i, 3.0, 1.6]),
                   EulerAngles(0.0, 0.0, 0.0),
                   ring_count=16, azimuth_steps=azimuth)
        for i in range(n_lidars)
    )
    return SceneSpec(room, (), sensors)


def run_bench(n_lidars_list: Sequence[int], points_per_cloud: int = DEFAULT_POINTS,
              duration_s: float = 30.0, seed: int = 0) -> BenchReport:
    if not n_lidars_list:
        raise ValueError("n_lidars_list must be non-empty")
    if points_per_cloud <= 0:
        raise ValueError("points_per_cloud must be positive")

    entries = []
    for n in n_lidars_list:
        if n < 1:
            raise ValueError("sensor counts must be >= 1")
        scene = _bench_scene(n, points_per_cloud)
        clouds = [
            render_frame(scene, i, range_noise_sigma=0.01, seed=seed + i)
            for i in range(n)
        ]
        reference = clouds[0]
        others = clouds[1:]
        transforms = [ground_truth_transform(scene, 0, i) for i in range(1, n)]

        transform_ms: list[float] = []
        concat_ms: list[float] = []
        t_end = time.perf_counter() + duration_s
        while True:
            t0 = time.perf_counter()
            moved = [apply_transform(c, t) for c, t in zip(others, transforms)]
            t1 = time.perf_counter()
            accumulate_map(moved, reference)
            t2 = time.perf_counter()
            transform_ms.append((t1 - t0) * 1e3)
            concat_ms.append((t2 - t1) * 1e3)
            if t2 >= t_end:
                break
        entries.append(BenchEntry(
            n_lidars=n,
            transform_ms_mean=float(np.mean(transform_ms)),
            transform_ms_std=float(np.std(transform_ms)),
            concat_ms_mean=float(np.mean(concat_ms)),
            concat_ms_std=float(np.std(concat_ms)),
            samples=len(transform_ms),
        ))

    host = f"{platform.platform()} / {platform.processor() or 'unknown-cpu'}"
    return BenchReport(tuple(entries), points_per_cloud, duration_s, host)


def fitted_slope(report: BenchReport, which: str) -> float:
    """Least-squares slope of a phase's mean time versus sensor count."""
    xs = np.array([e.n_lidars for e in report.entries], dtype=float)
    ys = np.array([getattr(e, f"{which}_ms_mean") for e in report.entries])
    if len(xs) < 2:
        raise ValueError("slope needs at least two sensor counts")
    return float(np.polyfit(xs, ys, 1)[0])


def to_csv(report: BenchReport) -> str:
    buf = io.StringIO()
    buf.write("n_lidars,transform_ms_mean,transform_ms_std,concat_ms_mean,concat_ms_std\n")
    for e in report.entries:
        buf.write(f"{e.n_lidars},{e.transform_ms_mean:.6f},{e.transform_ms_std:.6f},"
                  f"{e.concat_ms_mean:.6f},{e.concat_ms_std:.6f}\n")
    return buf.getvalue()


def summary(report: BenchReport) -> str:
    lines = [
        f"host: {report.host}",
        f"points per cloud: {report.points_per_cloud}, "
        f"window: {report.duration_s:.1f} s per setup, "
        f"parallelism: {report.parallelism}",
    ]
    for e in report.entries:
        total = e.transform_ms_mean + e.concat_ms_mean
        lines.append(
            f"  n={e.n_lidars}: transform {e.transform_ms_mean:.3f} ms "
            f"(+-{e.transform_ms_std:.3f}), concat {e.concat_ms_mean:.3f} ms "
            f"(+-{e.concat_ms_std:.3f}), total {total:.3f} ms, {e.samples} samples"
        )
    if len(report.entries) >= 2:
        lines.append(
            f"fitted slope per added sensor: transform "
            f"{fitted_slope(report, 'transform'):.3f} ms, concat "
            f"{fitted_slope(report, 'concat'):.3f} ms"
        )
    for e in report.entries:
        if e.n_lidars == 5:
            total = e.transform_ms_mean + e.concat_ms_mean
            verdict = "within" if total <= FRAME_BUDGET_MS else "over"
            lines.append(
                f"5-sensor frame total {total:.3f} ms is {verdict} the "
                f"{FRAME_BUDGET_MS:.0f} ms budget of a 20 Hz stream "
                "(informational; host-dependent)"
            )
    return "\n".join(lines)
