"""Noise-robustness and runtime scaling measurements.

Salt-and-pepper corruption uses SplitMix64 (Steele, Lea & Flood 2014) so a
given seed corrupts the same pixels on every platform and in any
implementation:

    state_k = seed + (k + 1) * 0x9E3779B97F4A7C15            (mod 2**64)
    z = (state_k ^ (state_k >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    out_k = z ^ (z >> 31)

Pixel ``i`` in row-major order consumes draws ``2i`` and ``2i + 1``.  It is
corrupted iff ``(out_2i >> 11) * 2**-53 < density``; a corrupted pixel
becomes 1.0 if the top bit of ``out_(2i+1)`` is set, else 0.0.
"""
from __future__ import annotations

import statistics
import time
import tracemalloc
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._parallel import ordered_map
from .bands import TruthMask, _bits, within_tolerance
from .detectors import DetectorConfig, EdgeMap, detect
from .errors import DensityOutOfRange, DimensionMismatch, PreconditionViolation
from .raster import GrayImage, synth_scene

__all__ = [
    "splitmix64",
    "salt_pepper",
    "false_edge_rate",
    "edge_recall",
    "NoiseRow",
    "NoiseReport",
    "noise_study",
    "TimingRow",
    "TimingReport",
    "timing_scene",
    "timing_study",
    "SUMMARY_ORDER",
]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1

# row order of the comparison summary table
SUMMARY_ORDER = ("sobel", "canny", "roberts", "prewitt", "log", "zerocross")


def splitmix64(seed: int, n: int, start: int = 0) -> np.ndarray:
    """Outputs ``start .. start + n - 1`` of the SplitMix64 stream seeded with ``seed``."""
    k = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    z = np.uint64(int(seed) & _MASK64) + k * _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def salt_pepper(img: GrayImage, density: float, seed: int) -> GrayImage:
    """Set each pixel to 0 or 1 (equal odds) with probability ``density``."""
    density = float(density)
    if not 0.0 <= density <= 1.0:
        raise DensityOutOfRange(f"noise density {density} outside [0, 1]")
    draws = splitmix64(seed, 2 * img.pixels.size).reshape(-1, 2)
    uniform = (draws[:, 0] >> np.uint64(11)).astype(np.float64) * 2.0**-53
    hit = (uniform < density).reshape(img.shape)
    salt = ((draws[:, 1] >> np.uint64(63)) == 1).reshape(img.shape)
    return GrayImage(np.where(hit, np.where(salt, 1.0, 0.0), img.pixels))


def _pair(em, truth) -> tuple[np.ndarray, np.ndarray]:
    det, ref = _bits(em), _bits(truth)
    if det.shape != ref.shape:
        raise DimensionMismatch(f"edge map {det.shape} vs truth {ref.shape}")
    return det, ref


def false_edge_rate(em: EdgeMap, truth: TruthMask, tol: int = 1) -> float:
    """Share of detected pixels with no truth pixel within Chebyshev distance ``tol``."""
    det, ref = _pair(em, truth)
    n = int(det.sum())
    if n == 0:
        return 0.0
    return int((det & ~within_tolerance(ref, tol)).sum()) / n


def edge_recall(em: EdgeMap, truth: TruthMask, tol: int = 1) -> float:
    """Share of truth pixels with a detection within ``tol``; 1 for empty truth."""
    det, ref = _pair(em, truth)
    n = int(ref.sum())
    if n == 0:
        return 1.0
    return int((ref & within_tolerance(det, tol)).sum()) / n


@dataclass(frozen=True)
class NoiseRow:
    method: str
    density: float
    seed: int
    false_edge_rate: float
    true_edge_recall: float


@dataclass(frozen=True)
class NoiseReport:
    rows: tuple[NoiseRow, ...]

    def medians(self) -> dict[tuple[str, float], tuple[float, float]]:
        """(method, density) -> (median false-edge rate, median recall) over seeds."""
        groups: dict[tuple[str, float], list[NoiseRow]] = {}
        for row in self.rows:
            groups.setdefault((row.method, row.density), []).append(row)
        return {
            key: (
                statistics.median(r.false_edge_rate for r in rs),
                statistics.median(r.true_edge_recall for r in rs),
            )
            for key, rs in groups.items()
        }


def noise_study(
    methods: Sequence[DetectorConfig],
    scene: GrayImage,
    truth: TruthMask,
    densities: Sequence[float],
    seeds: Sequence[int],
    tol: int = 1,
) -> NoiseReport:
    """Corrupt ``scene`` at every (density, seed), detect with every method, score vs ``truth``."""
    if truth.shape != scene.shape:
        raise DimensionMismatch(f"truth mask {truth.shape} vs scene {scene.shape}")
    for d in densities:
        if not 0.0 <= float(d) <= 1.0:
            raise DensityOutOfRange(f"noise density {d} outside [0, 1]")

    cells = [(cfg, float(d), int(s)) for cfg in methods for d in densities for s in seeds]

    def run(cell) -> NoiseRow:
        cfg, density, seed = cell
        em = detect(salt_pepper(scene, density, seed), cfg)
        return NoiseRow(
            cfg.method.value, density, seed, false_edge_rate(em, truth, tol), edge_recall(em, truth, tol)
        )

    return NoiseReport(tuple(ordered_map(run, cells)))


@dataclass(frozen=True)
class TimingRow:
    method: str
    side: int
    median_seconds: float
    peak_bytes: int | None


@dataclass(frozen=True)
class TimingReport:
    rows: tuple[TimingRow, ...]
    repeats: int

    def median(self, method: str, side: int) -> float:
        for row in self.rows:
            if row.method == method and row.side == side:
                return row.median_seconds
        raise KeyError((method, side))


def timing_scene(side: int) -> GrayImage:
    """Fixed benchmark scene: a mid-contrast disk with 1% salt-and-pepper noise."""
    disk = synth_scene("disk", side, side, lo=0.25, hi=0.75, radius=side / 4.0)
    return salt_pepper(disk, 0.01, seed=0)


def _peak_bytes(fn: Callable[[], object]) -> int | None:
    if tracemalloc.is_tracing():
        return None
    tracemalloc.start()
    try:
        fn()
        return tracemalloc.get_traced_memory()[1]
    finally:
        tracemalloc.stop()


def timing_study(
    methods: Sequence[DetectorConfig],
    sides: Sequence[int],
    repeats: int = 5,
    measure_memory: bool = True,
) -> TimingReport:
    """Median wall time of ``detect`` per (method, side), run strictly sequentially.

    Each cell gets one untimed warm-up call.  Peak memory is what
    ``tracemalloc`` sees during one extra untimed call.
    """
    if repeats < 3:
        raise PreconditionViolation(f"repeats must be >= 3, got {repeats}")
    sides = [int(s) for s in sides]
    if any(b <= a for a, b in zip(sides, sides[1:])):
        raise PreconditionViolation("sides must be strictly ascending")

    rows = []
    for cfg in methods:
        for side in sides:
            scene = timing_scene(side)
            detect(scene, cfg)
            times = []
            for _ in range(repeats):
                t0 = time.perf_counter()
                detect(scene, cfg)
                times.append(time.perf_counter() - t0)
            peak = _peak_bytes(lambda: detect(scene, cfg)) if measure_memory else None
            rows.append(TimingRow(cfg.method.value, side, statistics.median(times), peak))
    return TimingReport(tuple(rows), repeats)
