"""Threshold sweeps and (min, ideal, max) range extraction.

A sweep records the edge-pixel density of one detector across a threshold
grid.  :func:`extract_range` then reads three operating points off that
curve: ``t_min``, the last threshold at which the curve is still saturated;
``t_max``, the first threshold at which edges are essentially gone; and
``t_ideal`` in between.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._parallel import ordered_map
from .detectors import (
    CANNY_LOW_RATIO,
    DetectorConfig,
    GradientOp,
    Method,
    _canny_field,
    detector_response,
    edges_from_response,
    gradient,
    non_max_suppression,
)
from .errors import DegenerateInput, EmptyGrid, ThresholdOutOfRange, UnfilledDensities, UnsortedGrid
from .raster import GrayImage

__all__ = [
    "SweepResult",
    "default_grid",
    "sweep",
    "extract_range",
    "otsu_threshold",
    "ideal_config",
    "DEFAULT_EPS",
    "DEFAULT_PLATEAU",
    "DEFAULT_GRID_POINTS",
]

DEFAULT_EPS = 1e-4
DEFAULT_PLATEAU = 0.95
DEFAULT_GRID_POINTS = 101
OTSU_BINS = 256


@dataclass(frozen=True)
class SweepResult:
    method: Method
    thresholds: np.ndarray
    densities: np.ndarray | None = None
    t_min: float | None = None
    t_ideal: float | None = None
    t_max: float | None = None
    # how t_ideal was chosen: "otsu", "geometric-mean", "manual" or "degenerate"
    ideal_source: str | None = None
    # gradient magnitudes feeding the Otsu ideal; None for second-order methods
    ideal_samples: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def triple(self) -> tuple[float, float, float]:
        return self.t_min, self.t_ideal, self.t_max


def default_grid(points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    if points < 1:
        raise EmptyGrid("grid needs at least one point")
    if points == 1:
        return np.zeros(1)
    return np.linspace(0.0, 1.0, points)


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=np.float64).ravel()
    if grid.size == 0:
        raise EmptyGrid("threshold grid is empty")
    if np.any(np.diff(grid) <= 0):
        raise UnsortedGrid("threshold grid must be strictly ascending")
    if grid[0] < 0.0 or grid[-1] > 1.0:
        raise ThresholdOutOfRange("threshold grid must lie within [0, 1]")
    return grid


def sweep(img: GrayImage, cfg: DetectorConfig, grid=None) -> SweepResult:
    """Edge density of ``cfg.method`` on ``img`` at every grid threshold.

    For Canny the grid drives ``high`` with ``low = 0.4 * high``.  The
    detector response is computed once and re-thresholded per grid point.
    """
    grid = _check_grid(default_grid() if grid is None else grid)
    method = cfg.method
    samples = None
    if method is Method.CANNY:
        gf = _canny_field(img, cfg.sigma)
        resp = non_max_suppression(gf).pixels
        samples = gf.magnitude
    elif method.is_gradient:
        resp = gradient(img, GradientOp(method.value)).magnitude
        samples = resp
    else:
        resp = detector_response(img, cfg)

    size = resp.size

    def density(t: float) -> float:
        low = CANNY_LOW_RATIO * t if method is Method.CANNY else None
        return int(edges_from_response(method, resp, t, low).sum()) / size

    densities = np.array(ordered_map(density, grid.tolist()))
    return SweepResult(method, grid, densities, ideal_samples=samples)


def extract_range(
    sr: SweepResult,
    elimination_eps: float = DEFAULT_EPS,
    plateau_frac: float = DEFAULT_PLATEAU,
    ideal: float | None = None,
) -> SweepResult:
    """Fill ``t_min``, ``t_ideal`` and ``t_max`` from a density curve.

    ``t_max`` is the first threshold whose density is at most
    ``elimination_eps`` (last grid point if none).  ``t_min`` is the last
    threshold whose density is still at least ``plateau_frac`` times the
    density at the first grid point.  ``t_ideal`` is Otsu's threshold of the
    gradient magnitude for gradient methods and Canny, and the geometric mean
    of ``t_min`` and ``t_max`` for second-order methods; it is clamped into
    ``[t_min, t_max]``.  A manual ``ideal`` is reported as given, unclamped.
    """
    if sr.densities is None:
        raise UnfilledDensities("sweep densities have not been computed")
    grid = np.asarray(sr.thresholds, dtype=np.float64)
    dens = np.asarray(sr.densities, dtype=np.float64)
    if dens.shape != grid.shape:
        raise UnfilledDensities("densities and thresholds differ in length")

    if not np.any(dens > 0):
        t0 = float(grid[0])
        if ideal is not None:
            return replace(sr, t_min=t0, t_ideal=float(ideal), t_max=t0, ideal_source="manual")
        return replace(sr, t_min=t0, t_ideal=t0, t_max=t0, ideal_source="degenerate")

    gone = np.nonzero(dens <= elimination_eps)[0]
    t_max = float(grid[gone[0]]) if gone.size else float(grid[-1])
    saturated = np.nonzero(dens >= plateau_frac * dens[0])[0]
    t_min = min(float(grid[saturated[-1]]), t_max)

    if ideal is not None:
        return replace(sr, t_min=t_min, t_ideal=float(ideal), t_max=t_max, ideal_source="manual")

    t_ideal, source = None, "geometric-mean"
    if sr.ideal_samples is not None:
        try:
            t_ideal, source = otsu_threshold(sr.ideal_samples), "otsu"
        except DegenerateInput:
            pass
    if t_ideal is None:
        t_ideal = math.sqrt(t_min * t_max)
    t_ideal = min(max(t_ideal, t_min), t_max)
    return replace(sr, t_min=t_min, t_ideal=t_ideal, t_max=t_max, ideal_source=source)


def otsu_threshold(values) -> float:
    """Otsu's threshold of samples in [0, 1] on a 256-bin histogram.

    Returns the midpoint of the bin that closes the lower class.  When the
    between-class variance is flat over a run of splits (empty bins between
    the classes), the center of the first maximal run is used.
    """
    values = np.clip(np.asarray(values, dtype=np.float64).ravel(), 0.0, 1.0)
    if values.size < 2:
        raise DegenerateInput("Otsu needs at least two samples")
    if values.min() == values.max():
        raise DegenerateInput("all samples are equal")

    hist, _ = np.histogram(values, bins=OTSU_BINS, range=(0.0, 1.0))
    p = hist / hist.sum()
    levels = (np.arange(OTSU_BINS) + 0.5) / OTSU_BINS
    omega = np.cumsum(p)
    mu = np.cumsum(p * levels)
    mu_total = mu[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        between = (mu_total * omega - mu) ** 2 / (omega * (1.0 - omega))
    valid = (omega > 0) & (omega < 1)
    between = np.where(valid, between, -np.inf)

    best = between.max()
    at_max = between >= best * (1.0 - 1e-12)
    lo = int(np.argmax(at_max))
    hi = lo
    while hi + 1 < OTSU_BINS and at_max[hi + 1]:
        hi += 1
    return float(levels[(lo + hi) // 2])


def ideal_config(
    img: GrayImage,
    cfg: DetectorConfig,
    grid=None,
    elimination_eps: float = DEFAULT_EPS,
    plateau_frac: float = DEFAULT_PLATEAU,
) -> DetectorConfig:
    """``cfg`` re-thresholded at the sweep-chosen ideal for ``img``.

    A zero ideal is raised to the first positive grid point so Canny keeps
    ``low < high``.
    """
    grid = _check_grid(default_grid() if grid is None else grid)
    sr = extract_range(sweep(img, cfg, grid), elimination_eps, plateau_frac)
    t = sr.t_ideal
    if t <= 0.0:
        positive = grid[grid > 0]
        t = float(positive[0]) if positive.size else 1.0
    return cfg.with_threshold(t)
