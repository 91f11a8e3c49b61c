"""The six compared edge operators behind one dispatcher.

Gradient family (Sobel, Prewitt, Roberts) thresholds a normalized gradient
magnitude; Canny smooths, differentiates with Sobel, thins with 4-sector
non-maximum suppression and links with hysteresis; the second-derivative
family (LoG, ZeroCross) marks sign changes of a filtered response whose
jump exceeds a slope threshold.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .errors import (
    ImageTooSmall,
    InvalidThresholdPair,
    NegativeThreshold,
    ThresholdOutOfRange,
)
from .raster import BorderPolicy, GrayImage, Kernel, _check_sigma, _frozen, convolve, gaussian_kernel

__all__ = [
    "Method",
    "GradientOp",
    "GradientField",
    "EdgeMap",
    "DetectorConfig",
    "SOBEL_X",
    "PREWITT_X",
    "ROBERTS_1",
    "ROBERTS_2",
    "gradient",
    "threshold_edges",
    "non_max_suppression",
    "hysteresis",
    "canny",
    "log_kernel",
    "zero_crossings",
    "detector_response",
    "edges_from_response",
    "detect",
    "CANNY_LOW_RATIO",
    "DEFAULT_CANNY_SIGMA",
    "DEFAULT_LOG_SIGMA",
]

CANNY_LOW_RATIO = 0.4
DEFAULT_CANNY_SIGMA = math.sqrt(2.0)
DEFAULT_LOG_SIGMA = 2.0

SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
PREWITT_X = np.array([[-1.0, 0.0, 1.0], [-1.0, 0.0, 1.0], [-1.0, 0.0, 1.0]])
ROBERTS_1 = np.array([[1.0, 0.0], [0.0, -1.0]])
ROBERTS_2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


class Method(str, enum.Enum):
    SOBEL = "sobel"
    PREWITT = "prewitt"
    ROBERTS = "roberts"
    CANNY = "canny"
    LOG = "log"
    ZEROCROSS = "zerocross"

    @property
    def is_gradient(self) -> bool:
        return self in (Method.SOBEL, Method.PREWITT, Method.ROBERTS)

    @property
    def is_second_order(self) -> bool:
        return self in (Method.LOG, Method.ZEROCROSS)


class GradientOp(str, enum.Enum):
    SOBEL = "sobel"
    PREWITT = "prewitt"
    ROBERTS = "roberts"


_MASKS = {
    GradientOp.SOBEL: (Kernel(SOBEL_X), Kernel(SOBEL_X.T)),
    GradientOp.PREWITT: (Kernel(PREWITT_X), Kernel(PREWITT_X.T)),
    GradientOp.ROBERTS: (Kernel(ROBERTS_1, (0, 0)), Kernel(ROBERTS_2, (0, 0))),
}


@dataclass(frozen=True)
class GradientField:
    gx: np.ndarray
    gy: np.ndarray
    magnitude: np.ndarray
    direction: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.magnitude.shape


@dataclass(frozen=True)
class EdgeMap:
    """Binary edge raster, ``bits[row, col]`` true on edge pixels."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.array(self.bits, dtype=bool, copy=True)
        if bits.ndim != 2:
            raise ValueError(f"EdgeMap needs a 2-D array, got shape {bits.shape}")
        object.__setattr__(self, "bits", _frozen(bits))

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape

    @property
    def count(self) -> int:
        return int(self.bits.sum())

    @property
    def density(self) -> float:
        return self.count / self.bits.size


def _check_unit(t: float, what: str = "threshold") -> float:
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ThresholdOutOfRange(f"{what} {t} outside [0, 1]")
    return t


def _check_pair(low: float, high: float) -> tuple[float, float]:
    low = _check_unit(low, "low threshold")
    high = _check_unit(high, "high threshold")
    if not low < high:
        raise InvalidThresholdPair(f"low threshold {low} must be below high threshold {high}")
    return low, high


@dataclass(frozen=True)
class DetectorConfig:
    """Validated detector parameters.

    Single-threshold methods use ``threshold``.  Canny uses ``low``/``high``;
    given only ``high`` (or only ``threshold``), ``low = 0.4 * high``.
    ``sigma`` defaults to sqrt(2) for Canny and 2 for LoG/ZeroCross.
    ``kernel`` replaces the LoG kernel for ZeroCross.
    """

    method: Method
    threshold: float | None = None
    low: float | None = None
    high: float | None = None
    sigma: float | None = None
    kernel: Kernel | None = None

    def __post_init__(self):
        method = Method(self.method)
        object.__setattr__(self, "method", method)

        if method is Method.CANNY:
            high = self.high if self.high is not None else self.threshold
            if high is None:
                raise ThresholdOutOfRange("canny needs a high threshold")
            low = self.low if self.low is not None else CANNY_LOW_RATIO * float(high)
            low, high = _check_pair(low, high)
            object.__setattr__(self, "low", low)
            object.__setattr__(self, "high", high)
            object.__setattr__(self, "threshold", high)
        elif self.threshold is not None:
            object.__setattr__(self, "threshold", _check_unit(self.threshold))

        if method is Method.CANNY or method.is_second_order:
            default = DEFAULT_CANNY_SIGMA if method is Method.CANNY else DEFAULT_LOG_SIGMA
            sigma = default if self.sigma is None else self.sigma
            object.__setattr__(self, "sigma", _check_sigma(sigma))
        if self.kernel is not None and method is not Method.ZEROCROSS:
            raise ValueError("a custom kernel only applies to the zerocross method")

    def with_threshold(self, t: float) -> "DetectorConfig":
        """Same config at threshold ``t`` (for Canny: ``high = t``, ``low = 0.4 t``)."""
        if self.method is Method.CANNY:
            return replace(self, threshold=None, high=t, low=CANNY_LOW_RATIO * t)
        return replace(self, threshold=t)


def gradient(img: GrayImage, op: GradientOp | str = GradientOp.SOBEL) -> GradientField:
    """Gradient field from the operator's two masks (correlation, replicate border).

    The magnitude is divided by its maximum, so it peaks at exactly 1.0 unless
    the image is flat.
    """
    op = GradientOp(op)
    kx, ky = _MASKS[op]
    if img.height < kx.height or img.width < kx.width:
        raise ImageTooSmall(f"{op.value} needs at least {kx.width}x{kx.height}, got {img.width}x{img.height}")
    # derivatives of flat regions come out as ~1e-17 rounding residue, which
    # max-normalization would blow up to 1; snap them to exact zero
    floor = 1e-12 * float(np.abs(kx.taps).sum()) * float(np.abs(img.pixels).max())
    gx = convolve(img, kx, BorderPolicy.REPLICATE).pixels
    gy = convolve(img, ky, BorderPolicy.REPLICATE).pixels
    # + 0.0 turns -0.0 into 0.0 so atan2 stays in (-pi, pi]
    gx = np.where(np.abs(gx) <= floor, 0.0, gx) + 0.0
    gy = np.where(np.abs(gy) <= floor, 0.0, gy) + 0.0
    mag = np.hypot(gx, gy)
    peak = mag.max()
    mag = mag / peak if peak > 0 else np.zeros_like(mag)
    return GradientField(_frozen(gx), _frozen(gy), _frozen(mag), _frozen(np.arctan2(gy, gx)))


def threshold_edges(gf: GradientField, t: float) -> EdgeMap:
    """Edge wherever the normalized magnitude strictly exceeds ``t``."""
    t = _check_unit(t)
    return EdgeMap(gf.magnitude > t)


# neighbour step (drow, dcol) along the gradient for each 45-degree sector
_SECTOR_STEP = ((0, 1), (1, 1), (1, 0), (1, -1))


def _shifted(a: np.ndarray, dr: int, dc: int, fill: float) -> np.ndarray:
    """``out[r, c] = a[r + dr, c + dc]``, ``fill`` where that is out of bounds."""
    h, w = a.shape
    out = np.full_like(a, fill)
    out[max(0, -dr) : h - max(0, dr), max(0, -dc) : w - max(0, dc)] = a[
        max(0, dr) : h - max(0, -dr), max(0, dc) : w - max(0, -dc)
    ]
    return out


def non_max_suppression(gf: GradientField) -> GrayImage:
    """Zero every magnitude that is below either neighbour along its gradient.

    Directions are quantized to 0, 45, 90 and 135 degrees.  Ties survive and
    out-of-bounds neighbours are ignored.
    """
    mag = gf.magnitude
    theta = np.mod(gf.direction, np.pi)
    sector = np.floor((theta + np.pi / 8.0) / (np.pi / 4.0)).astype(np.int64) % 4
    keep = np.zeros(mag.shape, dtype=bool)
    for s, (dr, dc) in enumerate(_SECTOR_STEP):
        ahead = _shifted(mag, dr, dc, -np.inf)
        behind = _shifted(mag, -dr, -dc, -np.inf)
        keep |= (sector == s) & (mag >= ahead) & (mag >= behind)
    return GrayImage(np.where(keep, mag, 0.0))


_EIGHT = np.ones((3, 3), dtype=bool)


def _hysteresis(values: np.ndarray, low: float, high: float) -> np.ndarray:
    candidates = values > low
    labels, n = ndimage.label(candidates, structure=_EIGHT)
    if n == 0:
        return candidates
    seeded = np.zeros(n + 1, dtype=bool)
    seeded[labels[values > high]] = True
    seeded[0] = False
    return seeded[labels]


def hysteresis(suppressed: GrayImage, low: float, high: float) -> EdgeMap:
    """Keep pixels above ``high`` plus pixels above ``low`` 8-connected to them."""
    low, high = _check_pair(low, high)
    return EdgeMap(_hysteresis(suppressed.pixels, low, high))


def _canny_field(img: GrayImage, sigma: float) -> GradientField:
    smoothed = convolve(img, gaussian_kernel(sigma), BorderPolicy.REPLICATE)
    return gradient(smoothed, GradientOp.SOBEL)


def canny(img: GrayImage, low: float, high: float, sigma: float = DEFAULT_CANNY_SIGMA) -> EdgeMap:
    low, high = _check_pair(low, high)
    gf = _canny_field(img, _check_sigma(sigma))
    return hysteresis(non_max_suppression(gf), low, high)


def log_kernel(sigma: float) -> Kernel:
    """Laplacian-of-Gaussian, half-width ``ceil(4 sigma)``, shifted to zero sum.

    The center tap is negative, so a dark-to-bright step gives a negative
    lobe on the dark side and a positive lobe on the bright side.
    """
    sigma = _check_sigma(sigma)
    half = math.ceil(4.0 * sigma)
    ax = np.arange(-half, half + 1, dtype=np.float64)
    r2 = ax[:, None] ** 2 + ax[None, :] ** 2
    s2 = sigma * sigma
    taps = (r2 - 2.0 * s2) / (s2 * s2) * np.exp(-r2 / (2.0 * s2))
    return Kernel(taps - taps.mean())


def _crossing_pairs(f: np.ndarray):
    """Yield ``(a, b, index_a, index_b)`` for horizontal then vertical neighbour pairs.

    ``a`` always precedes ``b`` in row-major order.
    """
    h, w = f.shape
    yield f[:, :-1], f[:, 1:], (slice(None), slice(0, w - 1)), (slice(None), slice(1, w))
    yield f[:-1, :], f[1:, :], (slice(0, h - 1), slice(None)), (slice(1, h), slice(None))


def zero_crossings(filtered: GrayImage, t: float) -> EdgeMap:
    """Mark sign changes between 4-neighbours whose jump exceeds ``t``.

    The crossing is attributed to the smaller-magnitude pixel of the pair, or
    to the earlier one in row-major order on a tie.  Exact zeros are unsigned
    and never take part in a crossing.
    """
    t = float(t)
    if t < 0:
        raise NegativeThreshold(f"slope threshold must be >= 0, got {t}")
    f = filtered.pixels
    out = np.zeros(f.shape, dtype=bool)
    for a, b, ia, ib in _crossing_pairs(f):
        cross = (((a > 0) & (b < 0)) | ((a < 0) & (b > 0))) & (np.abs(a - b) > t)
        to_a = np.abs(a) <= np.abs(b)
        out[ia] |= cross & to_a
        out[ib] |= cross & ~to_a
    return EdgeMap(out)


def _max_crossing_slope(f: np.ndarray) -> float:
    peak = 0.0
    for a, b, *_ in _crossing_pairs(f):
        cross = ((a > 0) & (b < 0)) | ((a < 0) & (b > 0))
        if cross.any():
            peak = max(peak, float(np.abs(a - b)[cross].max()))
    return peak


def second_order_response(img: GrayImage, kernel: Kernel) -> GrayImage:
    """Filter ``img`` and rescale so the steepest zero crossing has slope 1.

    Responses at rounding-noise level are snapped to 0 first, so flat regions
    produce no crossings.
    """
    f = convolve(img, kernel, BorderPolicy.REPLICATE).pixels
    noise_floor = 1e-10 * float(np.abs(kernel.taps).sum())
    f = np.where(np.abs(f) <= noise_floor, 0.0, f)
    peak = _max_crossing_slope(f)
    return GrayImage(f / peak if peak > 0 else f)


def detector_response(img: GrayImage, cfg: DetectorConfig) -> np.ndarray:
    """Threshold-independent intermediate of ``cfg.method`` on ``img``.

    Gradient methods: normalized magnitude.  Canny: the non-max-suppressed
    magnitude.  LoG/ZeroCross: the rescaled second-order response.
    """
    m = cfg.method
    if m.is_gradient:
        return gradient(img, GradientOp(m.value)).magnitude
    if m is Method.CANNY:
        return non_max_suppression(_canny_field(img, cfg.sigma)).pixels
    kernel = cfg.kernel if (m is Method.ZEROCROSS and cfg.kernel is not None) else log_kernel(cfg.sigma)
    return second_order_response(img, kernel).pixels


def edges_from_response(
    method: Method, resp: np.ndarray, threshold: float, low: float | None = None
) -> np.ndarray:
    """Apply a threshold to a precomputed response; returns the boolean edge raster.

    No validation: sweeps use this at Canny ``high = 0`` where ``low == high``.
    """
    method = Method(method)
    if method.is_gradient:
        return resp > threshold
    if method is Method.CANNY:
        return _hysteresis(resp, CANNY_LOW_RATIO * threshold if low is None else low, threshold)
    return zero_crossings(GrayImage(resp), threshold).bits


def detect(img: GrayImage, cfg: DetectorConfig) -> EdgeMap:
    """Run the configured detector on ``img``."""
    if cfg.method is Method.CANNY:
        return canny(img, cfg.low, cfg.high, cfg.sigma)
    if cfg.threshold is None:
        raise ThresholdOutOfRange(f"{cfg.method.value} needs a threshold")
    return EdgeMap(edges_from_response(cfg.method, detector_response(img, cfg), cfg.threshold))
