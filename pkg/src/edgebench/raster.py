"""Raster containers, PGM / band-manifest I/O, the correlation engine and
synthetic test scenes.

Every image in edgebench is a :class:`GrayImage`: a read-only float64 array
indexed ``[row, col]``.  Values loaded from disk are scaled to [0, 1];
intermediate filter outputs are unconstrained reals.
"""
from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateLabel,
    GeometryOutOfBounds,
    IoFailure,
    KernelLargerThanImage,
    MalformedHeader,
    MissingFile,
    NonPositiveSigma,
    TruncatedData,
    UnsupportedMaxval,
)

__all__ = [
    "GrayImage",
    "Kernel",
    "BandStack",
    "BorderPolicy",
    "SceneKind",
    "load_pgm",
    "save_pgm",
    "save_mask_pgm",
    "load_band_stack",
    "convolve",
    "gaussian_kernel",
    "synth_scene",
    "scene_region",
    "boundary_truth",
    "normalize_minmax",
]


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class GrayImage:
    """Single-band raster of real intensities, stored row-major as ``pixels[row, col]``."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.array(self.pixels, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise ValueError(f"GrayImage needs a 2-D array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("GrayImage needs width >= 1 and height >= 1")
        object.__setattr__(self, "pixels", _frozen(arr))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    @classmethod
    def from_flat(cls, width: int, height: int, values: Sequence[float]) -> "GrayImage":
        values = np.asarray(values, dtype=np.float64)
        if values.size != width * height:
            raise ValueError(f"expected {width * height} values, got {values.size}")
        return cls(values.reshape(height, width))


@dataclass(frozen=True)
class Kernel:
    """Correlation mask.  ``anchor`` is the (row, col) tap aligned with the output pixel.

    Odd dimensions default to the geometric center; even dimensions to (0, 0).
    """

    taps: np.ndarray
    anchor: tuple[int, int] | None = None

    def __post_init__(self):
        taps = np.array(self.taps, dtype=np.float64, copy=True)
        if taps.ndim != 2 or taps.size == 0:
            raise ValueError(f"kernel taps must be a non-empty 2-D array, got shape {taps.shape}")
        kh, kw = taps.shape
        anchor = self.anchor
        if anchor is None:
            anchor = (kh // 2 if kh % 2 else 0, kw // 2 if kw % 2 else 0)
        anchor = (int(anchor[0]), int(anchor[1]))
        if not (0 <= anchor[0] < kh and 0 <= anchor[1] < kw):
            raise ValueError(f"anchor {anchor} outside {kh}x{kw} kernel")
        object.__setattr__(self, "taps", _frozen(taps))
        object.__setattr__(self, "anchor", anchor)

    @property
    def height(self) -> int:
        return self.taps.shape[0]

    @property
    def width(self) -> int:
        return self.taps.shape[1]


@dataclass(frozen=True)
class BandStack:
    """Co-registered bands of one scene, each with a unique label."""

    bands: tuple[GrayImage, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        bands = tuple(self.bands)
        labels = tuple(str(lbl) for lbl in self.labels)
        if len(bands) != len(labels):
            raise ValueError(f"{len(bands)} bands but {len(labels)} labels")
        seen = set()
        for lbl in labels:
            if lbl in seen:
                raise DuplicateLabel(f"band label {lbl!r} appears more than once")
            seen.add(lbl)
        if bands:
            shape = bands[0].shape
            for lbl, band in zip(labels, bands):
                if band.shape != shape:
                    raise DimensionMismatch(
                        f"band {lbl!r} is {band.width}x{band.height}, expected {shape[1]}x{shape[0]}"
                    )
        object.__setattr__(self, "bands", bands)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.bands)

    @property
    def shape(self) -> tuple[int, int]:
        return self.bands[0].shape


class BorderPolicy(enum.Enum):
    """How reads outside the raster are resolved.

    REPLICATE repeats the edge pixel, REFLECT mirrors about the edge pixel
    without repeating it (``c b | a b c``), ZERO reads 0.
    """

    REPLICATE = "replicate"
    REFLECT = "reflect"
    ZERO = "zero"


_PAD_MODE = {
    BorderPolicy.REPLICATE: "edge",
    BorderPolicy.REFLECT: "reflect",
    BorderPolicy.ZERO: "constant",
}


# ---------------------------------------------------------------------------
# PGM I/O
# ---------------------------------------------------------------------------

def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping ``#`` comments.

    Returns the tokens and the offset just past the last one.
    """
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise MalformedHeader("header ended early")
        if data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos


def _parse_int(token: bytes, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise MalformedHeader(f"{what} is not an integer: {token!r}") from None


def load_pgm(path: str | os.PathLike) -> GrayImage:
    """Load a P2 (ASCII) or P5 (binary) PGM, scaling samples to [0, 1] by maxval."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise MissingFile(f"no such file: {path}") from None
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise MalformedHeader(f"{path}: bad magic {magic!r}, expected P2 or P5")
    (w_tok, h_tok, max_tok), pos = _header_tokens(data[2:], 3)
    pos += 2
    width = _parse_int(w_tok, "width")
    height = _parse_int(h_tok, "height")
    maxval = _parse_int(max_tok, "maxval")
    if width < 1 or height < 1:
        raise MalformedHeader(f"{path}: bad dimensions {width}x{height}")
    if maxval < 1 or maxval > 65535:
        raise UnsupportedMaxval(f"{path}: maxval {maxval} outside [1, 65535]")
    expected = width * height

    if magic == b"P2":
        body = data[pos:].split()
        if len(body) < expected:
            raise TruncatedData(f"{path}: {len(body)} samples, header declares {expected}")
        try:
            samples = np.array([int(tok) for tok in body[:expected]], dtype=np.int64)
        except ValueError:
            raise MalformedHeader(f"{path}: non-integer sample in ASCII body") from None
    else:
        # exactly one whitespace byte separates maxval from the raster
        pos += 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        raw = data[pos:]
        if len(raw) < expected * dtype.itemsize:
            raise TruncatedData(
                f"{path}: {len(raw) // dtype.itemsize} samples, header declares {expected}"
            )
        samples = np.frombuffer(raw, dtype=dtype, count=expected).astype(np.int64)

    if samples.min() < 0 or samples.max() > maxval:
        raise MalformedHeader(f"{path}: sample outside [0, {maxval}]")
    return GrayImage(samples.reshape(height, width) / float(maxval))


def _quantize(pixels: np.ndarray) -> np.ndarray:
    if pixels.min() < 0.0 or pixels.max() > 1.0:
        raise ValueError("pixels must lie in [0, 1]; normalize before saving")
    # half-up rounding, so 0.5 -> 128
    return np.floor(pixels * 255.0 + 0.5).astype(np.uint8)


def _write_p5(path: Path, data: np.ndarray) -> None:
    height, width = data.shape
    try:
        with open(path, "wb") as fh:
            fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
            fh.write(np.ascontiguousarray(data).tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def save_pgm(img: GrayImage, path: str | os.PathLike) -> None:
    """Write ``img`` as binary P5 with maxval 255, storing ``round(p * 255)``."""
    _write_p5(Path(path), _quantize(img.pixels))


def save_mask_pgm(bits: np.ndarray, path: str | os.PathLike) -> None:
    """Write a boolean mask as P5 with true pixels 255 and false pixels 0."""
    _write_p5(Path(path), np.where(np.asarray(bits, dtype=bool), 255, 0).astype(np.uint8))


def load_band_stack(manifest_path: str | os.PathLike) -> BandStack:
    """Load a band manifest: UTF-8 lines ``<label>\\t<pgm path>``.

    Paths are relative to the manifest's directory; blank lines are skipped.
    """
    manifest_path = Path(manifest_path)
    try:
        text = manifest_path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise MissingFile(f"no such manifest: {manifest_path}") from None
    except OSError as exc:
        raise IoFailure(f"cannot read {manifest_path}: {exc}") from exc

    labels: list[str] = []
    bands: list[GrayImage] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        parts = line.rstrip("\r\n").split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise MalformedHeader(f"{manifest_path}:{lineno}: expected '<label>\\t<path>'")
        label, rel = parts[0].strip(), parts[1].strip()
        if label in labels:
            raise DuplicateLabel(f"{manifest_path}:{lineno}: label {label!r} repeated")
        band_path = manifest_path.parent / rel
        if not band_path.is_file():
            raise MissingFile(f"{manifest_path}:{lineno}: missing band file {band_path}")
        band = load_pgm(band_path)
        if bands and band.shape != bands[0].shape:
            raise DimensionMismatch(
                f"{manifest_path}:{lineno}: band {label!r} is {band.width}x{band.height}, "
                f"first band is {bands[0].width}x{bands[0].height}"
            )
        labels.append(label)
        bands.append(band)
    return BandStack(tuple(bands), tuple(labels))


# ---------------------------------------------------------------------------
# filtering
# ---------------------------------------------------------------------------

def convolve(
    img: GrayImage, k: Kernel, border: BorderPolicy = BorderPolicy.REPLICATE
) -> GrayImage:
    """Correlate ``img`` with ``k``.

    ``out[r, c] = sum_ij k[i, j] * img[r + i - anchor_row, c + j - anchor_col]``,
    with out-of-range reads resolved by ``border``.  The output has the input's
    shape and is not clamped.
    """
    h, w = img.shape
    kh, kw = k.taps.shape
    if kh > h or kw > w:
        raise KernelLargerThanImage(f"{kw}x{kh} kernel on {w}x{h} image")
    ar, ac = k.anchor
    pad = ((ar, kh - 1 - ar), (ac, kw - 1 - ac))
    padded = np.pad(img.pixels, pad, mode=_PAD_MODE[BorderPolicy(border)])

    out = np.zeros((h, w), dtype=np.float64)
    for i in range(kh):
        for j in range(kw):
            tap = k.taps[i, j]
            if tap != 0.0:
                out += tap * padded[i : i + h, j : j + w]
    return GrayImage(out)


def _check_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not sigma > 0.0 or not math.isfinite(sigma):
        raise NonPositiveSigma(f"sigma must be a positive finite number, got {sigma}")
    return sigma


def gaussian_kernel(sigma: float) -> Kernel:
    """Normalized square Gaussian with half-width ``ceil(3 * sigma)``."""
    sigma = _check_sigma(sigma)
    half = math.ceil(3.0 * sigma)
    ax = np.arange(-half, half + 1, dtype=np.float64)
    r2 = ax[:, None] ** 2 + ax[None, :] ** 2
    taps = np.exp(-r2 / (2.0 * sigma * sigma))
    return Kernel(taps / taps.sum())


def normalize_minmax(img: GrayImage) -> GrayImage:
    """Affinely map ``img`` onto [0, 1]; a constant image maps to all zeros."""
    p = img.pixels
    lo, hi = p.min(), p.max()
    if hi > lo:
        return GrayImage((p - lo) / (hi - lo))
    return GrayImage(np.zeros_like(p))


# ---------------------------------------------------------------------------
# synthetic scenes
# ---------------------------------------------------------------------------

class SceneKind(str, enum.Enum):
    VSTEP = "vstep"
    RIBBON = "ribbon"
    DISK = "disk"
    CHECKER = "checker"


def _center(center, width: int, height: int) -> tuple[float, float]:
    if center is None:
        return float(height // 2), float(width // 2)
    return float(center[0]), float(center[1])


def scene_region(kind: SceneKind | str, width: int, height: int, **params) -> np.ndarray:
    """Boolean mask of the feature region (the ``hi`` pixels) of a synthetic scene.

    Geometry parameters per kind (``center`` is ``(row, col)``):

    * vstep:   ``split`` (first high column, default ``width // 2``)
    * ribbon:  ``ribbon_width``, ``angle`` in degrees (0 = horizontal), ``center``
    * disk:    ``radius``, ``center``
    * checker: ``block`` (side of each square)
    """
    kind = SceneKind(kind)
    if width < 1 or height < 1:
        raise GeometryOutOfBounds(f"bad scene size {width}x{height}")
    rows, cols = np.mgrid[0:height, 0:width].astype(np.float64)

    if kind is SceneKind.VSTEP:
        split = int(params.get("split", width // 2))
        if not 1 <= split <= width - 1:
            raise GeometryOutOfBounds(f"split {split} must lie in [1, {width - 1}]")
        return cols >= split

    if kind is SceneKind.RIBBON:
        rw = float(params.get("ribbon_width", 3))
        angle = math.radians(float(params.get("angle", 0.0)))
        cr, cc = _center(params.get("center"), width, height)
        if not 0.0 < rw < min(width, height):
            raise GeometryOutOfBounds(f"ribbon width {rw} must lie in (0, {min(width, height)})")
        if not (0 <= cr <= height - 1 and 0 <= cc <= width - 1):
            raise GeometryOutOfBounds(f"ribbon center ({cr}, {cc}) outside the frame")
        # signed distance from the center line; rounding keeps axis-aligned
        # ribbons exact despite cos(90 deg) != 0 in floating point
        d = np.round((rows - cr) * math.cos(angle) - (cols - cc) * math.sin(angle), 9)
        return (d >= -rw / 2.0) & (d < rw / 2.0)

    if kind is SceneKind.DISK:
        radius = float(params.get("radius", min(width, height) / 4.0))
        cr, cc = _center(params.get("center"), width, height)
        if radius <= 0:
            raise GeometryOutOfBounds(f"radius must be positive, got {radius}")
        if cr - radius < 0 or cc - radius < 0 or cr + radius > height - 1 or cc + radius > width - 1:
            raise GeometryOutOfBounds(
                f"disk at ({cr}, {cc}) with radius {radius} exceeds the {width}x{height} frame"
            )
        return (rows - cr) ** 2 + (cols - cc) ** 2 <= radius * radius

    block = int(params.get("block", 8))
    if not 1 <= block <= min(width, height):
        raise GeometryOutOfBounds(f"block {block} must lie in [1, {min(width, height)}]")
    ri = np.arange(height)[:, None] // block
    ci = np.arange(width)[None, :] // block
    return (ri + ci) % 2 == 1


def synth_scene(
    kind: SceneKind | str,
    width: int,
    height: int,
    lo: float = 0.0,
    hi: float = 1.0,
    **params,
) -> GrayImage:
    """Render a synthetic scene: ``hi`` on the feature region, ``lo`` elsewhere.

    VStep is a vertical step, Ribbon a straight strip (road analogue), Disk a
    filled circle (lake analogue), Checker alternating squares.
    """
    region = scene_region(kind, width, height, **params)
    return GrayImage(np.where(region, float(hi), float(lo)))


def boundary_truth(region: np.ndarray) -> np.ndarray:
    """Background pixels with at least one 4-neighbour inside ``region``.

    For a VStep this is the last low-side column; for a ribbon, the rows just
    outside both sides; for a disk, the outside ring of the discrete circle.
    """
    region = np.asarray(region, dtype=bool)
    near = np.zeros_like(region)
    near[1:, :] |= region[:-1, :]
    near[:-1, :] |= region[1:, :]
    near[:, 1:] |= region[:, :-1]
    near[:, :-1] |= region[:, 1:]
    return near & ~region
