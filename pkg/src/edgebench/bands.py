"""Band-wise evaluation: detect on every band and rank bands against a truth mask."""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ._parallel import ordered_map
from .detectors import DetectorConfig, EdgeMap, detect
from .errors import DimensionMismatch, EmptyStack
from .raster import BandStack, _frozen, load_pgm

__all__ = [
    "TruthMask",
    "BandRow",
    "BandReport",
    "load_truth_mask",
    "run_per_band",
    "within_tolerance",
    "score_against_truth",
    "band_report",
]


@dataclass(frozen=True)
class TruthMask:
    bits: np.ndarray
    feature_label: str = "feature"

    def __post_init__(self):
        bits = np.array(self.bits, dtype=bool, copy=True)
        if bits.ndim != 2:
            raise ValueError(f"TruthMask needs a 2-D array, got shape {bits.shape}")
        object.__setattr__(self, "bits", _frozen(bits))

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape


def load_truth_mask(path: str | os.PathLike, feature_label: str = "feature") -> TruthMask:
    """Read a PGM truth mask; pixels at or above half intensity are truth."""
    return TruthMask(load_pgm(path).pixels >= 0.5, feature_label)


@dataclass(frozen=True)
class BandRow:
    label: str
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class BandReport:
    rows: tuple[BandRow, ...]
    best_band: str


def run_per_band(stack: BandStack, cfg: DetectorConfig) -> list[EdgeMap]:
    if len(stack) == 0:
        raise EmptyStack("band stack has no bands")
    return ordered_map(lambda band: detect(band, cfg), stack.bands)


def within_tolerance(bits: np.ndarray, tol: int) -> np.ndarray:
    """Pixels within Chebyshev distance ``tol`` of any set pixel of ``bits``."""
    bits = np.asarray(bits, dtype=bool)
    if tol <= 0 or not bits.any():
        return bits.copy()
    return ndimage.binary_dilation(bits, structure=np.ones((2 * tol + 1, 2 * tol + 1), dtype=bool))


def _bits(x) -> np.ndarray:
    return x.bits if hasattr(x, "bits") else np.asarray(x, dtype=bool)


def score_against_truth(em: EdgeMap, truth: TruthMask, tol: int = 1) -> tuple[float, float, float]:
    """(precision, recall, f1) of ``em`` against ``truth`` with Chebyshev tolerance ``tol``.

    Empty detections against empty truth score (1, 1, 1).  Recall is 1 when
    the truth is empty, and F1 is 0 whenever precision + recall is 0.
    """
    det, ref = _bits(em), _bits(truth)
    if det.shape != ref.shape:
        raise DimensionMismatch(f"edge map {det.shape} vs truth {ref.shape}")
    tol = int(tol)
    if tol < 0:
        raise ValueError(f"tolerance must be >= 0, got {tol}")
    n_det, n_ref = int(det.sum()), int(ref.sum())
    if n_det == 0 and n_ref == 0:
        return 1.0, 1.0, 1.0

    precision = int((det & within_tolerance(ref, tol)).sum()) / n_det if n_det else 0.0
    recall = int((ref & within_tolerance(det, tol)).sum()) / n_ref if n_ref else 1.0
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def band_report(stack: BandStack, cfg: DetectorConfig, truth: TruthMask, tol: int = 1) -> BandReport:
    """Score every band; ``best_band`` is the first band reaching the top F1."""
    if len(stack) == 0:
        raise EmptyStack("band stack has no bands")
    if truth.shape != stack.shape:
        raise DimensionMismatch(f"truth mask {truth.shape} vs band stack {stack.shape}")
    rows = tuple(
        BandRow(label, *score_against_truth(em, truth, tol))
        for label, em in zip(stack.labels, run_per_band(stack, cfg))
    )
    best = max(range(len(rows)), key=lambda i: (rows[i].f1, -i))
    return BandReport(rows, rows[best].label)
