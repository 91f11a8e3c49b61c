"""Edge detector comparison toolkit: six classic operators plus threshold-sweep,
band-wise, noise and timing harnesses."""

__version__ = "0.1.0"

from .errors import EdgebenchError
from .raster import (
    BandStack,
    BorderPolicy,
    GrayImage,
    Kernel,
    convolve,
    gaussian_kernel,
    load_band_stack,
    load_pgm,
    normalize_minmax,
    save_pgm,
    synth_scene,
)
from .detectors import DetectorConfig, EdgeMap, GradientField, Method, canny, detect, gradient
from .sweep import SweepResult, extract_range, otsu_threshold, sweep
from .bands import BandReport, TruthMask, band_report, score_against_truth
from .bench import false_edge_rate, noise_study, salt_pepper, timing_study
