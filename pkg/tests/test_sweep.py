import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgebench.detectors import DetectorConfig, Method, detect, gradient
from edgebench.errors import DegenerateInput, EmptyGrid, ThresholdOutOfRange, UnfilledDensities, UnsortedGrid
from edgebench.raster import GrayImage, synth_scene
from edgebench.sweep import SweepResult, default_grid, extract_range, ideal_config, otsu_threshold, sweep

from conftest import random_scene

SINGLE = ["sobel", "prewitt", "roberts", "log", "zerocross"]


def _otsu_oracle(values):
    """Every split k of the 256-bin histogram, between-class variance from explicit class lists."""
    bins = [min(int(v * 256), 255) for v in values]
    mids = [(b + 0.5) / 256 for b in bins]
    n = len(values)
    scores = []
    for k in range(256):
        lower = [m for b, m in zip(bins, mids) if b <= k]
        upper = [m for b, m in zip(bins, mids) if b > k]
        if not lower or not upper:
            scores.append(-1.0)
            continue
        w0, w1 = len(lower) / n, len(upper) / n
        scores.append(w0 * w1 * (sum(lower) / len(lower) - sum(upper) / len(upper)) ** 2)
    best = max(scores)
    return best, [k for k, s in enumerate(scores) if s >= best * (1 - 1e-9)]


# --- otsu --------------------------------------------------------------------

def test_otsu_two_clusters():
    values = [0.1] * 50 + [0.9] * 50
    t = otsu_threshold(values)
    assert 0.4 <= t <= 0.6
    _, argmax = _otsu_oracle(values)
    assert round(t * 256 - 0.5) in argmax


def test_otsu_binary_strictly_between():
    t = otsu_threshold([0.0, 1.0] * 10)
    assert 0.0 < t < 1.0


def test_otsu_degenerate():
    with pytest.raises(DegenerateInput):
        otsu_threshold([0.3] * 10)
    with pytest.raises(DegenerateInput):
        otsu_threshold([0.3])


def test_otsu_matches_exhaustive_oracle(rng):
    for _ in range(5):
        values = np.concatenate([rng.normal(0.3, 0.07, 150), rng.normal(0.7, 0.1, 100)]).clip(0, 1)
        t = otsu_threshold(values)
        _, argmax = _otsu_oracle(values.tolist())
        assert round(t * 256 - 0.5) in argmax


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=60).filter(lambda v: min(v) != max(v)), st.integers(2, 4))
def test_otsu_duplication_invariant(values, times):
    assert otsu_threshold(values) == otsu_threshold(values * times)


def test_otsu_vstep_sobel_field(vstep8):
    t = otsu_threshold(gradient(vstep8, "sobel").magnitude)
    assert 0.0 < t < 1.0


# --- sweep ---------------------------------------------------------------------

@pytest.mark.parametrize("method", SINGLE + ["canny"])
def test_sweep_constant_image(method):
    sr = sweep(GrayImage(np.full((32, 32), 0.4)), DetectorConfig(method, threshold=0.5), default_grid(11))
    assert np.all(sr.densities == 0)


def test_sweep_vstep_endpoints():
    sr = sweep(synth_scene("vstep", 16, 16), DetectorConfig("sobel", threshold=0.5), [0.0, 1.0])
    assert sr.densities[0] > 0 and sr.densities[1] == 0


@pytest.mark.parametrize("method", SINGLE + ["canny"])
def test_sweep_matches_detect(rng, method):
    img = random_scene(rng, 32)
    cfg = DetectorConfig(method, threshold=0.5)
    grid = [0.05, 0.2, 0.45, 0.8]
    sr = sweep(img, cfg, grid)
    for t, d in zip(grid, sr.densities):
        assert d == detect(img, cfg.with_threshold(t)).density


def test_sweep_noisy_vstep_monotone(rng):
    base = synth_scene("vstep", 48, 48)
    img = GrayImage(base.pixels + rng.normal(0, 0.1, base.shape))
    d = sweep(img, DetectorConfig("sobel", threshold=0.5), default_grid(50)).densities
    assert np.all(np.diff(d) <= 0)


@pytest.mark.parametrize(
    "grid,err", [([], EmptyGrid), ([0.2, 0.1], UnsortedGrid), ([0.1, 0.1], UnsortedGrid), ([0.5, 1.5], ThresholdOutOfRange)]
)
def test_sweep_bad_grid(vstep8, grid, err):
    with pytest.raises(err):
        sweep(vstep8, DetectorConfig("sobel", threshold=0.5), grid)


def test_canny_sweep_starts_at_zero(rng):
    sr = sweep(random_scene(rng, 32), DetectorConfig("canny", threshold=0.5), default_grid(21))
    assert sr.densities[0] > 0 and np.all(np.diff(sr.densities) <= 0)


# --- range extraction -------------------------------------------------------------

def _sr(grid, dens, method=Method.LOG, samples=None):
    return SweepResult(method, np.array(grid, float), np.array(dens, float), ideal_samples=samples)


def test_extract_range_rules():
    out = extract_range(_sr([0, 0.25, 0.5, 0.75], [0.5, 0.5, 0.1, 0.0]), 0.001, 0.9)
    assert out.t_max == 0.75 and out.t_min == 0.25
    assert out.t_ideal == pytest.approx(np.sqrt(0.25 * 0.75))
    assert out.ideal_source == "geometric-mean"


def test_extract_range_degenerate():
    out = extract_range(_sr([0.1, 0.5, 0.9], [0, 0, 0]))
    assert out.triple == (0.1, 0.1, 0.1)


def test_extract_range_no_elimination_uses_grid_max():
    out = extract_range(_sr([0, 0.5], [0.5, 0.4]), 1e-4, 0.95)
    assert out.t_max == 0.5 and out.t_min == 0.0


def test_extract_range_unfilled():
    with pytest.raises(UnfilledDensities):
        extract_range(SweepResult(Method.SOBEL, np.array([0.0, 1.0])))


def test_extract_range_otsu_for_gradient(vstep8):
    noisy = GrayImage(vstep8.pixels * 0.8 + 0.1 * (np.arange(64).reshape(8, 8) % 3) / 2)
    sr = extract_range(sweep(noisy, DetectorConfig("sobel", threshold=0.5)))
    assert sr.ideal_source == "otsu"
    assert sr.t_min <= sr.t_ideal <= sr.t_max


def test_extract_range_manual_ideal_verbatim():
    out = extract_range(_sr([0, 0.1, 0.2], [0.3, 0.1, 0.0]), ideal=0.35)
    assert out.t_ideal == 0.35 and out.ideal_source == "manual"


def test_extract_range_triple_ordered_random(rng):
    for _ in range(20):
        img = random_scene(rng)
        method = rng.choice(SINGLE + ["canny"])
        sr = extract_range(sweep(img, DetectorConfig(method, threshold=0.5), default_grid(41)))
        assert sr.t_min <= sr.t_ideal <= sr.t_max


@pytest.mark.parametrize("method", SINGLE)
def test_grid_refinement_moves_t_max_at_most_one_step(rng, method):
    for _ in range(4):
        img = random_scene(rng)
        cfg = DetectorConfig(method, threshold=0.5)
        coarse = extract_range(sweep(img, cfg, default_grid(26)))
        fine = extract_range(sweep(img, cfg, default_grid(51)))
        assert abs(coarse.t_max - fine.t_max) <= 1 / 25 + 1e-12


def test_ideal_config_keeps_canny_valid():
    cfg = ideal_config(GrayImage(np.full((16, 16), 0.5)), DetectorConfig("canny", threshold=0.5))
    assert 0 <= cfg.low < cfg.high
