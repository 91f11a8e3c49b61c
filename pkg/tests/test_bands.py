import numpy as np
import pytest

from edgebench.bands import TruthMask, band_report, run_per_band, score_against_truth
from edgebench.detectors import DetectorConfig, EdgeMap
from edgebench.errors import DimensionMismatch, EmptyStack
from edgebench.raster import BandStack, GrayImage, boundary_truth, scene_region, synth_scene

RIBBON = dict(ribbon_width=4, angle=30)


def three_band_stack(seed=7, n=64):
    """band3 carries the ribbon at high contrast; band2 barely; band1 shows a disk instead."""
    rng = np.random.default_rng(seed)

    def noisy(img):
        return GrayImage(np.clip(img.pixels + rng.normal(0, 0.03, img.shape), 0, 1))

    b1 = noisy(synth_scene("disk", n, n, lo=0.4, hi=0.5, radius=10, center=(16, 16)))
    b2 = noisy(synth_scene("ribbon", n, n, lo=0.45, hi=0.52, **RIBBON))
    b3 = noisy(synth_scene("ribbon", n, n, lo=0.2, hi=0.8, **RIBBON))
    truth = TruthMask(boundary_truth(scene_region("ribbon", n, n, **RIBBON)), "road")
    return BandStack((b1, b2, b3), ("band1", "band2", "band3")), truth


def test_run_per_band_shapes():
    stack, _ = three_band_stack()
    maps = run_per_band(stack, DetectorConfig("canny", low=0.1, high=0.3))
    assert len(maps) == 3 and all(m.shape == (64, 64) for m in maps)


def test_constant_band_gives_empty_map():
    a = synth_scene("vstep", 16, 16)
    stack = BandStack((a, GrayImage(np.full((16, 16), 0.5))), ("band1", "band2"))
    maps = run_per_band(stack, DetectorConfig("sobel", threshold=0.2))
    assert maps[0].count > 0 and maps[1].count == 0


def test_identical_bands_identical_maps():
    a = synth_scene("disk", 32, 32)
    maps = run_per_band(BandStack((a, a, a), ("b1", "b2", "b3")), DetectorConfig("canny", threshold=0.3))
    assert all(np.array_equal(maps[0].bits, m.bits) for m in maps)


def test_empty_stack():
    with pytest.raises(EmptyStack):
        run_per_band(BandStack((), ()), DetectorConfig("sobel", threshold=0.2))


# --- scoring -----------------------------------------------------------------

def test_score_identity():
    bits = np.zeros((8, 8), bool)
    bits[2, 3] = bits[5, 5] = True
    assert score_against_truth(EdgeMap(bits), TruthMask(bits), 0) == (1.0, 1.0, 1.0)


def test_score_empty_detection():
    truth = np.zeros((8, 8), bool)
    truth[4, 4] = True
    assert score_against_truth(EdgeMap(np.zeros((8, 8), bool)), TruthMask(truth), 1) == (0.0, 0.0, 0.0)


def test_score_both_empty():
    z = np.zeros((4, 4), bool)
    assert score_against_truth(EdgeMap(z), TruthMask(z)) == (1.0, 1.0, 1.0)


def test_score_detections_without_truth():
    em = np.zeros((4, 4), bool)
    em[1, 1] = True
    p, r, f = score_against_truth(EdgeMap(em), TruthMask(np.zeros((4, 4), bool)))
    assert p == 0.0 and f == 0.0


def test_score_one_pixel_shift():
    truth = np.zeros((16, 16), bool)
    truth[3:13, 8] = True
    shifted = np.roll(truth, 1, axis=1)
    assert score_against_truth(EdgeMap(shifted), TruthMask(truth), 1) == (1.0, 1.0, 1.0)
    assert score_against_truth(EdgeMap(shifted), TruthMask(truth), 0) == (0.0, 0.0, 0.0)


def _brute_score(det, ref, tol):
    dp = list(zip(*np.nonzero(det)))
    rp = list(zip(*np.nonzero(ref)))

    def near(p, pts):
        return any(max(abs(p[0] - q[0]), abs(p[1] - q[1])) <= tol for q in pts)

    tp = sum(near(p, rp) for p in dp)
    matched = sum(near(q, dp) for q in rp)
    return tp / len(dp), matched / len(rp)


def test_score_matches_brute_force(rng):
    for tol in (0, 1, 2, 3):
        det = rng.random((14, 14)) > 0.85
        ref = rng.random((14, 14)) > 0.9
        p, r, _ = score_against_truth(EdgeMap(det), TruthMask(ref), tol)
        bp, br = _brute_score(det, ref, tol)
        assert p == pytest.approx(bp) and r == pytest.approx(br)


def test_score_monotone_in_tol(rng):
    det = rng.random((20, 20)) > 0.8
    ref = rng.random((20, 20)) > 0.85
    scores = [score_against_truth(EdgeMap(det), TruthMask(ref), t) for t in range(5)]
    for a, b in zip(scores, scores[1:]):
        assert all(y >= x for x, y in zip(a, b))


def test_score_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        score_against_truth(EdgeMap(np.zeros((4, 4), bool)), TruthMask(np.zeros((4, 5), bool)))


# --- band report ------------------------------------------------------------------

@pytest.mark.parametrize("cfg", [DetectorConfig("canny", low=0.1, high=0.3), DetectorConfig("sobel", threshold=0.3)])
def test_band3_selected(cfg):
    stack, truth = three_band_stack()
    report = band_report(stack, cfg, truth, 1)
    f1 = {r.label: r.f1 for r in report.rows}
    assert report.best_band == "band3"
    assert f1["band3"] > max(f1["band1"], f1["band2"])


def test_identical_bands_first_wins():
    a = synth_scene("vstep", 32, 32)
    truth = TruthMask(boundary_truth(scene_region("vstep", 32, 32)))
    report = band_report(BandStack((a, a, a), ("x", "y", "z")), DetectorConfig("sobel", threshold=0.5), truth)
    assert len({r.f1 for r in report.rows}) == 1
    assert report.best_band == "x"


def test_best_band_invariant_under_constant_band():
    stack, truth = three_band_stack()
    cfg = DetectorConfig("canny", low=0.1, high=0.3)
    flat = GrayImage(np.full(stack.shape, 0.5))
    extended = BandStack(stack.bands + (flat,), stack.labels + ("flat",))
    assert band_report(extended, cfg, truth).best_band == band_report(stack, cfg, truth).best_band


def test_band_report_truth_dimension_mismatch():
    stack, _ = three_band_stack()
    with pytest.raises(DimensionMismatch):
        band_report(stack, DetectorConfig("sobel", threshold=0.3), TruthMask(np.zeros((32, 64), bool)))
