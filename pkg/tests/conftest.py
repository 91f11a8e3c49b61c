"""Shared fixtures and slow-but-obvious reference implementations."""
from collections import deque

import numpy as np
import pytest

from edgebench.raster import BorderPolicy, GrayImage, synth_scene


def _resolve(i, n, border):
    if 0 <= i < n:
        return i
    if border is BorderPolicy.ZERO:
        return None
    if border is BorderPolicy.REPLICATE:
        return min(max(i, 0), n - 1)
    # mirror about the edge pixel, without repeating it
    period = 2 * (n - 1)
    if period == 0:
        return 0
    i = abs(i) % period
    return i if i < n else period - i


def brute_correlate(img, taps, anchor, border):
    """Quadruple loop straight from the correlation definition."""
    img = np.asarray(img, dtype=float)
    taps = np.asarray(taps, dtype=float)
    h, w = img.shape
    kh, kw = taps.shape
    out = np.zeros((h, w))
    for r in range(h):
        for c in range(w):
            acc = 0.0
            for i in range(kh):
                for j in range(kw):
                    rr = _resolve(r + i - anchor[0], h, border)
                    cc = _resolve(c + j - anchor[1], w, border)
                    if rr is None or cc is None:
                        continue
                    acc += taps[i, j] * img[rr, cc]
            out[r, c] = acc
    return out


def flood_connected_to_strong(values, low, high):
    """BFS over 8-neighbours from every pixel > high through pixels > low."""
    values = np.asarray(values)
    h, w = values.shape
    out = np.zeros((h, w), dtype=bool)
    queue = deque((r, c) for r in range(h) for c in range(w) if values[r, c] > high)
    for r, c in queue:
        out[r, c] = True
    while queue:
        r, c = queue.popleft()
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                rr, cc = r + dr, c + dc
                if 0 <= rr < h and 0 <= cc < w and not out[rr, cc] and values[rr, cc] > low:
                    out[rr, cc] = True
                    queue.append((rr, cc))
    return out


def random_scene(rng, size=32):
    """Random synthetic scene: one of the four kinds plus mild Gaussian noise."""
    kind = rng.choice(["vstep", "ribbon", "disk", "checker"])
    lo, hi = sorted(rng.uniform(0, 1, 2))
    params = {
        "vstep": {"split": int(rng.integers(2, size - 2))},
        "ribbon": {"ribbon_width": float(rng.uniform(2, 6)), "angle": float(rng.uniform(0, 180))},
        "disk": {"radius": float(rng.uniform(4, size / 2 - 2))},
        "checker": {"block": int(rng.integers(3, 10))},
    }[kind]
    base = synth_scene(kind, size, size, lo=lo, hi=hi, **params)
    return GrayImage(np.clip(base.pixels + rng.normal(0, 0.03, base.shape), 0, 1))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def vstep8():
    return synth_scene("vstep", 8, 8, split=4, lo=0.0, hi=1.0)
