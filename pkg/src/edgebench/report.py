"""CSV and markdown renderings of sweep, band, noise and timing results."""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .bands import BandReport
from .bench import SUMMARY_ORDER, NoiseReport, TimingReport
from .detectors import Method
from .errors import IoFailure, MalformedHeader
from .sweep import SweepResult

__all__ = [
    "write_text",
    "sweep_csv",
    "read_sweep_csv",
    "sweep_markdown",
    "band_csv",
    "noise_csv",
    "timing_csv",
    "summary_markdown",
    "noise_ranking",
]


def write_text(path: str | os.PathLike, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _num(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def sweep_csv(sr: SweepResult) -> str:
    """Density curve as ``threshold,density`` rows; the triple rides in a leading comment."""
    lines = [
        f"# method={sr.method.value} t_min={_num(sr.t_min)} t_ideal={_num(sr.t_ideal)} "
        f"t_max={_num(sr.t_max)} ideal_source={sr.ideal_source or ''}",
        "threshold,density",
    ]
    lines += [f"{_num(t)},{_num(d)}" for t, d in zip(sr.thresholds, sr.densities)]
    return "\n".join(lines) + "\n"


def read_sweep_csv(path: str | os.PathLike) -> SweepResult:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or not text[0].startswith("#"):
        raise MalformedHeader(f"{path}: missing '# method=...' header comment")
    meta = dict(item.split("=", 1) for item in text[0][1:].split())
    if text[1:2] != ["threshold,density"]:
        raise MalformedHeader(f"{path}: expected 'threshold,density' column header")
    rows = [line.split(",") for line in text[2:] if line.strip()]
    grid = np.array([float(t) for t, _ in rows])
    dens = np.array([float(d) for _, d in rows])

    def opt(key):
        return float(meta[key]) if meta.get(key) else None

    return SweepResult(
        Method(meta["method"]), grid, dens, opt("t_min"), opt("t_ideal"), opt("t_max"),
        meta.get("ideal_source") or None,
    )


def sweep_markdown(rows: list[tuple[SweepResult, str]]) -> str:
    """Threshold-range table: one row per (sweep, manually noted features)."""
    out = [
        "| method | min | ideal | max | distinguished-features(manual) |",
        "|---|---|---|---|---|",
    ]
    for sr, features in rows:
        out.append(
            f"| {sr.method.value} | {sr.t_min:.4f} | {sr.t_ideal:.4f} | {sr.t_max:.4f} | {features} |"
        )
    return "\n".join(out) + "\n"


def band_csv(report: BandReport) -> str:
    lines = ["label,precision,recall,f1"]
    lines += [f"{r.label},{_num(r.precision)},{_num(r.recall)},{_num(r.f1)}" for r in report.rows]
    lines.append(f"# best_band={report.best_band}")
    return "\n".join(lines) + "\n"


def noise_csv(report: NoiseReport) -> str:
    lines = ["method,density,seed,false_edge_rate,true_edge_recall"]
    lines += [
        f"{r.method},{_num(r.density)},{r.seed},{_num(r.false_edge_rate)},{_num(r.true_edge_recall)}"
        for r in report.rows
    ]
    return "\n".join(lines) + "\n"


def timing_csv(report: TimingReport) -> str:
    lines = ["method,side,median_seconds,peak_bytes"]
    lines += [
        f"{r.method},{r.side},{_num(r.median_seconds)},{'' if r.peak_bytes is None else r.peak_bytes}"
        for r in report.rows
    ]
    return "\n".join(lines) + "\n"


def _summary_key(method: str) -> tuple[int, str]:
    return (SUMMARY_ORDER.index(method) if method in SUMMARY_ORDER else len(SUMMARY_ORDER), method)


def noise_ranking(report: NoiseReport, density: float) -> list[tuple[str, float]]:
    """Methods sorted by median false-edge rate at ``density`` (stable in table order)."""
    med = report.medians()
    methods = sorted({m for m, d in med if d == density}, key=_summary_key)
    return sorted(((m, med[(m, density)][0]) for m in methods), key=lambda x: x[1])


def summary_markdown(timing: TimingReport | None = None, noise: NoiseReport | None = None) -> str:
    """Summary table in the column order method | time | space | noise sensitivity | false edges.

    Time and space come from the largest benchmarked side.  Noise sensitivity
    is the rise in median false-edge rate from the lowest to the highest noise
    density; false edges is the median rate at the highest density.
    """
    methods: set[str] = set()
    time_col: dict[str, str] = {}
    space_col: dict[str, str] = {}
    if timing is not None:
        for row in timing.rows:
            methods.add(row.method)
        for m in methods:
            rows = [r for r in timing.rows if r.method == m]
            top = max(rows, key=lambda r: r.side)
            time_col[m] = f"{top.median_seconds:.4f} s @ {top.side}px"
            space_col[m] = "n/a" if top.peak_bytes is None else f"{top.peak_bytes / 1e6:.1f} MB @ {top.side}px"

    sens_col: dict[str, str] = {}
    false_col: dict[str, str] = {}
    if noise is not None:
        med = noise.medians()
        for m, _ in med:
            methods.add(m)
        for m in {m for m, _ in med}:
            ds = sorted(d for mm, d in med if mm == m)
            lo, hi = med[(m, ds[0])][0], med[(m, ds[-1])][0]
            sens_col[m] = f"{hi - lo:+.4f} (density {ds[0]:g} -> {ds[-1]:g})"
            false_col[m] = f"{hi:.4f} @ density {ds[-1]:g}"

    out = [
        "| method | time | space | noise sensitivity | false edges |",
        "|---|---|---|---|---|",
    ]
    for m in sorted(methods, key=_summary_key):
        out.append(
            f"| {m} | {time_col.get(m, 'n/a')} | {space_col.get(m, 'n/a')} | "
            f"{sens_col.get(m, 'n/a')} | {false_col.get(m, 'n/a')} |"
        )
    if noise is not None:
        top = max(d for _, d in noise.medians())
        ranking = noise_ranking(noise, top)
        parts = [ranking[0][0]]
        for (_, prev), (m, rate) in zip(ranking, ranking[1:]):
            parts.append(("= " if rate == prev else "< ") + m)
        out.append("")
        out.append(f"median false edges at density {top:g}: {' '.join(parts)}")
    return "\n".join(out) + "\n"
