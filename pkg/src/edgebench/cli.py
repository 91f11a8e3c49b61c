"""``edgebench`` command line: detect, sweep, bands, noise, bench, synth, replay.

Exit codes: 0 success, 1 runtime error (error name on stderr), 2 usage error.
Every run writes a ``<output>.manifest.json`` sidecar holding the fully
resolved parameters; ``edgebench replay`` re-runs it.
"""
from __future__ import annotations

import datetime
import functools
import json
import logging
import re
from pathlib import Path

import click
import numpy as np

from . import __version__
from .bands import TruthMask, band_report, load_truth_mask
from .bench import noise_study, salt_pepper, timing_study
from .detectors import DetectorConfig, GradientOp, Method, _canny_field, detect, gradient
from .errors import EdgebenchError
from .raster import (
    Kernel,
    SceneKind,
    boundary_truth,
    load_band_stack,
    load_pgm,
    save_mask_pgm,
    save_pgm,
    scene_region,
    synth_scene,
)
from .report import (
    band_csv,
    noise_csv,
    sweep_csv,
    sweep_markdown,
    summary_markdown,
    timing_csv,
    write_text,
)
from .sweep import (
    DEFAULT_EPS,
    DEFAULT_GRID_POINTS,
    DEFAULT_PLATEAU,
    default_grid,
    extract_range,
    ideal_config,
    otsu_threshold,
    sweep,
)

log = logging.getLogger(__name__)

METHODS = [m.value for m in Method]
NOISE_CALIBRATION_SEED = 10_000
_RANGE = re.compile(r"^(\d+)-(\d+)$")


class RuntimeFailure(click.ClickException):
    exit_code = 1


def _runtime_errors(fn):
    """Map library errors raised during a run to exit code 1."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except EdgebenchError as err:
            raise RuntimeFailure(f"{err.name}: {err}") from err

    return wrapper


def _usage(err: EdgebenchError) -> click.UsageError:
    return click.UsageError(f"{err.name}: {err}")


def _write_manifest(subcommand: str, params: dict, inputs: list, outputs: list) -> Path:
    manifest = {
        "subcommand": subcommand,
        "parameters": params,
        "inputs": [str(p) for p in inputs if p],
        "outputs": [str(p) for p in outputs if p],
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    path = Path(f"{outputs[0]}.manifest.json")
    write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    """Comma-separated integers; ``a-b`` expands to an inclusive range."""
    out = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        m = _RANGE.match(part)
        if m:
            out.extend(range(int(m.group(1)), int(m.group(2)) + 1))
            continue
        try:
            out.append(int(part))
        except ValueError:
            raise click.BadParameter(f"expected integers or ranges like 0-19, got {part!r}") from None
    return out


def _method_list(text: str) -> list[str]:
    methods = [m.strip().lower() for m in text.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise click.BadParameter(f"unknown method(s) {bad}; choose from {', '.join(METHODS)}")
    return methods


def _load_kernel(path: str | None) -> Kernel | None:
    if path is None:
        return None
    try:
        return Kernel(np.loadtxt(path, ndmin=2))
    except (OSError, ValueError) as exc:
        raise click.BadParameter(f"cannot read kernel {path}: {exc}", param_hint="--kernel") from None


def _config(method, threshold=None, low=None, high=None, sigma=None, kernel=None) -> DetectorConfig:
    """Build a config, turning validation failures into usage errors (exit 2)."""
    try:
        return DetectorConfig(Method(method), threshold, low, high, sigma, kernel)
    except EdgebenchError as err:
        raise _usage(err) from err
    except ValueError as err:
        raise click.UsageError(str(err)) from err


method_option = click.option("--method", type=click.Choice(METHODS, case_sensitive=False), required=True)
threshold_options = [
    click.option("--threshold", type=float, default=None, help="Normalized threshold in [0, 1]."),
    click.option("--low", type=float, default=None, help="Canny low threshold."),
    click.option("--high", type=float, default=None, help="Canny high threshold."),
    click.option("--sigma", type=float, default=None, help="Gaussian / LoG sigma in pixels."),
]


def with_threshold_options(fn):
    for opt in reversed(threshold_options):
        fn = opt(fn)
    return fn


@click.group()
@click.version_option(__version__, prog_name="edgebench")
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def cli(verbose):
    """Edge detector comparison toolkit."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


@cli.command("detect")
@click.option("--input", "input_path", type=click.Path(), required=True)
@method_option
@with_threshold_options
@click.option("--kernel", "kernel_path", type=click.Path(), default=None,
              help="Whitespace-separated kernel matrix for --method zerocross.")
@click.option("--out", "out_path", type=click.Path(), required=True)
@_runtime_errors
def detect_cmd(input_path, method, threshold, low, high, sigma, kernel_path, out_path):
    """Detect edges and write them as a 0/255 PGM."""
    method = method.lower()
    kernel = _load_kernel(kernel_path) if method == "zerocross" else None
    if kernel_path and method != "zerocross":
        raise click.UsageError("--kernel only applies to --method zerocross")
    if method == "canny" and low is not None and high is None and threshold is None:
        raise click.UsageError("--low needs --high")
    # validate whatever thresholds were given before touching the input
    if threshold is not None or high is not None:
        _config(method, threshold, low, high, sigma, kernel)

    img = load_pgm(input_path)
    source = "flag"
    if threshold is None and high is None:
        m = Method(method)
        if m is Method.CANNY:
            probe = _config(method, threshold=0.5, sigma=sigma)
            threshold = otsu_threshold(_canny_field(img, probe.sigma).magnitude)
            source = "otsu"
        elif m.is_gradient:
            threshold = otsu_threshold(gradient(img, GradientOp(method)).magnitude)
            source = "otsu"
        else:
            probe = _config(method, threshold=0.0, sigma=sigma, kernel=kernel)
            threshold = extract_range(sweep(img, probe)).t_ideal
            source = "sweep-ideal"
    cfg = _config(method, threshold, low, high, sigma, kernel)

    em = detect(img, cfg)
    save_mask_pgm(em.bits, out_path)
    params = {
        "input_path": input_path,
        "method": method,
        "threshold": None if cfg.method is Method.CANNY else cfg.threshold,
        "low": cfg.low,
        "high": cfg.high,
        "sigma": cfg.sigma,
        "kernel_path": kernel_path,
        "out_path": out_path,
    }
    _write_manifest("detect", {**params, "threshold_source": source}, [input_path, kernel_path], [out_path])
    click.echo(f"{em.count} edge pixels ({em.density:.4%}) -> {out_path}")


@cli.command("sweep")
@click.option("--input", "input_path", type=click.Path(), required=True)
@method_option
@click.option("--sigma", type=float, default=None)
@click.option("--grid-points", type=click.IntRange(min=1), default=DEFAULT_GRID_POINTS, show_default=True)
@click.option("--eps", type=float, default=DEFAULT_EPS, show_default=True, help="Elimination density floor.")
@click.option("--plateau", type=float, default=DEFAULT_PLATEAU, show_default=True,
              help="Saturation fraction defining t_min.")
@click.option("--ideal", type=float, default=None, help="Manual ideal threshold, reported verbatim.")
@click.option("--features", default="", help="Manually judged distinguished features for the table.")
@click.option("--out", "out_path", type=click.Path(), required=True, help="Density-curve CSV.")
@click.option("--table", "table_path", type=click.Path(), default=None, help="Markdown table output.")
@_runtime_errors
def sweep_cmd(input_path, method, sigma, grid_points, eps, plateau, ideal, features, out_path, table_path):
    """Sweep thresholds and report the (min, ideal, max) range."""
    method = method.lower()
    cfg = _config(method, threshold=0.5, sigma=sigma)
    img = load_pgm(input_path)
    sr = extract_range(sweep(img, cfg, default_grid(grid_points)), eps, plateau, ideal)
    write_text(out_path, sweep_csv(sr))
    table = sweep_markdown([(sr, features)])
    if table_path:
        write_text(table_path, table)
    params = dict(input_path=input_path, method=method, sigma=cfg.sigma, grid_points=grid_points, eps=eps,
                  plateau=plateau, ideal=ideal, features=features, out_path=out_path, table_path=table_path)
    _write_manifest("sweep", params, [input_path], [out_path, table_path])
    click.echo(table, nl=False)


@cli.command("bands")
@click.option("--manifest", "manifest_path", type=click.Path(), required=True, help="Band manifest file.")
@method_option
@with_threshold_options
@click.option("--truth", "truth_path", type=click.Path(), required=True, help="Truth-mask PGM.")
@click.option("--feature", default="feature", show_default=True, help="Label of the truth feature.")
@click.option("--tol", type=click.IntRange(min=0), default=1, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True, help="Band report CSV.")
@_runtime_errors
def bands_cmd(manifest_path, method, threshold, low, high, sigma, truth_path, feature, tol, out_path):
    """Score one detector on every band against a truth mask."""
    method = method.lower()
    if threshold is None and high is None:
        raise click.UsageError("bands needs --threshold (or --high for canny)")
    cfg = _config(method, threshold, low, high, sigma)
    stack = load_band_stack(manifest_path)
    truth = load_truth_mask(truth_path, feature)
    report = band_report(stack, cfg, truth, tol)
    write_text(out_path, band_csv(report))
    params = dict(manifest_path=manifest_path, method=method,
                  threshold=None if cfg.method is Method.CANNY else cfg.threshold, low=cfg.low, high=cfg.high,
                  sigma=cfg.sigma, truth_path=truth_path, feature=feature, tol=tol, out_path=out_path)
    _write_manifest("bands", params, [manifest_path, truth_path], [out_path])
    for row in report.rows:
        click.echo(f"{row.label}: precision={row.precision:.4f} recall={row.recall:.4f} f1={row.f1:.4f}")
    click.echo(f"best_band={report.best_band}")


@cli.command("noise")
@click.option("--methods", default="sobel,canny", show_default=True)
@click.option("--densities", default="0,0.05", show_default=True)
@click.option("--seeds", default="0-19", show_default=True, help="List or inclusive range, e.g. 0-19.")
@click.option("--scene", "scene_path", type=click.Path(), default=None,
              help="Scene PGM (default: synthetic 64x64 step).")
@click.option("--truth", "truth_path", type=click.Path(), default=None, help="Truth-mask PGM for --scene.")
@click.option("--calibration-seed", type=int, default=NOISE_CALIBRATION_SEED, show_default=True,
              help="Seed of the held-out noisy image used to sweep-choose thresholds.")
@click.option("--tol", type=click.IntRange(min=0), default=1, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True, help="Noise report CSV.")
@click.option("--table", "table_path", type=click.Path(), default=None, help="Markdown summary output.")
@_runtime_errors
def noise_cmd(methods, densities, seeds, scene_path, truth_path, calibration_seed, tol, out_path, table_path):
    """False-edge rate and recall under salt-and-pepper noise."""
    method_names = _method_list(methods)
    density_list = _float_list(densities)
    seed_list = _int_list(seeds)
    if not density_list or not seed_list:
        raise click.UsageError("need at least one density and one seed")
    if (scene_path is None) != (truth_path is None):
        raise click.UsageError("--scene and --truth go together")
    if scene_path is None:
        scene = synth_scene("vstep", 64, 64)
        truth = TruthMask(boundary_truth(scene_region("vstep", 64, 64)), "step")
    else:
        scene = load_pgm(scene_path)
        truth = load_truth_mask(truth_path)

    calibration = salt_pepper(scene, max(density_list), calibration_seed)
    configs = [ideal_config(calibration, _config(m, threshold=0.5)) for m in method_names]
    for cfg in configs:
        log.info("%s threshold %.4f", cfg.method.value, cfg.threshold)
    report = noise_study(configs, scene, truth, density_list, seed_list, tol)
    write_text(out_path, noise_csv(report))
    table = summary_markdown(noise=report)
    if table_path:
        write_text(table_path, table)
    params = dict(methods=",".join(method_names), densities=densities, seeds=seeds, scene_path=scene_path,
                  truth_path=truth_path, calibration_seed=calibration_seed, tol=tol, out_path=out_path,
                  table_path=table_path)
    _write_manifest("noise", {**params, "chosen_thresholds": {c.method.value: c.threshold for c in configs}},
                    [scene_path, truth_path], [out_path, table_path])
    click.echo(table, nl=False)


@cli.command("bench")
@click.option("--methods", default="sobel,canny", show_default=True)
@click.option("--sides", default="128,256,512,1024", show_default=True)
@click.option("--repeats", type=int, default=5, show_default=True)
@click.option("--threshold", type=float, default=0.2, show_default=True)
@click.option("--memory/--no-memory", default=True, show_default=True, help="Record tracemalloc peak bytes.")
@click.option("--out", "out_path", type=click.Path(), required=True, help="Timing report CSV.")
@click.option("--table", "table_path", type=click.Path(), default=None, help="Markdown summary output.")
@_runtime_errors
def bench_cmd(methods, sides, repeats, threshold, memory, out_path, table_path):
    """Median detection time per method across image sizes."""
    method_names = _method_list(methods)
    side_list = _int_list(sides)
    if repeats < 3:
        raise click.UsageError(f"PreconditionViolation: --repeats must be >= 3, got {repeats}")
    if not side_list or any(b <= a for a, b in zip(side_list, side_list[1:])):
        raise click.UsageError("--sides must be strictly ascending")
    configs = [_config(m, threshold=threshold) for m in method_names]
    report = timing_study(configs, side_list, repeats, measure_memory=memory)
    write_text(out_path, timing_csv(report))
    table = summary_markdown(timing=report)
    if table_path:
        write_text(table_path, table)
    params = dict(methods=",".join(method_names), sides=sides, repeats=repeats, threshold=threshold,
                  memory=memory, out_path=out_path, table_path=table_path)
    _write_manifest("bench", params, [], [out_path, table_path])
    click.echo(table, nl=False)


def _center(text):
    if text is None:
        return None
    vals = _float_list(text)
    if len(vals) != 2:
        raise click.BadParameter("expected ROW,COL", param_hint="--center")
    return tuple(vals)


@cli.command("synth")
@click.option("--kind", type=click.Choice([k.value for k in SceneKind], case_sensitive=False), required=True)
@click.option("--size", type=int, default=64, show_default=True, help="Side of a square scene.")
@click.option("--width", type=int, default=None, help="Overrides --size horizontally.")
@click.option("--height", type=int, default=None, help="Overrides --size vertically.")
@click.option("--lo", type=float, default=0.0, show_default=True)
@click.option("--hi", type=float, default=1.0, show_default=True)
@click.option("--split", type=int, default=None, help="vstep: first high column.")
@click.option("--ribbon-width", type=float, default=3.0, show_default=True)
@click.option("--angle", type=float, default=0.0, show_default=True, help="ribbon: degrees, 0 = horizontal.")
@click.option("--center", default=None, help="ribbon/disk: ROW,COL.")
@click.option("--radius", type=float, default=None, help="disk radius.")
@click.option("--block", type=int, default=8, show_default=True, help="checker square side.")
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--truth", "truth_path", type=click.Path(), default=None,
              help="Truth-mask output (default: <out>_truth.pgm).")
def synth_cmd(kind, size, width, height, lo, hi, split, ribbon_width, angle, center, radius, block, out_path,
              truth_path):
    """Write a synthetic scene and its boundary truth mask."""
    kind = kind.lower()
    width = size if width is None else width
    height = size if height is None else height
    if not (0.0 <= lo <= 1.0 and 0.0 <= hi <= 1.0):
        raise click.UsageError("--lo and --hi must lie in [0, 1]")
    geometry = {
        "vstep": {"split": width // 2 if split is None else split},
        "ribbon": {"ribbon_width": ribbon_width, "angle": angle, "center": _center(center)},
        "disk": {"radius": min(width, height) / 4.0 if radius is None else radius, "center": _center(center)},
        "checker": {"block": block},
    }[kind]
    try:
        region = scene_region(kind, width, height, **geometry)
    except EdgebenchError as err:
        raise _usage(err) from err
    if truth_path is None:
        p = Path(out_path)
        truth_path = str(p.with_name(f"{p.stem}_truth{p.suffix or '.pgm'}"))
    try:
        save_pgm(synth_scene(kind, width, height, lo=lo, hi=hi, **geometry), out_path)
        save_mask_pgm(boundary_truth(region), truth_path)
    except EdgebenchError as err:
        raise RuntimeFailure(f"{err.name}: {err}") from err
    params = dict(kind=kind, size=size, width=width, height=height, lo=lo, hi=hi, split=split,
                  ribbon_width=ribbon_width, angle=angle, center=center, radius=radius, block=block,
                  out_path=out_path, truth_path=truth_path)
    _write_manifest("synth", params, [], [out_path, truth_path])
    click.echo(f"scene -> {out_path}, truth -> {truth_path}")


_REPLAYABLE = {
    "detect": detect_cmd,
    "sweep": sweep_cmd,
    "bands": bands_cmd,
    "noise": noise_cmd,
    "bench": bench_cmd,
    "synth": synth_cmd,
}


@cli.command("replay")
@click.argument("manifest_path", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def replay_cmd(ctx, manifest_path):
    """Re-run the command recorded in a manifest sidecar."""
    try:
        manifest = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
        command = _REPLAYABLE[manifest["subcommand"]]
        params = dict(manifest["parameters"])
    except (ValueError, KeyError) as exc:
        raise click.UsageError(f"not a replayable manifest: {exc}") from None
    accepted = {p.name for p in command.params}
    ctx.invoke(command, **{k: v for k, v in params.items() if k in accepted})


def main():
    cli(prog_name="edgebench")


if __name__ == "__main__":
    main()
