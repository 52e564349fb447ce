"""Command-line benchmark harness.

Subcommands: ``generate`` (archive synthetic scenes), ``track`` (tracking
accuracy/runtime sweep), ``pseudo`` (single-frame convergence study),
``bounds`` (approximation-bound study), ``report`` (re-render plots from an
existing CSV), and ``backends`` (compare the compiled and pure-Python
kernels). Exit codes: 0 success, 2 configuration error, 3 runtime failure.

Options may come from a flat key=value config file with [section] headers
(section = subcommand name); command-line flags win over the file.
"""

import argparse
import configparser
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import kernels, reports
from .experiments import (BOUND_CELL_SIZES, PSEUDO_PRIORS, ConfigError,
                          derive_rng, preset,
                          run_bounds_study, run_pseudo_tracking,
                          run_tracking_experiment)
from .synthesis import generate_truth, render_sequence, save_sequence


def _parse_int_list(text):
    try:
        return tuple(int(v) for v in str(text).replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"expected a list of integers, got {text!r}") from None


def _parse_float_list(text):
    try:
        return tuple(float(v) for v in str(text).replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"expected a list of numbers, got {text!r}") from None


def _parse_str_list(text):
    return tuple(v for v in str(text).replace(",", " ").split())


def _load_config_file(path, section):
    """Flat key=value options for one subcommand, [common] applying to all."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    options = {}
    for name in ("common", section):
        if parser.has_section(name):
            options.update(parser.items(name))
    return options


def _resolve(args, key, cast=None, default=None):
    """CLI value if given, else config-file value, else default."""
    value = getattr(args, key, None)
    if value is None and args.file_options is not None:
        value = args.file_options.get(key)
    if value is None:
        return default
    return cast(value) if cast is not None and isinstance(value, str) else value


def _experiment_config(args, experiment=None, prior=None):
    experiment = experiment or _resolve(args, "experiment")
    if experiment is None:
        raise ConfigError("an experiment name is required")
    cfg = preset(experiment,
                 full_scale=bool(_resolve(args, "full_scale", default=False)),
                 seed=int(_resolve(args, "seed", int, 0)))
    particles = _resolve(args, "particles", _parse_int_list)
    if particles is not None:
        cfg = replace(cfg, n_particles=tuple(particles))
    reps = _resolve(args, "reps", int)
    if reps is not None:
        cfg = replace(cfg, repetitions=reps)
    variants = _resolve(args, "variants", _parse_str_list)
    if variants is not None:
        cfg = replace(cfg, variants=tuple(variants))
    sigma_xi = _resolve(args, "sigma_xi", float)
    if sigma_xi is not None:
        cfg = replace(cfg, sigma_xi=sigma_xi)
    if prior is not None:
        cfg = replace(cfg, prior=prior)
    return cfg.validate()


def _out_dir(args):
    return Path(_resolve(args, "out", Path, Path("results")))


def _apply_backend(args):
    backend = _resolve(args, "backend")
    if backend is not None:
        try:
            kernels.set_backend(backend)
        except ValueError as err:
            raise ConfigError(str(err)) from None


def cmd_generate(args):
    experiment = _resolve(args, "experiment", default="small_object")
    cfg = _experiment_config(args, experiment=experiment)
    out = _out_dir(args)
    count = int(_resolve(args, "count", int, 1))
    for index in range(count):
        rng = derive_rng(cfg.seed, "scene", cfg.experiment, index)
        truth = generate_truth(cfg.scene, rng)
        frames = render_sequence(truth, cfg.scene, rng)
        directory = out / f"{cfg.experiment}_{index:03d}"
        save_sequence(directory, frames, truth, cfg.scene)
        print(f"wrote {len(frames)} frames to {directory}")
    return 0


def cmd_track(args):
    cfg = _experiment_config(args)
    if cfg.experiment not in ("large_object", "small_object"):
        raise ConfigError("track expects experiment large_object or small_object")
    _apply_backend(args)
    records = run_tracking_experiment(cfg)
    rows = reports.summarize(records)
    written = reports.emit_reports(rows, _out_dir(args), cfg.experiment,
                                   title=f"{cfg.experiment} (seed {cfg.seed})")
    for row in rows:
        print(f"{row.variant:>14s} N={row.n_particles:<8d} "
              f"rmse={row.rmse_mean:.4f} time={row.time_mean_s:.3f}s "
              f"evals={row.lik_evals_mean:.0f} speedup={row.speedup_vs_sir:.2f}")
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_pseudo(args):
    prior = _resolve(args, "prior", default="all")
    priors = PSEUDO_PRIORS if prior == "all" else (prior,)
    _apply_backend(args)
    out = _out_dir(args)
    for prior_name in priors:
        cfg = _experiment_config(args, experiment="pseudo_tracking",
                                 prior=prior_name)
        records = run_pseudo_tracking(cfg)
        rows = reports.summarize(records)
        basename = f"pseudo_{prior_name.replace('.', '_')}"
        written = reports.emit_reports(rows, out, basename,
                                       title=f"pseudo-tracking, prior {prior_name}")
        for row in rows:
            print(f"{prior_name:>10s} {row.variant:>14s} N={row.n_particles:<7d} "
                  f"rmse={row.rmse_mean:.5f}")
        for path in written:
            print(f"wrote {path}")
    return 0


def cmd_bounds(args):
    sizes = _resolve(args, "cells", _parse_float_list, BOUND_CELL_SIZES)
    out = _out_dir(args)
    results = run_bounds_study(cell_sizes=tuple(sizes))
    out.mkdir(parents=True, exist_ok=True)
    for name, rows in results.items():
        path = reports.write_bounds_csv(rows, out / f"bounds_{name}.csv")
        print(f"wrote {path}")
        for l, true_err, rect, square in rows:
            print(f"  {name:>10s} l={l:<7g} true={true_err:.3e} "
                  f"rect={rect:.3e} square={square:.3e}")
    reports.plot_bounds(results, out / "bounds.svg")
    print(f"wrote {out / 'bounds.svg'}")
    return 0


def cmd_report(args):
    csv_path = Path(_resolve(args, "csv"))
    rows = reports.read_summary_csv(csv_path)
    if not rows:
        raise ConfigError(f"{csv_path} contains no rows")
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    path = reports.plot_summary(rows, out / f"{csv_path.stem}.svg",
                                title=csv_path.stem)
    print(f"wrote {path}")
    return 0


def cmd_backends(args):
    """Time the kernel backends on representative likelihood workloads."""
    repeats = int(_resolve(args, "repeats", int, 5))
    rng = np.random.default_rng(int(_resolve(args, "seed", int, 0)))
    frame = rng.poisson(10.0, size=(512, 512)).astype(np.float64)
    cases = [("small spot (9x9)", 4, 20000), ("large spot (65x65)", 32, 2000)]
    print(f"available backends: {', '.join(kernels.available_backends())}")
    results = {}
    for label, halfwidth, n in cases:
        xs = rng.uniform(40, 470, size=n)
        ys = rng.uniform(40, 470, size=n)
        i0s = rng.uniform(5, 25, size=n)
        for backend in kernels.available_backends():
            best = min(
                _timed(lambda: kernels.spot_window_ssd(
                    frame, xs, ys, i0s, 1.16, 10.0, halfwidth, backend=backend))
                for _ in range(repeats))
            results[(label, backend)] = n / best
            print(f"{label:>18s} {backend:>9s}: {n / best:12.0f} evals/s")
        if {"compiled", "python"} <= set(kernels.available_backends()):
            ratio = results[(label, "compiled")] / results[(label, "python")]
            print(f"{label:>18s} {'speedup':>9s}: {ratio:12.1f}x")
    return 0


def _timed(fn):
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


def _add_common(sub):
    sub.add_argument("--config", dest="config", help="key=value config file")
    sub.add_argument("--seed", type=int, help="experiment seed")
    sub.add_argument("--out", help="output directory (default: results)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pcsir",
        description="Particle-filter tracking benchmarks (SIR and pcSIR).")
    subparsers = parser.add_subparsers(dest="command", required=True)

    p = subparsers.add_parser("generate", help="archive synthetic scenes")
    _add_common(p)
    p.add_argument("--experiment", choices=("large_object", "small_object"))
    p.add_argument("--count", type=int, help="number of sequences")

    p = subparsers.add_parser("track", help="tracking accuracy/runtime sweep")
    _add_common(p)
    p.add_argument("--experiment", choices=("large_object", "small_object"))
    p.add_argument("--variants", help="comma-separated filter variants")
    p.add_argument("--particles", help="comma-separated particle counts")
    p.add_argument("--reps", type=int, help="repetitions per configuration")
    p.add_argument("--sigma-xi", dest="sigma_xi", type=float)
    p.add_argument("--full-scale", dest="full_scale", action="store_const",
                   const=True, help="reference-scale sweep instead of desk scale")
    p.add_argument("--backend", choices=("compiled", "python", "auto"))

    p = subparsers.add_parser("pseudo", help="single-frame convergence study")
    _add_common(p)
    p.add_argument("--prior", choices=PSEUDO_PRIORS + ("all",))
    p.add_argument("--variants")
    p.add_argument("--particles")
    p.add_argument("--reps", type=int)
    p.add_argument("--sigma-xi", dest="sigma_xi", type=float)
    p.add_argument("--full-scale", dest="full_scale", action="store_const", const=True)
    p.add_argument("--backend", choices=("compiled", "python", "auto"))

    p = subparsers.add_parser("bounds", help="approximation-bound study")
    _add_common(p)
    p.add_argument("--cells", help="comma-separated cell sizes")

    p = subparsers.add_parser("report", help="re-render plots from a summary CSV")
    _add_common(p)
    p.add_argument("--csv", required=True, help="summary CSV to plot")

    p = subparsers.add_parser("backends", help="compare kernel backends")
    _add_common(p)
    p.add_argument("--repeats", type=int, help="timing repeats per case")

    return parser


COMMANDS = {
    "generate": cmd_generate,
    "track": cmd_track,
    "pseudo": cmd_pseudo,
    "bounds": cmd_bounds,
    "report": cmd_report,
    "backends": cmd_backends,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    args.file_options = None
    try:
        if getattr(args, "config", None):
            args.file_options = _load_config_file(args.config, args.command)
        return COMMANDS[args.command](args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    except Exception as err:  # runtime failure
        print(f"error: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
