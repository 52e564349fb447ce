"""Aggregation and report emission: summary CSVs and log-log SVG plots.

Float columns are written with ``repr`` so numeric values round-trip
exactly through parse(emit(rows)). Wall-time derived columns
(time_mean_s, time_std_s, speedup_vs_sir) are the only ones that vary
between otherwise identical runs.
"""

import csv
import math
from dataclasses import dataclass, fields
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

SUMMARY_COLUMNS = ("experiment", "variant", "n_particles", "rmse_mean",
                   "rmse_std", "time_mean_s", "time_std_s", "lik_evals_mean",
                   "speedup_vs_sir")
BOUNDS_COLUMNS = ("cell_size", "true_error", "rect_bound", "square_bound")

# Deterministic SVG ids; the date metadata is dropped at savefig time.
plt.rcParams["svg.hashsalt"] = "pcsir"


@dataclass
class SummaryRow:
    """Aggregate of all repetitions of one (variant, N) pair."""

    experiment: str
    variant: str
    n_particles: int
    rmse_mean: float
    rmse_std: float
    time_mean_s: float
    time_std_s: float
    lik_evals_mean: float
    speedup_vs_sir: float


def _mean_std(values):
    if len(values) == 0:
        return float("nan"), float("nan")
    mean = sum(values) / len(values)
    if len(values) == 1:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return mean, math.sqrt(var)


def summarize(records) -> list:
    """Collapse per-repetition records into per-(variant, N) summary rows.

    Tracking records carry per-run RMSEs, which average directly;
    pseudo-tracking records carry single-shot errors, so the aggregate RMSE
    is the root mean square over repetitions. Failed repetitions are
    excluded from the aggregates.
    """
    groups = {}
    order = []
    for rec in records:
        key = (rec.variant, rec.n_particles)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(rec)
    rows = []
    for variant, n in order:
        recs = [r for r in groups[(variant, n)] if not r.failed]
        experiment = groups[(variant, n)][0].experiment
        errors = [r.rmse for r in recs]
        if experiment == "pseudo_tracking":
            rmse_mean = math.sqrt(sum(e ** 2 for e in errors) / len(errors)) \
                if errors else float("nan")
            _, rmse_std = _mean_std(errors)
        else:
            rmse_mean, rmse_std = _mean_std(errors)
        time_mean, time_std = _mean_std([r.wall_time_s for r in recs])
        evals_mean, _ = _mean_std([r.lik_evals for r in recs])
        rows.append(SummaryRow(experiment, variant, n, rmse_mean, rmse_std,
                               time_mean, time_std, evals_mean, float("nan")))
    baseline = {row.n_particles: row.time_mean_s
                for row in rows if row.variant == "SIR"}
    for row in rows:
        if row.variant == "SIR":
            row.speedup_vs_sir = 1.0
        elif row.n_particles in baseline:
            row.speedup_vs_sir = baseline[row.n_particles] / row.time_mean_s
    return rows


def _format(value):
    return repr(value) if isinstance(value, float) else str(value)


def write_summary_csv(rows, path):
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(SUMMARY_COLUMNS)
            for row in rows:
                writer.writerow([_format(getattr(row, c)) for c in SUMMARY_COLUMNS])
    except OSError as err:
        raise OSError(f"cannot write report {path}: {err}") from err
    return path


def read_summary_csv(path) -> list:
    rows = []
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            kwargs = {}
            for f in fields(SummaryRow):
                caster = f.type if f.type in (str, int, float) else str
                kwargs[f.name] = caster(rec[f.name])
            rows.append(SummaryRow(**kwargs))
    return rows


def write_bounds_csv(rows, path):
    """Bounds-study CSV: cell size, true error, rect bound, square bound."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(BOUNDS_COLUMNS)
            for row in rows:
                writer.writerow([_format(float(v)) for v in row])
    except OSError as err:
        raise OSError(f"cannot write report {path}: {err}") from err
    return path


def _variant_series(rows):
    series = {}
    for row in rows:
        series.setdefault(row.variant, []).append(row)
    for variant in series:
        series[variant].sort(key=lambda r: r.n_particles)
    return series


MARKERS = {"SIR": "o", "pcSIR-1x1-CoM": "x", "pcSIR-1x1-CoC": "+",
           "pcSIR-2x2-CoM": "v", "pcSIR-2x2-CoC": "^"}


def plot_summary(rows, path, title=None):
    """Log-log panels: wall time vs N, speedup vs N, RMSE vs N."""
    series = _variant_series(rows)
    fig, axes = plt.subplots(1, 3, figsize=(12.5, 4.0))
    for variant, srows in series.items():
        ns = [r.n_particles for r in srows]
        marker = MARKERS.get(variant, ".")
        axes[0].loglog(ns, [r.time_mean_s for r in srows],
                       marker=marker, label=variant)
        if variant != "SIR":
            axes[1].loglog(ns, [r.speedup_vs_sir for r in srows],
                           marker=marker, label=variant)
        axes[2].loglog(ns, [r.rmse_mean for r in srows],
                       marker=marker, label=variant)
    axes[0].set_ylabel("wall time [s]")
    axes[1].set_ylabel("speedup vs SIR")
    axes[1].axhline(1.0, color="gray", lw=0.8, ls=":")
    axes[2].set_ylabel("RMSE [px]")
    for ax in axes:
        ax.set_xlabel("number of particles")
        ax.grid(True, which="both", alpha=0.3)
        if ax.get_legend_handles_labels()[0]:
            ax.legend(fontsize=8)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    try:
        fig.savefig(path, metadata={"Date": None})
    except OSError as err:
        raise OSError(f"cannot write plot {path}: {err}") from err
    finally:
        plt.close(fig)
    return Path(path)


def plot_bounds(rows_by_field, path):
    """Log-log true error and bounds versus cell size, one panel per field."""
    names = list(rows_by_field)
    fig, axes = plt.subplots(1, len(names), figsize=(4.2 * len(names), 4.0),
                             squeeze=False)
    for ax, name in zip(axes[0], names):
        rows = rows_by_field[name]
        sizes = [r[0] for r in rows]
        ax.loglog(sizes, [r[1] for r in rows], "o-", label="true error")
        ax.loglog(sizes, [r[2] for r in rows], "s--", label="rect bound")
        ax.loglog(sizes, [r[3] for r in rows], "^:", label="square bound")
        ax.set_xlabel("cell size")
        ax.set_ylabel("total error")
        ax.set_title(name)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=8)
    fig.tight_layout()
    try:
        fig.savefig(path, metadata={"Date": None})
    except OSError as err:
        raise OSError(f"cannot write plot {path}: {err}") from err
    finally:
        plt.close(fig)
    return Path(path)


def emit_reports(rows, out_dir, basename, formats=("csv", "svg"), title=None):
    """Write the summary table and/or plots; returns the paths written."""
    if not rows:
        raise ValueError("no result rows to report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        written.append(write_summary_csv(rows, out_dir / f"{basename}.csv"))
    if "svg" in formats:
        written.append(plot_summary(rows, out_dir / f"{basename}.svg", title=title))
    return written
