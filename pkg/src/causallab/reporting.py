"""CSV/SVG emission and experiment manifests.

CSV files carry doubles at 17 significant digits so they reload exactly;
SVG plots are rendered with matplotlib (Agg) and carry no timestamps, so
reruns produce identical bytes.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .experiments import HeatmapGrid, SweepCell, SweepResult
from .mlp import ConfusionMatrix

__all__ = [
    "emit_csv",
    "emit_svg_plot",
    "emit_trial_log",
    "load_sweep_csv",
    "load_heatmap_csv",
    "load_confusion_csv",
    "write_manifest",
    "SCHEMA_VERSIONS",
]

SCHEMA_VERSIONS = {
    "dataset": 1,
    "model": 1,
    "sweep_csv": 1,
    "heatmap_csv": 1,
    "confusion_csv": 1,
    "manifest": 1,
}

_SWEEP_FIELDS = [
    "kind",
    "k_x",
    "k_y",
    "alpha_max",
    "n_components",
    "n_hyperpriors",
    "n_priors_per_hyperprior",
    "error_rate",
    "std_dev",
    "n_trials",
]


def _g17(x: float) -> str:
    return f"{float(x):.17g}"


def emit_csv(result, path) -> None:
    """Write a sweep result, heatmap grid, or confusion matrix as CSV."""
    if isinstance(result, SweepResult):
        _emit_sweep_csv(result, path)
    elif isinstance(result, HeatmapGrid):
        _emit_heatmap_csv(result, path)
    elif isinstance(result, ConfusionMatrix):
        _emit_confusion_csv(result, path)
    else:
        raise ValidationError(f"cannot serialize {type(result).__name__} as CSV")


def _emit_sweep_csv(result: SweepResult, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_SWEEP_FIELDS)
        for c in result.cells:
            writer.writerow(
                [
                    result.kind,
                    c.k_x,
                    c.k_y,
                    _g17(c.alpha_max),
                    c.n_components,
                    result.n_hyperpriors,
                    result.n_priors_per_hyperprior,
                    _g17(c.error_rate),
                    _g17(c.std_dev),
                    c.n_trials,
                ]
            )


def load_sweep_csv(path) -> SweepResult:
    """Rebuild a SweepResult from its CSV (seed is not stored; set to -1)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValidationError(f"{path}: sweep CSV has no data rows")
    cells = tuple(
        SweepCell(
            int(r["k_x"]),
            int(r["k_y"]),
            float(r["alpha_max"]),
            int(r["n_components"]),
            float(r["error_rate"]),
            float(r["std_dev"]),
            int(r["n_trials"]),
        )
        for r in rows
    )
    first = rows[0]
    return SweepResult(
        first["kind"],
        cells,
        int(first["n_hyperpriors"]),
        int(first["n_priors_per_hyperprior"]),
        seed=-1,
    )


def _emit_heatmap_csv(grid: HeatmapGrid, path) -> None:
    axis = (np.arange(grid.resolution) + 0.5) / grid.resolution
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["d", "e", "f", "log_lr", "masked"])
        for s, d in enumerate(grid.d_slices):
            for i in range(grid.resolution):
                for j in range(grid.resolution):
                    masked = bool(grid.mask[s, i, j])
                    writer.writerow(
                        [
                            _g17(d),
                            _g17(axis[i]),
                            _g17(axis[j]),
                            "" if masked else _g17(grid.values[s, i, j]),
                            int(masked),
                        ]
                    )


def load_heatmap_csv(path) -> HeatmapGrid:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValidationError(f"{path}: heatmap CSV has no data rows")
    d_values = sorted({float(r["d"]) for r in rows})
    per_slice = len(rows) // len(d_values)
    resolution = int(round(np.sqrt(per_slice)))
    if len(rows) != len(d_values) * resolution * resolution:
        raise ValidationError(f"{path}: heatmap CSV does not form a full grid")
    values = np.full((len(d_values), resolution, resolution), np.nan)
    mask = np.zeros((len(d_values), resolution, resolution), dtype=bool)
    slice_of = {d: s for s, d in enumerate(d_values)}
    counters = {s: 0 for s in range(len(d_values))}
    for r in rows:
        s = slice_of[float(r["d"])]
        flat_idx = counters[s]
        counters[s] += 1
        i, j = divmod(flat_idx, resolution)
        if int(r["masked"]):
            mask[s, i, j] = True
        else:
            values[s, i, j] = float(r["log_lr"])
    return HeatmapGrid(tuple(d_values), resolution, values, mask)


def _emit_confusion_csv(cm: ConfusionMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true_class", "predicted_class", "count"])
        for i, tname in enumerate(cm.classes):
            for j, pname in enumerate(cm.classes):
                writer.writerow([tname, pname, int(cm.counts[i, j])])


def load_confusion_csv(path) -> ConfusionMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValidationError(f"{path}: confusion CSV has no data rows")
    names = list(dict.fromkeys(r["true_class"] for r in rows))
    idx = {n: i for i, n in enumerate(names)}
    counts = np.zeros((len(names), len(names)), dtype=int)
    for r in rows:
        counts[idx[r["true_class"]], idx[r["predicted_class"]]] = int(r["count"])
    return ConfusionMatrix(counts, tuple(names))


def emit_trial_log(result: SweepResult, path) -> None:
    """Per-trial 0/1 outcomes, enough to recompute every cell's error rate."""
    fields = [
        "k_x", "k_y", "alpha_max", "n_components", "hyperprior", "trial",
        "label", "decided", "error",
    ]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for rec in result.trial_log:
            out = dict(rec)
            out["alpha_max"] = _g17(rec["alpha_max"])
            writer.writerow(out)


def _plt():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


_SVG_META = {"Date": None}  # keep SVG bytes reproducible


def emit_svg_plot(result, path) -> None:
    """Render a sweep, heatmap grid, or confusion matrix as an SVG figure."""
    if isinstance(result, SweepResult):
        _plot_sweep(result, path)
    elif isinstance(result, HeatmapGrid):
        _plot_heatmap(result, path)
    elif isinstance(result, ConfusionMatrix):
        _plot_confusion(result, path)
    else:
        raise ValidationError(f"cannot plot {type(result).__name__}")


def _plot_sweep(result: SweepResult, path) -> None:
    plt = _plt()
    by_card: dict[tuple[int, int], list[SweepCell]] = {}
    for c in result.cells:
        by_card.setdefault((c.k_x, c.k_y), []).append(c)
    x_attr = "n_components" if result.kind == "components" else "alpha_max"
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for (kx, ky), cells in sorted(by_card.items()):
        cells = sorted(cells, key=lambda c: getattr(c, x_attr))
        xs = [getattr(c, x_attr) for c in cells]
        ys = [c.error_rate for c in cells]
        errs = [c.std_dev for c in cells]
        ax.errorbar(xs, ys, yerr=errs, marker="o", capsize=3, label=f"|X|={kx}, |Y|={ky}")
    if result.kind == "components":
        ax.set_xscale("log", base=2)
        ax.set_xlabel("mixture components")
    else:
        ax.set_xlabel("alpha_max (log2 bound on concentrations)")
    ax.set_ylabel("classification error")
    ax.set_title(f"{result.kind} sweep")
    ax.legend()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def _plot_heatmap(grid: HeatmapGrid, path) -> None:
    plt = _plt()
    n = len(grid.d_slices)
    ncols = min(3, n)
    nrows = (n + ncols - 1) // ncols
    vmax = float(np.nanmax(np.abs(grid.values))) or 1.0
    fig, axes = plt.subplots(nrows, ncols, figsize=(3.2 * ncols, 3.0 * nrows), squeeze=False)
    extent = (0.0, 1.0, 0.0, 1.0)
    for s, d in enumerate(grid.d_slices):
        ax = axes[s // ncols][s % ncols]
        shown = np.ma.masked_where(grid.mask[s], grid.values[s])
        ax.imshow(
            shown.T, origin="lower", extent=extent, cmap="coolwarm",
            vmin=-vmax, vmax=vmax, aspect="equal",
        )
        ax.set_title(f"d = {d:g}")
        ax.set_xlabel("e")
        ax.set_ylabel("f")
    for s in range(n, nrows * ncols):
        axes[s // ncols][s % ncols].axis("off")
    fig.suptitle("log odds of X->Y over Y->X")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def _plot_confusion(cm: ConfusionMatrix, path) -> None:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(1.2 * len(cm.classes) + 2, 1.0 * len(cm.classes) + 2))
    ax.imshow(cm.counts, cmap="Blues")
    ax.set_xticks(range(len(cm.classes)), cm.classes, rotation=45, ha="right")
    ax.set_yticks(range(len(cm.classes)), cm.classes)
    for i in range(len(cm.classes)):
        for j in range(len(cm.classes)):
            ax.text(j, i, str(int(cm.counts[i, j])), ha="center", va="center", fontsize=8)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_title(f"errors: {cm.n_errors}/{cm.total}")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def write_manifest(path, command: str, config: dict, seed: int) -> None:
    """Reproducibility record written beside every command's outputs."""
    from . import __version__

    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "schema_versions": SCHEMA_VERSIONS,
        "version": __version__,
    }
    Path(path).write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
