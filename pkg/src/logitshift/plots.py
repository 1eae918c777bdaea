"""Static report rendering: per-source logit figures plus summary tables.

Figures are written as SVG with a pinned hash salt and no timestamp
metadata, so re-rendering from the same inputs reproduces the files
byte-for-byte.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .data import LogitDataset
from .harness import (
    ComparisonReport,
    EvalReport,
    SweepReport,
    write_report,
)
from .kde import KdeConfig, estimate_density

_METHOD_COLORS = {
    "kde_supervised": "tab:red",
    "kde_unsupervised": "tab:purple",
    "binary_search": "tab:green",
    "offset_training": "tab:orange",
    "oracle_sweep": "tab:gray",
}


def _deterministic_save(fig, path: Path) -> None:
    plt.rcParams["svg.hashsalt"] = "logitshift"
    plt.rcParams["svg.fonttype"] = "none"  # keep labels as searchable text
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def render_source_figure(
    source: str,
    dataset: LogitDataset,
    method_alphas: dict[str, float],
    path: Path,
    kde_config: KdeConfig = KdeConfig(),
) -> None:
    """Overlaid real/fake logit histograms with KDE curves, the default
    threshold at zero and one vertical line per fitted method."""
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    reals = np.array([r.logit for r in dataset.records if r.label == 0])
    fakes = np.array([r.logit for r in dataset.records if r.label == 1])
    pooled = dataset.logits

    def _layer(values: np.ndarray, name: str, color: str) -> None:
        if values.size == 0:
            return
        ax.hist(values, bins=40, density=True, alpha=0.35, color=color, label=name)
        if values.size >= 2:
            d = estimate_density(values, kde_config)
            ax.plot(d.grid, d.density, color=color, linewidth=1.4)

    if reals.size or fakes.size:
        _layer(reals, "real", "tab:blue")
        _layer(fakes, "fake", "tab:red")
    else:
        _layer(pooled, "logits", "tab:blue")

    ax.axvline(0.0, color="black", linestyle="--", linewidth=1.2, label="default (0)")
    for method, alpha in sorted(method_alphas.items()):
        ax.axvline(
            alpha,
            color=_METHOD_COLORS.get(method, "tab:brown"),
            linestyle="-.",
            linewidth=1.2,
            label=f"{method} ({alpha:.3f})",
        )
    ax.set_xlabel("logit")
    ax.set_ylabel("density")
    ax.set_title(source)
    ax.legend(loc="best", fontsize=8)
    _deterministic_save(fig, path)


def emit_plots(
    report: EvalReport,
    datasets: dict[str, LogitDataset],
    outdir: str | Path,
    kde_config: KdeConfig = KdeConfig(),
) -> list[Path]:
    """Render one figure per source and persist the summary tables.

    ``datasets`` must cover every source mentioned in the report; the
    per-method threshold drawn is the mean fitted alpha over seeds.
    """
    outdir = Path(outdir)
    report_sources = sorted({r.source for r in report.rows})
    missing = [s for s in report_sources if s not in datasets]
    if missing:
        raise ValueError(f"no dataset provided for report sources {missing}")

    write_report(report, outdir)
    written = []
    for source in report_sources:
        methods = sorted({r.method for r in report.rows if r.source == source})
        alphas = {m: report.mean_alpha(source, m) for m in methods}
        path = outdir / "figures" / f"{source}_logits.svg"
        render_source_figure(source, datasets[source], alphas, path, kde_config)
        written.append(path)
    return written


def render_sweep_figure(sweep: SweepReport, outdir: str | Path) -> Path:
    """Mean accuracy against validation-set size, one line per method."""
    outdir = Path(outdir)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    pairs = sorted({(p.source, p.method) for p in sweep.points})
    for source, method in pairs:
        pts = sorted(
            (p for p in sweep.points if (p.source, p.method) == (source, method)),
            key=lambda p: p.validation_size,
        )
        ax.errorbar(
            [p.validation_size for p in pts],
            [100 * p.mean_accuracy_after for p in pts],
            yerr=[100 * p.std_accuracy_after for p in pts],
            marker="o",
            capsize=3,
            label=f"{source}/{method}",
            color=_METHOD_COLORS.get(method),
        )
    ax.set_xscale("log")
    ax.set_xlabel("validation size")
    ax.set_ylabel("accuracy (%)")
    ax.legend(fontsize=8)
    path = outdir / "figures" / "validation_size_sweep.svg"
    _deterministic_save(fig, path)
    return path


def render_comparison_figure(comparison: ComparisonReport, outdir: str | Path) -> Path:
    """Method comparison across validation sizes (test accuracy)."""
    outdir = Path(outdir)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    pairs = sorted({(c.source, c.method) for c in comparison.cells})
    for source, method in pairs:
        pts = sorted(
            (c for c in comparison.cells if (c.source, c.method) == (source, method)),
            key=lambda c: c.validation_size,
        )
        ax.errorbar(
            [c.validation_size for c in pts],
            [100 * c.mean_test_accuracy for c in pts],
            yerr=[100 * c.std_test_accuracy for c in pts],
            marker="o",
            capsize=3,
            label=f"{source}/{method}",
            color=_METHOD_COLORS.get(method),
        )
    ax.set_xscale("log")
    ax.set_xlabel("validation size")
    ax.set_ylabel("test accuracy (%)")
    ax.legend(fontsize=8)
    path = outdir / "figures" / "method_comparison.svg"
    _deterministic_save(fig, path)
    return path
