"""End-to-end calibration experiments: per-source fits, multi-seed
repetition, before/after accuracy, validation-size sweeps and method
comparisons.

The protocol per (source, seed): draw a validation subset of the configured
size from the source pool, fit every requested method on that subset only,
then score accuracy on the disjoint remainder at alpha = 0 and at the
fitted alpha.  Aggregates are mean and standard deviation over seeds and
remain recomputable from the persisted per-seed rows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import baselines
from .data import (
    LogitDataset,
    infer_format,
    parse_dataset,
    split_by_label,
    subsample_validation,
)
from .errors import ConfigError, DataFormatError, DegenerateDataError
from .kde import KdeConfig, estimate_density
from .simulate import SCENARIOS, resolve_scenario, sample_world
from .supervised import fit_class_densities, optimize_alpha
from .unsupervised import solve_alpha_closed_form

METHODS = ("kde_supervised", "kde_unsupervised", "binary_search", "offset_training")
SUPERVISED_METHODS = ("kde_supervised", "binary_search", "offset_training")
ORACLE_METHOD = "oracle_sweep"


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce an experiment byte-for-byte."""

    input: str
    methods: tuple[str, ...] = ("kde_supervised",)
    validation_size: int = 100
    seeds: tuple[int, ...] = tuple(range(10))
    kde: KdeConfig = field(default_factory=KdeConfig)
    offset: baselines.OffsetTrainingConfig = field(
        default_factory=baselines.OffsetTrainingConfig
    )
    output_dir: str | None = None
    input_format: str | None = None  # None infers from the file suffix
    stratified: bool | None = None  # None: stratified iff a supervised method runs
    n_test: int = 10_000  # pool size when input names a scenario

    def __post_init__(self):
        if not self.methods:
            raise ConfigError("at least one method is required")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(
                    f"unknown method {m!r}, expected one of {METHODS}"
                )
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.validation_size < 1:
            raise ConfigError("validation_size must be >= 1")

    @property
    def wants_supervision(self) -> bool:
        return any(m in SUPERVISED_METHODS for m in self.methods)

    @property
    def stratified_resolved(self) -> bool:
        if self.stratified is not None:
            return self.stratified
        return self.wants_supervision

    def as_dict(self) -> dict:
        return {
            "input": self.input,
            "methods": list(self.methods),
            "validation_size": self.validation_size,
            "seeds": list(self.seeds),
            "kde": {
                "bandwidth_rule": self.kde.bandwidth_rule,
                "fixed_bandwidth": self.kde.fixed_bandwidth,
                "grid_size": self.kde.grid_size,
                "grid_pad": self.kde.grid_pad,
                "bandwidth_floor": self.kde.bandwidth_floor,
            },
            "offset": {
                "steps": self.offset.steps,
                "initial_step_size": self.offset.initial_step_size,
                "init_rule": self.offset.init_rule,
            },
            "output_dir": self.output_dir,
            "input_format": self.input_format,
            "stratified": self.stratified,
            "n_test": self.n_test,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        kde = KdeConfig(**data.get("kde", {}))
        offset = baselines.OffsetTrainingConfig(**data.get("offset", {}))
        return cls(
            input=data["input"],
            methods=tuple(data.get("methods", ("kde_supervised",))),
            validation_size=int(data.get("validation_size", 100)),
            seeds=tuple(int(s) for s in data.get("seeds", range(10))),
            kde=kde,
            offset=offset,
            output_dir=data.get("output_dir"),
            input_format=data.get("input_format"),
            stratified=data.get("stratified"),
            n_test=int(data.get("n_test", 10_000)),
        )


@dataclass(frozen=True)
class SeedRow:
    source: str
    method: str
    seed: int
    alpha: float
    accuracy_before: float
    accuracy_after: float
    validation_size: int
    n_eval: int
    leakage_free: bool


@dataclass(frozen=True)
class Aggregate:
    source: str
    method: str
    n_seeds: int
    mean_alpha: float
    std_alpha: float
    mean_accuracy_before: float
    mean_accuracy_after: float
    std_accuracy_after: float
    mean_delta: float


@dataclass(frozen=True)
class EvalReport:
    config: ExperimentConfig
    rows: tuple[SeedRow, ...]

    def aggregates(self) -> list[Aggregate]:
        keys = sorted({(r.source, r.method) for r in self.rows})
        out = []
        for source, method in keys:
            rows = [r for r in self.rows if (r.source, r.method) == (source, method)]
            alphas = np.array([r.alpha for r in rows])
            before = np.array([r.accuracy_before for r in rows])
            after = np.array([r.accuracy_after for r in rows])
            out.append(
                Aggregate(
                    source=source,
                    method=method,
                    n_seeds=len(rows),
                    mean_alpha=float(alphas.mean()),
                    std_alpha=_std(alphas),
                    mean_accuracy_before=float(before.mean()),
                    mean_accuracy_after=float(after.mean()),
                    std_accuracy_after=_std(after),
                    mean_delta=float((after - before).mean()),
                )
            )
        return out

    def mean_alpha(self, source: str, method: str) -> float:
        vals = [r.alpha for r in self.rows if (r.source, r.method) == (source, method)]
        return float(np.mean(vals))


def _std(values: np.ndarray) -> float:
    return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0


def load_sources(config: ExperimentConfig) -> dict[str, LogitDataset]:
    """Resolve the config input into per-source logit pools.

    A catalog scenario name, or a ``.spec`` file, is sampled into its test
    pool; any other path is read as a dataset file and split by its source
    tags.
    """
    path = Path(config.input)
    is_spec_file = path.is_file() and path.suffix == ".spec"
    if config.input in SCENARIOS or is_spec_file or not path.is_file():
        spec = resolve_scenario(config.input)
        world = sample_world(spec, n_train=2, n_test=config.n_test)
        name = config.input if config.input in SCENARIOS else path.stem
        return {name: world.test}
    fmt = config.input_format or infer_format(path)
    ds = parse_dataset(path, fmt)
    return {src: ds.restrict_to_source(src) for src in ds.sources}


def fit_alpha(
    method: str,
    validation: LogitDataset,
    kde_config: KdeConfig,
    offset_config: baselines.OffsetTrainingConfig,
    seed: int,
) -> float:
    """Fit one calibration method on a validation subset and return alpha."""
    if method == "kde_unsupervised":
        density = estimate_density(validation.logits, kde_config)
        return solve_alpha_closed_form(density).alpha

    split = split_by_label(validation)
    if len(split.reals) == 0 or len(split.fakes) == 0:
        raise DegenerateDataError(
            f"{method} needs both classes in the validation subset"
        )
    if method == "kde_supervised":
        p0, p1 = fit_class_densities(split.reals, split.fakes, kde_config)
        return optimize_alpha(p0, p1).alpha
    if method == "binary_search":
        return baselines.binary_search_threshold(split).alpha
    if method == "offset_training":
        return baselines.train_offset(split, offset_config, seed).alpha
    if method == ORACLE_METHOD:
        return baselines.exhaustive_threshold_sweep(split)[0]
    raise ConfigError(f"unknown method {method!r}")


def _check_leakage(validation: LogitDataset, rest: LogitDataset) -> bool:
    """Validation and evaluation sets must not share any record id."""
    val_ids = {r.id for r in validation.records if r.id is not None}
    rest_ids = {r.id for r in rest.records if r.id is not None}
    return not (val_ids & rest_ids)


def run_experiment(
    config: ExperimentConfig, extra_methods: tuple[str, ...] = ()
) -> EvalReport:
    """Run the full multi-seed protocol for every source in the input."""
    sources = load_sources(config)
    methods = tuple(config.methods) + tuple(extra_methods)
    rows: list[SeedRow] = []
    for source, pool in sorted(sources.items()):
        if config.validation_size > len(pool):
            raise ConfigError(
                f"validation_size {config.validation_size} exceeds source "
                f"{source!r} ({len(pool)} records)"
            )
        # accuracy scoring needs labels in the pool regardless of method
        if all(r.label is None for r in pool.records):
            raise DegenerateDataError(
                f"source {source!r} has no labels; cannot score accuracy"
            )
        for seed in config.seeds:
            validation, rest = subsample_validation(
                pool, config.validation_size, seed, config.stratified_resolved
            )
            leakage_free = _check_leakage(validation, rest)
            if not leakage_free:
                raise DataFormatError(
                    f"source {source!r}: duplicate record ids span the "
                    "validation/evaluation split"
                )
            # validation == whole pool leaves nothing held out; score on the
            # pool itself in that degenerate case (alpha is what matters there)
            eval_split = split_by_label(rest if len(rest) else pool)
            acc_before = baselines.accuracy(eval_split, 0.0)
            for method in methods:
                alpha = fit_alpha(method, validation, config.kde, config.offset, seed)
                rows.append(
                    SeedRow(
                        source=source,
                        method=method,
                        seed=seed,
                        alpha=alpha,
                        accuracy_before=acc_before,
                        accuracy_after=baselines.accuracy(eval_split, alpha),
                        validation_size=len(validation),
                        n_eval=len(rest),
                        leakage_free=leakage_free,
                    )
                )
    return EvalReport(config=config, rows=tuple(rows))


@dataclass(frozen=True)
class SweepPoint:
    source: str
    method: str
    validation_size: int
    mean_accuracy_after: float
    std_accuracy_after: float
    mean_alpha: float
    std_alpha: float


@dataclass(frozen=True)
class SweepReport:
    config: ExperimentConfig
    sizes: tuple[int, ...]
    points: tuple[SweepPoint, ...]
    reports: tuple[EvalReport, ...]


def validation_size_sweep(config: ExperimentConfig, sizes) -> SweepReport:
    """Re-run the experiment at several validation sizes.

    Emits mean accuracy and the spread of the fitted alpha per size; the
    alpha spread is expected to shrink as the validation set grows.
    """
    sizes = tuple(int(s) for s in sizes)
    if not sizes:
        raise ConfigError("sweep needs at least one validation size")
    points: list[SweepPoint] = []
    reports: list[EvalReport] = []
    for size in sizes:
        report = run_experiment(replace(config, validation_size=size))
        reports.append(report)
        for agg in report.aggregates():
            points.append(
                SweepPoint(
                    source=agg.source,
                    method=agg.method,
                    validation_size=size,
                    mean_accuracy_after=agg.mean_accuracy_after,
                    std_accuracy_after=agg.std_accuracy_after,
                    mean_alpha=agg.mean_alpha,
                    std_alpha=agg.std_alpha,
                )
            )
    return SweepReport(
        config=config, sizes=sizes, points=tuple(points), reports=tuple(reports)
    )


@dataclass(frozen=True)
class ComparisonCell:
    source: str
    method: str
    validation_size: int
    mean_test_accuracy: float
    std_test_accuracy: float
    mean_validation_accuracy: float
    std_validation_accuracy: float


@dataclass(frozen=True)
class ComparisonReport:
    config: ExperimentConfig
    sizes: tuple[int, ...]
    cells: tuple[ComparisonCell, ...]


def method_comparison(config: ExperimentConfig, sizes) -> ComparisonReport:
    """Compare the supervised estimation methods across validation sizes.

    Adds the exhaustive threshold sweep as an upper-bound row: on the
    validation subset its accuracy dominates every other method by
    construction (on held-out data it is merely a strong reference).
    """
    sizes = tuple(int(s) for s in sizes)
    if len(config.methods) < 2:
        raise ConfigError("method comparison needs at least two methods")
    cells: list[ComparisonCell] = []
    for size in sizes:
        cfg = replace(config, validation_size=size)
        sources = load_sources(cfg)
        stats: dict[tuple[str, str], dict[str, list[float]]] = {}
        for source, pool in sorted(sources.items()):
            if cfg.validation_size > len(pool):
                raise ConfigError(
                    f"validation_size {size} exceeds source {source!r}"
                )
            for seed in cfg.seeds:
                validation, rest = subsample_validation(
                    pool, size, seed, cfg.stratified_resolved
                )
                val_split = split_by_label(validation)
                eval_split = split_by_label(rest if len(rest) else pool)
                for method in tuple(cfg.methods) + (ORACLE_METHOD,):
                    alpha = fit_alpha(method, validation, cfg.kde, cfg.offset, seed)
                    bucket = stats.setdefault(
                        (source, method), {"test": [], "val": []}
                    )
                    bucket["test"].append(baselines.accuracy(eval_split, alpha))
                    bucket["val"].append(baselines.accuracy(val_split, alpha))
        for (source, method), bucket in sorted(stats.items()):
            test = np.array(bucket["test"])
            val = np.array(bucket["val"])
            cells.append(
                ComparisonCell(
                    source=source,
                    method=method,
                    validation_size=size,
                    mean_test_accuracy=float(test.mean()),
                    std_test_accuracy=_std(test),
                    mean_validation_accuracy=float(val.mean()),
                    std_validation_accuracy=_std(val),
                )
            )
    return ComparisonReport(config=config, sizes=sizes, cells=tuple(cells))


# ---------------------------------------------------------------------------
# Report persistence: one machine-readable file of per-seed rows plus a
# human-readable table.  Accuracies print as percentages with two decimals.
# ---------------------------------------------------------------------------


def write_report(report: EvalReport, outdir: str | Path) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    with open(outdir / "config.json", "w", encoding="utf-8") as fh:
        json.dump(report.config.as_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")

    with open(outdir / "per_seed.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write(
            "source,method,seed,alpha,accuracy_before,accuracy_after,"
            "validation_size,n_eval,leakage_free\n"
        )
        for r in report.rows:
            fh.write(
                f"{r.source},{r.method},{r.seed},{r.alpha!r},"
                f"{r.accuracy_before!r},{r.accuracy_after!r},"
                f"{r.validation_size},{r.n_eval},{int(r.leakage_free)}\n"
            )

    aggs = report.aggregates()
    with open(outdir / "summary.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write(
            "source,method,n_seeds,mean_alpha,std_alpha,mean_accuracy_before,"
            "mean_accuracy_after,std_accuracy_after,mean_delta\n"
        )
        for a in aggs:
            fh.write(
                f"{a.source},{a.method},{a.n_seeds},{a.mean_alpha!r},"
                f"{a.std_alpha!r},{a.mean_accuracy_before!r},"
                f"{a.mean_accuracy_after!r},{a.std_accuracy_after!r},"
                f"{a.mean_delta!r}\n"
            )

    with open(outdir / "summary.txt", "w", encoding="utf-8") as fh:
        fh.write(format_summary(report))
    return outdir


def format_summary(report: EvalReport) -> str:
    lines = [
        f"{'source':<20} {'method':<18} {'acc before %':>12} "
        f"{'acc after %':>16} {'delta %':>9} {'mean alpha':>11}"
    ]
    for a in report.aggregates():
        after = (
            f"{100 * a.mean_accuracy_after:.2f} +/- "
            f"{100 * a.std_accuracy_after:.2f}"
        )
        lines.append(
            f"{a.source:<20} {a.method:<18} "
            f"{100 * a.mean_accuracy_before:>12.2f} {after:>16} "
            f"{100 * a.mean_delta:>+9.2f} {a.mean_alpha:>11.4f}"
        )
    return "\n".join(lines) + "\n"


def write_sweep(sweep: SweepReport, outdir: str | Path) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "sweep.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write(
            "source,method,validation_size,mean_accuracy_after,"
            "std_accuracy_after,mean_alpha,std_alpha\n"
        )
        for p in sweep.points:
            fh.write(
                f"{p.source},{p.method},{p.validation_size},"
                f"{p.mean_accuracy_after!r},{p.std_accuracy_after!r},"
                f"{p.mean_alpha!r},{p.std_alpha!r}\n"
            )
    lines = [
        f"{'source':<20} {'method':<18} {'size':>6} {'acc %':>14} {'std(alpha)':>11}"
    ]
    for p in sweep.points:
        acc = f"{100 * p.mean_accuracy_after:.2f} +/- {100 * p.std_accuracy_after:.2f}"
        lines.append(
            f"{p.source:<20} {p.method:<18} {p.validation_size:>6} "
            f"{acc:>14} {p.std_alpha:>11.4f}"
        )
    (outdir / "sweep.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return outdir


def write_comparison(comparison: ComparisonReport, outdir: str | Path) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "comparison.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write(
            "source,method,validation_size,mean_test_accuracy,"
            "std_test_accuracy,mean_validation_accuracy,"
            "std_validation_accuracy\n"
        )
        for c in comparison.cells:
            fh.write(
                f"{c.source},{c.method},{c.validation_size},"
                f"{c.mean_test_accuracy!r},{c.std_test_accuracy!r},"
                f"{c.mean_validation_accuracy!r},{c.std_validation_accuracy!r}\n"
            )
    lines = [
        f"{'source':<20} {'method':<18} {'size':>6} "
        f"{'test acc %':>16} {'val acc %':>16}"
    ]
    for c in comparison.cells:
        test = f"{100 * c.mean_test_accuracy:.2f} +/- {100 * c.std_test_accuracy:.2f}"
        val = (
            f"{100 * c.mean_validation_accuracy:.2f} +/- "
            f"{100 * c.std_validation_accuracy:.2f}"
        )
        lines.append(
            f"{c.source:<20} {c.method:<18} {c.validation_size:>6} "
            f"{test:>16} {val:>16}"
        )
    (outdir / "comparison.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return outdir
