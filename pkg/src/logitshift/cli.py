"""Command line interface.

Subcommands
-----------
calibrate   fit one method on one dataset and print alpha as JSON
evaluate    run the full multi-seed experiment protocol
simulate    sample a synthetic shift world and export it as logit CSV
sweep       repeat an experiment over several validation sizes
compare     compare supervised estimation methods (with the sweep oracle)
plot        re-render figures and tables from a persisted report

Options can come from a declarative ``key = value`` config file
(``--config``); explicit flags always win.  Exit codes: 0 success,
2 configuration error, 3 data error, 4 degenerate input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import baselines
from .data import infer_format, parse_dataset, split_by_label, subsample_validation, write_dataset
from .errors import ConfigError, DataFormatError, DegenerateDataError
from .harness import (
    METHODS,
    ExperimentConfig,
    method_comparison,
    run_experiment,
    validation_size_sweep,
    write_comparison,
    write_sweep,
)
from .kde import KdeConfig, estimate_density
from .simulate import SCENARIOS, derive_quantities, resolve_scenario, sample_world
from .supervised import fit_class_densities, optimize_alpha
from .unsupervised import solve_alpha_closed_form

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DEGENERATE = 4


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of integers: {text!r}")


def _parse_method_list(text: str) -> tuple[str, ...]:
    methods = tuple(part.strip() for part in text.split(",") if part.strip())
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r}, expected one of {METHODS}")
    return methods


def read_config_file(path: str | Path) -> dict[str, str]:
    """Read a flat ``key = value`` config file (comments start with #)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"no such config file: {path}")
    values: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}, line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


_CONFIG_KEYS = {
    "input",
    "methods",
    "validation_size",
    "seeds",
    "output_dir",
    "input_format",
    "stratified",
    "n_test",
    "bandwidth_rule",
    "fixed_bandwidth",
    "grid_size",
    "grid_pad",
    "bandwidth_floor",
    "offset_steps",
    "offset_step_size",
    "offset_init_rule",
    "version",
}


def build_experiment_config(args) -> ExperimentConfig:
    """Merge config-file values and CLI flags into an ExperimentConfig."""
    raw: dict[str, str] = {}
    if getattr(args, "config", None):
        raw = read_config_file(args.config)
        unknown = set(raw) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    def pick(flag_value, key: str, default):
        if flag_value is not None:
            return flag_value
        if key in raw:
            return raw[key]
        return default

    input_value = pick(getattr(args, "input", None), "input", None)
    if input_value is None:
        raise ConfigError("an input dataset, scenario or spec file is required")

    methods = pick(getattr(args, "method", None), "methods", "kde_supervised")
    if isinstance(methods, str):
        methods = _parse_method_list(methods)

    seeds = pick(getattr(args, "seed", None), "seeds", tuple(range(10)))
    if isinstance(seeds, str):
        seeds = _parse_int_list(seeds)

    stratified = pick(getattr(args, "stratified", None), "stratified", None)
    if isinstance(stratified, str):
        stratified = stratified.lower() in ("1", "true", "yes")

    rule = pick(getattr(args, "bandwidth_rule", None), "bandwidth_rule", "silverman")
    fixed = pick(getattr(args, "bandwidth", None), "fixed_bandwidth", None)
    kde = KdeConfig(
        bandwidth_rule=rule,
        fixed_bandwidth=None if fixed in (None, "") else float(fixed),
        grid_size=int(pick(None, "grid_size", 512)),
        grid_pad=float(pick(None, "grid_pad", 3.0)),
        bandwidth_floor=float(pick(None, "bandwidth_floor", 1e-6)),
    )
    offset = baselines.OffsetTrainingConfig(
        steps=int(pick(None, "offset_steps", 1000)),
        initial_step_size=float(pick(None, "offset_step_size", 0.05)),
        init_rule=str(pick(None, "offset_init_rule", "class_midpoint")),
    )
    return ExperimentConfig(
        input=str(input_value),
        methods=tuple(methods),
        validation_size=int(
            pick(getattr(args, "validation_size", None), "validation_size", 100)
        ),
        seeds=tuple(seeds),
        kde=kde,
        offset=offset,
        output_dir=pick(getattr(args, "out", None), "output_dir", None),
        input_format=pick(getattr(args, "format", None), "input_format", None),
        stratified=stratified,
        n_test=int(pick(getattr(args, "n_test", None), "n_test", 10_000)),
    )


def _require_out(config: ExperimentConfig) -> Path:
    if not config.output_dir:
        raise ConfigError("--out (or output_dir in the config file) is required")
    return Path(config.output_dir)


def cmd_calibrate(args) -> int:
    fmt = args.format or infer_format(args.input)
    ds = parse_dataset(args.input, fmt)
    if args.validation_size is not None:
        stratified = args.method != "kde_unsupervised"
        ds, _ = subsample_validation(ds, args.validation_size, args.seed, stratified)

    if args.method == "kde_supervised":
        split = split_by_label(ds)
        if len(split.reals) == 0 or len(split.fakes) == 0:
            raise DegenerateDataError(
                "supervised calibration needs both classes; "
                "fall back to kde_unsupervised"
            )
        kde = KdeConfig(
            bandwidth_rule=args.bandwidth_rule,
            fixed_bandwidth=args.bandwidth,
        )
        result = optimize_alpha(
            *fit_class_densities(split.reals, split.fakes, kde)
        ).as_dict()
    elif args.method == "kde_unsupervised":
        kde = KdeConfig(
            bandwidth_rule=args.bandwidth_rule,
            fixed_bandwidth=args.bandwidth,
        )
        result = solve_alpha_closed_form(estimate_density(ds.logits, kde)).as_dict()
    elif args.method == "binary_search":
        result = baselines.binary_search_threshold(split_by_label(ds)).as_dict()
    elif args.method == "offset_training":
        result = baselines.train_offset(split_by_label(ds), seed=args.seed).as_dict()
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown method {args.method!r}")

    text = json.dumps(result, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    config = build_experiment_config(args)
    outdir = _require_out(config)
    report = run_experiment(config)
    from .harness import load_sources
    from .plots import emit_plots

    emit_plots(report, load_sources(config), outdir, config.kde)
    print(f"report written to {outdir}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = resolve_scenario(args.scenario)
    if args.seed is not None:
        from dataclasses import replace

        spec = replace(spec, seed=args.seed)
    world = sample_world(spec, n_train=args.n_train, n_test=args.n_test)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    write_dataset(world.train, outdir / "train.csv", "csv")
    write_dataset(world.test, outdir / "test.csv", "csv")
    derived = derive_quantities(spec)
    payload = {
        "scenario": args.scenario,
        "seed": spec.seed,
        "n_train": args.n_train,
        "n_test": args.n_test,
        "log_prior_ratio": derived.log_prior_ratio,
        "log_odds_shift": derived.log_odds_shift,
        "bayes_threshold": derived.bayes_threshold,
        "optimal_alpha": derived.optimal_alpha,
    }
    (outdir / "derived.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"world written to {outdir}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = build_experiment_config(args)
    outdir = _require_out(config)
    sizes = _parse_int_list(args.sizes)
    sweep = validation_size_sweep(config, sizes)
    write_sweep(sweep, outdir)
    from .plots import render_sweep_figure

    render_sweep_figure(sweep, outdir)
    print(f"sweep written to {outdir}")
    return EXIT_OK


def cmd_compare(args) -> int:
    config = build_experiment_config(args)
    outdir = _require_out(config)
    sizes = _parse_int_list(args.sizes)
    comparison = method_comparison(config, sizes)
    write_comparison(comparison, outdir)
    from .plots import render_comparison_figure

    render_comparison_figure(comparison, outdir)
    print(f"comparison written to {outdir}")
    return EXIT_OK


def cmd_plot(args) -> int:
    report_dir = Path(args.report_dir)
    config_path = report_dir / "config.json"
    if not config_path.is_file():
        raise DataFormatError(f"no config.json found in {report_dir}")
    config = ExperimentConfig.from_dict(
        json.loads(config_path.read_text(encoding="utf-8"))
    )
    report = run_experiment(config)
    from .harness import load_sources
    from .plots import emit_plots

    outdir = Path(args.out) if args.out else report_dir
    emit_plots(report, load_sources(config), outdir, config.kde)
    print(f"figures re-rendered into {outdir}")
    return EXIT_OK


def _add_experiment_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="key = value config file")
    sub.add_argument("--input", help="dataset file, scenario name or .spec file")
    sub.add_argument(
        "--method",
        help=f"comma-separated subset of {', '.join(METHODS)}",
    )
    sub.add_argument("--validation-size", type=int, dest="validation_size")
    sub.add_argument(
        "--seed",
        help="comma-separated list of experiment seeds (e.g. 0,1,2)",
    )
    sub.add_argument("--out", help="output directory for the report")
    sub.add_argument("--format", choices=("csv", "jsonl"), help="input format")
    sub.add_argument("--n-test", type=int, dest="n_test", help="scenario pool size")
    sub.add_argument(
        "--stratified",
        choices=("true", "false"),
        help="force stratified or uniform validation subsampling",
    )
    sub.add_argument(
        "--bandwidth-rule",
        choices=("silverman", "scott", "fixed"),
        dest="bandwidth_rule",
    )
    sub.add_argument(
        "--bandwidth", type=float, help="bandwidth value for --bandwidth-rule fixed"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="logitshift",
        description="Post-hoc additive logit calibration under distribution shift",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="fit one method on one dataset")
    p.add_argument("input", help="logit dataset file")
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--validation-size",
        type=int,
        dest="validation_size",
        help="fit on a subsample of this size instead of the whole file",
    )
    p.add_argument("--format", choices=("csv", "jsonl"))
    p.add_argument(
        "--bandwidth-rule",
        choices=("silverman", "scott", "fixed"),
        dest="bandwidth_rule",
        default="silverman",
    )
    p.add_argument("--bandwidth", type=float)
    p.add_argument("--out", help="also write the JSON result to this file")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("evaluate", help="run the multi-seed experiment protocol")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="sample a synthetic shift world")
    p.add_argument(
        "scenario",
        help=f"catalog scenario ({', '.join(sorted(SCENARIOS))}) or .spec file",
    )
    p.add_argument("--n-train", type=int, default=2000, dest="n_train")
    p.add_argument("--n-test", type=int, default=10_000, dest="n_test")
    p.add_argument("--seed", type=int, help="override the spec seed")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="validation-size sweep")
    _add_experiment_flags(p)
    p.add_argument("--sizes", default="10,100,1000", help="comma-separated sizes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="compare supervised estimation methods")
    _add_experiment_flags(p)
    p.add_argument("--sizes", default="4,10,100", help="comma-separated sizes")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("plot", help="re-render figures from a persisted report")
    p.add_argument("report_dir", help="directory written by 'evaluate'")
    p.add_argument("--out", help="target directory (default: the report dir)")
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataFormatError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DegenerateDataError as exc:
        print(f"degenerate input: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
