"""Experiment orchestration: protocol, aggregation, persistence, sweeps."""

import csv
import json
from dataclasses import replace

import numpy as np
import pytest

from logitshift.data import LogitDataset, LogitRecord, write_dataset
from logitshift.errors import ConfigError, DegenerateDataError
from logitshift.harness import (
    ORACLE_METHOD,
    ExperimentConfig,
    fit_alpha,
    method_comparison,
    run_experiment,
    validation_size_sweep,
    write_comparison,
    write_report,
    write_sweep,
)
from logitshift.kde import KdeConfig
from logitshift.baselines import OffsetTrainingConfig
from logitshift.simulate import ShiftSpec, save_shift_spec

ALL_METHODS = ("kde_supervised", "kde_unsupervised", "binary_search", "offset_training")


def scenario_config(**kwargs):
    defaults = dict(
        input="no-shift",
        methods=("kde_supervised",),
        validation_size=100,
        seeds=tuple(range(5)),
        n_test=2000,
    )
    defaults.update(kwargs)
    return ExperimentConfig(**defaults)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ConfigError):
            scenario_config(methods=())
        with pytest.raises(ConfigError):
            scenario_config(methods=("nearest_neighbour",))
        with pytest.raises(ConfigError):
            scenario_config(seeds=())
        with pytest.raises(ConfigError):
            scenario_config(validation_size=0)

    def test_stratified_resolution(self):
        assert scenario_config(methods=("kde_supervised",)).stratified_resolved
        assert not scenario_config(methods=("kde_unsupervised",)).stratified_resolved
        assert scenario_config(
            methods=("kde_unsupervised",), stratified=True
        ).stratified_resolved

    def test_dict_round_trip(self):
        cfg = scenario_config(
            methods=ALL_METHODS,
            kde=KdeConfig(bandwidth_rule="scott", grid_size=256),
            offset=OffsetTrainingConfig(steps=500),
            output_dir="/tmp/x",
            stratified=False,
        )
        assert ExperimentConfig.from_dict(cfg.as_dict()) == cfg


class TestRunExperiment:
    def test_row_shape(self):
        report = run_experiment(scenario_config(methods=ALL_METHODS))
        assert len(report.rows) == 5 * len(ALL_METHODS)
        for row in report.rows:
            assert 0.0 <= row.accuracy_before <= 1.0
            assert 0.0 <= row.accuracy_after <= 1.0
            assert row.leakage_free
            assert row.validation_size == 100
            assert row.n_eval == 2000 - 100

    def test_no_shift_is_harmless(self):
        report = run_experiment(
            scenario_config(methods=ALL_METHODS, seeds=tuple(range(10)), n_test=4000)
        )
        for agg in report.aggregates():
            assert abs(agg.mean_delta) <= 0.02, agg.method

    def test_joint_shift_gain(self):
        report = run_experiment(
            scenario_config(input="joint-shift", seeds=tuple(range(10)), n_test=4000)
        )
        agg = report.aggregates()[0]
        assert agg.mean_delta > 0.05

    def test_determinism(self):
        cfg = scenario_config(methods=ALL_METHODS, seeds=(0, 1))
        assert run_experiment(cfg).rows == run_experiment(cfg).rows

    def test_aggregation_recomputable(self):
        report = run_experiment(scenario_config(methods=("kde_unsupervised",)))
        agg = report.aggregates()[0]
        after = np.array([r.accuracy_after for r in report.rows])
        assert abs(agg.mean_accuracy_after - after.mean()) < 1e-12
        assert abs(agg.std_accuracy_after - after.std(ddof=1)) < 1e-12

    def test_file_input_evaluates_per_source(self, tmp_path):
        rng = np.random.default_rng(0)
        records = []
        for src, shift in (("genA", 0.0), ("genB", 1.0)):
            for i in range(300):
                label = i % 2
                z = rng.normal(2 if label else -2, 1) - shift * label
                records.append(LogitRecord(float(z), label, src, f"{src}-{i}"))
        path = tmp_path / "two_sources.csv"
        write_dataset(LogitDataset(tuple(records)), path)
        report = run_experiment(
            scenario_config(input=str(path), validation_size=50, seeds=(0, 1))
        )
        assert {r.source for r in report.rows} == {"genA", "genB"}

    def test_validation_size_too_big(self):
        with pytest.raises(ConfigError):
            run_experiment(scenario_config(validation_size=2001))

    def test_unlabeled_input_rejected(self, tmp_path):
        records = tuple(
            LogitRecord(float(i), None, "s", str(i)) for i in range(50)
        )
        path = tmp_path / "unlabeled.csv"
        write_dataset(LogitDataset(records), path)
        with pytest.raises(DegenerateDataError):
            run_experiment(
                scenario_config(
                    input=str(path), methods=("kde_unsupervised",), validation_size=10
                )
            )

    def test_spec_file_input(self, tmp_path):
        path = tmp_path / "custom.spec"
        save_shift_spec(ShiftSpec(conditional_shift=1.0, seed=3), path)
        report = run_experiment(scenario_config(input=str(path), seeds=(0,)))
        assert {r.source for r in report.rows} == {"custom"}


class TestFitAlpha:
    def test_single_class_validation_rejected(self):
        records = tuple(LogitRecord(float(i), 0, "s") for i in range(10))
        ds = LogitDataset(records)
        with pytest.raises(DegenerateDataError):
            fit_alpha(
                "kde_supervised", ds, KdeConfig(), OffsetTrainingConfig(), seed=0
            )

    def test_unsupervised_ignores_labels(self):
        rng = np.random.default_rng(1)
        records = tuple(
            LogitRecord(float(rng.normal()), None, "s") for _ in range(60)
        )
        ds = LogitDataset(records)
        alpha = fit_alpha(
            "kde_unsupervised", ds, KdeConfig(), OffsetTrainingConfig(), seed=0
        )
        assert abs(alpha) < 1.0


class TestSweep:
    def test_alpha_spread_shrinks_with_size(self):
        cfg = scenario_config(
            input="conditional-shift", seeds=tuple(range(10)), n_test=12_000
        )
        sweep = validation_size_sweep(cfg, (10, 1000))
        by = {p.validation_size: p for p in sweep.points}
        assert by[1000].std_alpha < by[10].std_alpha

    def test_full_pool_size_gives_zero_spread(self):
        cfg = scenario_config(n_test=400, seeds=(0, 1, 2))
        sweep = validation_size_sweep(cfg, (400,))
        point = sweep.points[0]
        assert point.std_alpha == 0.0

    def test_small_stratified_size_runs(self):
        sweep = validation_size_sweep(scenario_config(seeds=(0,)), (10,))
        assert sweep.points[0].validation_size == 10

    def test_empty_sizes_rejected(self):
        with pytest.raises(ConfigError):
            validation_size_sweep(scenario_config(), ())


class TestComparison:
    def test_separable_data_everyone_wins(self):
        spec = ShiftSpec(mu_real=-6.0, mu_fake_train=6.0, seed=0)
        cfg = scenario_config(
            methods=("kde_supervised", "binary_search", "offset_training"),
            seeds=tuple(range(5)),
        )
        import tempfile
        from pathlib import Path

        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "wide.spec"
            save_shift_spec(spec, path)
            comp = method_comparison(replace(cfg, input=str(path)), (100,))
        for cell in comp.cells:
            if cell.method == ORACLE_METHOD:
                # smallest-tie alpha sits on the class boundary; its
                # guarantee is on the validation set
                assert cell.mean_validation_accuracy == pytest.approx(1.0, abs=1e-9)
            else:
                assert cell.mean_test_accuracy == pytest.approx(1.0, abs=0.01)

    def test_oracle_dominates_on_validation(self):
        cfg = scenario_config(
            input="conditional-shift",
            methods=("kde_supervised", "binary_search", "offset_training"),
            seeds=tuple(range(5)),
            n_test=2000,
        )
        comp = method_comparison(cfg, (4, 10, 100))
        for size in (4, 10, 100):
            cells = {
                c.method: c for c in comp.cells if c.validation_size == size
            }
            oracle = cells[ORACLE_METHOD].mean_validation_accuracy
            for method, cell in cells.items():
                assert oracle >= cell.mean_validation_accuracy - 1e-9, method

    def test_needs_two_methods(self):
        with pytest.raises(ConfigError):
            method_comparison(scenario_config(), (10,))


class TestPersistence:
    def test_report_files_byte_identical_across_runs(self, tmp_path):
        cfg = scenario_config(methods=ALL_METHODS, seeds=(0, 1, 2))
        out1, out2 = tmp_path / "a", tmp_path / "b"
        write_report(run_experiment(cfg), out1)
        write_report(run_experiment(cfg), out2)
        for name in ("per_seed.csv", "summary.csv", "summary.txt", "config.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_per_seed_rows_reproduce_aggregate(self, tmp_path):
        cfg = scenario_config(methods=("kde_supervised",), seeds=tuple(range(6)))
        report = run_experiment(cfg)
        write_report(report, tmp_path)
        with open(tmp_path / "per_seed.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        after = np.array([float(r["accuracy_after"]) for r in rows])
        agg = report.aggregates()[0]
        assert abs(after.mean() - agg.mean_accuracy_after) < 1e-12
        assert abs(after.std(ddof=1) - agg.std_accuracy_after) < 1e-12

    def test_summary_formats_percentages(self, tmp_path):
        report = run_experiment(scenario_config(seeds=(0,)))
        write_report(report, tmp_path)
        text = (tmp_path / "summary.txt").read_text()
        assert "+/-" in text and "no-shift" in text

    def test_sweep_and_comparison_files(self, tmp_path):
        cfg = scenario_config(
            methods=("kde_supervised", "binary_search"), seeds=(0, 1)
        )
        write_sweep(validation_size_sweep(cfg, (10, 50)), tmp_path)
        assert (tmp_path / "sweep.csv").is_file()
        assert (tmp_path / "sweep.txt").is_file()
        write_comparison(method_comparison(cfg, (10,)), tmp_path)
        assert (tmp_path / "comparison.csv").is_file()
        header = (tmp_path / "sweep.csv").read_text().splitlines()[0]
        assert header.split(",") == [
            "source",
            "method",
            "validation_size",
            "mean_accuracy_after",
            "std_accuracy_after",
            "mean_alpha",
            "std_alpha",
        ]
