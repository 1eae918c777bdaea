"""Post-hoc additive logit calibration for binary detectors under shift.

The package computes a scalar correction ``alpha`` such that the decision
rule ``logit - alpha > 0`` realigns with a shifted test distribution, with
supervised (class-conditional KDE risk) and unsupervised (moment balancing)
estimators, two reference baselines, a synthetic shift simulator with
analytic ground truth, and a seeded evaluation harness.
"""

from .baselines import (
    BaselineResult,
    OffsetTrainingConfig,
    accuracy,
    bce_grad,
    bce_loss,
    binary_search_threshold,
    exhaustive_threshold_sweep,
    train_offset,
)
from .data import (
    ClassSplit,
    LogitDataset,
    LogitRecord,
    median_by_class,
    parse_dataset,
    split_by_label,
    subsample_validation,
    write_dataset,
)
from .errors import (
    ConfigError,
    DataFormatError,
    DegenerateDataError,
    LogitShiftError,
)
from .harness import (
    EvalReport,
    ExperimentConfig,
    method_comparison,
    run_experiment,
    validation_size_sweep,
)
from .kde import (
    DensityEstimate,
    KdeConfig,
    density_mean,
    estimate_density,
    mass_below,
    select_bandwidth,
)
from .simulate import (
    SCENARIOS,
    DerivedShiftQuantities,
    ShiftSpec,
    SyntheticWorld,
    default_threshold_accuracy,
    derive_quantities,
    sample_world,
)
from .supervised import (
    SupervisedResult,
    fit_class_densities,
    grid_search_alpha,
    optimize_alpha,
    risk,
)
from .unsupervised import (
    UnsupervisedResult,
    confidence_weighted_alpha,
    moment_imbalance,
    solve_alpha_closed_form,
    solve_alpha_root_find,
)

__version__ = "0.1.0"

__all__ = [
    "BaselineResult",
    "ClassSplit",
    "ConfigError",
    "DataFormatError",
    "DegenerateDataError",
    "DensityEstimate",
    "DerivedShiftQuantities",
    "EvalReport",
    "ExperimentConfig",
    "KdeConfig",
    "LogitDataset",
    "LogitRecord",
    "LogitShiftError",
    "OffsetTrainingConfig",
    "SCENARIOS",
    "ShiftSpec",
    "SupervisedResult",
    "SyntheticWorld",
    "UnsupervisedResult",
    "accuracy",
    "bce_grad",
    "bce_loss",
    "binary_search_threshold",
    "confidence_weighted_alpha",
    "default_threshold_accuracy",
    "density_mean",
    "derive_quantities",
    "estimate_density",
    "exhaustive_threshold_sweep",
    "fit_class_densities",
    "grid_search_alpha",
    "mass_below",
    "median_by_class",
    "method_comparison",
    "moment_imbalance",
    "optimize_alpha",
    "parse_dataset",
    "risk",
    "run_experiment",
    "sample_world",
    "select_bandwidth",
    "solve_alpha_closed_form",
    "solve_alpha_root_find",
    "split_by_label",
    "subsample_validation",
    "train_offset",
    "validation_size_sweep",
    "write_dataset",
]
