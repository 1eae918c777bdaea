"""Synthetic logit worlds with analytic Bayes-optimal thresholds.

A world is a pair of labeled logit datasets (train and test) drawn from a
two-component Gaussian model:

* real logits ~ N(mu_real, sigma_real) in both domains (the real class is
  stable across train and test);
* fake logits ~ N(mu_fake_train, sigma_fake) at train time and
  N(mu_fake_train - conditional_shift, sigma_fake) at test time, modeling a
  systematic drift of fake scores toward the real class;
* the fake-class prior may also differ between train and test.

Because everything is Gaussian, the accuracy-optimal decision threshold on
the test mixture has a closed form: the point where the prior-weighted
class-conditional densities are equal.  That threshold is the ground truth
every calibrator in this package is measured against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .baselines import accuracy
from .data import ClassSplit, LogitDataset, LogitRecord, split_by_label
from .errors import ConfigError, DataFormatError, DegenerateDataError


@dataclass(frozen=True)
class ShiftSpec:
    """Parametric description of a train/test logit world."""

    mu_real: float = -2.0
    sigma_real: float = 1.0
    mu_fake_train: float = 2.0
    sigma_fake: float = 1.0
    conditional_shift: float = 0.0
    pi_train_fake: float = 0.5
    pi_test_fake: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.sigma_real <= 0 or self.sigma_fake <= 0:
            raise ConfigError("sigmas must be positive")
        for name in ("pi_train_fake", "pi_test_fake"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ConfigError(f"{name} must lie strictly inside (0, 1)")

    @property
    def mu_fake_test(self) -> float:
        return self.mu_fake_train - self.conditional_shift


@dataclass(frozen=True)
class DerivedShiftQuantities:
    """Analytic consequences of a spec.

    ``log_prior_ratio``  log(pi_test / pi_train) for the fake class.
    ``log_odds_shift``   difference of the fake-class log odds between test
                         and train; zero iff the priors coincide.
    ``bayes_threshold``  logit value where the prior-weighted test densities
                         are equal; thresholding there minimizes expected
                         0-1 error on the test mixture.
    ``optimal_alpha``    the additive correction that makes ``z - alpha > 0``
                         Bayes-optimal, identical to ``bayes_threshold``.
    """

    log_prior_ratio: float
    log_odds_shift: float
    bayes_threshold: float
    optimal_alpha: float


def _log_odds(p: float) -> float:
    return math.log(p / (1.0 - p))


def derive_quantities(spec: ShiftSpec) -> DerivedShiftQuantities:
    """Closed-form Bayes threshold and prior-shift constants for a spec.

    For equal variances s the threshold is

        (mu_real + mu_fake_test) / 2
          + s^2 * log((1 - pi_test) / pi_test) / (mu_fake_test - mu_real)

    For unequal variances the prior-weighted density equality is quadratic
    in z; the root between the two class means is returned, and specs with
    no such root are rejected as degenerate.
    """
    log_prior_ratio = math.log(spec.pi_test_fake / spec.pi_train_fake)
    log_odds_shift = _log_odds(spec.pi_test_fake) - _log_odds(spec.pi_train_fake)

    mu0, s0 = spec.mu_real, spec.sigma_real
    mu1, s1 = spec.mu_fake_test, spec.sigma_fake
    pi = spec.pi_test_fake
    prior_term = math.log((1.0 - pi) / pi)

    if math.isclose(s0, s1, rel_tol=1e-12, abs_tol=0.0):
        if mu1 == mu0:
            raise DegenerateDataError(
                "equal-variance classes with coinciding means have no "
                "decision threshold"
            )
        threshold = 0.5 * (mu0 + mu1) + s0 * s0 * prior_term / (mu1 - mu0)
    else:
        # pi * N(z; mu1, s1) = (1 - pi) * N(z; mu0, s0), quadratic in z
        a = 0.5 / (s0 * s0) - 0.5 / (s1 * s1)
        b = mu1 / (s1 * s1) - mu0 / (s0 * s0)
        c = (
            0.5 * mu0 * mu0 / (s0 * s0)
            - 0.5 * mu1 * mu1 / (s1 * s1)
            - prior_term
            + math.log(s0 / s1)
        )
        disc = b * b - 4.0 * a * c
        if disc < 0:
            raise DegenerateDataError(
                "prior-weighted densities never cross; no threshold exists"
            )
        roots = ((-b + math.sqrt(disc)) / (2 * a), (-b - math.sqrt(disc)) / (2 * a))
        lo, hi = min(mu0, mu1), max(mu0, mu1)
        between = [r for r in roots if lo <= r <= hi]
        if not between:
            raise DegenerateDataError(
                "no decision boundary lies between the class means; "
                "rejecting the spec as degenerate"
            )
        threshold = between[0]

    return DerivedShiftQuantities(
        log_prior_ratio=log_prior_ratio,
        log_odds_shift=log_odds_shift,
        bayes_threshold=threshold,
        optimal_alpha=threshold,
    )


@dataclass(frozen=True)
class SyntheticWorld:
    train: LogitDataset
    test: LogitDataset
    spec: ShiftSpec
    derived: DerivedShiftQuantities

    @property
    def test_split(self) -> ClassSplit:
        return split_by_label(self.test)


def _sample_domain(
    rng: np.random.Generator,
    n: int,
    pi_fake: float,
    mu_real: float,
    sigma_real: float,
    mu_fake: float,
    sigma_fake: float,
    tag: str,
) -> LogitDataset:
    is_fake = rng.random(n) < pi_fake
    noise = rng.standard_normal(n)
    logits = np.where(
        is_fake, mu_fake + sigma_fake * noise, mu_real + sigma_real * noise
    )
    records = tuple(
        LogitRecord(
            logit=float(logits[i]),
            label=int(is_fake[i]),
            source=tag,
            id=f"{tag}-{i:06d}",
        )
        for i in range(n)
    )
    return LogitDataset(records, provenance=f"simulated:{tag}")


def sample_world(spec: ShiftSpec, n_train: int, n_test: int) -> SyntheticWorld:
    """Draw a labeled train/test world from the spec, deterministically.

    Train and test use independent generator streams derived from the spec
    seed, so the test draw does not depend on ``n_train``.
    """
    if n_train < 2 or n_test < 2:
        raise ConfigError("n_train and n_test must both be >= 2")
    derived = derive_quantities(spec)
    rng_train = np.random.default_rng([spec.seed, 0])
    rng_test = np.random.default_rng([spec.seed, 1])
    train = _sample_domain(
        rng_train,
        n_train,
        spec.pi_train_fake,
        spec.mu_real,
        spec.sigma_real,
        spec.mu_fake_train,
        spec.sigma_fake,
        "train",
    )
    test = _sample_domain(
        rng_test,
        n_test,
        spec.pi_test_fake,
        spec.mu_real,
        spec.sigma_real,
        spec.mu_fake_test,
        spec.sigma_fake,
        "test",
    )
    return SyntheticWorld(train=train, test=test, spec=spec, derived=derived)


def default_threshold_accuracy(world: SyntheticWorld) -> tuple[float, float]:
    """Test accuracy at the default threshold 0 and at the analytic Bayes
    threshold.  The gap is the measurable cost of leaving the decision
    boundary uncorrected under shift."""
    split = world.test_split
    return (
        accuracy(split, 0.0),
        accuracy(split, world.derived.bayes_threshold),
    )


# One catalog entry per shift type: a control without shift, a pure
# class-conditional drift, and a drift combined with a fake-prior change.
# Test-time class separation is kept at four sigma so threshold-recovery
# contracts have headroom, and the joint scenario's prior shift is mild:
# the supervised risk weights both classes equally, so its minimizer tracks
# the balanced threshold and a large prior imbalance would open an
# irreducible gap to the Bayes point.
SCENARIOS: dict[str, ShiftSpec] = {
    "no-shift": ShiftSpec(seed=0),
    "conditional-shift": ShiftSpec(
        mu_real=-3.0, mu_fake_train=3.0, conditional_shift=2.0, seed=0
    ),
    "joint-shift": ShiftSpec(
        mu_real=-3.0,
        mu_fake_train=3.0,
        conditional_shift=2.0,
        pi_test_fake=0.54,
        seed=0,
    ),
}

_SPEC_FILE_VERSION = 1


def save_shift_spec(spec: ShiftSpec, path: str | Path) -> None:
    """Write a spec as a versioned, declarative key = value file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"version = {_SPEC_FILE_VERSION}"]
    for name in (
        "mu_real",
        "sigma_real",
        "mu_fake_train",
        "sigma_fake",
        "conditional_shift",
        "pi_train_fake",
        "pi_test_fake",
        "seed",
    ):
        lines.append(f"{name} = {getattr(spec, name)!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_shift_spec(path: str | Path) -> ShiftSpec:
    """Read a key = value spec file written by :func:`save_shift_spec`."""
    path = Path(path)
    if not path.is_file():
        raise DataFormatError(f"no such spec file: {path}")
    values: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataFormatError(f"{path}, line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    version = values.pop("version", str(_SPEC_FILE_VERSION))
    if version != str(_SPEC_FILE_VERSION):
        raise DataFormatError(f"{path}: unsupported spec version {version}")
    spec = ShiftSpec()
    floats = {
        "mu_real",
        "sigma_real",
        "mu_fake_train",
        "sigma_fake",
        "conditional_shift",
        "pi_train_fake",
        "pi_test_fake",
    }
    for key, value in values.items():
        if key in floats:
            spec = replace(spec, **{key: float(value)})
        elif key == "seed":
            spec = replace(spec, seed=int(value))
        else:
            raise DataFormatError(f"{path}: unknown spec key {key!r}")
    return spec


def resolve_scenario(name_or_path: str) -> ShiftSpec:
    """Look up a catalog scenario by name, or load a spec file."""
    if name_or_path in SCENARIOS:
        return SCENARIOS[name_or_path]
    if Path(name_or_path).is_file():
        return load_shift_spec(name_or_path)
    raise ConfigError(
        f"{name_or_path!r} is neither a catalog scenario "
        f"({', '.join(sorted(SCENARIOS))}) nor a spec file"
    )
