"""Gaussian kernel density estimation over 1-D logits.

This is the shared numerical engine for both calibrators: a density is
evaluated on a uniform grid spanning the sample range plus a bandwidth
multiple of padding, and downstream quantities (tail masses, the center of
mass) are read off that grid.

The kernel is fixed to Gaussian.  Bandwidth selection defaults to
Silverman's rule with the usual IQR guard:

    h = max(floor, 0.9 * min(sigma, IQR / 1.34) * n^(-1/5))

Scott's rule (1.06 * sigma * n^(-1/5)) and a fixed bandwidth are available
through :class:`KdeConfig`.  A bandwidth floor keeps constant samples from
collapsing the kernel width to zero.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataFormatError, DegenerateDataError

_SQRT_2PI = float(np.sqrt(2.0 * np.pi))

BANDWIDTH_RULES = ("silverman", "scott", "fixed")


@dataclass(frozen=True)
class KdeConfig:
    bandwidth_rule: str = "silverman"
    fixed_bandwidth: float | None = None
    grid_size: int = 512
    grid_pad: float = 3.0  # in units of the bandwidth
    bandwidth_floor: float = 1e-6

    def __post_init__(self):
        if self.bandwidth_rule not in BANDWIDTH_RULES:
            raise ConfigError(
                f"unknown bandwidth rule {self.bandwidth_rule!r}, "
                f"expected one of {BANDWIDTH_RULES}"
            )
        if self.bandwidth_rule == "fixed":
            if self.fixed_bandwidth is None or self.fixed_bandwidth <= 0:
                raise ConfigError("fixed bandwidth must be a positive number")
        if self.grid_size < 16:
            raise ConfigError(f"grid_size must be >= 16, got {self.grid_size}")
        if self.grid_pad < 0:
            raise ConfigError(f"grid_pad must be >= 0, got {self.grid_pad}")
        if self.bandwidth_floor <= 0:
            raise ConfigError("bandwidth_floor must be positive")


@dataclass(eq=False)
class DensityEstimate:
    """A KDE evaluated on a fixed, strictly increasing uniform grid."""

    grid: np.ndarray
    density: np.ndarray
    bandwidth: float
    sample_count: int

    def __post_init__(self):
        self.grid.setflags(write=False)
        self.density.setflags(write=False)

    @property
    def span(self) -> float:
        return float(self.grid[-1] - self.grid[0])

    @property
    def spacing(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @cached_property
    def _cumulative(self) -> np.ndarray:
        # cumulative trapezoidal integral from the grid start to each node
        steps = np.diff(self.grid) * 0.5 * (self.density[1:] + self.density[:-1])
        cum = np.concatenate([[0.0], np.cumsum(steps)])
        cum.setflags(write=False)
        return cum

    @property
    def total_mass(self) -> float:
        return float(self._cumulative[-1])

    def to_csv(self, path: str | Path) -> None:
        """Export as two-column CSV (z, p) for plotting."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["z", "p"])
            for z, p in zip(self.grid, self.density):
                writer.writerow([repr(float(z)), repr(float(p))])


def select_bandwidth(samples, config: KdeConfig = KdeConfig()) -> float:
    """Bandwidth for the given samples under the configured rule."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise DegenerateDataError("cannot select a bandwidth for empty samples")
    if config.bandwidth_rule == "fixed":
        return float(config.fixed_bandwidth)
    n = x.size
    std = float(np.std(x, ddof=1)) if n > 1 else 0.0
    if config.bandwidth_rule == "scott":
        raw = 1.06 * std * n ** (-0.2)
    else:  # silverman
        q75, q25 = np.percentile(x, [75, 25])
        iqr = float(q75 - q25)
        raw = 0.9 * min(std, iqr / 1.34) * n ** (-0.2)
    return max(config.bandwidth_floor, raw)


def estimate_density(samples, config: KdeConfig = KdeConfig()) -> DensityEstimate:
    """Gaussian KDE of the samples on a uniform grid.

    The grid spans [min - pad*h, max + pad*h] with ``grid_size`` points and

        p(z_j) = (1 / (n h)) * sum_i phi((z_j - x_i) / h)

    where phi is the standard normal pdf.  With the default padding of three
    bandwidths the trapezoidal mass over the grid is 1 to within a few parts
    per thousand (each boundary kernel truncates ~Phi(-3) of its tail).
    """
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise DegenerateDataError("cannot estimate a density from empty samples")
    if not np.all(np.isfinite(x)):
        raise DataFormatError("samples must be finite")

    h = select_bandwidth(x, config)
    lo = float(x.min()) - config.grid_pad * h
    hi = float(x.max()) + config.grid_pad * h
    if hi <= lo:  # zero padding with constant samples
        lo -= max(h, 1e-9)
        hi += max(h, 1e-9)
    grid = np.linspace(lo, hi, config.grid_size)

    density = np.zeros_like(grid)
    # chunk the sample axis so huge inputs do not materialize a full matrix
    for start in range(0, x.size, 4096):
        chunk = x[start : start + 4096]
        u = (grid[:, None] - chunk[None, :]) / h
        density += np.exp(-0.5 * u * u).sum(axis=1)
    density /= x.size * h * _SQRT_2PI
    return DensityEstimate(
        grid=grid, density=density, bandwidth=h, sample_count=int(x.size)
    )


def mass_below(d: DensityEstimate, alpha) -> float | np.ndarray:
    """Trapezoidal mass of the density left of ``alpha``, clamped to [0, 1].

    The boundary cell is handled by linear interpolation of the density.
    Values below the grid give 0, values above it give the total mass.
    Accepts a scalar or an array of thresholds.
    """
    alpha_arr = np.asarray(alpha, dtype=float)
    scalar = alpha_arr.ndim == 0
    a = np.atleast_1d(alpha_arr)
    grid, dens, cum = d.grid, d.density, d._cumulative

    out = np.empty(a.shape, dtype=float)
    below = a <= grid[0]
    above = a >= grid[-1]
    inside = ~(below | above)
    out[below] = 0.0
    out[above] = d.total_mass

    if np.any(inside):
        ai = a[inside]
        idx = np.searchsorted(grid, ai, side="right") - 1
        frac = (ai - grid[idx]) / (grid[idx + 1] - grid[idx])
        d_at = dens[idx] + frac * (dens[idx + 1] - dens[idx])
        out[inside] = cum[idx] + (ai - grid[idx]) * 0.5 * (dens[idx] + d_at)

    np.clip(out, 0.0, 1.0, out=out)
    return float(out[0]) if scalar else out


def density_mean(d: DensityEstimate) -> float:
    """Center of mass of the density on its grid:
    sum_j p_j * z_j / sum_j p_j."""
    total = float(np.sum(d.density))
    if total <= 0.0:
        raise DegenerateDataError("density is identically zero")
    return float(np.sum(d.density * d.grid) / total)
