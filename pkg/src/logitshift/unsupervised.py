"""Unsupervised calibration by moment balancing on the logit density.

Given a density p(z) estimated from unlabeled logits, the calibration value
is the point alpha at which the first moment of the distribution about alpha
vanishes:

    imbalance(alpha) = integral (z - alpha) p(z) dz = 0

On the evaluation grid this is linear in alpha, imbalance = M1 - alpha * M0
with M0, M1 the discrete 0th/1st moments, so the solution is the center of
mass of the density:

    alpha = sum_j p_j z_j / sum_j p_j

which :func:`solve_alpha_closed_form` returns directly.  A bisection solver
is kept as an independent cross-check of the same equation.

The moments are uniform-weight grid sums (plain Riemann quadrature), not
trapezoidal ones: this makes the imbalance root coincide exactly with the
discrete weighted-mean formula above, so the closed form and the root
finder agree to rounding error on any input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, LogitShiftError
from .kde import DensityEstimate, density_mean


@dataclass(frozen=True)
class UnsupervisedResult:
    alpha: float
    residual: float  # |imbalance(alpha)| at the returned solution
    method: str  # "closed_form" or "root_find"

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "residual": self.residual,
            "method": "kde_unsupervised",
            "solver": self.method,
        }


def _grid_moments(d: DensityEstimate) -> tuple[float, float]:
    dz = d.spacing
    m0 = float(np.sum(d.density) * dz)
    m1 = float(np.sum(d.density * d.grid) * dz)
    return m0, m1


def moment_imbalance(d: DensityEstimate, alpha: float) -> float:
    """First moment of the density about ``alpha`` on the grid,
    M1 - alpha * M0.  Positive when mass sits to the right of alpha."""
    m0, m1 = _grid_moments(d)
    return m1 - float(alpha) * m0


def solve_alpha_closed_form(d: DensityEstimate) -> UnsupervisedResult:
    """Balance point of the density: its center of mass on the grid.

    The imbalance residual at the solution is verified to vanish (it is
    zero by construction up to rounding); a violation would mean the
    density is numerically broken.
    """
    alpha = density_mean(d)
    residual = abs(moment_imbalance(d, alpha))
    if not residual < 1e-6 * d.span:
        raise LogitShiftError(
            f"closed-form residual {residual:.3e} exceeds 1e-6 of the grid "
            "span; the density estimate is numerically degenerate"
        )
    return UnsupervisedResult(alpha=alpha, residual=residual, method="closed_form")


def solve_alpha_root_find(
    d: DensityEstimate, tol_factor: float = 1e-9
) -> UnsupervisedResult:
    """Bisection on the moment imbalance over the grid span.

    The imbalance is strictly decreasing in alpha (slope -M0 < 0), so the
    sign change is bracketed by the grid endpoints; the root equals the
    closed-form center of mass up to the bisection tolerance.
    """
    m0, m1 = _grid_moments(d)
    if m0 <= 0.0:
        raise DegenerateDataError("density has no mass; cannot balance moments")
    lo, hi = float(d.grid[0]), float(d.grid[-1])
    f_lo = m1 - lo * m0
    tol = tol_factor * (hi - lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = m1 - mid * m0
        if (f_mid > 0.0) == (f_lo > 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    alpha = 0.5 * (lo + hi)
    residual = abs(m1 - alpha * m0)
    return UnsupervisedResult(alpha=alpha, residual=residual, method="root_find")


def confidence_weighted_alpha(
    logits, d: DensityEstimate, gamma: float = 0.0
) -> UnsupervisedResult:
    """Balance point of the reweighted density p(z) * |z - m|^gamma.

    ``m`` is the unweighted center of mass, so the weight up-ranks confident
    logits far from the bulk and down-ranks ambiguous ones near it.  With
    gamma = 0 the weight is identically 1 and the result reproduces
    :func:`solve_alpha_closed_form` exactly.  ``logits`` are accepted for
    interface symmetry with the other calibrators; the estimate is driven by
    the density.
    """
    if gamma < 0:
        raise DegenerateDataError(f"gamma must be >= 0, got {gamma}")
    center = density_mean(d)
    weights = np.abs(d.grid - center) ** gamma
    weighted = d.density * weights
    total = float(np.sum(weighted))
    if total <= 0.0:
        raise DegenerateDataError("reweighted density has no mass")
    alpha = float(np.sum(weighted * d.grid) / total)
    dz = d.spacing
    residual = abs(float(np.sum((d.grid - alpha) * weighted) * dz))
    return UnsupervisedResult(alpha=alpha, residual=residual, method="closed_form")
