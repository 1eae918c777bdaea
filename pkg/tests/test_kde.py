"""Kernel density estimation: bandwidth rules, grid evaluation, quadrature."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logitshift.errors import ConfigError, DataFormatError, DegenerateDataError
from logitshift.kde import (
    KdeConfig,
    density_mean,
    estimate_density,
    mass_below,
    select_bandwidth,
)

FIXED = lambda h: KdeConfig(bandwidth_rule="fixed", fixed_bandwidth=h)


class TestSelectBandwidth:
    def test_degenerate_spread_returns_floor(self):
        h = select_bandwidth([7.0] * 20)
        assert h == KdeConfig().bandwidth_floor

    def test_fixed_ignores_data(self):
        assert select_bandwidth([1.0, 100.0, -3.0], FIXED(0.25)) == 0.25

    def test_silverman_on_standard_normal_draws(self):
        # closed-form rule evaluated on the realized sigma-hat and IQR
        rng = np.random.default_rng(123)
        x = rng.standard_normal(1000)
        h = select_bandwidth(x)
        sigma = np.std(x, ddof=1)
        q75, q25 = np.percentile(x, [75, 25])
        expected = 0.9 * min(sigma, (q75 - q25) / 1.34) * 1000 ** (-0.2)
        assert h == pytest.approx(expected)
        assert h == pytest.approx(0.226, rel=0.20)

    def test_scott_rule(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal(400)
        h = select_bandwidth(x, KdeConfig(bandwidth_rule="scott"))
        assert h == pytest.approx(1.06 * np.std(x, ddof=1) * 400 ** (-0.2))

    def test_empty_samples(self):
        with pytest.raises(DegenerateDataError):
            select_bandwidth([])

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            KdeConfig(bandwidth_rule="fixed", fixed_bandwidth=-1.0)
        with pytest.raises(ConfigError):
            KdeConfig(bandwidth_rule="epanechnikov")
        with pytest.raises(ConfigError):
            KdeConfig(grid_size=8)


class TestEstimateDensity:
    def test_single_kernel_peak_value(self):
        d = estimate_density([0.0], FIXED(1.0))
        peak = d.density[np.argmin(np.abs(d.grid))]
        assert peak == pytest.approx(1.0 / math.sqrt(2.0 * math.pi), abs=1e-3)

    def test_grid_span(self):
        d = estimate_density([1.0, 3.0], FIXED(0.5))
        assert d.grid[0] == pytest.approx(1.0 - 1.5)
        assert d.grid[-1] == pytest.approx(3.0 + 1.5)
        assert len(d.grid) == 512

    def test_normalization_on_random_data(self):
        rng = np.random.default_rng(11)
        for n in (5, 20, 200, 1000):
            d = estimate_density(rng.normal(size=n) * rng.uniform(0.5, 3))
            assert d.total_mass == pytest.approx(1.0, abs=1e-3)

    def test_two_kernel_symmetry_on_mirrored_grid(self):
        d = estimate_density([-3.0, 3.0], FIXED(0.5))
        assert np.all(np.abs(d.density - d.density[::-1]) < 1e-9)

    def test_empty_samples(self):
        with pytest.raises(DegenerateDataError):
            estimate_density([])

    def test_non_finite_samples(self):
        with pytest.raises(DataFormatError):
            estimate_density([1.0, float("inf")])

    def test_density_nonnegative(self):
        rng = np.random.default_rng(2)
        d = estimate_density(rng.normal(size=50))
        assert np.all(d.density >= 0)

    def test_chunked_evaluation_matches_direct(self):
        # inputs larger than one chunk accumulate identically
        rng = np.random.default_rng(12)
        x = rng.normal(size=5000)
        d = estimate_density(x, FIXED(0.3))
        direct = np.exp(
            -0.5 * ((d.grid[:, None] - x[None, :]) / 0.3) ** 2
        ).sum(axis=1) / (x.size * 0.3 * np.sqrt(2 * np.pi))
        np.testing.assert_allclose(d.density, direct, atol=1e-12)

    def test_zero_pad_single_sample_still_has_a_grid(self):
        d = estimate_density(
            [3.0],
            KdeConfig(bandwidth_rule="fixed", fixed_bandwidth=0.5, grid_pad=0.0),
        )
        assert d.grid[-1] > d.grid[0]
        assert d.grid[0] <= 3.0 <= d.grid[-1]

    def test_csv_export(self, tmp_path):
        d = estimate_density([0.0, 1.0], FIXED(0.5))
        path = tmp_path / "density.csv"
        d.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "z,p"
        assert len(lines) == 1 + len(d.grid)
        z0, p0 = lines[1].split(",")
        assert float(z0) == d.grid[0] and float(p0) == d.density[0]


class TestMassBelow:
    def test_below_grid_is_zero(self):
        d = estimate_density([0.0], FIXED(1.0))
        assert mass_below(d, d.grid[0] - 10.0) == 0.0

    def test_above_grid_is_total_mass(self):
        d = estimate_density([0.0], FIXED(1.0))
        assert mass_below(d, d.grid[-1] + 10.0) == pytest.approx(d.total_mass)

    def test_symmetric_density_half_mass_at_center(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(2000)
        d = estimate_density(np.concatenate([x, -x]))  # exactly symmetric
        assert mass_below(d, 0.0) == pytest.approx(0.5, abs=1e-3)

    def test_vectorized_matches_scalar(self):
        d = estimate_density(np.random.default_rng(4).normal(size=64))
        alphas = np.linspace(d.grid[0] - 1, d.grid[-1] + 1, 37)
        vec = mass_below(d, alphas)
        scal = np.array([mass_below(d, float(a)) for a in alphas])
        np.testing.assert_allclose(vec, scal, rtol=0, atol=0)

    @settings(max_examples=30, deadline=None)
    @given(
        st.lists(st.floats(-20, 20), min_size=2, max_size=40),
        st.floats(-25, 25),
        st.floats(0.0, 5.0),
    )
    def test_monotone_in_alpha(self, samples, alpha, step):
        d = estimate_density(samples, FIXED(0.3))
        assert mass_below(d, alpha + step) >= mass_below(d, alpha)

    def test_grid_refinement_stability(self):
        # doubling the grid moves the quadrature by far less than 1e-3
        rng = np.random.default_rng(6)
        x = rng.normal(size=100)
        coarse = estimate_density(x, FIXED(0.05))
        fine = estimate_density(
            x, KdeConfig(bandwidth_rule="fixed", fixed_bandwidth=0.05, grid_size=1024)
        )
        for alpha in np.linspace(x.min(), x.max(), 9):
            assert abs(mass_below(coarse, alpha) - mass_below(fine, alpha)) < 1e-3


class TestDensityMean:
    def test_single_sample(self):
        d = estimate_density([2.5], FIXED(0.7))
        assert density_mean(d) == pytest.approx(2.5, abs=1e-6)

    def test_symmetric_pair(self):
        d = estimate_density([-3.0, 3.0], FIXED(0.5))
        assert density_mean(d) == pytest.approx(0.0, abs=1e-9)

    def test_weighted_kernel_centers(self):
        d = estimate_density([0.0, 0.0, 6.0], FIXED(0.1))
        assert density_mean(d) == pytest.approx(2.0, abs=0.01)

    def test_matches_sample_mean(self):
        rng = np.random.default_rng(8)
        x = rng.normal(1.7, 2.0, size=500)
        d = estimate_density(x)
        assert abs(density_mean(d) - x.mean()) < max(1e-3, d.spacing)


class TestAffineEquivariance:
    def test_shift_moves_mean_and_masses(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=200)
        shift = 11.25
        d = estimate_density(x, FIXED(0.4))
        d_shifted = estimate_density(x + shift, FIXED(0.4))
        assert density_mean(d_shifted) == pytest.approx(
            density_mean(d) + shift, abs=1e-6
        )
        for alpha in (-1.0, 0.0, 0.5, 2.0):
            assert mass_below(d_shifted, alpha + shift) == pytest.approx(
                mass_below(d, alpha), abs=1e-6
            )
