"""Moment-balancing calibration: closed form, root finder, weighted variant."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logitshift.errors import DegenerateDataError
from logitshift.kde import KdeConfig, density_mean, estimate_density
from logitshift.unsupervised import (
    confidence_weighted_alpha,
    moment_imbalance,
    solve_alpha_closed_form,
    solve_alpha_root_find,
)

FIXED = lambda h: KdeConfig(bandwidth_rule="fixed", fixed_bandwidth=h)


class TestMomentImbalance:
    def test_zero_at_the_balance_point(self):
        d = estimate_density(np.random.default_rng(0).normal(size=200))
        alpha = density_mean(d)
        assert abs(moment_imbalance(d, alpha)) < 1e-9 * d.span

    def test_unit_offset_gives_total_mass(self):
        d = estimate_density(np.random.default_rng(1).normal(size=500))
        alpha = density_mean(d)
        # linearity: stepping one unit left adds M0 (about the total mass)
        assert moment_imbalance(d, alpha - 1.0) == pytest.approx(1.0, abs=0.02)

    def test_symmetric_pair_balances_at_zero(self):
        d = estimate_density([-3.0, 3.0], FIXED(0.5))
        assert abs(moment_imbalance(d, 0.0)) < 1e-9

    def test_collinearity(self):
        # imbalance(alpha) = M1 - alpha * M0 exactly: three evaluations
        # must yield identical slopes to near machine precision
        d = estimate_density(np.random.default_rng(2).normal(2.0, 3.0, 300))
        a, b, c = -1.0, 0.5, 4.0
        fa, fb, fc = (moment_imbalance(d, t) for t in (a, b, c))
        slope_ab = (fb - fa) / (b - a)
        slope_bc = (fc - fb) / (c - b)
        assert abs(slope_ab - slope_bc) < 1e-12


class TestClosedForm:
    def test_constant_logits(self):
        res = solve_alpha_closed_form(estimate_density([4.2] * 10))
        assert res.alpha == pytest.approx(4.2, abs=1e-6)
        assert res.method == "closed_form"

    def test_two_equal_clusters(self):
        res = solve_alpha_closed_form(
            estimate_density([-3.0] * 50 + [3.0] * 50, FIXED(0.3))
        )
        assert res.alpha == pytest.approx(0.0, abs=1e-6)

    def test_unequal_cluster_weights(self):
        # weighted mean of the kernel centers: 0.9*(-2) + 0.1*4 = -1.4
        samples = [-2.0] * 900 + [4.0] * 100
        res = solve_alpha_closed_form(estimate_density(samples, FIXED(0.2)))
        assert res.alpha == pytest.approx(-1.4, abs=0.02)

    def test_residual_tiny(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            d = estimate_density(rng.normal(rng.uniform(-5, 5), 2.0, 100))
            res = solve_alpha_closed_form(d)
            assert res.residual < 1e-6 * d.span

    def test_matches_discrete_weighted_mean_exactly(self):
        d = estimate_density(np.random.default_rng(4).normal(size=250))
        res = solve_alpha_closed_form(d)
        expected = float(np.sum(d.density * d.grid) / np.sum(d.density))
        assert res.alpha == expected


class TestRootFind:
    def test_agrees_with_closed_form(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            n = int(rng.integers(10, 300))
            d = estimate_density(rng.normal(rng.uniform(-4, 4), rng.uniform(0.5, 3), n))
            closed = solve_alpha_closed_form(d)
            root = solve_alpha_root_find(d)
            assert abs(root.alpha - closed.alpha) < 1e-6 * d.span
            assert root.method == "root_find"

    def test_standard_normal_center(self):
        res = solve_alpha_root_find(
            estimate_density(np.random.default_rng(6).standard_normal(1000))
        )
        assert res.alpha == pytest.approx(0.0, abs=0.1)

    def test_uniform_center(self):
        res = solve_alpha_root_find(
            estimate_density(np.random.default_rng(7).uniform(0, 10, 1000))
        )
        assert res.alpha == pytest.approx(5.0, abs=0.2)


class TestConfidenceWeighted:
    def test_gamma_zero_is_exactly_closed_form(self):
        x = np.random.default_rng(8).normal(1.0, 2.0, 150)
        d = estimate_density(x)
        plain = solve_alpha_closed_form(d)
        weighted = confidence_weighted_alpha(x, d, gamma=0.0)
        assert weighted.alpha == plain.alpha

    def test_symmetric_density_unmoved_by_gamma(self):
        x = [-3.0, 3.0]
        d = estimate_density(x, FIXED(0.5))
        for gamma in (0.0, 1.0, 2.0, 3.5):
            res = confidence_weighted_alpha(x, d, gamma)
            assert res.alpha == pytest.approx(0.0, abs=1e-6)

    def test_gamma_upweights_the_far_cluster(self):
        samples = [-2.0] * 900 + [4.0] * 100
        d = estimate_density(samples, FIXED(0.2))
        base = confidence_weighted_alpha(samples, d, gamma=0.0).alpha
        moved = confidence_weighted_alpha(samples, d, gamma=2.0).alpha
        # direct quadrature oracle for the reweighted center of mass
        center = density_mean(d)
        w = np.abs(d.grid - center) ** 2
        expected = float(np.sum(d.density * w * d.grid) / np.sum(d.density * w))
        assert moved == pytest.approx(expected, abs=1e-12)
        assert moved > base  # pulled toward the confident +4 cluster

    def test_negative_gamma_rejected(self):
        d = estimate_density([0.0, 1.0])
        with pytest.raises(DegenerateDataError):
            confidence_weighted_alpha([0.0, 1.0], d, gamma=-1.0)


class TestInvariants:
    def test_shift_equivariance(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=300)
        shift = -13.5
        cfg = FIXED(0.4)
        base = solve_alpha_closed_form(estimate_density(x, cfg))
        moved = solve_alpha_closed_form(estimate_density(x + shift, cfg))
        assert moved.alpha == pytest.approx(base.alpha + shift, abs=1e-6)

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.floats(-30, 30), min_size=2, max_size=50))
    def test_closed_form_root_find_agreement(self, samples):
        d = estimate_density(samples, FIXED(0.5))
        closed = solve_alpha_closed_form(d)
        root = solve_alpha_root_find(d)
        assert abs(closed.alpha - root.alpha) < 1e-6 * d.span

    def test_bimodal_recovery(self):
        # two equal clusters separated by >= 4 sigma: the balance point
        # lands within 5% of the separation from the true midpoint
        rng = np.random.default_rng(10)
        mu0, mu1, sigma = -2.0, 2.0, 1.0
        n = 600
        samples = np.concatenate(
            [rng.normal(mu0, sigma, n // 2), rng.normal(mu1, sigma, n // 2)]
        )
        res = solve_alpha_closed_form(estimate_density(samples))
        separation = mu1 - mu0
        assert abs(res.alpha - 0.5 * (mu0 + mu1)) < 0.05 * separation
