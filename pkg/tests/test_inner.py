"""Inner box-constrained minimization and its least-squares oracle."""

import numpy as np
import pytest
from scipy.special import expit

from kldesign.designs import Design, DesignSpace, mix_design
from kldesign.inner import (InnerConfig, criterion_value, least_squares_oracle,
                            minimize_beta2)
from kldesign.errors import UnsupportedModelError
from kldesign.models import (GaussianRegressionPair, LogisticGlmPair, ParamBox,
                             SyntheticFamily, kl_average)

BOX3 = ParamBox([-5.0] * 3, [5.0] * 3)
TIGHT = InnerConfig(multistart_count=8, local_tolerance=1e-10,
                    max_local_iterations=2000)


def cubic_pair() -> GaussianRegressionPair:
    return GaussianRegressionPair.from_exponents([0, 0, 0, 1], [0, 1, 2], BOX3, 0.5)


def chebyshev_design() -> Design:
    return Design(DesignSpace([-1.0], [1.0]), [[-1.0], [-0.5], [0.5], [1.0]],
                  [1 / 6, 1 / 3, 1 / 3, 1 / 6])


def random_gaussian_instance(rng):
    d2 = int(rng.integers(1, 5))
    exponents = sorted(rng.choice(6, size=d2, replace=False).tolist())
    beta1 = rng.normal(0.0, 1.0, size=int(rng.integers(1, 7)))
    pair = GaussianRegressionPair.from_exponents(
        beta1, exponents, ParamBox([-50.0] * d2, [50.0] * d2),
        float(rng.uniform(0.2, 2.0)))
    m = int(rng.integers(1, 9))
    design = Design(DesignSpace([-1.0], [1.0]), rng.uniform(-1, 1, (m, 1)),
                    rng.dirichlet(np.ones(m)))
    return pair, design


class TestBenchmarkSolve:
    def test_recovers_the_analytic_minimizer(self):
        sol = minimize_beta2(cubic_pair(), chebyshev_design(), TIGHT, rng=1)
        assert np.max(np.abs(sol.beta2_hat - np.array([0.0, 0.75, 0.0]))) <= 1e-4
        assert sol.value == pytest.approx(0.0625, abs=1e-6)
        assert not sol.singular_flag
        assert not sol.at_boundary

    def test_value_is_the_average_at_beta2_hat(self):
        sol = minimize_beta2(cubic_pair(), chebyshev_design(), TIGHT, rng=1)
        assert sol.value == pytest.approx(
            kl_average(cubic_pair(), chebyshev_design(), sol.beta2_hat), abs=1e-12)

    def test_value_not_above_any_multistart(self):
        sol = minimize_beta2(cubic_pair(), chebyshev_design(), TIGHT, rng=1)
        for _, v in sol.all_minima:
            assert sol.value <= v + 1e-12

    def test_nested_attainable_pair_reaches_zero(self):
        # true mean x^2 lies inside the rival span {1, x, x^2}
        pair = GaussianRegressionPair.from_exponents([0, 0, 1], [0, 1, 2], BOX3, 0.5)
        design = Design(DesignSpace([-1.0], [1.0]),
                        [[-0.9], [-0.2], [0.4], [0.8]], [0.25] * 4)
        sol = minimize_beta2(pair, design, TIGHT, rng=2)
        assert sol.value <= 1e-12
        assert np.max(np.abs(sol.beta2_hat - np.array([0.0, 0.0, 1.0]))) <= 1e-4


class TestSingularDiagnostics:
    def test_logistic_point_mass_at_zero_is_singular(self):
        pair = LogisticGlmPair.from_exponents([1.0, 1.0, 1.0], [1, 2],
                                              ParamBox([-10, -10], [10, 10]))
        d0 = Design(DesignSpace([0.0], [1.0]), [[0.0]], [1.0])
        sol = minimize_beta2(pair, d0, InnerConfig(multistart_count=8), rng=3)
        # eta2(0) = 0 for every beta2: the average is constant and every
        # multistart endpoint ties, so the dispersion spans the box
        c0 = float(expit(1.0) + np.log(2.0 / (1.0 + np.e)))
        assert sol.value == pytest.approx(c0, abs=1e-12)
        assert sol.dispersion > 1.0
        assert sol.singular_flag

    def test_dispersion_small_on_regular_design(self):
        sol = minimize_beta2(cubic_pair(), chebyshev_design(), TIGHT, rng=4)
        assert sol.dispersion <= 1e-3 * BOX3.diameter


class TestMultistartContract:
    def test_doubling_starts_never_increases_value(self):
        rng = np.random.default_rng(41)
        for _ in range(15):
            pair, design = random_gaussian_instance(rng)
            seed = int(rng.integers(0, 2 ** 31))
            values = []
            for count in (2, 4, 8):
                cfg = InnerConfig(multistart_count=count, local_tolerance=1e-8,
                                  max_local_iterations=600)
                values.append(minimize_beta2(pair, design, cfg, rng=seed).value)
            assert values[1] <= values[0] + 1e-12
            assert values[2] <= values[1] + 1e-12

    def test_beta2_stays_in_the_box(self):
        rng = np.random.default_rng(43)
        for _ in range(20):
            pair, design = random_gaussian_instance(rng)
            sol = minimize_beta2(pair, design,
                                 InnerConfig(multistart_count=3), rng=rng)
            assert pair.theta2.contains(sol.beta2_hat)

    def test_deterministic_given_seed(self):
        pair, design = random_gaussian_instance(np.random.default_rng(51))
        a = minimize_beta2(pair, design, TIGHT, rng=99)
        b = minimize_beta2(pair, design, TIGHT, rng=99)
        np.testing.assert_array_equal(a.beta2_hat, b.beta2_hat)
        assert a.value == b.value

    def test_warm_start_continuity(self):
        pair = cubic_pair()
        design = chebyshev_design()
        base = minimize_beta2(pair, design, TIGHT, rng=5)
        bound = max(float(np.max(pair.divergence(
            np.linspace(-1, 1, 101), base.beta2_hat))), base.value)
        for alpha in (1e-3, 1e-2):
            mixed = mix_design(design, [0.2], alpha)
            sol = minimize_beta2(pair, mixed, TIGHT,
                                 warm_start=base.beta2_hat, rng=5)
            assert abs(sol.value - base.value) <= 2.0 * bound * alpha


class TestOracle:
    def test_solver_matches_least_squares(self):
        rng = np.random.default_rng(61)
        cfg = InnerConfig(multistart_count=4, local_tolerance=1e-9,
                          max_local_iterations=1500)
        checked = 0
        while checked < 25:
            pair, design = random_gaussian_instance(rng)
            beta_ls, value_ls = least_squares_oracle(pair, design)
            if np.max(np.abs(beta_ls)) > 40.0:
                continue
            checked += 1
            sol = minimize_beta2(pair, design, cfg, rng=rng)
            assert sol.value == pytest.approx(value_ls, abs=1e-8)

    def test_oracle_rejects_non_gaussian(self):
        d0 = Design(DesignSpace([0.0], [1.0]), [[0.5]], [1.0])
        with pytest.raises(UnsupportedModelError):
            least_squares_oracle(SyntheticFamily(), d0)


class TestCriterionValue:
    def test_wrapper_equals_solution_value(self):
        sol = minimize_beta2(cubic_pair(), chebyshev_design(), TIGHT, rng=7)
        assert criterion_value(cubic_pair(), chebyshev_design(), TIGHT,
                               rng=7) == sol.value

    def test_synthetic_uniform_fixture(self):
        fam = SyntheticFamily(ParamBox([1e-6], [50.0]))
        assert fam.uniform_criterion() == 1.0
