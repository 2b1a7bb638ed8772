import numpy as np
import pytest

from reference_impls import quadratic_gap_bruteforce
from stochvi.errors import InvalidParameters, NoKnownSolutions
from stochvi.merit import (
    MeritConfig,
    d_gap,
    distance_sq_to_solutions,
    natural_residual_sq,
    regularized_gap,
)
from stochvi.problems import gen_constant_noise, gen_linear_svi, gen_strongly_monotone
from stochvi.projection import Box, NonnegativeOrthant, WholeSpace

IDENT = lambda x: np.asarray(x, dtype=float)
R2 = WholeSpace(2)


class TestNaturalResidual:
    def test_zero_at_known_solution(self, quiet_problem):
        r2 = natural_residual_sq(quiet_problem.mean_operator,
                                 quiet_problem.feasible_set,
                                 quiet_problem.known_solutions[0], 0.1)
        assert r2 <= 1e-20

    def test_unconstrained_linear_closed_form(self):
        # T(x) = x on the whole plane: r = alpha ||x||
        val = natural_residual_sq(IDENT, R2, np.array([1.0, 0.0]), 0.2)
        assert val == pytest.approx(0.04, abs=1e-16)

    def test_orthant_hand_evaluation(self):
        val = natural_residual_sq(IDENT, NonnegativeOrthant(2),
                                  np.array([-1.0, 1.0]), 0.2)
        assert val == pytest.approx(1.04, abs=1e-14)

    def test_translation_sanity_exact(self, rng):
        # T(x) = x - c on the whole space: residual is alpha ||x - c|| exactly
        c = rng.standard_normal(4)
        T = lambda x: np.asarray(x, float) - c
        for _ in range(20):
            x = 3 * rng.standard_normal(4)
            alpha = rng.uniform(0.05, 0.4)
            want = alpha ** 2 * float((x - c) @ (x - c))
            got = natural_residual_sq(T, WholeSpace(4), x, alpha)
            assert got == pytest.approx(want, rel=1e-13)

    def test_alpha_must_be_positive(self):
        with pytest.raises(InvalidParameters):
            natural_residual_sq(IDENT, R2, np.zeros(2), 0.0)


class TestRegularizedGap:
    def test_zero_at_solution(self):
        p = gen_strongly_monotone(3, seed=5, noise_scale=0.0)
        assert regularized_gap(p.mean_operator, p.feasible_set,
                               p.known_solutions[0], 2.0) <= 1e-20

    def test_unconstrained_closed_form(self):
        # g_a(x) = ||T(x)||^2 / (2a) on the whole space
        assert regularized_gap(IDENT, R2, np.array([1.0, 0.0]), 2.0) \
            == pytest.approx(0.25, abs=1e-15)

    def test_decreasing_in_a(self):
        x = np.array([0.7, -1.3])
        g2 = regularized_gap(IDENT, R2, x, 2.0)
        g4 = regularized_gap(IDENT, R2, x, 4.0)
        assert 0 < g4 <= g2

    def test_against_grid_search_on_box(self, rng):
        box = Box(-np.ones(2), np.ones(2))
        for _ in range(10):
            x = rng.uniform(-1, 1, size=2)
            a = rng.uniform(0.5, 3.0)
            exact = regularized_gap(IDENT, box, x, a)
            grid = quadratic_gap_bruteforce(x.copy(), x, box.lower, box.upper, a,
                                            grid=801)
            assert exact == pytest.approx(grid, abs=2e-4)


class TestDGap:
    def test_parameter_order_enforced(self):
        with pytest.raises(InvalidParameters):
            d_gap(IDENT, R2, np.zeros(2), 2.0, 1.0)

    def test_zero_at_solution(self):
        p = gen_strongly_monotone(3, seed=5, noise_scale=0.0)
        assert abs(d_gap(p.mean_operator, p.feasible_set,
                         p.known_solutions[0], 1.0, 2.0)) <= 1e-12

    def test_unconstrained_closed_form(self):
        # ||x||^2/2 - ||x||^2/4 with a=1, b=2
        assert d_gap(IDENT, R2, np.array([1.0, 0.0]), 1.0, 2.0) \
            == pytest.approx(0.25, abs=1e-15)

    def test_nonnegative_and_positive_off_solutions(self, rng):
        p = gen_linear_svi(4, seed=9, noise_scale=0.0)
        for _ in range(100):
            x = np.abs(rng.standard_normal(4)) + 0.05
            val = d_gap(p.mean_operator, p.feasible_set, x, 1.0, 2.0)
            assert val >= -1e-10

    def test_zero_set_matches_residual(self, rng):
        """The d-gap and the squared residual vanish together."""
        p = gen_linear_svi(4, seed=9, noise_scale=0.0)
        pts = [p.known_solutions[0]] + \
            [np.abs(rng.standard_normal(4)) for _ in range(100)]
        for x in pts:
            gap = d_gap(p.mean_operator, p.feasible_set, x, 1.0, 2.0)
            res = natural_residual_sq(p.mean_operator, p.feasible_set, x, 0.25)
            assert (gap > 1e-12) == (res > 1e-12)


class TestDistance:
    def test_member_and_hand_case(self):
        p = gen_strongly_monotone(2, seed=1, noise_scale=0.0,
                                  center=np.array([1.0, 1.0]))
        assert distance_sq_to_solutions(p, np.array([1.0, 1.0])) == 0.0
        assert distance_sq_to_solutions(p, np.zeros(2)) == pytest.approx(2.0)

    def test_solution_set_is_whole_space(self):
        p = gen_constant_noise(sigma=1.0)
        assert distance_sq_to_solutions(p, np.array([123.0])) == 0.0

    def test_no_solutions_error(self):
        p = gen_constant_noise(sigma=1.0)
        object.__setattr__(p, "solution_set_is_feasible_set", False)
        object.__setattr__(p, "known_solutions", ())
        with pytest.raises(NoKnownSolutions):
            distance_sq_to_solutions(p, np.zeros(1))


def test_merit_config_validation():
    MeritConfig(alpha=0.2, a=1.0, b=2.0)
    with pytest.raises(InvalidParameters):
        MeritConfig(alpha=0.2, a=2.0, b=1.0)
    with pytest.raises(InvalidParameters):
        MeritConfig(alpha=-0.1)
