import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import NORMS
from robustmdp import oracle
from robustmdp.errors import ConvergenceError
from robustmdp.water_pouring import (
    WaterPouringProblem,
    active_count,
    equation_residual,
    objective,
    solve,
    solve_general,
    solve_iterative,
    solve_l1,
    solve_linf,
    solve_rows,
)

EXACT_P2_ZETA = 0.9 - math.sqrt(0.46) / 2.0


def problem(b, alpha, p):
    return WaterPouringProblem(np.array(b, dtype=float), alpha, p)


class TestProblem:
    def test_rejects_unsorted(self):
        with pytest.raises(ValueError, match="descending"):
            problem([0.0, 1.0], 0.5, 2.0)

    def test_rejects_negative_alpha(self):
        with pytest.raises(ValueError):
            problem([1.0], -0.1, 2.0)

    def test_from_unsorted_is_stable(self):
        prob, order = WaterPouringProblem.from_unsorted([0.5, 1.0, 0.5], 0.1, 1.0)
        np.testing.assert_array_equal(order, [1, 0, 2])
        np.testing.assert_array_equal(prob.b, [1.0, 0.5, 0.5])


class TestExamples:
    def test_l1_two_active(self, backend_name):
        res = solve_l1(problem([1.0, 0.9], 0.5, 1.0), backend_name=backend_name)
        assert res.zeta == pytest.approx(0.7, abs=1e-15)
        assert res.chi == 2
        np.testing.assert_allclose(res.weights, [0.5, 0.5])

    def test_l1_one_active(self, backend_name):
        res = solve_l1(problem([1.0, 0.0], 0.5, 1.0), backend_name=backend_name)
        assert res.zeta == 0.5 and res.chi == 1

    def test_l2_two_active(self, backend_name):
        res = solve(problem([1.0, 0.8], 0.5, 2.0), backend_name=backend_name)
        assert res.zeta == pytest.approx(EXACT_P2_ZETA, abs=1e-14)
        assert res.chi == 2
        np.testing.assert_allclose(res.weights, [0.43912, 0.23912] / np.float64(0.67824), atol=1e-4)

    def test_l2_one_active(self, backend_name):
        res = solve(problem([1.0, 0.0], 0.5, 2.0), backend_name=backend_name)
        assert res.zeta == 0.5 and res.chi == 1
        np.testing.assert_array_equal(res.weights, [1.0, 0.0])

    def test_linf(self, backend_name):
        res = solve_linf(problem([1.0, 0.8, 0.1], 0.5, math.inf), backend_name=backend_name)
        assert res.zeta == 0.5 and res.chi == 2
        np.testing.assert_array_equal(res.weights, [1.0, 0.0, 0.0])

    @pytest.mark.parametrize("p", NORMS)
    def test_zero_alpha(self, p, backend_name):
        res = solve(problem([3.0, 3.0, 1.0], 0.0, p), backend_name=backend_name)
        assert res.zeta == 3.0 and res.chi == 1
        np.testing.assert_array_equal(res.weights, [1.0, 0.0, 0.0])

    def test_single_action(self, norm, backend_name):
        res = solve(problem([2.0], 0.3, norm), backend_name=backend_name)
        assert res.zeta == pytest.approx(1.7) and res.chi == 1

    def test_all_active(self, backend_name):
        res = solve(problem([1.0, 0.99, 0.98], 10.0, 2.0), backend_name=backend_name)
        assert res.chi == 3
        assert res.residual <= 1e-10


class TestAgainstGrid:
    @pytest.mark.parametrize("p", NORMS)
    def test_grid_oracle(self, rng, p):
        for _ in range(10):
            b = -np.sort(-rng.uniform(0.0, 1.0, size=3))
            alpha = rng.uniform(0.0, 1.0)
            res = solve(problem(b, alpha, p), tol=1e-12)
            grid_zeta, _ = oracle.brute_s_improvement(b, alpha, p)
            assert grid_zeta <= res.zeta + 1e-12
            assert res.zeta - grid_zeta <= 5e-3
            assert objective(res.weights, b, alpha, p) == pytest.approx(res.zeta, abs=1e-8)


class TestRoutesAgree:
    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 7.0])
    def test_bisect_vs_greedy(self, rng, p, backend_name):
        B = -np.sort(-rng.normal(size=(50, 6)), axis=1)
        sigma = rng.uniform(0.0, 2.0, size=50)
        zb, cb = solve_rows(B, sigma, p, 1e-13, method="bisect", backend_name=backend_name)
        zg, cg = solve_rows(B, sigma, p, 1e-13, method="greedy", backend_name=backend_name)
        np.testing.assert_allclose(zb, zg, atol=1e-10)
        np.testing.assert_array_equal(cb, cg)

    def test_l2_closed_vs_bisect(self, rng):
        B = -np.sort(-rng.normal(size=(100, 5)), axis=1)
        sigma = rng.uniform(0.0, 2.0, size=100)
        z2, c2 = solve_rows(B, sigma, 2.0)
        zb, cb = solve_rows(B, sigma, 2.0, 1e-14, method="bisect")
        np.testing.assert_allclose(z2, zb, atol=1e-8)
        np.testing.assert_array_equal(c2, cb)

    def test_l1_closed_vs_iterative(self, rng):
        for _ in range(50):
            prob = problem(-np.sort(-rng.normal(size=5)), rng.uniform(0, 3), 1.0)
            a, b = solve_l1(prob), solve_iterative(prob)
            assert a.zeta == pytest.approx(b.zeta, abs=1e-12) and a.chi == b.chi

    def test_general_routes_exact(self):
        prob = problem([1.0, 0.9], 0.5, 1.0)
        assert solve_general(prob).zeta == solve_l1(prob).zeta

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            solve_rows(np.ones((1, 2)), np.ones(1), 3.0, method="newton")

    def test_bisection_cap(self):
        with pytest.raises(ConvergenceError):
            solve_rows(np.array([[1.0, 0.5, 0.0]]), np.array([1.0]), 3.0, 1e-14, max_iter=3)


class TestActiveCount:
    @pytest.mark.parametrize("p", NORMS)
    def test_matches_solver_chi(self, rng, p):
        for _ in range(30):
            b = -np.sort(-rng.normal(size=6))
            alpha = rng.uniform(0.0, 2.0)
            res = solve(problem(b, alpha, p), tol=1e-13)
            assert active_count(b, alpha, p) == res.chi


class TestProperties:
    @settings(max_examples=80, deadline=None)
    @given(
        st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=8),
        st.floats(0.0, 5.0),
        st.sampled_from([1.0, 1.5, 2.0, 3.0, math.inf]),
    )
    def test_residual_and_bracket(self, values, alpha, p):
        b = np.sort(np.array(values))[::-1]
        res = solve(problem(b, alpha, p), tol=1e-12)
        assert b[0] - alpha - 1e-12 <= res.zeta <= b[0] + 1e-12
        scale = max(1.0, alpha ** p) if not math.isinf(p) else 1.0
        assert equation_residual(b, res.zeta, alpha, p) <= 1e-6 * scale
        assert 1 <= res.chi <= b.size
        assert np.all(res.weights >= 0.0) and res.weights.sum() == pytest.approx(1.0)

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=8),
        st.floats(0.0, 5.0),
        st.floats(0.0, 1.0),
        st.sampled_from([1.0, 2.0, 3.0]),
    )
    def test_monotone_and_lipschitz_in_alpha(self, values, alpha, delta, p):
        b = np.sort(np.array(values))[::-1]
        lo = solve(problem(b, alpha, p), tol=1e-13).zeta
        hi = solve(problem(b, alpha + delta, p), tol=1e-13).zeta
        assert hi <= lo + 1e-11
        assert lo - hi <= delta + 1e-11
