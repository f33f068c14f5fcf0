import math

import numpy as np
import pytest

from conftest import make_mdp
from robustmdp.mdp import Mdp
from robustmdp.robust_bellman import UncertaintySpec, optimal_operator, s_policy_operator
from robustmdp.solver import (
    SolveConfig,
    approximate_iteration_bound,
    approximate_value_iteration,
    kappa_error_propagation_check,
    solve,
    solve_q_recursion,
)


def chain(gamma=0.5):
    return Mdp(np.array([[[0.0, 1.0]], [[1.0, 0.0]]]), np.ones((2, 1)), gamma)


class TestConfig:
    @pytest.mark.parametrize("kwargs", [{"target_eps": 0.0}, {"inner_tol": -1.0}, {"max_sweeps": 0}])
    def test_rejects(self, kwargs):
        with pytest.raises(ValueError):
            SolveConfig(**kwargs)

    def test_defaults(self):
        cfg = SolveConfig(target_eps=0.6)
        assert cfg.tol(0.5) == pytest.approx(0.05)
        assert cfg.threshold(0.5) == pytest.approx(0.3)
        assert cfg.threshold(0.0) == math.inf


class TestSolve:
    def test_geometric_chain(self):
        res = solve(chain(), UncertaintySpec.none(), SolveConfig(target_eps=1e-10))
        assert res.converged
        np.testing.assert_allclose(res.value, [2.0, 2.0], atol=1e-10)

    def test_zero_discount(self, rng):
        m = Mdp(make_mdp(rng, 3, 2).kernel, rng.uniform(size=(3, 2)), 0.0)
        res = solve(m, UncertaintySpec.uniform("s", 2.0, 0.1, 0.1, 3, 2))
        assert res.converged and res.sweeps == 1

    @pytest.mark.parametrize("rect", ["sa", "s"])
    def test_zero_radii_match_nominal(self, rng, rect, norm):
        m = make_mdp(rng, 6, 3)
        cfg = SolveConfig(target_eps=1e-8)
        robust = solve(m, UncertaintySpec.uniform(rect, norm, 0.0, 0.0, 6, 3), cfg)
        nominal = solve(m, UncertaintySpec.none(), cfg)
        np.testing.assert_allclose(robust.value, nominal.value, atol=1e-10)

    def test_fixed_point_residual(self, rng):
        m = make_mdp(rng, 5, 3)
        u = UncertaintySpec.uniform("s", 2.0, 0.02, 0.02, 5, 3)
        cfg = SolveConfig(target_eps=1e-6)
        res = solve(m, u, cfg)
        t_v = optimal_operator(m, u, res.value, cfg.tol(m.gamma)).value
        assert np.max(np.abs(t_v - res.value)) <= 2 * cfg.threshold(m.gamma)

    def test_linear_convergence_trace(self, rng, norm):
        m = make_mdp(rng, 5, 3)
        cfg = SolveConfig(target_eps=1e-6, record_trace=True, inner_tol=1e-13)
        res = solve(m, UncertaintySpec.uniform("s", norm, 0.05, 0.05, 5, 3), cfg)
        r = res.residuals
        assert np.all(r[1:] <= m.gamma * r[:-1] + 10 * cfg.inner_tol)
        assert len(res.trace) == res.sweeps

    def test_not_converged_flagged(self, rng):
        res = solve(make_mdp(rng, 4, 2), UncertaintySpec.none(), SolveConfig(max_sweeps=3))
        assert not res.converged and res.sweeps == 3

    def test_monotone_from_below(self, rng):
        m = make_mdp(rng, 4, 3)
        u = UncertaintySpec.uniform("s", 2.0, 0.05, 0.05, 4, 3)
        v0 = np.full(4, -1.0 / (1 - m.gamma))
        vs = approximate_value_iteration(m, u, 40, lambda n, v: 0.0, v0=v0)
        assert np.all(np.diff(vs, axis=0) >= -1e-12)

    def test_policy_value_at_fixed_point(self, rng):
        m = make_mdp(rng, 4, 3)
        u = UncertaintySpec.uniform("s", 2.0, 0.05, 0.05, 4, 3)
        cfg = SolveConfig(target_eps=1e-6, inner_tol=1e-13)
        res = solve(m, u, cfg)
        w = np.zeros(4)
        for _ in range(400):
            w = s_policy_operator(m, u, w, res.policy).value
        assert np.max(np.abs(w - res.value)) <= cfg.target_eps

    def test_backends_agree(self, rng, backend_name):
        m = make_mdp(rng, 6, 4)
        u = UncertaintySpec.uniform("s", 3.0, 0.05, 0.05, 6, 4)
        a = solve(m, u, backend_name="python")
        b = solve(m, u, backend_name=backend_name)
        assert a.sweeps == b.sweeps
        np.testing.assert_allclose(a.value, b.value, atol=1e-10)


class TestQRecursion:
    def test_zero_radii(self, rng):
        m = make_mdp(rng, 5, 3)
        cfg = SolveConfig(target_eps=1e-8)
        q = solve_q_recursion(m, UncertaintySpec.uniform("sa", 2.0, 0.0, 0.0, 5, 3), cfg)
        np.testing.assert_allclose(q.value, solve(m, UncertaintySpec.none(), cfg).value, atol=1e-10)
        np.testing.assert_array_equal(q.value, q.q.max(axis=1))

    def test_agrees_with_value_iteration(self, rng, norm):
        m = make_mdp(rng, 5, 3)
        u = UncertaintySpec.sa(norm, rng.uniform(0, 0.05, (5, 3)), rng.uniform(0, 0.05, (5, 3)))
        cfg = SolveConfig(target_eps=1e-6)
        a, b = solve_q_recursion(m, u, cfg), solve(m, u, cfg)
        assert np.max(np.abs(a.value - b.value)) <= 2 * cfg.target_eps

    def test_needs_sa(self, rng):
        with pytest.raises(ValueError):
            solve_q_recursion(make_mdp(rng, 2, 2), UncertaintySpec.none())


class TestApproximateIteration:
    def test_bound_formula(self):
        assert approximate_iteration_bound(0.0, 0.9, 2.0, 10) == pytest.approx(0.9 ** 10 * 2.0)
        assert approximate_iteration_bound(0.01, 0.9, 1.0, 10_000) == pytest.approx(0.1)
        assert approximate_iteration_bound(0.01, 0.9, 1.0, 50) == pytest.approx(0.1 + 0.9 ** 50 * 1.1)
        assert approximate_iteration_bound(0.01, 0.9, 1.0, 50) == pytest.approx(0.105669, abs=1e-6)

    def test_rejects(self):
        with pytest.raises(ValueError):
            approximate_iteration_bound(-1.0, 0.9, 1.0, 1)
        with pytest.raises(ValueError):
            approximate_iteration_bound(0.1, 1.0, 1.0, 1)

    def test_noisy_iterates_stay_in_bound(self, rng):
        m = make_mdp(rng, 5, 3)
        u = UncertaintySpec.uniform("s", 2.0, 0.05, 0.05, 5, 3)
        v_star = solve(m, u, SolveConfig(target_eps=1e-10, inner_tol=1e-13)).value
        eps = 1e-3
        vs = approximate_value_iteration(m, u, 200, lambda n, v: rng.uniform(-eps, eps, 5))
        gap0 = np.max(np.abs(vs[0] - v_star))
        for n, v in enumerate(vs):
            assert np.max(np.abs(v - v_star)) <= approximate_iteration_bound(eps, m.gamma, gap0, n) + 1e-9


class TestKappaErrorPropagation:
    def test_zero_eps(self):
        assert kappa_error_propagation_check([1.0, 0.5], 0.1, 0.2, 0.9, 2.0, 0.0)

    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0, math.inf])
    def test_random(self, rng, p):
        for _ in range(50):
            b = -np.sort(-rng.normal(size=5))
            assert kappa_error_propagation_check(b, rng.uniform(0, 1), rng.uniform(0, 1), 0.9, p, 1e-3)

    def test_near_tie(self):
        b = np.array([1.0, 1.0 - 1e-12, 1.0 - 2e-12, 0.0])
        assert kappa_error_propagation_check(b, 1e-12, 0.5, 0.9, 2.0, 1e-3, kappa=1e-12)
