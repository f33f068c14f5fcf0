import numpy as np
import pytest

from conftest import make_mdp
from robustmdp.errors import ShapeError
from robustmdp.mdp import (
    FILE_ATOL,
    Mdp,
    StochasticPolicy,
    bellman_optimal,
    bellman_policy,
    greedy_actions,
    q_from_value,
    validate_mdp,
)


def chain(gamma=0.5):
    kernel = np.array([[[0.0, 1.0]], [[1.0, 0.0]]])
    return Mdp(kernel, np.ones((2, 1)), gamma)


class TestValidate:
    def test_valid_random(self, rng):
        assert validate_mdp(make_mdp(rng, 4, 3)) == []

    def test_bad_row_sum(self):
        m = chain()
        bad = Mdp(m.kernel * np.array([1.0, 0.9])[:, None, None], m.reward, m.gamma)
        problems = validate_mdp(bad)
        assert any("sums to" in msg and "s=1" in msg for msg in problems)

    def test_discount_out_of_range(self):
        m = chain()
        assert any("discount" in msg for msg in validate_mdp(Mdp(m.kernel, m.reward, 1.0)))

    def test_negative_entry(self):
        kernel = np.array([[[1.2, -0.2]], [[0.5, 0.5]]])
        problems = validate_mdp(Mdp(kernel, np.zeros((2, 1)), 0.9))
        assert any("outside [0,1]" in msg for msg in problems)

    def test_shape_mismatch(self):
        problems = validate_mdp(Mdp(np.ones((2, 2, 2)) / 2, np.zeros((2, 3)), 0.9))
        assert any("kernel shape" in msg for msg in problems)

    def test_file_tolerance(self):
        kernel = np.full((2, 1, 2), 0.5) + np.array([1e-10, 0.0])
        nudged = Mdp(kernel, np.zeros((2, 1)), 0.9)
        assert validate_mdp(nudged) != []
        assert validate_mdp(nudged, FILE_ATOL) == []

    def test_default_mu_uniform(self):
        np.testing.assert_allclose(chain().mu, [0.5, 0.5])


class TestPolicy:
    def test_deterministic(self):
        pi = StochasticPolicy.deterministic([1, 0], 3)
        np.testing.assert_array_equal(pi.probs, [[0, 1, 0], [1, 0, 0]])
        np.testing.assert_array_equal(pi.support_size, [1, 1])

    def test_check(self):
        assert StochasticPolicy.uniform(2, 4).check() == []
        assert StochasticPolicy(np.array([[0.5, 0.4]])).check() != []

    def test_rejects_1d(self):
        with pytest.raises(ShapeError):
            StochasticPolicy(np.ones(3))


class TestOperators:
    def test_chain_fixed_point(self):
        m = chain()
        np.testing.assert_allclose(bellman_optimal(m, np.full(2, 2.0)), [2.0, 2.0])

    def test_q_matches_triple_loop(self, rng):
        m = make_mdp(rng, 3, 2)
        v = rng.normal(size=3)
        q = q_from_value(m, v)
        for s in range(3):
            for a in range(2):
                expected = m.reward[s, a] + m.gamma * sum(m.kernel[s, a, t] * v[t] for t in range(3))
                assert q[s, a] == pytest.approx(expected, abs=1e-14)

    def test_policy_matches_dense(self, rng):
        m = make_mdp(rng, 3, 2)
        v = rng.normal(size=3)
        probs = rng.dirichlet(np.ones(2), size=3)
        P_pi = np.einsum("sa,sat->st", probs, m.kernel)
        r_pi = np.sum(probs * m.reward, axis=1)
        np.testing.assert_allclose(bellman_policy(m, v, probs), r_pi + m.gamma * P_pi @ v, atol=1e-14)

    def test_optimal_dominates_policy(self, rng):
        m = make_mdp(rng, 5, 3)
        v = rng.normal(size=5)
        best = bellman_optimal(m, v)
        for _ in range(20):
            probs = rng.dirichlet(np.ones(3), size=5)
            assert np.all(best >= bellman_policy(m, v, probs) - 1e-12)

    def test_ties_lowest_index(self):
        np.testing.assert_array_equal(greedy_actions(np.array([[1.0, 2.0, 2.0]])), [1])

    def test_value_shape_checked(self):
        with pytest.raises(ShapeError):
            q_from_value(chain(), np.zeros(3))
