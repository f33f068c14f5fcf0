"""Brute-force verifiers for the closed-form operators.

Everything here deliberately avoids the compiled kernels and the
closed-form dispersion routines: the worst-case kernel noise is built from
its optimality conditions with a scipy root finder, operator values are
assembled with explicit loops, water pouring is maximised over a simplex
grid, and the p-mean is found by a scalar grid scan.  Results are only as
accurate as the grid or sample budget allows.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from robustmdp.dispersion import DispersionResult, check_norm, conjugate, lp_norm


@dataclass(frozen=True)
class OracleConfig:
    grid_step: float = 1e-3
    num_noise_samples: int = 10_000
    seed: int = 0
    max_states: int = 6
    max_actions: int = 3

    def __post_init__(self):
        if not self.grid_step > 0.0:
            raise ValueError("grid_step must be positive")
        if self.num_noise_samples < 1:
            raise ValueError("num_noise_samples must be at least 1")

    def rng(self):
        return np.random.default_rng(self.seed)


@dataclass
class BruteResult:
    """Oracle value per state and the smallest sampled-minus-analytic gap.

    A negative ``sample_gap`` beyond round-off means a random feasible
    perturbation beat the analytic worst case.
    """

    value: np.ndarray
    sample_gap: float


def _guard(m, cfg):
    S, A = m.reward.shape
    if S > cfg.max_states or A > cfg.max_actions:
        raise ValueError(
            f"instance too large for the oracle: S={S}, A={A} "
            f"(limits {cfg.max_states}, {cfg.max_actions})"
        )


def _p_mean_root(v, q):
    """Scalar minimiser of ``||v - w||_q`` for finite ``q > 1`` via brentq."""

    def balance(w):
        d = v - w
        return float(np.sum(np.sign(d) * np.abs(d) ** (q - 1.0)))

    lo, hi = float(v.min()), float(v.max())
    if balance(lo) == 0.0:
        return lo
    if balance(hi) == 0.0:
        return hi
    return brentq(balance, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def worst_case_noise(v, p, radius):
    """Minimise ``<c, v>`` over ``||c||_p <= radius`` with ``sum(c) = 0``.

    Returns ``(c, <c, v>)``.  The minimiser follows the optimality
    conditions: with ``q`` conjugate to ``p`` and ``w`` the q-mean of
    ``v``, ``c`` is proportional to ``-sign(v - w) |v - w|^(q-1)``.  For
    p=1 the mass ``radius/2`` moves from the largest to the smallest
    entry; for p=inf every entry above the median loses ``radius`` and
    every entry below gains it.
    """
    v = np.asarray(v, dtype=np.float64).ravel()
    p = check_norm(p)
    if radius < 0.0:
        raise ValueError("radius must be non-negative")
    n = v.size
    c = np.zeros(n)
    if radius == 0.0 or np.ptp(v) == 0.0:
        return c, 0.0
    if p == 1.0:
        c[np.argmin(v)] += 0.5 * radius
        c[np.argmax(v)] -= 0.5 * radius
    elif math.isinf(p):
        order = np.argsort(-v, kind="stable")
        half = n // 2
        c[order[:half]] = -radius
        c[order[n - half:]] = radius
    else:
        q = conjugate(p)
        d = v - _p_mean_root(v, q)
        c = -np.sign(d) * np.abs(d) ** (q - 1.0)
        c -= c.mean()
        c *= radius / lp_norm(c, p)
    return c, float(c @ v)


def sample_feasible_noise(rng, num, size, p, radius):
    """Random zero-sum vectors inside the L_p ball of the given radius.

    Half the draws sit on the boundary (where the minimum lives), the
    rest are scaled uniformly into the interior.
    """
    g = rng.standard_normal((num, size))
    g -= g.mean(axis=1, keepdims=True)
    norms = lp_norm(g, p, axis=1)
    norms[norms == 0.0] = 1.0
    scale = np.where(np.arange(num) % 2 == 0, 1.0, rng.uniform(0.0, 1.0, num))
    return g * (radius * scale / norms)[:, None]


def _lookahead(m, v):
    """Nominal Q-table by explicit loops (independent of the vectorised path)."""
    S, A = m.reward.shape
    q = np.empty((S, A))
    for s in range(S):
        for a in range(A):
            acc = 0.0
            for t in range(S):
                acc += m.kernel[s, a, t] * v[t]
            q[s, a] = m.reward[s, a] + m.gamma * acc
    return q


def brute_sa_operator(m, u, v, pi, cfg=None):
    """(s,a)-rectangular robust policy evaluation by explicit minimisation.

    Each (s,a) pair takes the worst reward ``R0 - alpha`` and the analytic
    worst kernel noise; ``cfg.num_noise_samples`` random feasible
    (reward, kernel) perturbations are evaluated as a spot check.
    """
    cfg = cfg or OracleConfig()
    _guard(m, cfg)
    rng = cfg.rng()
    v = np.asarray(v, dtype=np.float64)
    probs = pi.probs if hasattr(pi, "probs") else np.asarray(pi, dtype=np.float64)
    S, A = m.reward.shape
    q = _lookahead(m, v)
    value = np.zeros(S)
    gap = math.inf
    for s in range(S):
        for a in range(A):
            alpha, beta = float(u.alpha[s, a]), float(u.beta[s, a])
            _, noise_value = worst_case_noise(v, u.p, beta)
            analytic = q[s, a] - alpha + m.gamma * noise_value
            value[s] += probs[s, a] * analytic
            noises = sample_feasible_noise(rng, cfg.num_noise_samples, S, u.p, beta)
            rewards = rng.uniform(-alpha, alpha, cfg.num_noise_samples)
            sampled = q[s, a] + rewards + m.gamma * (noises @ v)
            gap = min(gap, float(sampled.min() - analytic))
    return BruteResult(value=value, sample_gap=gap)


def holder_allocation(pi_s, p):
    """Unit-L_p vector ``y`` maximising ``<y, pi_s>`` (so ``<y, pi_s> = ||pi_s||_q``)."""
    pi_s = np.asarray(pi_s, dtype=np.float64)
    p = check_norm(p)
    y = np.zeros_like(pi_s)
    if p == 1.0:
        y[np.argmax(pi_s)] = 1.0
        return y
    if math.isinf(p):
        return np.ones_like(pi_s)
    q = conjugate(p)
    return (pi_s / lp_norm(pi_s, q)) ** (q - 1.0)


def brute_s_policy_operator(m, u, v, pi, cfg=None):
    """s-rectangular robust policy evaluation by composing per-action worst cases.

    The state budgets are split across actions by the Hölder allocation
    ``beta[s, a] = beta[s] * y_a`` (so ``sum_a beta[s, a]^p = beta[s]^p``),
    and each action gets the analytic worst kernel noise for its budget.
    Random perturbations with the matrix norm bounded by ``beta[s]`` (and
    reward noise bounded by ``alpha[s]``) are sampled as a spot check.
    """
    cfg = cfg or OracleConfig()
    _guard(m, cfg)
    rng = cfg.rng()
    v = np.asarray(v, dtype=np.float64)
    probs = pi.probs if hasattr(pi, "probs") else np.asarray(pi, dtype=np.float64)
    S, A = m.reward.shape
    q = _lookahead(m, v)
    value = np.zeros(S)
    gap = math.inf
    n = cfg.num_noise_samples
    for s in range(S):
        y = holder_allocation(probs[s], u.p)
        analytic = 0.0
        for a in range(A):
            _, noise_value = worst_case_noise(v, u.p, float(u.beta[s]) * y[a])
            reward_noise = -float(u.alpha[s]) * y[a]
            analytic += probs[s, a] * (q[s, a] + reward_noise + m.gamma * noise_value)
        value[s] = analytic
        kernel_noise = sample_feasible_noise(rng, n * A, S, u.p, 1.0).reshape(n, A, S)
        reward_noise = rng.standard_normal((n, A))
        if math.isinf(u.p):
            k_scale = np.abs(kernel_noise).max(axis=(1, 2))
        else:
            k_scale = (np.abs(kernel_noise) ** u.p).sum(axis=(1, 2)) ** (1.0 / u.p)
        kernel_noise *= (float(u.beta[s]) / k_scale)[:, None, None]
        reward_noise *= (float(u.alpha[s]) / lp_norm(reward_noise, u.p, axis=1))[:, None]
        sampled = (q[s][None, :] + reward_noise + m.gamma * (kernel_noise @ v)) @ probs[s]
        gap = min(gap, float(sampled.min() - analytic))
    return BruteResult(value=value, sample_gap=gap)


def simplex_grid(num_actions, step):
    """All points of the probability simplex with coordinates on a ``step`` lattice."""
    m = int(round(1.0 / step))
    if num_actions == 1:
        return np.ones((1, 1))
    if num_actions == 2:
        i = np.arange(m + 1)
        return np.stack([i, m - i], axis=1) / m
    if num_actions == 3:
        i, j = np.triu_indices(m + 1)
        # pairs with i <= j parametrise (i, j - i, m - j)
        return np.stack([i, j - i, m - j], axis=1) / m
    raise ValueError(f"simplex grid supports at most 3 actions, got {num_actions}")


def brute_s_improvement(q_row, sigma, p, cfg=None):
    """Maximise ``-sigma ||c||_q + <c, q_row>`` over a simplex grid.

    Returns ``(zeta, weights)`` at the best grid point.
    """
    cfg = cfg or OracleConfig()
    q_row = np.asarray(q_row, dtype=np.float64)
    if q_row.size > 3:
        raise ValueError("brute_s_improvement supports at most 3 actions")
    grid = simplex_grid(q_row.size, cfg.grid_step)
    obj = -sigma * lp_norm(grid, conjugate(p), axis=1) + grid @ q_row
    best = int(np.argmax(obj))
    return float(obj[best]), grid[best]


def brute_s_optimal_operator(m, u, v, cfg=None):
    """s-rectangular optimal operator: grid water pouring per state.

    The penalty uses the dispersion implied by the analytic worst-case
    noise, ``kappa = -<c*, v>`` for a unit radius.
    """
    cfg = cfg or OracleConfig()
    _guard(m, cfg)
    v = np.asarray(v, dtype=np.float64)
    q = _lookahead(m, v)
    kappa = -worst_case_noise(v, u.p, 1.0)[1]
    value = np.empty(m.num_states)
    for s in range(m.num_states):
        sigma = float(u.alpha[s]) + m.gamma * float(u.beta[s]) * kappa
        value[s] = brute_s_improvement(q[s], sigma, u.p, cfg)[0]
    return BruteResult(value=value, sample_gap=0.0)


def brute_dispersion(v, p, cfg=None):
    """p-mean by scanning ``[min v, max v]`` in steps of ``cfg.grid_step``."""
    cfg = cfg or OracleConfig()
    v = np.asarray(v, dtype=np.float64).ravel()
    p = check_norm(p)
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        return DispersionResult(omega=lo, kappa=0.0)
    omegas = np.append(np.arange(lo, hi, cfg.grid_step), hi)
    norms = lp_norm(v[None, :] - omegas[:, None], p, axis=1)
    best = int(np.argmin(norms))
    return DispersionResult(omega=float(omegas[best]), kappa=float(norms[best]), iterations=omegas.size)
