"""Nominal MDP model and the non-robust Bellman operators.

Tables are dense numpy arrays: the kernel has shape ``(S, A, S)`` with
``kernel[s, a, s']`` the probability of moving to ``s'``; rewards are
``(S, A)``.  Value functions are plain ``(S,)`` arrays and Q-tables are
``(S, A)`` arrays.
"""
from dataclasses import dataclass, field

import numpy as np

from robustmdp.errors import ShapeError

EXACT_ATOL = 1e-12
FILE_ATOL = 1e-9


@dataclass(frozen=True)
class Mdp:
    kernel: np.ndarray
    reward: np.ndarray
    gamma: float
    mu: np.ndarray = None

    def __post_init__(self):
        kernel = np.asarray(self.kernel, dtype=np.float64)
        reward = np.asarray(self.reward, dtype=np.float64)
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "reward", reward)
        object.__setattr__(self, "gamma", float(self.gamma))
        if self.mu is None:
            n = kernel.shape[0] if kernel.ndim else 1
            mu = np.full(n, 1.0 / n)
        else:
            mu = np.asarray(self.mu, dtype=np.float64)
        object.__setattr__(self, "mu", mu)

    @property
    def num_states(self):
        return self.reward.shape[0]

    @property
    def num_actions(self):
        return self.reward.shape[1]

    @property
    def flat_kernel(self):
        """Kernel viewed as an ``(S*A, S)`` matrix."""
        S, A = self.reward.shape
        return self.kernel.reshape(S * A, S)


@dataclass
class StochasticPolicy:
    """Per-state action distribution ``probs[s, a]``."""

    probs: np.ndarray
    support_size: np.ndarray = field(init=False)

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.probs.ndim != 2:
            raise ShapeError(f"policy table must be 2-D, got shape {self.probs.shape}")
        self.support_size = np.count_nonzero(self.probs > 0.0, axis=1)

    @classmethod
    def deterministic(cls, actions, num_actions):
        actions = np.asarray(actions, dtype=np.intp)
        probs = np.zeros((actions.size, num_actions))
        probs[np.arange(actions.size), actions] = 1.0
        return cls(probs)

    @classmethod
    def uniform(cls, num_states, num_actions):
        return cls(np.full((num_states, num_actions), 1.0 / num_actions))

    def check(self, atol=EXACT_ATOL):
        """Return a list of invariant violations (empty when valid)."""
        problems = []
        if np.any(self.probs < 0.0):
            problems.append("negative probability")
        for s in np.flatnonzero(np.abs(self.probs.sum(axis=1) - 1.0) > atol):
            problems.append(f"policy row {s} sums to {float(self.probs[s].sum())!r}")
        return problems


def validate_mdp(m, atol=EXACT_ATOL):
    """List every invariant violation of ``m``; an empty list means valid.

    ``atol`` is the row-sum tolerance; use ``FILE_ATOL`` for models read
    from decimal text.
    """
    problems = []
    K, R, mu = m.kernel, m.reward, m.mu
    if R.ndim != 2:
        return [f"reward must be 2-D (S, A), got shape {R.shape}"]
    S, A = R.shape
    if S < 1 or A < 1:
        problems.append(f"need at least one state and one action, got S={S}, A={A}")
    if K.shape != (S, A, S):
        problems.append(f"kernel shape {K.shape} does not match (S, A, S) = {(S, A, S)}")
    if mu.shape != (S,):
        problems.append(f"mu shape {mu.shape} does not match (S,) = {(S,)}")
    if not 0.0 <= m.gamma < 1.0:
        problems.append(f"discount not in [0,1): gamma={m.gamma!r}")
    if not np.all(np.isfinite(R)):
        problems.append("reward has non-finite entries")
    if K.shape == (S, A, S):
        bad = np.argwhere((K < 0.0) | (K > 1.0) | ~np.isfinite(K))
        for s, a, t in bad:
            problems.append(f"kernel entry ({s},{a},{t}) = {float(K[s, a, t])!r} outside [0,1]")
        sums = K.sum(axis=2)
        for s, a in np.argwhere(np.abs(sums - 1.0) > atol):
            problems.append(f"kernel row (s={s}, a={a}) sums to {float(sums[s, a])!r}")
    if mu.shape == (S,):
        if np.any(mu < 0.0):
            problems.append("mu has negative entries")
        if abs(mu.sum() - 1.0) > atol:
            problems.append(f"mu sums to {float(mu.sum())!r}")
    return problems


def _check_value(m, v):
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (m.num_states,):
        raise ShapeError(f"value function shape {v.shape} != ({m.num_states},)")
    return v


def _check_policy(m, pi):
    probs = pi.probs if isinstance(pi, StochasticPolicy) else np.asarray(pi, dtype=np.float64)
    if probs.shape != m.reward.shape:
        raise ShapeError(f"policy shape {probs.shape} != {m.reward.shape}")
    return probs


def q_from_value(m, v):
    """One-step lookahead ``R0 + gamma * P0 v`` as an ``(S, A)`` table."""
    v = _check_value(m, v)
    return m.reward + m.gamma * (m.flat_kernel @ v).reshape(m.reward.shape)


def bellman_policy(m, v, pi):
    probs = _check_policy(m, pi)
    return np.einsum("sa,sa->s", probs, q_from_value(m, v))


def bellman_optimal(m, v):
    return q_from_value(m, v).max(axis=1)


def greedy_actions(q):
    """Argmax per row; ties go to the lowest action index."""
    return np.argmax(q, axis=1)
