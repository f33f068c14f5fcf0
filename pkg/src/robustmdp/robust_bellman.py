"""Robust Bellman operators for rectangular L_p uncertainty sets.

With nominal Q-values ``Q = R0 + gamma P0 v`` and the dispersion
``kappa = kappa_q(v)`` at the conjugate index ``q``:

* (s,a)-rectangular: each action is penalised by
  ``alpha[s,a] + gamma * beta[s,a] * kappa`` and the robust operator is a
  penalised best response.
* s-rectangular: the policy pays ``sigma[s] * ||pi(.|s)||_q`` with
  ``sigma[s] = alpha[s] + gamma * beta[s] * kappa``; the optimal operator
  is a water-pouring problem per state, solved by the compiled kernels.
"""
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from robustmdp import water_pouring
from robustmdp.dispersion import DEFAULT_TOL, MAX_ITER, check_norm, conjugate, kappa_for_penalty, lp_norm
from robustmdp.errors import ShapeError
from robustmdp.mdp import StochasticPolicy, _check_policy, _check_value, greedy_actions, q_from_value


class Rect(str, Enum):
    SA = "sa"
    S = "s"
    NONE = "none"


@dataclass(frozen=True)
class UncertaintySpec:
    """Rectangularity, norm index and radii of the uncertainty set.

    ``alpha`` (reward radius) and ``beta`` (kernel radius) have shape
    ``(S, A)`` for ``Rect.SA``, ``(S,)`` for ``Rect.S`` and are ``None``
    for ``Rect.NONE``.
    """

    rect: Rect
    p: float = 2.0
    alpha: np.ndarray = None
    beta: np.ndarray = None

    def __post_init__(self):
        rect = Rect(self.rect)
        object.__setattr__(self, "rect", rect)
        object.__setattr__(self, "p", check_norm(self.p))
        if rect is Rect.NONE:
            if self.alpha is not None or self.beta is not None:
                raise ValueError("rect='none' carries no radii")
            return
        ndim = 2 if rect is Rect.SA else 1
        for name in ("alpha", "beta"):
            arr = getattr(self, name)
            if arr is None:
                raise ValueError(f"rect={rect.value!r} needs {name}")
            arr = np.asarray(arr, dtype=np.float64)
            if arr.ndim != ndim:
                raise ShapeError(f"{name} must be {ndim}-D for rect={rect.value!r}, got shape {arr.shape}")
            if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
                raise ValueError(f"{name} radii must be finite and non-negative")
            object.__setattr__(self, name, arr)
        if self.alpha.shape != self.beta.shape:
            raise ShapeError(f"alpha shape {self.alpha.shape} != beta shape {self.beta.shape}")

    @classmethod
    def none(cls):
        return cls(Rect.NONE)

    @classmethod
    def sa(cls, p, alpha, beta):
        return cls(Rect.SA, p, alpha, beta)

    @classmethod
    def s(cls, p, alpha, beta):
        return cls(Rect.S, p, alpha, beta)

    @classmethod
    def uniform(cls, rect, p, alpha, beta, num_states, num_actions):
        """Same radius everywhere, broadcast to the right shape."""
        rect = Rect(rect)
        if rect is Rect.NONE:
            return cls.none()
        shape = (num_states, num_actions) if rect is Rect.SA else (num_states,)
        return cls(rect, p, np.full(shape, float(alpha)), np.full(shape, float(beta)))

    def scaled(self, factor):
        if self.rect is Rect.NONE:
            return self
        return UncertaintySpec(self.rect, self.p, self.alpha * factor, self.beta * factor)

    def check_against(self, m):
        if self.rect is Rect.NONE:
            return
        expected = m.reward.shape if self.rect is Rect.SA else (m.num_states,)
        if self.alpha.shape != expected:
            raise ShapeError(f"radii shape {self.alpha.shape} != {expected} for rect={self.rect.value!r}")


@dataclass
class OperatorOutput:
    """Result of one robust operator application at a value function.

    ``sigma`` is the per-state penalty for s-rectangular sets and the
    per-(s,a) penalty table for (s,a)-rectangular ones.  ``action`` is the
    deterministic greedy action for (s,a)/non-robust outputs; ``order``
    holds the stable descending Q ranking for s-rectangular outputs.
    """

    value: np.ndarray
    q: np.ndarray
    chi: np.ndarray
    sigma: np.ndarray
    kappa: float
    rect: Rect
    p: float
    action: np.ndarray = None
    order: np.ndarray = None


def _require(u, rect):
    if u.rect is not rect:
        raise ValueError(f"operator needs rect={rect.value!r}, got {u.rect.value!r}")


def _kappa(u, v, tol, kappa):
    if kappa is not None:
        return float(kappa)
    return kappa_for_penalty(v, u.p, tol).kappa


def sa_penalty(m, u, kappa):
    return u.alpha + m.gamma * u.beta * kappa


def nominal_optimal_operator(m, v):
    v = _check_value(m, v)
    q = q_from_value(m, v)
    action = greedy_actions(q)
    S = m.num_states
    return OperatorOutput(
        value=q[np.arange(S), action],
        q=q,
        chi=np.ones(S, dtype=np.int64),
        sigma=np.zeros(S),
        kappa=0.0,
        rect=Rect.NONE,
        p=math.inf,
        action=action,
    )


def sa_policy_operator(m, u, v, pi, tol=DEFAULT_TOL, *, kappa=None):
    _require(u, Rect.SA)
    u.check_against(m)
    v = _check_value(m, v)
    probs = _check_policy(m, pi)
    kappa = _kappa(u, v, tol, kappa)
    q = q_from_value(m, v)
    penalty = sa_penalty(m, u, kappa)
    value = np.einsum("sa,sa->s", probs, q - penalty)
    return OperatorOutput(
        value=value,
        q=q,
        chi=np.ones(m.num_states, dtype=np.int64),
        sigma=penalty,
        kappa=kappa,
        rect=Rect.SA,
        p=u.p,
    )


def sa_optimal_operator(m, u, v, tol=DEFAULT_TOL, *, kappa=None):
    _require(u, Rect.SA)
    u.check_against(m)
    v = _check_value(m, v)
    kappa = _kappa(u, v, tol, kappa)
    q = q_from_value(m, v)
    penalty = sa_penalty(m, u, kappa)
    penalised = q - penalty
    action = greedy_actions(penalised)
    return OperatorOutput(
        value=penalised[np.arange(m.num_states), action],
        q=q,
        chi=np.ones(m.num_states, dtype=np.int64),
        sigma=penalty,
        kappa=kappa,
        rect=Rect.SA,
        p=u.p,
        action=action,
    )


def s_sigma(m, u, kappa):
    return u.alpha + m.gamma * u.beta * kappa


def s_policy_operator(m, u, v, pi, tol=DEFAULT_TOL, *, kappa=None):
    _require(u, Rect.S)
    u.check_against(m)
    v = _check_value(m, v)
    probs = _check_policy(m, pi)
    kappa = _kappa(u, v, tol, kappa)
    q = q_from_value(m, v)
    sigma = s_sigma(m, u, kappa)
    norms = lp_norm(probs, conjugate(u.p), axis=1)
    value = -sigma * norms + np.einsum("sa,sa->s", probs, q)
    return OperatorOutput(
        value=value,
        q=q,
        chi=np.count_nonzero(probs > 0.0, axis=1),
        sigma=sigma,
        kappa=kappa,
        rect=Rect.S,
        p=u.p,
    )


def s_optimal_operator(m, u, v, tol=DEFAULT_TOL, *, kappa=None, method="auto",
                       max_iter=MAX_ITER, backend_name=None):
    """Per-state water pouring over the sorted nominal Q-values.

    ``method="auto"`` uses the exact routines for p in {1, 2, inf} and a
    bisection on ``[max Q - sigma, max Q]`` otherwise; ``"bisect"`` and
    ``"greedy"`` force a particular search.
    """
    _require(u, Rect.S)
    u.check_against(m)
    v = _check_value(m, v)
    kappa = _kappa(u, v, tol, kappa)
    q = q_from_value(m, v)
    sigma = s_sigma(m, u, kappa)
    order = np.argsort(-q, axis=1, kind="stable")
    B = np.take_along_axis(q, order, axis=1)
    zeta, chi = water_pouring.solve_rows(
        B, sigma, u.p, tol, max_iter, method=method, backend_name=backend_name
    )
    return OperatorOutput(
        value=zeta,
        q=q,
        chi=chi,
        sigma=sigma,
        kappa=kappa,
        rect=Rect.S,
        p=u.p,
        order=order,
    )


def optimal_operator(m, u, v, tol=DEFAULT_TOL, *, kappa=None, backend_name=None):
    if u.rect is Rect.NONE:
        return nominal_optimal_operator(m, v)
    if u.rect is Rect.SA:
        return sa_optimal_operator(m, u, v, tol, kappa=kappa)
    return s_optimal_operator(m, u, v, tol, kappa=kappa, backend_name=backend_name)


def policy_operator(m, u, v, pi, tol=DEFAULT_TOL, *, kappa=None):
    """Robust evaluation operator ``T^pi v`` for any rectangularity."""
    if u.rect is Rect.NONE:
        probs = _check_policy(m, pi)
        return np.einsum("sa,sa->s", probs, q_from_value(m, v))
    if u.rect is Rect.SA:
        return sa_policy_operator(m, u, v, pi, tol, kappa=kappa).value
    return s_policy_operator(m, u, v, pi, tol, kappa=kappa).value


def greedy_policy(output, p=None):
    """Policy attaining the optimal operator value at the output's ``v``.

    s-rectangular outputs give the threshold policy: mass proportional to
    ``(Q - value)^(p-1)`` on the top ``chi`` actions (uniform for p=1,
    best action for p=inf).  Other outputs give the deterministic greedy
    action.
    """
    p = output.p if p is None else check_norm(p)
    S, A = output.q.shape
    if output.rect is not Rect.S:
        return StochasticPolicy.deterministic(output.action, A)
    rows = np.arange(S)
    if np.any(output.q.max(axis=1) < output.value):
        bad = np.flatnonzero(output.q.max(axis=1) < output.value)
        raise RuntimeError(f"no action with non-negative advantage in states {bad.tolist()}")
    order = output.order
    if order is None:
        order = np.argsort(-output.q, axis=1, kind="stable")
    probs = np.zeros((S, A))
    if math.isinf(p):
        probs[rows, order[:, 0]] = 1.0
        return StochasticPolicy(probs)
    ranks = np.empty_like(order)
    ranks[rows[:, None], order] = np.arange(A)[None, :]
    active = ranks < output.chi[:, None]
    if p == 1.0:
        probs = active / output.chi[:, None].astype(np.float64)
        return StochasticPolicy(probs)
    adv = np.maximum(output.q - output.value[:, None], 0.0)
    weights = np.where(active, adv ** (p - 1.0), 0.0)
    total = weights.sum(axis=1)
    flat = total <= 0.0
    weights[flat] = 0.0
    weights[flat, order[flat, 0]] = 1.0
    total[flat] = 1.0
    return StochasticPolicy(weights / total[:, None])


@dataclass
class PropertyReport:
    """Per-state checks of the active-count and value-sandwich properties."""

    chi: np.ndarray
    chi_recount: np.ndarray
    upper_slack: np.ndarray
    lower_slack: np.ndarray
    residual: np.ndarray
    passed: np.ndarray

    @property
    def ok(self):
        return bool(np.all(self.passed))


def verify_properties(m, u, v, output, atol=1e-9):
    """Recount active actions and check ``Q(a_{chi+1}) < value <= Q(a_chi)``.

    ``upper_slack = Q(a_chi) - value`` and ``lower_slack = value - Q(a_{chi+1})``
    (NaN when every action is active); a state passes when the recount
    equals ``chi`` and both slacks are ``>= -atol``.  ``residual`` is the
    water-pouring equation error at the returned value.
    """
    _require(u, Rect.S)
    if output.rect is not Rect.S:
        raise ValueError("verify_properties expects an s-rectangular operator output")
    q, value, chi = output.q, output.value, output.chi
    S, A = q.shape
    B = -np.sort(-q, axis=1)
    rows = np.arange(S)
    recount = np.count_nonzero(q >= value[:, None], axis=1)
    upper = B[rows, chi - 1] - value
    lower = np.full(S, np.nan)
    inner = chi < A
    lower[inner] = value[inner] - B[rows[inner], chi[inner]]
    residual = np.array([
        water_pouring.equation_residual(B[s], value[s], output.sigma[s], output.p) for s in range(S)
    ])
    passed = (recount == chi) & (upper >= -atol) & (np.isnan(lower) | (lower >= -atol))
    return PropertyReport(
        chi=chi.copy(),
        chi_recount=recount,
        upper_slack=upper,
        lower_slack=lower,
        residual=residual,
        passed=passed,
    )


def radii_warnings(m, u, v=None, atol=1e-12):
    """Flag kernel radii whose worst-case noise leaves the probability simplex.

    The worst-case kernel noise is built at ``v`` (default: the one-step
    greedy reward ``max_a R0``).  For s-rectangular sets each action is
    checked with the full state budget ``beta[s]``.  Returns messages; an
    empty list means every perturbed kernel row stays in ``[0, 1]``.
    """
    from robustmdp.oracle import worst_case_noise

    if u.rect is Rect.NONE:
        return []
    u.check_against(m)
    if v is None:
        v = m.reward.max(axis=1)
    unit, _ = worst_case_noise(np.asarray(v, dtype=np.float64), u.p, 1.0)
    beta = u.beta if u.rect is Rect.SA else np.repeat(u.beta[:, None], m.num_actions, axis=1)
    perturbed = m.kernel + beta[:, :, None] * unit[None, None, :]
    bad = np.argwhere(np.any((perturbed < -atol) | (perturbed > 1.0 + atol), axis=2))
    return [
        f"warning: beta={beta[s, a]:.6g} at (s={s}, a={a}) pushes the worst-case kernel outside [0,1]"
        for s, a in bad
    ]
