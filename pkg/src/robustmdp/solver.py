"""Robust value iteration and its error accounting.

Every sweep computes the dispersion of the current value once, then
applies the operator selected by the uncertainty spec to all states
synchronously.  Iteration stops when
``||v_{n+1} - v_n||_inf <= target_eps * (1 - gamma) / (2 * gamma)``,
which bounds the distance to the fixed point by ``target_eps`` when the
operators are exact.
"""
import math
import time
from dataclasses import dataclass

import numpy as np

from robustmdp import water_pouring
from robustmdp.dispersion import kappa_for_penalty
from robustmdp.mdp import StochasticPolicy
from robustmdp.robust_bellman import Rect, greedy_policy, optimal_operator, sa_penalty


@dataclass(frozen=True)
class SolveConfig:
    """Stopping and accuracy controls.

    Parameters
    ----------
    target_eps : float
        Desired sup-norm distance to the optimal robust value.
    max_sweeps : int
        Sweep budget; exceeding it yields a result with ``converged=False``.
    inner_tol : float, optional
        Bisection tolerance for the p-mean and water-pouring searches.
        Defaults to ``target_eps * (1 - gamma) / 6``.
    record_trace : bool
        Keep per-sweep residuals and dispersion values.
    v0 : ndarray, optional
        Starting value; zeros by default.
    """

    target_eps: float = 1e-6
    max_sweeps: int = 10_000
    inner_tol: float = None
    record_trace: bool = False
    v0: np.ndarray = None

    def __post_init__(self):
        if not self.target_eps > 0.0:
            raise ValueError(f"target_eps must be positive, got {self.target_eps!r}")
        if self.inner_tol is not None and not self.inner_tol > 0.0:
            raise ValueError(f"inner_tol must be positive, got {self.inner_tol!r}")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")

    def threshold(self, gamma):
        if gamma == 0.0:
            return math.inf
        return self.target_eps * (1.0 - gamma) / (2.0 * gamma)

    def tol(self, gamma):
        if self.inner_tol is not None:
            return self.inner_tol
        return self.target_eps * (1.0 - gamma) / 6.0


@dataclass
class TraceEntry:
    sweep: int
    residual: float
    kappa: float


@dataclass
class SolveResult:
    value: np.ndarray
    policy: StochasticPolicy
    sweeps: int
    final_residual: float
    converged: bool
    q: np.ndarray = None
    chi: np.ndarray = None
    trace: list = None
    sweep_seconds: float = 0.0
    kappa_seconds: float = 0.0

    @property
    def residuals(self):
        return np.array([e.residual for e in self.trace or []])

    @property
    def contraction_ratios(self):
        """Successive residual ratios ``r_{n+1} / r_n`` (skipping zero residuals)."""
        r = self.residuals
        if r.size < 2:
            return np.empty(0)
        prev, nxt = r[:-1], r[1:]
        keep = prev > 0.0
        return nxt[keep] / prev[keep]


def _start(m, cfg):
    if cfg.v0 is None:
        return np.zeros(m.num_states)
    v0 = np.asarray(cfg.v0, dtype=np.float64)
    if v0.shape != (m.num_states,):
        raise ValueError(f"v0 shape {v0.shape} != ({m.num_states},)")
    return v0.copy()


def _kappa(u, v, tol):
    if u.rect is Rect.NONE:
        return 0.0
    return kappa_for_penalty(v, u.p, tol).kappa


def solve(m, u, cfg=None, *, backend_name=None):
    """Robust value iteration to ``cfg.target_eps``.

    Returns the last iterate together with the greedy policy (threshold
    policy for s-rectangular sets, deterministic otherwise) computed at
    that iterate.
    """
    cfg = cfg or SolveConfig()
    u.check_against(m)
    tol = cfg.tol(m.gamma)
    threshold = cfg.threshold(m.gamma)
    v = _start(m, cfg)
    trace = [] if cfg.record_trace else None
    kappa_seconds = 0.0
    residual = math.inf
    converged = False
    sweeps = 0
    t_start = time.perf_counter()
    while sweeps < cfg.max_sweeps:
        t0 = time.perf_counter()
        kappa = _kappa(u, v, tol)
        kappa_seconds += time.perf_counter() - t0
        out = optimal_operator(m, u, v, tol, kappa=kappa, backend_name=backend_name)
        residual = float(np.max(np.abs(out.value - v)))
        v = out.value
        sweeps += 1
        if trace is not None:
            trace.append(TraceEntry(sweeps, residual, kappa))
        if residual <= threshold:
            converged = True
            break
    sweep_seconds = time.perf_counter() - t_start
    final = optimal_operator(m, u, v, tol, backend_name=backend_name)
    return SolveResult(
        value=v,
        policy=greedy_policy(final),
        sweeps=sweeps,
        final_residual=residual,
        converged=converged,
        q=final.q,
        chi=final.chi,
        trace=trace,
        sweep_seconds=sweep_seconds,
        kappa_seconds=kappa_seconds,
    )


def solve_q_recursion(m, u, cfg=None):
    """Robust Q-value iteration for (s,a)-rectangular sets.

    ``Q_{n+1} = R0 - alpha - gamma * beta * kappa(v_n) + gamma * P0 v_n``
    with ``v_n = max_a Q_n``; the stopping rule is applied to ``v_n``.
    """
    cfg = cfg or SolveConfig()
    if u.rect is not Rect.SA:
        raise ValueError("solve_q_recursion needs rect='sa'")
    u.check_against(m)
    tol = cfg.tol(m.gamma)
    threshold = cfg.threshold(m.gamma)
    S, A = m.reward.shape
    q = np.zeros((S, A)) if cfg.v0 is None else np.repeat(_start(m, cfg)[:, None], A, axis=1)
    v = q.max(axis=1)
    trace = [] if cfg.record_trace else None
    residual = math.inf
    converged = False
    sweeps = 0
    while sweeps < cfg.max_sweeps:
        kappa = _kappa(u, v, tol)
        q = m.reward - sa_penalty(m, u, kappa) + m.gamma * (m.flat_kernel @ v).reshape(S, A)
        v_next = q.max(axis=1)
        residual = float(np.max(np.abs(v_next - v)))
        v = v_next
        sweeps += 1
        if trace is not None:
            trace.append(TraceEntry(sweeps, residual, kappa))
        if residual <= threshold:
            converged = True
            break
    return SolveResult(
        value=v,
        policy=StochasticPolicy.deterministic(np.argmax(q, axis=1), A),
        sweeps=sweeps,
        final_residual=residual,
        converged=converged,
        q=q,
        chi=np.ones(S, dtype=np.int64),
        trace=trace,
    )


def approximate_value_iteration(m, u, num_sweeps, perturb, v0=None, tol=1e-12):
    """Run ``v_{n+1} = T v_n + perturb(n, v_n)`` and return every iterate.

    ``perturb`` returns an ``(S,)`` error vector; it models inexact
    operator evaluations.  The result has shape ``(num_sweeps + 1, S)``.
    """
    v = np.zeros(m.num_states) if v0 is None else np.asarray(v0, dtype=np.float64).copy()
    out = [v]
    for n in range(num_sweeps):
        v = optimal_operator(m, u, v, tol).value + np.asarray(perturb(n, v), dtype=np.float64)
        out.append(v)
    return np.array(out)


def approximate_iteration_bound(eps_per_step, gamma, v0_gap, n):
    """Sup-norm distance bound after ``n`` sweeps with per-sweep error ``eps_per_step``.

    ``gamma^n * (eps/(1-gamma) + v0_gap) + eps/(1-gamma)``.
    """
    if eps_per_step < 0.0:
        raise ValueError("eps_per_step must be non-negative")
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    ball = eps_per_step / (1.0 - gamma)
    return gamma ** n * (ball + v0_gap) + ball


def kappa_error_propagation_check(b, alpha, beta, gamma, p, eps, *, kappa=1.0, tol=1e-12):
    """Check that a dispersion error of ``eps`` moves the water level by at most ``gamma*beta*eps``.

    Solves the water-pouring equation for ``b`` with penalty
    ``alpha + gamma*beta*kappa`` and again with ``kappa`` shifted by
    ``+eps`` and ``-eps`` (clipped so the penalty stays non-negative).
    Returns True when both level shifts stay within the bound plus twice
    the solver tolerance.
    """
    b = np.ascontiguousarray(b, dtype=np.float64)
    if np.any(np.diff(b) > 0.0):
        raise ValueError("b must be sorted in descending order")
    base = alpha + gamma * beta * kappa
    sigmas = np.array([base, base + gamma * beta * eps, max(0.0, base - gamma * beta * eps)])
    B = np.ascontiguousarray(np.repeat(b[None, :], 3, axis=0))
    zeta, _ = water_pouring.solve_rows(B, sigmas, p, tol)
    shift = np.max(np.abs(zeta[1:] - zeta[0]))
    slack = 2.0 * tol + 4.0 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(b))) + base)
    return bool(shift <= gamma * beta * eps + slack)
