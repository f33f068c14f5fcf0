"""L_p water pouring: ``max_c  -alpha ||c||_q + <c, b>`` over the simplex.

``q`` is the conjugate of ``p``.  The optimum ``zeta`` solves
``sum_{b_i >= x} (b_i - x)^p = alpha^p``; the optimal weights put mass
``(b_i - zeta)^(p-1)`` on the ``chi`` entries with ``b_i >= zeta``.
Vectors ``b`` are sorted in descending order.
"""
import math
from dataclasses import dataclass

import numpy as np

from robustmdp import backend
from robustmdp.dispersion import DEFAULT_TOL, MAX_ITER, check_norm, conjugate, lp_norm


@dataclass(frozen=True)
class WaterPouringProblem:
    b: np.ndarray
    alpha: float
    p: float

    def __post_init__(self):
        b = np.asarray(self.b, dtype=np.float64).ravel()
        if b.size == 0:
            raise ValueError("b must be non-empty")
        if not np.all(np.isfinite(b)):
            raise ValueError("b must be finite")
        if np.any(np.diff(b) > 0.0):
            raise ValueError("b must be sorted in descending order")
        if not self.alpha >= 0.0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha!r}")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "p", check_norm(self.p))

    @classmethod
    def from_unsorted(cls, values, alpha, p):
        """Build from arbitrary values; returns ``(problem, order)``.

        ``order`` maps sorted positions back to the original indices
        (stable, so ties keep their original order).
        """
        values = np.asarray(values, dtype=np.float64)
        order = np.argsort(-values, kind="stable")
        return cls(values[order], alpha, p), order


@dataclass(frozen=True)
class WaterPouringResult:
    zeta: float
    chi: int
    weights: np.ndarray
    residual: float


def objective(c, b, alpha, p):
    """``-alpha ||c||_q + <c, b>`` (q conjugate to p); ``c`` may be a batch of rows."""
    c = np.asarray(c, dtype=np.float64)
    return -alpha * lp_norm(c, conjugate(p), axis=-1) + c @ np.asarray(b, dtype=np.float64)


def equation_residual(b, zeta, alpha, p):
    """``|sum_{b_i >= zeta} (b_i - zeta)^p - alpha^p|`` (max-gap form for p=inf)."""
    gaps = np.asarray(b, dtype=np.float64) - zeta
    gaps = gaps[gaps >= 0.0]
    if math.isinf(p):
        return float(abs((gaps.max() if gaps.size else 0.0) - alpha))
    return abs(float(np.sum(gaps ** p)) - alpha ** p)


def optimal_weights(b, zeta, chi, alpha, p):
    """Simplex weights attaining ``zeta`` for the sorted vector ``b``."""
    b = np.asarray(b, dtype=np.float64)
    w = np.zeros(b.size)
    if alpha == 0.0 or math.isinf(p):
        w[0] = 1.0
        return w
    if p == 1.0:
        w[:chi] = 1.0 / chi
        return w
    w[:chi] = np.maximum(b[:chi] - zeta, 0.0) ** (p - 1.0)
    total = w.sum()
    if total <= 0.0:
        w[:] = 0.0
        w[0] = 1.0
        return w
    return w / total


def _finish(prob, zeta, chi):
    zeta, chi = float(zeta), int(chi)
    return WaterPouringResult(
        zeta=zeta,
        chi=chi,
        weights=optimal_weights(prob.b, zeta, chi, prob.alpha, prob.p),
        residual=equation_residual(prob.b, zeta, prob.alpha, prob.p),
    )


def _row(prob):
    return prob.b[None, :], np.array([prob.alpha])


def solve_linf(prob, *, backend_name=None):
    """p = inf: best response, ``zeta = b_1 - alpha``.

    ``chi`` counts entries with ``b_i >= zeta`` (the large-p limit of the
    active count); the weights are still the single best action.
    """
    if not math.isinf(prob.p):
        raise ValueError("solve_linf needs p = inf")
    zeta, chi = backend.resolve(backend_name).pour_linf(*_row(prob))
    return _finish(prob, zeta[0], chi[0])


def solve_l1(prob, *, backend_name=None):
    """p = 1: highest penalised average ``max_k (sum_{i<=k} b_i - alpha) / k``."""
    if prob.p != 1.0:
        raise ValueError("solve_l1 needs p = 1")
    zeta, chi = backend.resolve(backend_name).pour_l1(*_row(prob))
    return _finish(prob, zeta[0], chi[0])


def solve_general(prob, tol=DEFAULT_TOL, max_iter=MAX_ITER, *, backend_name=None):
    """Bisection for ``zeta`` on ``[b_1 - alpha, b_1]``.

    p = 1 and p = inf are routed to their exact routines.
    """
    if prob.p == 1.0:
        return solve_l1(prob, backend_name=backend_name)
    if math.isinf(prob.p):
        return solve_linf(prob, backend_name=backend_name)
    zeta, chi = backend.resolve(backend_name).pour_bisect(*_row(prob), prob.p, tol, max_iter)
    return _finish(prob, zeta[0], chi[0])


def solve_iterative(prob, tol=DEFAULT_TOL, max_iter=MAX_ITER, *, backend_name=None):
    """Greedy top-k growth: add actions while the current level reaches the next one.

    At step k the level ``lam_k <= b_k`` solves
    ``sum_{i<=k} (b_i - lam_k)^p = alpha^p``; the loop stops once
    ``lam_k > b_{k+1}``.  The level is linear in the data for p = 1 and a
    quadratic root for p = 2; other p use a bisection per step.
    """
    p, b, alpha = prob.p, prob.b, prob.alpha
    if math.isinf(p):
        return solve_linf(prob, backend_name=backend_name)
    if alpha == 0.0:
        return _finish(prob, b[0], 1)
    if p == 1.0:
        k, total = 1, float(b[0])
        lam = total - alpha
        while k < b.size and lam <= b[k]:
            total += b[k]
            k += 1
            lam = (total - alpha) / k
        return _finish(prob, lam, k)
    kern = backend.resolve(backend_name)
    if p == 2.0:
        zeta, chi = kern.pour_l2(*_row(prob))
    else:
        zeta, chi = kern.pour_greedy(*_row(prob), p, tol, max_iter)
    return _finish(prob, zeta[0], chi[0])


def solve(prob, tol=DEFAULT_TOL, max_iter=MAX_ITER, *, backend_name=None):
    """Exact routine for p in {1, 2, inf}, bisection otherwise."""
    if prob.p == 2.0:
        return solve_iterative(prob, tol, max_iter, backend_name=backend_name)
    return solve_general(prob, tol, max_iter, backend_name=backend_name)


def solve_rows(B, sigma, p, tol=DEFAULT_TOL, max_iter=MAX_ITER, *, method="auto", backend_name=None):
    """Batched ``(zeta, chi)`` for descending-sorted rows ``B`` and penalties ``sigma``.

    ``method`` is "auto" (exact for p in {1, 2, inf}, bisection otherwise),
    "bisect" or "greedy".
    """
    kern = backend.resolve(backend_name)
    B = np.ascontiguousarray(B, dtype=np.float64)
    sigma = np.ascontiguousarray(sigma, dtype=np.float64)
    p = check_norm(p)
    if math.isinf(p):
        return kern.pour_linf(B, sigma)
    if method == "auto":
        if p == 1.0:
            return kern.pour_l1(B, sigma)
        if p == 2.0:
            return kern.pour_l2(B, sigma)
        method = "bisect"
    if method == "bisect":
        return kern.pour_bisect(B, sigma, p, tol, max_iter)
    if method == "greedy":
        return kern.pour_greedy(B, sigma, p, tol, max_iter)
    raise ValueError(f"unknown method {method!r}")


def active_count(b, alpha, p):
    """Number of active entries, ``max{k : sum_{i<=k} (b_i - b_k)^p <= alpha^p}``.

    Computed from ``b`` alone, without solving for ``zeta``.
    """
    b = np.asarray(b, dtype=np.float64)
    p = check_norm(p)
    best = 1
    for k in range(1, b.size + 1):
        gaps = b[:k] - b[k - 1]
        if math.isinf(p):
            ok = gaps.max() <= alpha
        else:
            ok = float(np.sum(gaps ** p)) <= alpha ** p
        if ok:
            best = k
    return best
