"""p-mean and p-variance of a value function.

For a vector ``v`` the p-mean is the scalar ``w`` minimising
``||v - w 1||_p`` and the p-variance is that minimum.  These drive the
reward penalty of every robust operator, always at the conjugate index of
the uncertainty norm.

Norm indices are floats; ``INF`` (``math.inf``) stands for the max-norm.
"""
import math
from dataclasses import dataclass

import numpy as np

from robustmdp import backend

INF = math.inf
DEFAULT_TOL = 1e-10
MAX_ITER = 200
CLOSED_FORMS = (1.0, 2.0, INF)


@dataclass(frozen=True)
class DispersionResult:
    omega: float
    kappa: float
    iterations: int = 0


def check_norm(p):
    """Coerce ``p`` to a float norm index, accepting ``"inf"``."""
    if isinstance(p, str):
        p = float(p.strip().lower().replace("infinity", "inf"))
    p = float(p)
    if math.isnan(p) or p < 1.0:
        raise ValueError(f"norm index must be >= 1 or inf, got {p!r}")
    return p


def conjugate(p):
    """Hölder conjugate: ``1/p + 1/q = 1``."""
    p = check_norm(p)
    if p == 1.0:
        return INF
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def lp_norm(x, p, axis=None):
    x = np.abs(np.asarray(x, dtype=np.float64))
    if math.isinf(p):
        return x.max(axis=axis)
    if p == 1.0:
        return x.sum(axis=axis)
    if p == 2.0:
        return np.sqrt((x * x).sum(axis=axis))
    return (x ** p).sum(axis=axis) ** (1.0 / p)


def _vector(v):
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("dispersion of an empty vector is undefined")
    if not np.all(np.isfinite(v)):
        raise ValueError("dispersion requires finite entries")
    return v


def dispersion_closed(v, p):
    """Exact p-mean and p-variance for ``p`` in {1, 2, inf}.

    p=1 uses the average of the two middle order statistics as the median
    and top-half-minus-bottom-half as the variance; p=2 returns the mean and
    the root of the *unnormalised* sum of squared deviations; p=inf returns
    the mid-range and half the range.
    """
    v = _vector(v)
    p = check_norm(p)
    if math.isinf(p):
        hi, lo = v.max(), v.min()
        return DispersionResult(omega=float(0.5 * (hi + lo)), kappa=float(0.5 * (hi - lo)))
    if p == 2.0:
        mean = v.mean()
        return DispersionResult(omega=float(mean), kappa=float(np.sqrt(np.sum((v - mean) ** 2))))
    if p == 1.0:
        srt = np.sort(v)[::-1]
        n = srt.size
        lo_i, hi_i = (n + 1) // 2, -(-(n + 1) // 2)
        omega = 0.5 * (srt[lo_i - 1] + srt[hi_i - 1])
        kappa = srt[:lo_i].sum() - srt[hi_i - 1:].sum()
        return DispersionResult(omega=float(omega), kappa=float(kappa))
    raise ValueError(f"no closed form for p={p}; use dispersion_search")


def dispersion_search(v, p, tol=DEFAULT_TOL, max_iter=MAX_ITER, *, backend_name=None):
    """p-mean by bisection on the first-order balance condition.

    The balance function ``sum sign(v - w) |v - w|^(p-1)`` is decreasing in
    ``w`` with a root in ``[min v, max v]``; the search stops once the
    bracket is narrower than ``tol``.  For ``p = inf`` the limiting balance
    ``(max v - w) - (w - min v)`` is used.  Raises ``ConvergenceError``
    after ``max_iter`` halvings.
    """
    v = _vector(v)
    p = check_norm(p)
    if tol <= 0:
        raise ValueError("tol must be positive")
    kern = backend.resolve(backend_name)
    omega, iters = kern.mean_root(v, p, float(tol), int(max_iter))
    return DispersionResult(omega=float(omega), kappa=float(lp_norm(v - omega, p)), iterations=int(iters))


def dispersion(v, p, tol=DEFAULT_TOL):
    """Closed form where one exists, bisection otherwise."""
    p = check_norm(p)
    if p in CLOSED_FORMS:
        return dispersion_closed(v, p)
    return dispersion_search(v, p, tol)


def kappa_for_penalty(v, p, tol=DEFAULT_TOL):
    """Dispersion at the conjugate index of ``p``, as used by the L_p penalties."""
    return dispersion(v, conjugate(p), tol)
