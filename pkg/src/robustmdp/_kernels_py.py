"""Pure numpy implementation of the per-state kernels.

Mirrors the compiled ``_kernels`` module function for function.  Row
operations are vectorised across states where the recurrence allows it;
the per-step greedy search loops over rows in Python.
"""
import math

import numpy as np

from robustmdp.errors import ConvergenceError


def _as_rows(B, sigma):
    B = np.ascontiguousarray(B, dtype=np.float64)
    sigma = np.ascontiguousarray(sigma, dtype=np.float64)
    return B, sigma


def _count_at_least(B, zeta):
    return np.count_nonzero(B >= zeta[:, None], axis=1).astype(np.int64)


def pour_l1(B, sigma):
    B, sigma = _as_rows(B, sigma)
    k = np.arange(1, B.shape[1] + 1, dtype=np.float64)
    lam = (np.cumsum(B, axis=1) - sigma[:, None]) / k
    zeta = lam.max(axis=1)
    chi = np.maximum(_count_at_least(B, zeta), 1)
    flat = sigma == 0.0
    zeta[flat] = B[flat, 0]
    chi[flat] = 1
    return zeta, chi


def pour_l2(B, sigma):
    B, sigma = _as_rows(B, sigma)
    n, A = B.shape
    b1 = B[:, 0].copy()
    D = B - b1[:, None]
    k = np.arange(1, A + 1, dtype=np.float64)
    s = np.cumsum(D, axis=1)
    ss = np.cumsum(D * D, axis=1)
    disc = k * (sigma * sigma)[:, None] + s * s - k * ss
    np.maximum(disc, 0.0, out=disc)
    lam = (s - np.sqrt(disc)) / k
    lam[:, 0] = -sigma
    # first k whose estimate clears the next Q-value ends the greedy loop
    stop = np.ones((n, A), dtype=bool)
    stop[:, :-1] = lam[:, :-1] > D[:, 1:]
    idx = np.argmax(stop, axis=1)
    zeta = lam[np.arange(n), idx] + b1
    chi = (idx + 1).astype(np.int64)
    flat = sigma == 0.0
    zeta[flat] = b1[flat]
    chi[flat] = 1
    return zeta, chi


def pour_linf(B, sigma):
    B, sigma = _as_rows(B, sigma)
    zeta = B[:, 0] - sigma
    chi = _count_at_least(B, zeta)
    chi[sigma == 0.0] = 1
    return zeta, chi


def pour_bisect(B, sigma, p, tol, max_iter):
    B, sigma = _as_rows(B, sigma)
    n, A = B.shape
    zeta = B[:, 0].copy()
    chi = np.ones(n, dtype=np.int64)
    rows = np.flatnonzero(sigma > 0.0)
    if A == 1:
        zeta[rows] -= sigma[rows]
        return zeta, chi
    if rows.size == 0:
        return zeta, chi
    Bs = B[rows]
    target = sigma[rows] ** p
    lo = Bs[:, 0] - sigma[rows]
    hi = Bs[:, 0].copy()
    live = hi - lo > tol
    it = 0
    while live.any():
        if it >= max_iter:
            raise ConvergenceError(
                f"water-pouring bisection did not reach tol={tol} in {max_iter} steps"
            )
        it += 1
        mid = 0.5 * (lo + hi)
        exhausted = live & ((mid <= lo) | (mid >= hi))
        live &= ~exhausted
        f = (np.maximum(Bs - mid[:, None], 0.0) ** p).sum(axis=1)
        go_up = live & (f > target)
        go_down = live & ~(f > target)
        lo = np.where(go_up, mid, lo)
        hi = np.where(go_down, mid, hi)
        live &= hi - lo > tol
    zr = 0.5 * (lo + hi)
    zeta[rows] = zr
    chi[rows] = _count_at_least(Bs, zr)
    return zeta, chi


def _step_root(b, k, sg, p, tol, max_iter):
    lo, hi = b[k - 1] - sg, b[k - 1]
    target = sg ** p
    head = b[:k]
    it = 0
    while hi - lo > tol:
        if it >= max_iter:
            raise ConvergenceError(
                f"per-step bisection did not reach tol={tol} in {max_iter} steps"
            )
        it += 1
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if math.fsum((x - mid) ** p for x in head) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def pour_greedy(B, sigma, p, tol, max_iter):
    B, sigma = _as_rows(B, sigma)
    n, A = B.shape
    zeta = np.empty(n)
    chi = np.empty(n, dtype=np.int64)
    for r in range(n):
        b = B[r].tolist()
        sg = float(sigma[r])
        if sg == 0.0:
            zeta[r], chi[r] = b[0], 1
            continue
        k, lam = 1, b[0] - sg
        while k < A and lam <= b[k]:
            k += 1
            lam = _step_root(b, k, sg, p, tol, max_iter)
        zeta[r], chi[r] = lam, k
    return zeta, chi


def mean_root(v, p, tol, max_iter):
    v = np.ascontiguousarray(v, dtype=np.float64)
    vmin, vmax = float(v.min()), float(v.max())
    lo, hi = vmin, vmax
    q1 = p - 1.0
    it = 0
    while hi - lo > tol:
        if it >= max_iter:
            raise ConvergenceError(
                f"p-mean bisection did not reach tol={tol} in {max_iter} steps"
            )
        it += 1
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if math.isinf(p):
            h = (vmax - mid) - (mid - vmin)
        else:
            d = v - mid
            h = float(np.dot(np.sign(d), np.abs(d) ** q1))
        if h > 0.0:
            lo = mid
        elif h < 0.0:
            hi = mid
        else:
            return mid, it
    return 0.5 * (lo + hi), it
