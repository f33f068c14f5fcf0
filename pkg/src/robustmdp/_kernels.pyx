# cython: language_level=3
"""Compiled per-state kernels for the robust Bellman sweep.

Every ``pour_*`` routine takes a C-contiguous ``(n, A)`` array whose rows
are already sorted in descending order, plus one penalty per row, and
returns ``(zeta, chi)`` arrays.  Semantics match ``_kernels_py`` exactly.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport pow, sqrt, INFINITY

from robustmdp.errors import ConvergenceError

cnp.import_array()


cdef inline double _tail_mass(const double[::1] b, double x, double p) noexcept nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0, d
    for i in range(b.shape[0]):
        d = b[i] - x
        if d < 0.0:
            break
        acc += pow(d, p)
    return acc


cdef inline double _head_mass(const double[::1] b, Py_ssize_t k, double x, double p) noexcept nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(k):
        acc += pow(b[i] - x, p)
    return acc


cdef inline Py_ssize_t _count_at_least(const double[::1] b, double x) noexcept nogil:
    cdef Py_ssize_t i, c = 0
    for i in range(b.shape[0]):
        if b[i] >= x:
            c += 1
    return c


def pour_l1(const double[:, ::1] B, const double[::1] sigma):
    cdef Py_ssize_t n = B.shape[0], A = B.shape[1], r, k
    cdef double s, lam, best
    zeta = np.empty(n, dtype=np.float64)
    chi = np.empty(n, dtype=np.int64)
    cdef double[::1] z = zeta
    cdef long long[::1] c = chi
    for r in range(n):
        if sigma[r] == 0.0:
            z[r] = B[r, 0]
            c[r] = 1
            continue
        s = 0.0
        best = -INFINITY
        for k in range(A):
            s += B[r, k]
            lam = (s - sigma[r]) / (k + 1)
            if lam > best:
                best = lam
        z[r] = best
        c[r] = max(1, _count_at_least(B[r], best))
    return zeta, chi


def pour_l2(const double[:, ::1] B, const double[::1] sigma):
    cdef Py_ssize_t n = B.shape[0], A = B.shape[1], r, k
    cdef double b1, sg, lam, s, ss, d, disc
    zeta = np.empty(n, dtype=np.float64)
    chi = np.empty(n, dtype=np.int64)
    cdef double[::1] z = zeta
    cdef long long[::1] c = chi
    for r in range(n):
        sg = sigma[r]
        b1 = B[r, 0]
        if sg == 0.0:
            z[r] = b1
            c[r] = 1
            continue
        # shifted by b1 to keep the quadratic well conditioned
        k = 1
        lam = -sg
        s = 0.0
        ss = 0.0
        while k < A and lam <= B[r, k] - b1:
            d = B[r, k] - b1
            k += 1
            s += d
            ss += d * d
            disc = k * (sg * sg) + s * s - k * ss
            if disc < 0.0:
                disc = 0.0
            lam = (s - sqrt(disc)) / k
        z[r] = lam + b1
        c[r] = k
    return zeta, chi


def pour_linf(const double[:, ::1] B, const double[::1] sigma):
    cdef Py_ssize_t n = B.shape[0], r
    zeta = np.empty(n, dtype=np.float64)
    chi = np.empty(n, dtype=np.int64)
    cdef double[::1] z = zeta
    cdef long long[::1] c = chi
    for r in range(n):
        z[r] = B[r, 0] - sigma[r]
        c[r] = 1 if sigma[r] == 0.0 else _count_at_least(B[r], z[r])
    return zeta, chi


def pour_bisect(const double[:, ::1] B, const double[::1] sigma, double p,
                double tol, int max_iter):
    cdef Py_ssize_t n = B.shape[0], A = B.shape[1], r
    cdef double lo, hi, mid, target
    cdef int it
    zeta = np.empty(n, dtype=np.float64)
    chi = np.empty(n, dtype=np.int64)
    cdef double[::1] z = zeta
    cdef long long[::1] c = chi
    for r in range(n):
        if sigma[r] == 0.0:
            z[r] = B[r, 0]
            c[r] = 1
            continue
        if A == 1:
            z[r] = B[r, 0] - sigma[r]
            c[r] = 1
            continue
        target = pow(sigma[r], p)
        lo = B[r, 0] - sigma[r]
        hi = B[r, 0]
        it = 0
        while hi - lo > tol:
            if it >= max_iter:
                raise ConvergenceError(
                    f"water-pouring bisection did not reach tol={tol} in {max_iter} steps"
                )
            it += 1
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if _tail_mass(B[r], mid, p) > target:
                lo = mid
            else:
                hi = mid
        z[r] = 0.5 * (lo + hi)
        c[r] = _count_at_least(B[r], z[r])
    return zeta, chi


cdef double _step_root(const double[::1] b, Py_ssize_t k, double sg, double p,
                       double tol, int max_iter) except? -1e308:
    cdef double lo = b[k - 1] - sg, hi = b[k - 1], mid, target = pow(sg, p)
    cdef int it = 0
    while hi - lo > tol:
        if it >= max_iter:
            raise ConvergenceError(
                f"per-step bisection did not reach tol={tol} in {max_iter} steps"
            )
        it += 1
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _head_mass(b, k, mid, p) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def pour_greedy(const double[:, ::1] B, const double[::1] sigma, double p,
                double tol, int max_iter):
    cdef Py_ssize_t n = B.shape[0], A = B.shape[1], r, k
    cdef double lam
    zeta = np.empty(n, dtype=np.float64)
    chi = np.empty(n, dtype=np.int64)
    cdef double[::1] z = zeta
    cdef long long[::1] c = chi
    for r in range(n):
        if sigma[r] == 0.0:
            z[r] = B[r, 0]
            c[r] = 1
            continue
        k = 1
        lam = B[r, 0] - sigma[r]
        while k < A and lam <= B[r, k]:
            k += 1
            lam = _step_root(B[r], k, sigma[r], p, tol, max_iter)
        z[r] = lam
        c[r] = k
    return zeta, chi


def mean_root(const double[::1] v, double p, double tol, int max_iter):
    """Root of the balance function for the p-mean; returns (omega, iterations)."""
    cdef Py_ssize_t n = v.shape[0], i
    cdef double lo = v[0], hi = v[0], vmin, vmax, mid, h, d
    cdef int it = 0
    for i in range(n):
        if v[i] < lo:
            lo = v[i]
        if v[i] > hi:
            hi = v[i]
    vmin = lo
    vmax = hi
    while hi - lo > tol:
        if it >= max_iter:
            raise ConvergenceError(
                f"p-mean bisection did not reach tol={tol} in {max_iter} steps"
            )
        it += 1
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if p == INFINITY:
            h = (vmax - mid) - (mid - vmin)
        else:
            h = 0.0
            for i in range(n):
                d = v[i] - mid
                if d > 0.0:
                    h += pow(d, p - 1.0)
                elif d < 0.0:
                    h -= pow(-d, p - 1.0)
        if h > 0.0:
            lo = mid
        elif h < 0.0:
            hi = mid
        else:
            return mid, it
    return 0.5 * (lo + hi), it
