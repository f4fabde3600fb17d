# cython: language_level=3, boundscheck=False, cdivision=True
"""Compiled twin of ``kernels.pure``.

Same algorithms, same tolerances, same bracketing rules; only the
dispatch overhead differs. Keep the two files in sync.
"""

from libc.math cimport exp, log, sqrt, fabs, INFINITY

from mixupgeom.kernels.pure import KernelSolveError

BACKEND = "fast"

cdef double _K_HI = -1e-12
cdef int _SCAN_POINTS = 512
cdef double _BISECT_TOL = 1e-13


cdef double _same_class_eq(double k, double C, double m2, double lh) nogil:
    cdef double rhs = C * m2 / ((1.0 - C) * lh * k) + 1.0 - C
    if rhs <= 0.0:
        return INFINITY
    return -C * k - log(rhs)


def same_class_equation(double k, C, double m2, double lh):
    """Log-form residual of the same-class scalar equation at k < 0."""
    return _same_class_eq(k, <double> C, m2, lh)


def solve_same_class_k(C, double m2, double lh):
    """Root K < 0 of the same-class equation, bisected to ~1e-14."""
    cdef double c = <double> C
    cdef double hi = -1e-16
    cdef double lo = -1.0
    cdef double mid
    cdef int expansions = 0
    while _same_class_eq(lo, c, m2, lh) < 0.0:
        lo *= 2.0
        expansions += 1
        if expansions > 60:
            raise KernelSolveError(
                f"same-class bracket expansion failed (C={C}, m2={m2}, lh={lh})"
            )
    while hi - lo > 1e-14:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if _same_class_eq(mid, c, m2, lh) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


cdef double _inner_for_k(double C, double m2, double lh, double lam,
                         double log_s, double x_guess) except? -1e300:
    cdef double beta = (1.0 - C) * lh / (C * m2)
    cdef double x_cap = -lam / beta
    cdef double gap, hi, lo, step, x, p, f, d, x_new
    cdef int tries, it

    gap = 1e-6 * max(1.0, fabs(x_cap))
    hi = x_cap - gap
    tries = 0
    while hi - log_s - log(lam + beta * hi) < 0.0:
        gap *= 1e-4
        hi = x_cap - gap
        tries += 1
        if tries > 20:
            raise KernelSolveError("inner solve: no positive bracket end")
    lo = min(x_guess, hi - 1.0)
    step = 1.0
    while lo - log_s - log(lam + beta * lo) > 0.0:
        step *= 4.0
        lo -= step
        if step > 1e20:
            raise KernelSolveError("inner solve: no negative bracket end")

    x = min(max(x_guess, lo), hi)
    for it in range(100):
        p = lam + beta * x
        f = x - log_s - log(p)
        if f > 0.0:
            hi = x
        else:
            lo = x
        if fabs(f) < 1e-13:
            break
        d = 1.0 - beta / p
        x_new = x - f / d
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if x_new == x:
            break
        x = x_new
    return x


cdef inline double _lse3(double a, double b, double c) nogil:
    cdef double m = max(a, max(b, c))
    return m + log(exp(a - m) + exp(b - m) + exp(c - m))


cdef double _diff_state(double k, double C, double m2, double lh, double lam,
                        double* x_io) except? -1e300:
    cdef double p_tail = (1.0 - C) * lh * k / (C * m2)
    cdef double log_s = k - log(p_tail)
    cdef double x = _inner_for_k(C, m2, lh, lam, log_s, x_io[0])
    cdef double x_ip = -(C - 2.0) * k - x
    cdef double tail_term
    if C > 2.0:
        tail_term = k + log(C - 2.0)
    else:
        tail_term = -INFINITY
    x_io[0] = x
    return log_s - _lse3(tail_term, x, x_ip)


def solve_diff_k(C, double m2, double lh, double lam):
    """Solve the different-class fixed point for 0 < lam < 1, C >= 3."""
    cdef double c = <double> C
    cdef double lo = -1.0
    cdef double lo_cap = -600.0 / max(c - 2.0, 1.0)
    cdef double step, k_prev, f_prev, k, f, k1, f1, k2, f2, mid, fm
    cdef double x = 0.0
    cdef int j, found
    cdef double bk1 = 0.0, bf1 = 0.0, bk2 = 0.0, bf2 = 0.0

    found = 0
    while not found:
        step = (_K_HI - lo) / (_SCAN_POINTS - 1)
        k_prev = lo
        x = 0.0
        f_prev = _diff_state(lo, c, m2, lh, lam, &x)
        for j in range(1, _SCAN_POINTS):
            k = lo + j * step
            f = _diff_state(k, c, m2, lh, lam, &x)
            if (f > 0.0) != (f_prev > 0.0):
                bk1 = k_prev
                bf1 = f_prev
                bk2 = k
                bf2 = f
                found = 1
                break
            k_prev = k
            f_prev = f
        if not found:
            lo *= 2.0
            if lo < lo_cap:
                raise KernelSolveError(
                    "different-class fixed point: no sign change in "
                    f"[{lo_cap}, {_K_HI}] (C={C}, m2={m2}, lh={lh}, lam={lam})"
                )
    k1, f1, k2, f2 = bk1, bf1, bk2, bf2
    while k2 - k1 > _BISECT_TOL:
        mid = 0.5 * (k1 + k2)
        if mid == k1 or mid == k2:
            break
        fm = _diff_state(mid, c, m2, lh, lam, &x)
        if (fm > 0.0) == (f1 > 0.0):
            k1 = mid
            f1 = fm
        else:
            k2 = mid
            f2 = fm
    k = 0.5 * (k1 + k2)
    f = _diff_state(k, c, m2, lh, lam, &x)
    if not fabs(f) < 1e-8:
        raise KernelSolveError(
            f"different-class fixed point did not converge: residual={f} "
            f"(C={C}, m2={m2}, lh={lh}, lam={lam})"
        )
    return k, x


def solve_two_class_inner(double m2, double lh, double lam):
    """Two-class different-class case: single increasing equation in x."""
    cdef double span = 1.0
    cdef double lo, hi, mid

    while (1.0 / (1.0 + exp(2.0 * span)) - lam - lh * span / (2.0 * m2) > 0.0
           or 1.0 / (1.0 + exp(-2.0 * span)) - lam + lh * span / (2.0 * m2) < 0.0):
        span *= 2.0
        if span > 1e18:
            raise KernelSolveError(
                f"two-class bracket expansion failed (m2={m2}, lh={lh}, lam={lam})"
            )
    lo = -span
    hi = span
    while hi - lo > 1e-14:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if 1.0 / (1.0 + exp(-2.0 * mid)) - lam + lh * mid / (2.0 * m2) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
