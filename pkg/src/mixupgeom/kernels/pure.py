"""Pure-Python scalar kernels for the fixed-point solves.

These are the hot inner loops of the closed-form feature solver: one
1-D root find per mixup coefficient. A compiled twin with identical
semantics lives in ``_fast.pyx``; the package selects whichever is
available at import time (see ``kernels/__init__.py``).

All routines work on plain floats. ``m2`` always denotes the squared
classifier multiplier and ``lh`` the feature-decay coefficient.
"""

from __future__ import annotations

import math

BACKEND = "pure"

_K_HI = -1e-12
_SCAN_POINTS = 512
_BISECT_TOL = 1e-13


class KernelSolveError(RuntimeError):
    """Raised when a scalar root find cannot bracket or converge."""


def same_class_equation(k: float, C: int, m2: float, lh: float) -> float:
    """Log-form residual of the same-class scalar equation at k < 0.

    The raw equation equates exp(-C*k) with C*m2/((1-C)*lh*k) + 1 - C.
    exp(-C*k) overflows for modestly negative k at large C, so the
    residual is evaluated as -C*k - log(rhs) whenever rhs > 0. When
    rhs <= 0 the raw residual is certainly positive and a sentinel of
    the correct sign is returned.
    """
    rhs = C * m2 / ((1.0 - C) * lh * k) + 1.0 - C
    if rhs <= 0.0:
        return math.inf
    return -C * k - math.log(rhs)


def solve_same_class_k(C: int, m2: float, lh: float) -> float:
    """Root K < 0 of the same-class equation, bisected to ~1e-14.

    The residual is strictly decreasing in k on (-inf, 0), so a single
    expanding bracket suffices.
    """
    hi = -1e-16
    lo = -1.0
    expansions = 0
    while same_class_equation(lo, C, m2, lh) < 0.0:
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
        if same_class_equation(mid, C, m2, lh) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _inner_for_k(C, m2, lh, lam, log_s, x_guess):
    """Inner product x = <w_i, h> solving x = log(S) + log(p_i(x)) for a
    fixed candidate tail value, where p_i(x) = lam + beta*x with
    beta = (1-C)*lh/(C*m2) < 0.

    The left-minus-right residual is strictly increasing in x, so a
    safeguarded Newton iteration (bisection fallback on a maintained
    bracket) converges for any start.
    """
    beta = (1.0 - C) * lh / (C * m2)
    x_cap = -lam / beta  # p_i(x) hits zero here

    def phi(x):
        return x - log_s - math.log(lam + beta * x)

    # upper bracket end: approach the p_i > 0 boundary until phi > 0
    gap = 1e-6 * max(1.0, abs(x_cap))
    hi = x_cap - gap
    tries = 0
    while phi(hi) < 0.0:
        gap *= 1e-4
        hi = x_cap - gap
        tries += 1
        if tries > 20:
            raise KernelSolveError("inner solve: no positive bracket end")
    lo = min(x_guess, hi - 1.0)
    step = 1.0
    while phi(lo) > 0.0:
        step *= 4.0
        lo -= step
        if step > 1e20:
            raise KernelSolveError("inner solve: no negative bracket end")

    x = min(max(x_guess, lo), hi)
    for _ in range(100):
        p = lam + beta * x
        f = x - log_s - math.log(p)
        if f > 0.0:
            hi = x
        else:
            lo = x
        if abs(f) < 1e-13:
            break
        d = 1.0 - beta / p
        x_new = x - f / d
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if x_new == x:
            break
        x = x_new
    return x


def _lse3(a: float, b: float, c: float) -> float:
    m = max(a, b, c)
    return m + math.log(math.exp(a - m) + math.exp(b - m) + math.exp(c - m))


def _diff_state(k, C, m2, lh, lam, x_guess):
    """Outer residual and inner product at candidate k < 0.

    The residual is partition-sum consistency in log form:
    log(S) - log((C-2)*exp(k) + exp(x) + exp(x_ip)) with
    S = exp(k)/p_tail fixed by the tail stationarity identity.
    """
    p_tail = (1.0 - C) * lh * k / (C * m2)
    log_s = k - math.log(p_tail)
    x = _inner_for_k(C, m2, lh, lam, log_s, x_guess)
    x_ip = -(C - 2.0) * k - x
    tail_term = k + math.log(C - 2.0) if C > 2 else -math.inf
    return log_s - _lse3(tail_term, x, x_ip), x


def solve_diff_k(C: int, m2: float, lh: float, lam: float):
    """Solve the different-class fixed point for 0 < lam < 1, C >= 3.

    Returns (k_lambda, inner_i). The outer residual is not known to be
    monotone in k, so a dense scan locates a sign change before
    bisection refines it.
    """
    lo = -1.0
    lo_cap = -600.0 / max(C - 2.0, 1.0)
    bracket = None
    while bracket is None:
        step = (_K_HI - lo) / (_SCAN_POINTS - 1)
        k_prev = lo
        f_prev, x_prev = _diff_state(lo, C, m2, lh, lam, 0.0)
        guess = x_prev
        for j in range(1, _SCAN_POINTS):
            k = lo + j * step
            f, guess = _diff_state(k, C, m2, lh, lam, guess)
            if (f > 0.0) != (f_prev > 0.0):
                bracket = (k_prev, f_prev, k, f)
                break
            k_prev, f_prev = k, f
        if bracket is None:
            lo *= 2.0
            if lo < lo_cap:
                raise KernelSolveError(
                    "different-class fixed point: no sign change in "
                    f"[{lo_cap}, {_K_HI}] (C={C}, m2={m2}, lh={lh}, lam={lam})"
                )
    k1, f1, k2, f2 = bracket
    x = guess
    while k2 - k1 > _BISECT_TOL:
        mid = 0.5 * (k1 + k2)
        if mid == k1 or mid == k2:
            break
        fm, x = _diff_state(mid, C, m2, lh, lam, x)
        if (fm > 0.0) == (f1 > 0.0):
            k1, f1 = mid, fm
        else:
            k2, f2 = mid, fm
    k = 0.5 * (k1 + k2)
    f, x = _diff_state(k, C, m2, lh, lam, x)
    if not abs(f) < 1e-8:
        raise KernelSolveError(
            f"different-class fixed point did not converge: residual={f} "
            f"(C={C}, m2={m2}, lh={lh}, lam={lam})"
        )
    return k, x


def solve_two_class_inner(m2: float, lh: float, lam: float) -> float:
    """Two-class different-class case: inner products are +/-x and the
    stationarity condition is a single increasing scalar equation in x.
    """

    def g(x: float) -> float:
        return 1.0 / (1.0 + math.exp(-2.0 * x)) - lam + lh * x / (2.0 * m2)

    span = 1.0
    while g(-span) > 0.0 or g(span) < 0.0:
        span *= 2.0
        if span > 1e18:
            raise KernelSolveError(
                f"two-class bracket expansion failed (m2={m2}, lh={lh}, lam={lam})"
            )
    lo, hi = -span, span
    while hi - lo > 1e-14:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
