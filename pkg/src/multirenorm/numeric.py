"""Precision handling and one-dimensional root isolation.

Hardware doubles are used up to 53 bits; anything above switches to mpmath
``mpf`` values evaluated under ``mpmath.workprec``.  All map evaluation code is
written against plain arithmetic operators so the same functions serve both.
"""
from __future__ import annotations

import math
from contextlib import nullcontext

import mpmath
import numpy as np
from scipy.optimize import brentq

from .errors import PrecisionExhausted

DOUBLE_BITS = 53


def uses_mp(bits: int) -> bool:
    return bits > DOUBLE_BITS


def workprec(bits: int):
    return mpmath.workprec(bits) if uses_mp(bits) else nullcontext()


def to_real(x, bits: int = DOUBLE_BITS):
    if uses_mp(bits):
        return mpmath.mpf(x)
    return float(x)


def unit_roundoff(bits: int) -> float:
    return 2.0 ** (1 - bits)


def rsqrt(x):
    if isinstance(x, mpmath.mpf):
        return mpmath.sqrt(x)
    return math.sqrt(x)


def is_finite(x) -> bool:
    if isinstance(x, mpmath.mpf):
        return mpmath.isfinite(x)
    if isinstance(x, np.ndarray):
        return bool(np.all(np.isfinite(x)))
    return math.isfinite(x)


def bisect(g, a, b, bits: int = DOUBLE_BITS, xtol=None, maxiter: int = 2000):
    """Root of ``g`` in [a, b] given a sign change.  Brent for doubles."""
    if xtol is None:
        xtol = 4 * unit_roundoff(bits)
    if not uses_mp(bits):
        a, b = float(a), float(b)
        ga, gb = g(a), g(b)
        if ga == 0:
            return a
        if gb == 0:
            return b
        if ga * gb > 0:
            raise ValueError("no sign change on bracket")
        return brentq(g, a, b, xtol=xtol * max(1.0, abs(a), abs(b)) * 0.25,
                      rtol=4 * np.finfo(float).eps, maxiter=maxiter)
    with mpmath.workprec(bits):
        a, b = mpmath.mpf(a), mpmath.mpf(b)
        ga = g(a)
        gb = g(b)
        if ga == 0:
            return a
        if gb == 0:
            return b
        if ga * gb > 0:
            raise ValueError("no sign change on bracket")
        for _ in range(maxiter):
            mid = (a + b) / 2
            if abs(b - a) <= xtol * max(1, abs(mid)) or mid in (a, b):
                return mid
            gm = g(mid)
            if gm == 0:
                return mid
            if (gm > 0) == (ga > 0):
                a, ga = mid, gm
            else:
                b = mid
    raise PrecisionExhausted("bisection did not converge", bracket=(float(a), float(b)))


def sign_brackets(xs: np.ndarray, ys: np.ndarray):
    """Consecutive grid cells on which ``ys`` changes sign (or hits zero)."""
    ys = np.asarray(ys, dtype=float)
    s = np.sign(ys)
    out = []
    for i in range(len(xs) - 1):
        if s[i] == 0:
            out.append((xs[i], xs[i]))
        elif s[i] * s[i + 1] < 0:
            out.append((xs[i], xs[i + 1]))
    if s[-1] == 0:
        out.append((xs[-1], xs[-1]))
    return out


def isolate_roots(g_vec, g, lo, hi, cells: int = 4096, bits: int = DOUBLE_BITS):
    """All sign-change roots of a scalar function on [lo, hi].

    ``g_vec`` evaluates in doubles on a numpy grid (used only to locate
    brackets); ``g`` is the scalar function refined at working precision.
    """
    xs = np.linspace(float(lo), float(hi), cells + 1)
    with np.errstate(all="ignore"):
        ys = g_vec(xs)
    roots = []
    for a, b in sign_brackets(xs, ys):
        if a == b:
            roots.append(to_real(a, bits))
            continue
        try:
            with workprec(bits):
                roots.append(bisect(g, to_real(a, bits), to_real(b, bits), bits=bits))
        except ValueError:
            # sign change seen in doubles but lost at higher precision
            continue
    return roots
