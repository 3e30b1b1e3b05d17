"""Exact rational helpers.

All geometry runs on ``gmpy2.mpq``.  Square roots never leave the
rationals: :func:`sqrt_bounds` returns a certified bracket instead.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Union

import gmpy2
from gmpy2 import mpq

Q = mpq
ZERO = mpq(0)
ONE = mpq(1)

# bits of absolute precision for sqrt brackets
SQRT_BITS = 48

RationalLike = Union[int, str, Fraction, "mpq"]


def q(x: RationalLike) -> mpq:
    """Coerce ints, 'r/s' strings, Fractions and mpq values to mpq.

    Floats are rejected on purpose: thresholds must not be rounded silently.
    """
    if isinstance(x, float):
        raise TypeError("floating-point values are not accepted; use r/s")
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, str):
        s = x.strip()
        if not s:
            raise ValueError("empty rational")
        try:
            if "." in s or "e" in s.lower():
                return mpq(Fraction(s))
            return mpq(s)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational: {x!r}") from exc
    return mpq(x)


def sqrt_bounds(x: mpq, bits: int = SQRT_BITS) -> tuple[mpq, mpq]:
    """Return rationals lo <= sqrt(x) <= hi, exact for perfect squares."""
    x = mpq(x)
    if x < 0:
        raise ValueError("negative argument")
    if x == 0:
        return ZERO, ZERO
    n, d = x.numerator, x.denominator
    rn, en = gmpy2.isqrt_rem(n)
    rd, ed = gmpy2.isqrt_rem(d)
    if en == 0 and ed == 0:
        r = mpq(rn, rd)
        return r, r
    scale = gmpy2.mpz(1) << bits
    r = gmpy2.isqrt(n * d * scale * scale)
    denom = d * scale
    return mpq(r, denom), mpq(r + 1, denom)


def sqrt_hi(x: mpq) -> mpq:
    return sqrt_bounds(x)[1]


def sqrt_lo(x: mpq) -> mpq:
    return sqrt_bounds(x)[0]


def fmt(x: mpq) -> str:
    """Canonical text form: '3/4', '2', '-1/3'."""
    x = mpq(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def to_float(x: mpq) -> float:
    return float(x)
