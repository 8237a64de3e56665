"""Exact dimension counting for log-domain spectra.

Block spectra at large n have eigenvalues far below the float underflow
threshold and eigenvector counts far above 2**53, so subspace dimensions are
tracked as exact Python integers and eigenvalues as base-2 logarithms. The
helpers here move between the two without losing the exactness of counts.
"""

from __future__ import annotations

import math

_LINEAR_SAFE_LOG2 = -900.0  # 2**x is a normal float well above this
_LINEAR_SAFE_BITS = 900


def log2_int(n: int) -> float:
    """log2 of a positive integer of arbitrary size."""
    if n <= 0:
        raise ValueError("log2_int needs a positive integer")
    return math.log2(n)


def count_mass(count: int, log2_value: float) -> float:
    """count * 2**log2_value, safe against float under/overflow of the factors."""
    if count < 0:
        raise ValueError("count must be non-negative")
    if count == 0 or log2_value == -math.inf:
        return 0.0
    if log2_value > _LINEAR_SAFE_LOG2 and count.bit_length() < _LINEAR_SAFE_BITS:
        return count * 2.0 ** log2_value
    return 2.0 ** (log2_value + math.log2(count))


def pow2_floor(x: float) -> int:
    """floor(2**x) as an exact integer for arbitrarily large x."""
    if x < 0:
        return 0
    fl = math.floor(x)
    frac = x - fl
    if fl <= 52:
        return int(2.0 ** x)
    mant = int(math.floor(2.0 ** (frac + 52)))
    return mant << (fl - 52)


def ceil_count(deficit: float, log2_value: float) -> int:
    """Smallest integer k with k * 2**log2_value >= deficit (deficit > 0)."""
    if deficit <= 0.0:
        return 0
    if log2_value == -math.inf:
        raise ValueError("cannot cover a positive deficit with zero eigenvalues")
    value = 2.0 ** log2_value
    if value > 0.0 and deficit / value < 2.0 ** 52:
        return max(1, math.ceil(deficit / value))
    e = math.log2(deficit) - log2_value
    fl = math.floor(e)
    frac = e - fl
    mant = int(math.ceil(2.0 ** (frac + 52)))
    return max(1, mant << (fl - 52) if fl >= 52 else mant >> (52 - fl))
