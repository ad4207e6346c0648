"""Deterministic summation policy used by every averaged quantity.

Two layers are fixed once and for all so that independently written code
paths (fast, brute-force oracle, parallel) produce bit-identical floats:

1. Window statistics (the inner sums over a short progression) are
   *correctly rounded*: the exact real sum of the float64 inputs is formed
   and rounded once.  ``ExactComplexSum`` does this with integer
   accumulators on the 2**-1074 grid, so rolling add/remove updates are
   order-independent; ``math.fsum`` produces the same value for a one-shot
   sum over the same addends.

2. Outer accumulations over n use fixed-block summation with block size
   ``BLOCK`` (4096): each block is reduced by ``np.sum`` (numpy's
   deterministic pairwise reduce), block partials are then combined in a
   fixed binary tree.  Results depend only on the values, never on
   chunking or worker count, provided callers cut work on BLOCK
   boundaries and feed per-n values through these helpers.
"""

from __future__ import annotations

import math

import numpy as np

BLOCK = 4096

# Every finite float64 x with |x| <= 2**53 satisfies x * 2**1074 in ZZ exactly.
_GRID_BITS = 1074
_GRID = 1 << _GRID_BITS


def float_to_grid(x: float) -> int:
    """Exact integer representation of a float64 on the 2**-1074 grid."""
    p, q = x.as_integer_ratio()
    # q is a power of two dividing 2**1074 whenever the exponent is in range
    return p * (_GRID // q)


def grid_to_float(k: int) -> float:
    """Correctly rounded float64 of k * 2**-1074 (int/int truediv rounds once)."""
    return k / _GRID


class ExactComplexSum:
    """Exact rolling sum of complex values whose parts are float64.

    add/remove are exact integer operations, so the accumulated value is
    the exact sum of the current multiset regardless of update order.
    ``re``/``im``/``abs`` round that exact value once, matching
    ``math.fsum`` over the same addends.
    """

    __slots__ = ("_re", "_im")

    def __init__(self):
        self._re = 0
        self._im = 0

    def add(self, re: float, im: float = 0.0) -> None:
        self._re += float_to_grid(re)
        self._im += float_to_grid(im)

    def remove(self, re: float, im: float = 0.0) -> None:
        self._re -= float_to_grid(re)
        self._im -= float_to_grid(im)

    def add_complex(self, z: complex) -> None:
        self.add(z.real, z.imag)

    def remove_complex(self, z: complex) -> None:
        self.remove(z.real, z.imag)

    def re(self) -> float:
        return grid_to_float(self._re)

    def im(self) -> float:
        return grid_to_float(self._im)

    def abs(self) -> float:
        return cabs(self.re(), self.im())

    def clear(self) -> None:
        self._re = 0
        self._im = 0


def cabs(re: float, im: float) -> float:
    """Canonical complex magnitude; every code path uses this one function."""
    return math.hypot(re, im)


def exact_window_sum(values) -> tuple[float, float]:
    """Correctly rounded (re, im) of a finite iterable of complex values."""
    vals = list(values)
    return (math.fsum(v.real for v in vals), math.fsum(v.imag for v in vals))


def block_partials(values: np.ndarray) -> list[float]:
    """Per-BLOCK partial sums (np.sum each block), in index order."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    return [
        float(np.sum(values[start : start + BLOCK]))
        for start in range(0, values.size, BLOCK)
    ]


def combine_partials(partials: list[float]) -> float:
    """Fixed pairwise binary tree over block partials."""
    if not partials:
        return 0.0
    while len(partials) > 1:
        nxt = [partials[i] + partials[i + 1] for i in range(0, len(partials) - 1, 2)]
        if len(partials) % 2:
            nxt.append(partials[-1])
        partials = nxt
    return partials[0]


def pairwise_block_sum(values: np.ndarray) -> float:
    """Sum a 1-D float64 array under the library's fixed summation policy."""
    return combine_partials(block_partials(values))


def pairwise_block_sum_complex(values: np.ndarray) -> complex:
    """Complex variant: real and imaginary streams reduced independently."""
    values = np.ascontiguousarray(values, dtype=np.complex128)
    re = pairwise_block_sum(values.real)
    im = pairwise_block_sum(values.imag)
    return complex(re, im)
