"""Exact evaluation of polynomial phases mod 1.

Two coefficient modes:

- RATIONAL: coefficients are fractions over a common denominator bounded
  by 2**63.  All arithmetic is exact; exceeding the bound raises
  PrecisionError advising FIXED127.
- FIXED127: coefficients are fractional parts on the 2**-127 grid, stored
  as integers k meaning k / 2**127.  Evaluation computes the *quantized*
  polynomial exactly (addition and integer multiplication mod 2**127), so
  results are bit-identical across platforms; the quantization error
  relative to an un-quantized polynomial is the caller's concern.

Integer parts of coefficients never matter mod 1 at integer arguments,
which is why FIXED127 keeps fractional parts only.

The monomial basis is primary.  The binomial basis (coefficients of the
falling-factorial expansion over C(n, i)) is derived by the Stirling
transform, exactly in RATIONAL mode and exactly on the grid in FIXED127
mode (the transform has integer multipliers); the reverse transform
divides by factorials and therefore rounds to the grid in FIXED127 mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConfigurationError, PrecisionError

RATIONAL = "rational"
FIXED127 = "fixed127"

FIXED_BITS = 127
FIXED_MOD = 1 << FIXED_BITS
MAX_RATIONAL_DEN = 1 << 63

# numpy fast block evaluation is used when den * den fits comfortably in int64
_NUMPY_DEN_LIMIT = 1 << 26


def _stirling2(n: int) -> list[list[int]]:
    s = [[0] * (n + 1) for _ in range(n + 1)]
    s[0][0] = 1
    for j in range(1, n + 1):
        for i in range(1, j + 1):
            s[j][i] = s[j - 1][i - 1] + i * s[j - 1][i]
    return s


def _stirling1_signed(n: int) -> list[list[int]]:
    s = [[0] * (n + 1) for _ in range(n + 1)]
    s[0][0] = 1
    for i in range(1, n + 1):
        for j in range(1, i + 1):
            s[i][j] = s[i - 1][j - 1] - (i - 1) * s[i - 1][j]
    return s


def falling_binomial(n: int, i: int) -> int:
    """C(n, i) for any integer n via the falling factorial."""
    num = 1
    for k in range(i):
        num *= n - k
    return num // math.factorial(i)


class PolyPhase:
    """A real polynomial evaluated mod 1 at integer arguments."""

    __slots__ = ("mode", "degree", "_nums", "_den", "_fixed")

    def __init__(self, mode: str, *, nums=None, den=None, fixed=None):
        self.mode = mode
        if mode == RATIONAL:
            if den <= 0:
                raise ConfigurationError("denominator must be positive")
            if den > MAX_RATIONAL_DEN:
                raise PrecisionError(
                    f"common denominator {den} exceeds 2**63; use FIXED127 mode"
                )
            nums = list(nums)
            while len(nums) > 1 and nums[-1] == 0:
                nums.pop()
            self._nums = nums
            self._den = den
            self._fixed = None
        elif mode == FIXED127:
            fixed = [k % FIXED_MOD for k in fixed]
            while len(fixed) > 1 and fixed[-1] == 0:
                fixed.pop()
            self._fixed = fixed
            self._nums = None
            self._den = None
        else:
            raise ConfigurationError(f"unknown mode {mode!r}")
        self.degree = (len(nums) if mode == RATIONAL else len(fixed)) - 1

    # -- constructors -------------------------------------------------

    @classmethod
    def from_fractions(cls, coeffs) -> "PolyPhase":
        coeffs = [Fraction(c) for c in coeffs] or [Fraction(0)]
        den = 1
        for c in coeffs:
            den = den * c.denominator // math.gcd(den, c.denominator)
        if den > MAX_RATIONAL_DEN:
            raise PrecisionError(
                f"common denominator {den} exceeds 2**63; use FIXED127 mode"
            )
        nums = [int(c * den) for c in coeffs]
        return cls(RATIONAL, nums=nums, den=den)

    @classmethod
    def from_fixed(cls, ints) -> "PolyPhase":
        return cls(FIXED127, fixed=list(ints) or [0])

    @classmethod
    def zero(cls, mode: str = RATIONAL) -> "PolyPhase":
        return cls.from_fractions([0]) if mode == RATIONAL else cls.from_fixed([0])

    @classmethod
    def quantize(cls, coeffs) -> "PolyPhase":
        """Round the fractional parts of rational/float coefficients onto
        the 2**-127 grid (round half up)."""
        out = []
        for c in coeffs:
            c = Fraction(c)
            frac = c - (c.numerator // c.denominator)
            k = (frac.numerator * FIXED_MOD * 2 + frac.denominator) // (2 * frac.denominator)
            out.append(k % FIXED_MOD)
        return cls.from_fixed(out)

    # -- coefficient access --------------------------------------------

    def coefficients(self) -> list[Fraction]:
        """Monomial coefficients as exact fractions (mod 1 in FIXED127)."""
        if self.mode == RATIONAL:
            return [Fraction(c, self._den) for c in self._nums]
        return [Fraction(k, FIXED_MOD) for k in self._fixed]

    def to_binomial_basis(self) -> list[Fraction]:
        """Coefficients a_i with P(n) = sum a_i * C(n, i).

        Exact in RATIONAL mode; in FIXED127 mode the transform's integer
        multipliers keep it exact on the grid (mod 1).
        """
        d = self.degree
        s2 = _stirling2(d)
        if self.mode == RATIONAL:
            beta = self.coefficients()
            return [
                sum((beta[j] * (s2[j][i] * math.factorial(i)) for j in range(i, d + 1)),
                    Fraction(0))
                for i in range(d + 1)
            ]
        out = []
        for i in range(d + 1):
            acc = 0
            for j in range(i, d + 1):
                acc = (acc + self._fixed[j] * s2[j][i] * math.factorial(i)) % FIXED_MOD
            out.append(Fraction(acc, FIXED_MOD))
        return out

    @classmethod
    def from_binomial_basis(cls, alphas, mode: str = RATIONAL) -> "PolyPhase":
        """Inverse transform; divides by factorials, so FIXED127 rounds."""
        alphas = [Fraction(a) for a in alphas] or [Fraction(0)]
        d = len(alphas) - 1
        s1 = _stirling1_signed(d)
        betas = [
            sum((alphas[i] * Fraction(s1[i][j], math.factorial(i)) for i in range(j, d + 1)),
                Fraction(0))
            for j in range(d + 1)
        ]
        if mode == RATIONAL:
            return cls.from_fractions(betas)
        return cls.quantize(betas)

    # -- evaluation ----------------------------------------------------

    def eval_mod1(self, n: int) -> Fraction:
        """{P(n)} as an exact fraction in [0, 1)."""
        if self.mode == RATIONAL:
            acc = 0
            r = n % self._den
            for c in reversed(self._nums):
                acc = (acc * r + c) % self._den
            return Fraction(acc, self._den)
        acc = 0
        for k in reversed(self._fixed):
            acc = (acc * n + k) % FIXED_MOD
        return Fraction(acc, FIXED_MOD)

    def eval_float(self, n: int) -> float:
        """Correctly rounded float64 of eval_mod1(n)."""
        f = self.eval_mod1(n)
        return f.numerator / f.denominator

    def eval_block(self, start: int, stop: int) -> np.ndarray:
        """Fractional parts {P(n)} for n in [start, stop) as float64.

        Every entry is the correctly rounded float of the exact value, so
        independent callers get bit-identical arrays.  Small denominators
        go through vectorized int64 arithmetic; otherwise a difference
        table streams the values exactly.
        """
        count = stop - start
        if count <= 0:
            return np.zeros(0, dtype=np.float64)
        if self.mode == RATIONAL and self._den <= _NUMPY_DEN_LIMIT:
            den = self._den
            r = np.arange(start, stop, dtype=np.int64) % den
            acc = np.zeros(count, dtype=np.int64)
            for c in reversed(self._nums):
                acc = (acc * r + c) % den
            return acc.astype(np.float64) / float(den)
        out = np.empty(count, dtype=np.float64)
        cursor = DiffTable(self, start)
        if self.mode == RATIONAL:
            den = self._den
            out[0] = cursor.current_numerator() / den
            for i in range(1, count):
                out[i] = cursor.step_numerator() / den
        else:
            out[0] = cursor.current_numerator() / FIXED_MOD
            for i in range(1, count):
                out[i] = cursor.step_numerator() / FIXED_MOD
        return out

    # -- exact polynomial algebra ---------------------------------------

    def _binop(self, other: "PolyPhase", op) -> "PolyPhase":
        if self.mode != other.mode:
            raise ConfigurationError("mode mismatch in polynomial arithmetic")
        if self.mode == RATIONAL:
            a, b = self.coefficients(), other.coefficients()
            n = max(len(a), len(b))
            a += [Fraction(0)] * (n - len(a))
            b += [Fraction(0)] * (n - len(b))
            return PolyPhase.from_fractions([op(x, y) for x, y in zip(a, b)])
        a, b = list(self._fixed), list(other._fixed)
        n = max(len(a), len(b))
        a += [0] * (n - len(a))
        b += [0] * (n - len(b))
        return PolyPhase.from_fixed([op(x, y) % FIXED_MOD for x, y in zip(a, b)])

    def __add__(self, other):
        return self._binop(other, lambda x, y: x + y)

    def __sub__(self, other):
        return self._binop(other, lambda x, y: x - y)

    def scale(self, k: int) -> "PolyPhase":
        """Integer scalar multiple (exact in both modes)."""
        if self.mode == RATIONAL:
            return PolyPhase(RATIONAL, nums=[c * k for c in self._nums], den=self._den)
        return PolyPhase.from_fixed([(v * k) % FIXED_MOD for v in self._fixed])

    def shift_argument(self, c: int) -> "PolyPhase":
        """P(n + c) as a polynomial in n (exact in both modes)."""
        d = self.degree
        if self.mode == RATIONAL:
            coeffs = self.coefficients()
            out = [Fraction(0)] * (d + 1)
            for j, cj in enumerate(coeffs):
                for i in range(j + 1):
                    out[i] += cj * math.comb(j, i) * c ** (j - i)
            return PolyPhase.from_fractions(out)
        out = [0] * (d + 1)
        for j, kj in enumerate(self._fixed):
            for i in range(j + 1):
                out[i] = (out[i] + kj * math.comb(j, i) * c ** (j - i)) % FIXED_MOD
        return PolyPhase.from_fixed(out)

    def forward_difference(self) -> "PolyPhase":
        """P(n + 1) - P(n)."""
        return self.shift_argument(1) - self

    def compose_affine(self, a: int, b: int) -> "PolyPhase":
        """P(a*n + b) as a polynomial in n (exact in both modes)."""
        d = self.degree
        if self.mode == RATIONAL:
            coeffs = self.coefficients()
            out = [Fraction(0)] * (d + 1)
            for j, cj in enumerate(coeffs):
                for i in range(j + 1):
                    out[i] += cj * math.comb(j, i) * a**i * b ** (j - i)
            return PolyPhase.from_fractions(out)
        out = [0] * (d + 1)
        for j, kj in enumerate(self._fixed):
            for i in range(j + 1):
                out[i] = (out[i] + kj * math.comb(j, i) * a**i * b ** (j - i)) % FIXED_MOD
        return PolyPhase.from_fixed(out)

    def is_zero_mod1(self) -> bool:
        if self.mode == RATIONAL:
            return all(c % self._den == 0 for c in self._nums)
        return all(k == 0 for k in self._fixed)

    def __repr__(self):
        return f"PolyPhase({format_literal(self)!r})"

    def __eq__(self, other):
        if not isinstance(other, PolyPhase) or self.mode != other.mode:
            return NotImplemented
        if self.mode == RATIONAL:
            return self.coefficients() == other.coefficients()
        return self._fixed == other._fixed

    def __hash__(self):
        if self.mode == RATIONAL:
            return hash((self.mode, tuple(self.coefficients())))
        return hash((self.mode, tuple(self._fixed)))


class DiffTable:
    """Finite-difference cursor streaming {P(n)} with addition-only steps.

    Single-owner: never share a cursor across workers; parallel scans use
    independent cursors over disjoint ranges.
    """

    __slots__ = ("mode", "_den", "_vals", "index")

    def __init__(self, poly: PolyPhase, n0: int):
        self.mode = poly.mode
        self.index = n0
        d = poly.degree
        if poly.mode == RATIONAL:
            self._den = poly._den
            pts = [self._eval_num(poly, n0 + i) for i in range(d + 1)]
        else:
            self._den = FIXED_MOD
            pts = [self._eval_num(poly, n0 + i) for i in range(d + 1)]
        # forward differences at n0
        for k in range(1, d + 1):
            for i in range(d, k - 1, -1):
                pts[i] = (pts[i] - pts[i - 1]) % self._den
        self._vals = pts

    @staticmethod
    def _eval_num(poly: PolyPhase, n: int) -> int:
        if poly.mode == RATIONAL:
            acc = 0
            r = n % poly._den
            for c in reversed(poly._nums):
                acc = (acc * r + c) % poly._den
            return acc
        acc = 0
        for k in reversed(poly._fixed):
            acc = (acc * n + k) % FIXED_MOD
        return acc

    def current(self) -> Fraction:
        return Fraction(self._vals[0], self._den)

    def current_numerator(self) -> int:
        return self._vals[0]

    def step(self) -> Fraction:
        """Advance one index; returns the new fractional value."""
        return Fraction(self.step_numerator(), self._den)

    def step_numerator(self) -> int:
        v = self._vals
        for i in range(len(v) - 1):
            v[i] = (v[i] + v[i + 1]) % self._den
        self.index += 1
        return v[0]


def make_diff_table(poly: PolyPhase, n0: int) -> DiffTable:
    return DiffTable(poly, n0)


class VecPolyPhase:
    """A vector of polynomial phases sharing mode and degree bound."""

    __slots__ = ("coords", "mode", "degree")

    def __init__(self, coords):
        coords = list(coords)
        if not coords:
            raise ConfigurationError("vector polynomial needs at least one coordinate")
        modes = {p.mode for p in coords}
        if len(modes) != 1:
            raise ConfigurationError("coordinates must share a mode")
        self.coords = coords
        self.mode = coords[0].mode
        self.degree = max(p.degree for p in coords)

    @property
    def dimension(self) -> int:
        return len(self.coords)

    def eval_mod1(self, n: int) -> tuple[Fraction, ...]:
        return tuple(p.eval_mod1(n) for p in self.coords)

    def eval_block(self, start: int, stop: int) -> np.ndarray:
        return np.stack([p.eval_block(start, stop) for p in self.coords], axis=1)

    def dot(self, ints) -> PolyPhase:
        """Integer linear combination of the coordinates (exact)."""
        acc = self.coords[0].scale(int(ints[0]))
        for k, p in zip(ints[1:], self.coords[1:]):
            acc = acc + p.scale(int(k))
        return acc

    def shift_argument(self, c: int) -> "VecPolyPhase":
        return VecPolyPhase([p.shift_argument(c) for p in self.coords])

    def __eq__(self, other):
        if not isinstance(other, VecPolyPhase):
            return NotImplemented
        return self.coords == other.coords


# ---------------------------------------------------------------------------
# CLI literal syntax


def parse_literal(text: str) -> PolyPhase:
    """Parse "d:c0/den0,c1/den1,..." (RATIONAL) or "fx:hex0,hex1,..."."""
    text = text.strip()
    if text.startswith("fx:"):
        parts = text[3:].split(",")
        return PolyPhase.from_fixed([int(p, 16) for p in parts])
    head, _, rest = text.partition(":")
    try:
        degree = int(head)
    except ValueError as exc:
        raise ConfigurationError(f"bad polynomial literal {text!r}") from exc
    coeffs = []
    for piece in rest.split(","):
        num, _, den = piece.partition("/")
        coeffs.append(Fraction(int(num), int(den) if den else 1))
    if len(coeffs) != degree + 1:
        raise ConfigurationError(
            f"literal declares degree {degree} but has {len(coeffs)} coefficients"
        )
    return PolyPhase.from_fractions(coeffs)


def format_literal(poly: PolyPhase) -> str:
    if poly.mode == RATIONAL:
        body = ",".join(f"{c.numerator}/{c.denominator}" for c in poly.coefficients())
        return f"{poly.degree}:{body}"
    return "fx:" + ",".join(f"{k:x}" for k in poly._fixed)
