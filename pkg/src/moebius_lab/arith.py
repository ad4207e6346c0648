"""Sieves and algebra of bounded multiplicative functions.

Provides:
- smallest-prime-factor tables (segmented construction, 32-bit storage)
- Mobius / Liouville / totient and packed 1-bounded multiplicative tables
- Dirichlet character enumeration through CRT on prime-power components
- completely multiplicative extensions and the convolution complement
  alpha with beta = beta1 * alpha
- prime-window sets for the dense-set membership predicates
- a binary cache format for sieve tables (magic "MLAB", CRC32 trailer)

Tables are immutable after construction and safe to share across worker
threads; all queries are pure reads.
"""

from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    CacheError,
    ConfigurationError,
    InternalConsistencyError,
    RangeError,
    ResourceError,
)

DEFAULT_MEMORY_BUDGET = 4 << 30  # bytes; spf dominates at 4 bytes per integer

KIND_MOBIUS = "mobius"
KIND_LIOUVILLE = "liouville"
KIND_CUSTOM = "custom"

_KIND_TAGS = {KIND_MOBIUS: 1, KIND_LIOUVILLE: 2, KIND_CUSTOM: 3}
_TAG_KINDS = {v: k for k, v in _KIND_TAGS.items()}
_SPF_TAG = 0

_MAGIC = b"MLAB"
_FORMAT_VERSION = 1


def primes_up_to(n: int) -> np.ndarray:
    """All primes <= n as an int64 array (plain Eratosthenes)."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for i in range(2, math.isqrt(n) + 1):
        if sieve[i]:
            sieve[i * i :: i] = False
    return np.nonzero(sieve)[0].astype(np.int64)


def primes_in_window(lo: int, hi: int, s: int = 1, *, closed_left: bool = False) -> list[int]:
    """Primes p with lo < p <= hi (or lo <= p <= hi) and gcd(p, s) = 1."""
    ps = primes_up_to(hi)
    lo_ok = ps >= lo if closed_left else ps > lo
    out = ps[lo_ok & (ps <= hi)]
    return [int(p) for p in out if s == 1 or math.gcd(int(p), s) == 1]


# ---------------------------------------------------------------------------
# smallest prime factor


@dataclass(frozen=True)
class FactorTable:
    """Smallest-prime-factor table for [2, n_max].

    spf[n] is the least prime dividing n; spf[p] = p exactly when p is
    prime.  Index 0 and 1 are unused (stored as 0).
    """

    n_max: int
    spf: np.ndarray

    def check_range(self, n: int) -> None:
        if not 2 <= n <= self.n_max:
            raise RangeError(f"n={n} outside factor table range [2, {self.n_max}]")

    def is_prime(self, n: int) -> bool:
        self.check_range(n)
        return int(self.spf[n]) == n

    def factorize(self, n: int) -> list[tuple[int, int]]:
        """Prime factorization [(p, e), ...] with p ascending."""
        if n == 1:
            return []
        self.check_range(n)
        out = []
        m = n
        while m > 1:
            p = int(self.spf[m])
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            out.append((p, e))
        return out

    def mobius(self, n: int) -> int:
        if n == 1:
            return 1
        fac = self.factorize(n)
        if any(e > 1 for _, e in fac):
            return 0
        return -1 if len(fac) % 2 else 1

    def liouville(self, n: int) -> int:
        if n == 1:
            return 1
        omega = sum(e for _, e in self.factorize(n))
        return -1 if omega % 2 else 1

    def totient(self, n: int) -> int:
        if n == 1:
            return 1
        phi = 1
        for p, e in self.factorize(n):
            phi *= (p - 1) * p ** (e - 1)
        return phi

    def prime_count(self) -> int:
        idx = np.arange(self.n_max + 1, dtype=self.spf.dtype)
        return int(np.count_nonzero(self.spf[2:] == idx[2:]))

    def primes(self) -> np.ndarray:
        idx = np.arange(self.n_max + 1, dtype=self.spf.dtype)
        return np.nonzero(self.spf == idx)[0][1:].astype(np.int64)  # drop n=0 match


def build_factor_table(
    n_max: int,
    *,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
    segment_size: int = 1 << 20,
) -> FactorTable:
    """Segmented linear sieve for smallest prime factors on [2, n_max]."""
    if n_max < 2:
        raise ConfigurationError("factor table requires n_max >= 2")
    need = 4 * (n_max + 1)
    if need > memory_budget:
        raise ResourceError(
            f"spf table for n_max={n_max} needs {need} bytes, "
            f"budget is {memory_budget} bytes"
        )
    spf = np.zeros(n_max + 1, dtype=np.uint32)
    base = primes_up_to(math.isqrt(n_max))
    for lo in range(2, n_max + 1, segment_size):
        hi = min(lo + segment_size, n_max + 1)
        seg = spf[lo:hi]
        for p in base:
            p = int(p)
            start = max(p * p, ((lo + p - 1) // p) * p)
            if start >= hi:
                continue
            sl = seg[start - lo :: p]
            sl[sl == 0] = p
        # untouched entries are prime
        zero = np.nonzero(seg == 0)[0]
        seg[zero] = zero + lo
    return FactorTable(n_max=n_max, spf=spf)


# ---------------------------------------------------------------------------
# 1-bounded multiplicative tables


_PACK_DECODE = np.array([0, 1, 0, -1], dtype=np.int8)  # 2-bit code -> value


def _pack2(values: np.ndarray) -> np.ndarray:
    codes = (values.astype(np.int8) & 3).astype(np.uint8)
    pad = (-codes.size) % 4
    if pad:
        codes = np.concatenate([codes, np.zeros(pad, dtype=np.uint8)])
    codes = codes.reshape(-1, 4)
    return codes[:, 0] | codes[:, 1] << 2 | codes[:, 2] << 4 | codes[:, 3] << 6


def _unpack2(packed: np.ndarray, size: int) -> np.ndarray:
    out = np.empty(packed.size * 4, dtype=np.int8)
    out[0::4] = _PACK_DECODE[packed & 3]
    out[1::4] = _PACK_DECODE[(packed >> 2) & 3]
    out[2::4] = _PACK_DECODE[(packed >> 4) & 3]
    out[3::4] = _PACK_DECODE[(packed >> 6) & 3]
    return out[:size]


class MultTable:
    """Values of a 1-bounded multiplicative function on [1, n_max].

    Integer-valued kinds (mobius, liouville) are stored packed at 2 bits
    per value; custom tables hold complex128.  values are indexed so that
    value(n) is defined for 1 <= n <= n_max.
    """

    def __init__(self, n_max: int, kind: str, packed=None, dense=None):
        self.n_max = n_max
        self.kind = kind
        self._packed = packed
        self._dense = dense

    @classmethod
    def from_int_values(cls, values: np.ndarray, kind: str) -> "MultTable":
        # values[0] unused, values[n] for n in [1, n_max]
        n_max = values.size - 1
        return cls(n_max, kind, packed=_pack2(values))

    @classmethod
    def from_complex_values(cls, values: np.ndarray) -> "MultTable":
        n_max = values.size - 1
        return cls(n_max, KIND_CUSTOM, dense=np.asarray(values, dtype=np.complex128))

    def check_range(self, n: int) -> None:
        if not 1 <= n <= self.n_max:
            raise RangeError(f"n={n} outside table range [1, {self.n_max}]")

    def value(self, n: int):
        self.check_range(n)
        if self._packed is not None:
            byte = int(self._packed[n >> 2])
            return int(_PACK_DECODE[(byte >> (2 * (n & 3))) & 3])
        return complex(self._dense[n])

    def values_block(self, lo: int, hi: int) -> np.ndarray:
        """Values for n in [lo, hi); int8 for packed kinds, complex128 else."""
        if lo < 1 or hi > self.n_max + 1:
            raise RangeError(f"block [{lo}, {hi}) outside table range [1, {self.n_max}]")
        if self._packed is not None:
            first_byte = lo >> 2
            last_byte = (hi + 3) >> 2
            chunk = _unpack2(self._packed[first_byte:last_byte], (last_byte - first_byte) * 4)
            return chunk[lo - 4 * first_byte : hi - 4 * first_byte]
        return self._dense[lo:hi]

    def is_integer_valued(self) -> bool:
        return self._packed is not None


def mobius_table(n_max: int) -> MultTable:
    """Mobius function by a vectorized sieve: sign flips then square kills."""
    mu = np.ones(n_max + 1, dtype=np.int8)
    mu[0] = 0
    ps = primes_up_to(n_max)
    for p in ps:
        mu[p::p] *= -1
    for p in ps[ps <= math.isqrt(n_max)]:
        mu[p * p :: p * p] = 0
    return MultTable.from_int_values(mu, KIND_MOBIUS)


def liouville_table(n_max: int) -> MultTable:
    """Liouville function: one sign flip per prime-power divisor."""
    lam = np.ones(n_max + 1, dtype=np.int8)
    lam[0] = 0
    for p in primes_up_to(n_max):
        pk = int(p)
        while pk <= n_max:
            lam[pk::pk] *= -1
            pk *= int(p)
    return MultTable.from_int_values(lam, KIND_LIOUVILLE)


def one_table(n_max: int) -> MultTable:
    v = np.ones(n_max + 1, dtype=np.complex128)
    v[0] = 0
    return MultTable.from_complex_values(v)


def character_twist(table: MultTable, chi: "DirichletCharacter") -> MultTable:
    """Pointwise product table n -> table(n) * chi(n)."""
    n_max = table.n_max
    vals = np.asarray(table.values_block(1, n_max + 1), dtype=np.complex128)
    residues = np.arange(1, n_max + 1, dtype=np.int64) % chi.modulus
    out = np.zeros(n_max + 1, dtype=np.complex128)
    out[1:] = vals * chi.value_table[residues]
    return MultTable.from_complex_values(out)


def completely_multiplicative_extension(table: MultTable, ft: FactorTable) -> MultTable:
    """Extension agreeing with the table at primes: value(p)**k at p**k."""
    n_max = min(table.n_max, ft.n_max)
    out = np.zeros(n_max + 1, dtype=np.complex128)
    out[1] = 1.0
    spf = ft.spf
    for n in range(2, n_max + 1):
        p = int(spf[n])
        out[n] = out[n // p] * table.value(p)
    return MultTable.from_complex_values(out)


def dirichlet_convolution_alpha(
    table: MultTable, ft: FactorTable, *, check_limit: int = 10**4, tol: float = 1e-9
) -> MultTable:
    """The multiplicative complement alpha with table = extension * alpha.

    alpha vanishes at primes and is bounded by 2 on higher prime powers;
    the reconstruction identity is verified on [1, min(n_max, check_limit)]
    and a failure raises InternalConsistencyError.
    """
    n_max = min(table.n_max, ft.n_max)
    beta = np.zeros(n_max + 1, dtype=np.complex128)
    for n in range(1, n_max + 1):
        beta[n] = table.value(n)
    alpha = np.zeros(n_max + 1, dtype=np.complex128)
    alpha[1] = 1.0
    spf = ft.spf
    for n in range(2, n_max + 1):
        p = int(spf[n])
        m = n
        k = 0
        while m % p == 0:
            m //= p
            k += 1
        if m > 1:
            alpha[n] = alpha[m] * alpha[n // m]
        else:
            # alpha at p**k: beta(p**k) - beta(p) * beta(p**(k-1))
            alpha[n] = beta[n] - beta[p] * beta[n // p] if k >= 2 else 0.0
    beta1 = completely_multiplicative_extension(table, ft)
    limit = min(n_max, check_limit)
    recon = np.zeros(limit + 1, dtype=np.complex128)
    b1 = np.concatenate([[0.0], beta1.values_block(1, limit + 1)])
    for d in range(1, limit + 1):
        ks = np.arange(1, limit // d + 1)
        recon[d * ks] += b1[d] * alpha[ks]
    err = np.max(np.abs(recon[1:] - beta[1 : limit + 1]))
    if err > tol:
        raise InternalConsistencyError(
            f"beta = beta1 * alpha reconstruction failed, max error {err:.3e}"
        )
    return MultTable.from_complex_values(alpha)


# ---------------------------------------------------------------------------
# Dirichlet characters


def _primitive_root(p: int, e: int, ft: FactorTable) -> int:
    """Primitive root mod p**e for odd prime p."""
    order = (p - 1) * p ** (e - 1)
    fac = [q for q, _ in ft.factorize(order)]
    mod = p**e
    for g in range(2, mod):
        if g % p == 0:
            continue
        if all(pow(g, order // q, mod) != 1 for q in fac):
            return g
    raise InternalConsistencyError(f"no primitive root found mod {p}**{e}")


@dataclass(frozen=True)
class DirichletCharacter:
    """A character mod s in generator-exponent form.

    value_table[a] = chi(a) for a in [0, s), zero off the units.  The
    exponent tuple is with respect to the group's stored generators, so
    conjugation and exact orthogonality checks stay in integer arithmetic.
    """

    modulus: int
    exponents: tuple[int, ...]
    generator_orders: tuple[int, ...]
    value_table: np.ndarray
    exponent_lcm: int
    unit_angles: dict[int, int]  # unit residue -> numerator of angle over exponent_lcm
    conductor: int
    principal: bool

    def value(self, n: int) -> complex:
        return complex(self.value_table[n % self.modulus])

    def conjugate_index(self) -> tuple[int, ...]:
        return tuple((-k) % d for k, d in zip(self.exponents, self.generator_orders))


def _unit_group_structure(s: int, ft: FactorTable):
    """Generators (as residues mod s via CRT) and their orders."""
    gens: list[int] = []
    orders: list[int] = []
    if s == 1:
        return gens, orders
    fac = ft.factorize(s)
    comps = [p**e for p, e in fac]
    for (p, e), q in zip(fac, comps):
        rest = s // q
        # CRT lift: residue r mod q, 1 mod rest
        def lift(r: int) -> int:
            if rest == 1:
                return r % s
            inv = pow(rest % q, -1, q) if q > 1 else 0
            return (1 + rest * ((r - 1) * inv % q)) % s

        if p == 2:
            if e == 1:
                continue
            if e == 2:
                gens.append(lift(3))
                orders.append(2)
            else:
                gens.append(lift(q - 1))
                orders.append(2)
                gens.append(lift(5))
                orders.append(2 ** (e - 2))
        else:
            g = _primitive_root(p, e, ft)
            gens.append(lift(g))
            orders.append((p - 1) * p ** (e - 1))
    return gens, orders


def enumerate_characters(s: int, ft: FactorTable | None = None) -> list[DirichletCharacter]:
    """All phi(s) characters mod s, principal first, deterministic order."""
    if s < 1:
        raise ConfigurationError("modulus must be >= 1")
    if ft is None or ft.n_max < max(s, 2):
        ft = build_factor_table(max(s, 2))
    gens, orders = _unit_group_structure(s, ft)

    # discrete logs: unit residue -> exponent vector over the generators
    units = [a for a in range(s) if math.gcd(a, s) == 1] if s > 1 else [0]
    dlog: dict[int, tuple[int, ...]] = {}
    if not gens:
        dlog = {a: () for a in units}
    else:
        dlog[1 % s] = tuple(0 for _ in gens)
        # enumerate the full product of generator powers
        from itertools import product as _product

        for exps in _product(*[range(d) for d in orders]):
            a = 1
            for g, k in zip(gens, exps):
                a = a * pow(g, k, s) % s
            dlog.setdefault(a, exps)
        if len(dlog) != len(units):
            raise InternalConsistencyError(
                f"unit group enumeration mod {s} found {len(dlog)} of {len(units)} units"
            )

    lam = 1
    for d in orders:
        lam = lam * d // math.gcd(lam, d)

    from itertools import product as _product

    out = []
    for exps in _product(*[range(d) for d in orders]):
        table = np.zeros(s if s > 1 else 1, dtype=np.complex128)
        angles: dict[int, int] = {}
        for a in units:
            xs = dlog[a] if s > 1 else ()
            num = 0
            for k, x, d in zip(exps, xs, orders):
                num = (num + k * x * (lam // d)) % lam
            angles[a] = num
            table[a] = np.exp(2j * np.pi * num / lam) if lam > 1 else 1.0
        if s == 1:
            table[0] = 1.0
        principal = all(k == 0 for k in exps)
        cond = _conductor(s, angles, ft)
        out.append(
            DirichletCharacter(
                modulus=s,
                exponents=tuple(exps),
                generator_orders=tuple(orders),
                value_table=table,
                exponent_lcm=lam,
                unit_angles=angles,
                conductor=cond,
                principal=principal,
            )
        )
    return out


def _divisors(s: int, ft: FactorTable) -> list[int]:
    divs = [1]
    for p, e in ft.factorize(s):
        divs = [d * p**k for d in divs for k in range(e + 1)]
    return sorted(divs)


def _conductor(s: int, angles: dict[int, int], ft: FactorTable) -> int:
    if s == 1:
        return 1
    for d in _divisors(s, ft):
        if all(angles[a] == 0 for a in angles if a % d == 1 % max(d, 1)):
            return d
    return s


def orthogonality_exact(chi1: DirichletCharacter, chi2: DirichletCharacter) -> bool:
    """Integer-arithmetic check of sum_a chi1(a) * conj(chi2(a)).

    The product character's angle numerators (mod lcm) either all vanish
    (principal product: the sum is phi(s) exactly) or are equidistributed
    over the image subgroup (the sum is exactly zero).
    """
    if chi1.modulus != chi2.modulus:
        raise ConfigurationError("characters must share a modulus")
    lam = chi1.exponent_lcm
    diffs = [
        (chi1.unit_angles[a] - chi2.unit_angles[a]) % lam for a in chi1.unit_angles
    ]
    if all(d == 0 for d in diffs):
        return chi1.exponents == chi2.exponents
    g = lam
    for d in diffs:
        g = math.gcd(g, d)
    order = lam // g
    counts: dict[int, int] = {}
    for d in diffs:
        counts[d // g % order] = counts.get(d // g % order, 0) + 1
    # sum of all order-th roots of unity, each hit equally often, is zero
    vals = set(counts.values())
    covers_all = len(counts) == order
    return (
        chi1.exponents != chi2.exponents
        and covers_all
        and len(vals) == 1
        and order > 1
    )


# ---------------------------------------------------------------------------
# prime windows and dense-set membership


@dataclass(frozen=True)
class WindowProfile:
    """Recursion constants for the window chain.

    The published constants (p1 exponent 6000, Q1 = H / (log H)**4, J from
    the square-root-log cutoff) produce empty windows at any feasible H,
    so the desk defaults are exponent 3 and Q1 = H / log H with one
    window.  The profile used is recorded on the resulting PrimeWindows.
    """

    p1_exponent: float = 3.0
    q1_log_power: float = 1.0
    j_max: int = 1
    cutoff_n: int | None = None  # when set, J from Q_j <= exp(sqrt(log sqrt(N)))

    @classmethod
    def paper(cls, n_for_cutoff: int) -> "WindowProfile":
        return cls(p1_exponent=6000.0, q1_log_power=4.0, j_max=10**9, cutoff_n=n_for_cutoff)


@dataclass(frozen=True)
class PrimeWindows:
    """Window intervals [P_j, Q_j] with the excluded modulus s.

    Membership in the dense set requires a prime factor coprime to s in
    every window.
    """

    windows: tuple[tuple[int, int], ...]
    s: int
    profile: WindowProfile | None = None

    @property
    def count(self) -> int:
        return len(self.windows)

    def window_primes(self, j: int) -> list[int]:
        lo, hi = self.windows[j]
        return primes_in_window(lo, hi, self.s, closed_left=True)


def build_prime_windows(H: int, s: int, profile: WindowProfile | None = None) -> PrimeWindows:
    """Window chain P_j, Q_j grown by the configured recursion."""
    profile = profile or WindowProfile()
    if H < 3:
        raise ConfigurationError("window construction needs H >= 3")
    logH = math.log(H)
    p1 = logH**profile.p1_exponent
    q1 = H / logH**profile.q1_log_power
    if q1 <= p1:
        raise ConfigurationError(
            f"window [P1, Q1] empty at H={H} with profile {profile}; "
            "use a scaled profile (smaller p1_exponent)"
        )
    cutoff = None
    if profile.cutoff_n is not None:
        cutoff = math.exp(math.sqrt(math.log(math.sqrt(profile.cutoff_n))))
    windows = []
    j = 1
    while j <= profile.j_max:
        if j == 1:
            pj, qj = p1, q1
        else:
            lp = j ** (4 * j) * math.log(q1) ** (j - 1) * math.log(p1)
            lq = j ** (4 * j + 2) * math.log(q1) ** j
            if max(lp, lq) > 700:  # exp overflow guard; windows this deep are empty anyway
                break
            pj, qj = math.exp(lp), math.exp(lq)
        if cutoff is not None and qj > cutoff:
            break
        lo, hi = int(math.ceil(pj)), int(math.floor(qj))
        if not primes_in_window(lo, hi, s, closed_left=True):
            raise ConfigurationError(
                f"window {j} = [{lo}, {hi}] has no primes coprime to {s}; "
                "use a scaled profile"
            )
        windows.append((lo, hi))
        j += 1
    if not windows:
        raise ConfigurationError(
            "window chain is empty under the cutoff rule; use a scaled profile"
        )
    return PrimeWindows(windows=tuple(windows), s=s, profile=profile)


def windows_from_intervals(intervals, s: int) -> PrimeWindows:
    return PrimeWindows(windows=tuple((int(a), int(b)) for a, b in intervals), s=s)


def in_S(n: int, windows: PrimeWindows, ft: FactorTable) -> bool:
    """Membership in the dense set: a coprime prime factor in every window."""
    fac = [p for p, _ in ft.factorize(n)] if n > 1 else []
    for lo, hi in windows.windows:
        if not any(lo <= p <= hi and math.gcd(p, windows.s) == 1 for p in fac):
            return False
    return True


def in_S_tilde(n: int, P: int, Q: int, s: int, ft: FactorTable) -> bool:
    """Membership via a single half-open window (P, Q]."""
    if n <= 1:
        return False
    return any(P < p <= Q and math.gcd(p, s) == 1 for p, _ in ft.factorize(n))


def membership_bitmap(windows: PrimeWindows, n_max: int) -> np.ndarray:
    """Vectorized in_S over [1, n_max]; index 0 is False."""
    ok = np.ones(n_max + 1, dtype=bool)
    ok[0] = False
    for j in range(windows.count):
        hit = np.zeros(n_max + 1, dtype=bool)
        for p in windows.window_primes(j):
            if p <= n_max:
                hit[p::p] = True
        ok &= hit
    return ok


def fundamental_sieve_shape(X: int, P: int, Q: int, s: int) -> float:
    """X * log P / log Q * prod_{p | s, P < p <= Q} (1 - 1/p)**-1."""
    val = X * math.log(P) / math.log(Q)
    for p in {p for p, _ in build_factor_table(max(s, 2)).factorize(s)} if s > 1 else set():
        if P < p <= Q:
            val /= 1.0 - 1.0 / p
    return val


def totient_ratio(s: int, ft: FactorTable) -> Fraction:
    """s / phi(s) as an exact fraction."""
    r = Fraction(1)
    for p, _ in ft.factorize(s) if s > 1 else []:
        r *= Fraction(p, p - 1)
    return r


# ---------------------------------------------------------------------------
# cache file format


def _payload_bytes(kind_tag: int, n_max: int, table) -> bytes:
    if kind_tag == _SPF_TAG:
        return table.spf.astype("<u4").tobytes()
    if kind_tag in (1, 2):
        return table._packed.tobytes()
    return table._dense.astype("<c16").tobytes()


def save_table(path, obj) -> None:
    """Write a FactorTable or MultTable in the MLAB cache format."""
    if isinstance(obj, FactorTable):
        tag, n_max = _SPF_TAG, obj.n_max
    else:
        tag, n_max = _KIND_TAGS[obj.kind], obj.n_max
    header = _MAGIC + struct.pack("<HQB", _FORMAT_VERSION, n_max, tag)
    payload = _payload_bytes(tag, n_max, obj)
    crc = zlib.crc32(header + payload) & 0xFFFFFFFF
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)
        fh.write(struct.pack("<I", crc))


def load_table(path):
    """Load a cached table, verifying magic, version and CRC32."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 19 or blob[:4] != _MAGIC:
        raise CacheError(f"{path}: not an MLAB cache file")
    version, n_max, tag = struct.unpack("<HQB", blob[4:15])
    if version != _FORMAT_VERSION:
        raise CacheError(f"{path}: format version {version} != {_FORMAT_VERSION}")
    (crc_stored,) = struct.unpack("<I", blob[-4:])
    if zlib.crc32(blob[:-4]) & 0xFFFFFFFF != crc_stored:
        raise CacheError(f"{path}: CRC32 mismatch, cache rejected")
    payload = blob[15:-4]
    if tag == _SPF_TAG:
        spf = np.frombuffer(payload, dtype="<u4").astype(np.uint32)
        return FactorTable(n_max=int(n_max), spf=spf)
    if tag in (1, 2):
        packed = np.frombuffer(payload, dtype=np.uint8).copy()
        return MultTable(int(n_max), _TAG_KINDS[tag], packed=packed)
    dense = np.frombuffer(payload, dtype="<c16").astype(np.complex128)
    return MultTable(int(n_max), KIND_CUSTOM, dense=dense)
