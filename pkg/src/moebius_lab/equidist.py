"""Quantitative equidistribution diagnostics.

Smoothness norms of polynomials in the binomial basis, total
delta-equidistribution testing of finite torus sequences, and the
certificate searches that link failed equidistribution to small-height
integer frequencies.

The equidistribution tester quantifies over the character proxy
F = e(k.x) for 0 < |k| <= K_max instead of all Lipschitz functions;
thresholds are Lipschitz-aware (|F|_Lip = 1 + 2*pi*|k|_2), and K_max is
recorded in the verdict so every verdict is a reproducible claim about
the proxy class.  Sub-progressions are enumerated exhaustively: a
sub-progression of [L] with at least max(ceil(delta*L), ceil(1/delta))
terms forces step <= floor(1/delta); the 1/delta floor is the degenerate
convention for delta*L < 1, where only the full window remains testable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as _iproduct

import numpy as np

from .errors import ConfigurationError, ResourceError
from .phase import PolyPhase, VecPolyPhase
from .summation import ExactComplexSum, cabs

EXHAUSTIVE_CAP = 10**5


def torus_norm(x: Fraction) -> Fraction:
    """Distance from x to the nearest integer, exact."""
    f = x - (x.numerator // x.denominator)
    return min(f, 1 - f)


@dataclass(frozen=True)
class SmoothnessNorm:
    """max over 1 <= i <= d of N**i * |alpha_i| for binomial coefficients."""

    window: int
    value: Fraction
    achieving_index: int

    def __float__(self):
        return float(self.value)


def smoothness_norm(poly, N: int) -> SmoothnessNorm:
    """Smoothness norm over an N-point window; degree 0 gives 0."""
    if N < 1:
        raise ConfigurationError("window length must be >= 1")
    alphas = poly.to_binomial_basis() if isinstance(poly, PolyPhase) else [Fraction(a) for a in poly]
    best = Fraction(0)
    idx = 0
    for i in range(1, len(alphas)):
        v = N**i * torus_norm(alphas[i])
        if v > best:
            best, idx = v, i
    return SmoothnessNorm(window=N, value=best, achieving_index=idx)


# ---------------------------------------------------------------------------
# frequencies and raw Weyl sums


def enumerate_frequencies(m: int, k_max: int) -> list[tuple[int, ...]]:
    """Nonzero integer vectors with sup-norm <= k_max, one per +-pair.

    Canonical representatives have positive first nonzero coordinate;
    |sum e(-k.x)| = |sum e(k.x)| makes the other half redundant.
    """
    if k_max < 1:
        raise ConfigurationError("K_max must be >= 1")
    out = []
    for k in _iproduct(range(-k_max, k_max + 1), repeat=m):
        nz = next((c for c in k if c != 0), 0)
        if nz > 0:
            out.append(k)
    return out


def _lipschitz(k) -> float:
    return 1.0 + 2.0 * math.pi * math.sqrt(sum(c * c for c in k))


def weyl_sums(points: np.ndarray, ks, windows) -> np.ndarray:
    """Normalized sums (1/|A|) sum_{n in A} e(k.x_n) per (k, window).

    points: (L,) or (L, m) fractional parts; ks: iterable of frequency
    vectors (ints for m=1); windows: (start, step, length) index-space
    progressions.  Prefix sums are exact (integer accumulators), so each
    window answer is the correctly rounded mean -- equal to a direct
    summation of the same terms.  Preprocessing is O(L) per (k, step);
    each query is O(1).
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    L, m = pts.shape
    ks = [(k,) if np.isscalar(k) else tuple(k) for k in ks]
    if any(all(c == 0 for c in k) for k in ks):
        raise ConfigurationError("frequency vectors must be nonzero")
    windows = list(windows)
    out = np.zeros((len(ks), len(windows)), dtype=np.complex128)
    prefix_cache: dict[tuple, list] = {}
    for ki, k in enumerate(ks):
        z = np.exp(2j * np.pi * (pts @ np.asarray(k, dtype=np.float64)))
        for wi, (start, step, length) in enumerate(windows):
            if start < 0 or step < 1 or start + (length - 1) * step >= L:
                raise ConfigurationError(f"window {(start, step, length)} outside [0, {L})")
            key = (ki, step, start % step)
            if key not in prefix_cache:
                sub = z[start % step :: step]
                acc = ExactComplexSum()
                pre = [(0, 0)]
                for v in sub:
                    acc.add(float(v.real), float(v.imag))
                    pre.append((acc._re, acc._im))
                prefix_cache[key] = pre
            pre = prefix_cache[key]
            j0 = (start - start % step) // step
            re = (pre[j0 + length][0] - pre[j0][0])
            im = (pre[j0 + length][1] - pre[j0][1])
            from .summation import grid_to_float

            out[ki, wi] = complex(grid_to_float(re), grid_to_float(im)) / length
    return out


# ---------------------------------------------------------------------------
# total equidistribution verdicts


@dataclass
class EquidistVerdict:
    """Outcome of a total delta-equidistribution test under the proxy."""

    equidistributed: bool
    delta: float
    k_max: int
    length: int
    worst_progression: tuple[int, int, int]  # (start, step, length)
    worst_k: tuple[int, ...]
    worst_magnitude: float  # |mean| / |F|_Lip, in [0, 1]
    mode: str = "exhaustive"

    def to_json(self) -> str:
        return json.dumps(
            {
                "equidistributed": self.equidistributed,
                "delta": self.delta,
                "k_max": self.k_max,
                "length": self.length,
                "worst_progression": list(self.worst_progression),
                "worst_k": list(self.worst_k),
                "worst_magnitude": self.worst_magnitude,
                "mode": self.mode,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "EquidistVerdict":
        d = json.loads(text)
        return cls(
            equidistributed=d["equidistributed"],
            delta=d["delta"],
            k_max=d["k_max"],
            length=d["length"],
            worst_progression=tuple(d["worst_progression"]),
            worst_k=tuple(d["worst_k"]),
            worst_magnitude=d["worst_magnitude"],
            mode=d["mode"],
        )


def test_total_equidistribution(
    points: np.ndarray,
    delta: float,
    k_max: int,
    *,
    cap: int = EXHAUSTIVE_CAP,
    allow_sampled: bool = False,
    sample_seed: int = 0,
) -> EquidistVerdict:
    """Exhaustive total delta-equidistribution test via the Fourier proxy.

    Fails iff some tested sub-progression and frequency give a normalized
    mean above delta.  The verdict records the first witness attaining the
    maximum under the fixed scan order (k, step, residue, length, start)
    with monotone pruning, which is deterministic.
    """
    if not 0 < delta < 1:
        raise ConfigurationError("delta must be in (0, 1)")
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    L, m = pts.shape
    sampled = False
    rng = None
    if L > cap:
        if not allow_sampled:
            raise ResourceError(
                f"sequence length {L} exceeds exhaustive cap {cap}; "
                "pass allow_sampled=True for a non-certifying sampled verdict"
            )
        sampled = True
        rng = np.random.default_rng(sample_seed)

    lmin = max(math.ceil(delta * L), math.ceil(1.0 / delta))
    q_hi = min(int(1.0 / delta), L)

    gmax = -1.0
    witness = ((0, 1, L), (0,) * m)

    def scan(zc: np.ndarray, q: int, r: int, k):
        nonlocal gmax, witness
        sub = zc[r::q]
        T = sub.size
        lo = lmin
        if q == 1 and r == 0 and T < lmin:
            lo = T  # the full window is always tested
        if T < lo:
            return
        C = np.empty(T + 1, dtype=np.complex128)
        C[0] = 0.0
        np.cumsum(sub, out=C[1:])
        lip = _lipschitz(k)
        re, im = C.real, C.imag
        diam = math.hypot(re.max() - re.min(), im.max() - im.min())
        lengths = range(lo, T + 1)
        if sampled:
            pick = rng.choice(len(lengths), size=min(len(lengths), 32), replace=False)
            lengths = sorted(lo + int(i) for i in pick)
        for ell in lengths:
            if diam / (ell * lip) <= gmax:
                break
            d = C[ell:] - C[: T + 1 - ell]
            mag2 = d.real**2 + d.imag**2
            j0 = int(np.argmax(mag2))
            ratio = math.sqrt(float(mag2[j0])) / (ell * lip)
            if ratio > gmax:
                gmax = ratio
                witness = ((r + j0 * q, q, ell), tuple(k))

    for k in enumerate_frequencies(m, k_max):
        z = np.exp(2j * np.pi * (pts @ np.asarray(k, dtype=np.float64)))
        for q in range(1, q_hi + 1):
            for r in range(q):
                scan(z, q, r, k)

    return EquidistVerdict(
        equidistributed=bool(gmax <= delta),
        delta=float(delta),
        k_max=k_max,
        length=L,
        worst_progression=witness[0],
        worst_k=witness[1],
        worst_magnitude=float(max(gmax, 0.0)),
        mode="sampled" if sampled else "exhaustive",
    )


# ---------------------------------------------------------------------------
# certificate searches


@dataclass(frozen=True)
class WeylCertificate:
    """A small frequency witnessing structured (non-equidistributed) data."""

    D: tuple[int, ...]
    bound: Fraction  # achieved smoothness norm of D.f over the window
    search_radius: int


def find_weyl_certificate(
    f: VecPolyPhase,
    N: int,
    d_max: int,
    *,
    threshold: Fraction | float = 1,
    box_budget: int = 2 * 10**6,
) -> WeylCertificate | None:
    """Exhaustive minimizer of |D.f|_C_inf[N] over 0 < |D|_inf <= d_max.

    Returns the certificate when the minimum is <= threshold, else None.
    The scan is lexicographic over canonical representatives (+-D give
    equal norms), so the reported D is deterministic.
    """
    m = f.dimension
    if (2 * d_max + 1) ** m > box_budget:
        raise ResourceError(
            f"certificate box (2*{d_max}+1)**{m} exceeds budget {box_budget}"
        )
    best: tuple[Fraction, tuple[int, ...]] | None = None
    for D in enumerate_frequencies(m, d_max):
        norm = smoothness_norm(f.dot(D), N).value
        if best is None or norm < best[0]:
            best = (norm, D)
    if best is not None and best[0] <= Fraction(threshold):
        return WeylCertificate(D=best[1], bound=best[0], search_radius=d_max)
    return None


@dataclass(frozen=True)
class RecurrenceResult:
    hit_fraction: Fraction
    D: int | None
    norm: Fraction | None


def recurrence_certificate(
    poly: PolyPhase,
    N: int,
    interval: tuple,
    delta: float,
    *,
    d_exponent: float = 2.0,
) -> RecurrenceResult:
    """Recurrence into a short interval forces a small-norm frequency.

    Counts n in [1, N] with {P(n)} in [lo, hi) exactly; when the hit
    fraction is at least delta, searches D in [1, ceil(delta**-c)] for the
    smallest smoothness norm of D.P.  Diagnostic only: no certificate is
    guaranteed when the hypotheses fail.
    """
    lo, hi = Fraction(interval[0]), Fraction(interval[1])
    hits = 0
    for n in range(1, N + 1):
        v = poly.eval_mod1(n)
        inside = lo <= v < hi if lo <= hi else (v >= lo or v < hi)
        hits += bool(inside)
    frac = Fraction(hits, N)
    if frac < Fraction(delta).limit_denominator(10**9):
        return RecurrenceResult(hit_fraction=frac, D=None, norm=None)
    d_cap = max(1, math.ceil(delta ** (-d_exponent)))
    best = None
    for D in range(1, d_cap + 1):
        norm = smoothness_norm(poly.scale(D), N).value
        if best is None or norm < best[1]:
            best = (D, norm)
    return RecurrenceResult(hit_fraction=frac, D=best[0], norm=best[1])


# ---------------------------------------------------------------------------
# simultaneous progression analysis


@dataclass
class ProgressionAnalysis:
    """Either branch of the progression equidistribution dichotomy."""

    branch: str  # "equidistributed" | "structured"
    exceptional_pairs: int
    pair_threshold: float
    total_pairs: int
    failed_offsets: set  # values c = n + a whose progression failed
    Q: tuple[int, ...] | None
    achieved: list[Fraction] | None  # |s Q.alpha_l| * H * N**(l-1) per l >= 1
    r_tilde: float
    k_max: int

    def exceptional_for(self, n: int, s: int) -> list[int]:
        return [a for a in range(1, s + 1) if (n + a) in self.failed_offsets]


def progression_weyl_analysis(
    f: VecPolyPhase,
    N: int,
    H: int,
    s: int,
    r_tilde: float,
    *,
    k_max: int | None = None,
    q_max: int = 64,
    n_cap: int = 10**3,
    s_cap: int = 50,
    h_cap: int = 10**3,
    guard_floor: float = 1.0,
) -> ProgressionAnalysis:
    """Test {f(n+h)}_{h = a mod s, h <= Hs} for all (n, a) in [N] x [s].

    The sequence for (n, a) depends only on c = n + a, so verdicts are
    computed once per offset.  When more than N*s/r_tilde pairs fail,
    searches for an integer frequency Q making |s Q.alpha_l| small at the
    scale H**-1 N**-(l-1) and reports the achieved products.
    """
    if r_tilde <= 2:
        raise ConfigurationError("r_tilde must exceed 2")
    if H < guard_floor * r_tilde:
        raise ConfigurationError(
            f"H={H} below the r_tilde floor {guard_floor * r_tilde:g}"
        )
    if N > n_cap or s > s_cap or H > h_cap:
        raise ResourceError(
            f"(N, s, H) = ({N}, {s}, {H}) exceeds exhaustive caps "
            f"({n_cap}, {s_cap}, {h_cap})"
        )
    delta = 1.0 / r_tilde
    if k_max is None:
        k_max = max(4, min(16, math.ceil(r_tilde)))

    failed: set[int] = set()
    for c in range(2, N + s + 1):
        strided = VecPolyPhase([p.compose_affine(s, c) for p in f.coords])
        pts = strided.eval_block(0, H)
        verdict = test_total_equidistribution(pts, delta, k_max)
        if not verdict.equidistributed:
            failed.add(c)

    exceptional = 0
    for c in failed:
        n_lo = max(1, c - s)
        n_hi = min(N, c - 1)
        if n_hi >= n_lo:
            exceptional += n_hi - n_lo + 1
    threshold = N * s * delta
    total = N * s

    if exceptional <= threshold:
        return ProgressionAnalysis(
            branch="equidistributed",
            exceptional_pairs=exceptional,
            pair_threshold=threshold,
            total_pairs=total,
            failed_offsets=failed,
            Q=None,
            achieved=None,
            r_tilde=r_tilde,
            k_max=k_max,
        )

    Q, achieved = _search_structure_frequency(f, N, H, s, q_max)
    return ProgressionAnalysis(
        branch="structured",
        exceptional_pairs=exceptional,
        pair_threshold=threshold,
        total_pairs=total,
        failed_offsets=failed,
        Q=Q,
        achieved=achieved,
        r_tilde=r_tilde,
        k_max=k_max,
    )


def _search_structure_frequency(f: VecPolyPhase, N: int, H: int, s: int, q_max: int):
    """Minimize max_l |s Q.alpha_l| * H * N**(l-1) over rings |Q|_inf = 1.."""
    m = f.dimension
    d = f.degree
    coeff_vectors = []
    for l in range(1, d + 1):
        coeff_vectors.append(
            [p.coefficients()[l] if l <= p.degree else Fraction(0) for p in f.coords]
        )
    best: tuple[Fraction, int, tuple[int, ...]] | None = None
    for radius in range(1, q_max + 1):
        for Q in _ring(m, radius):
            worst = Fraction(0)
            for l, alpha in enumerate(coeff_vectors, start=1):
                dot = sum((Fraction(q) * a for q, a in zip(Q, alpha)), Fraction(0))
                val = torus_norm(Fraction(s) * dot) * H * N ** (l - 1)
                if val > worst:
                    worst = val
            if best is None or worst < best[0]:
                best = (worst, radius, Q)
        if best is not None and best[0] == 0:
            break
    if best is None:
        return None, None
    Q = best[2]
    achieved = []
    for l, alpha in enumerate(coeff_vectors, start=1):
        dot = sum((Fraction(q) * a for q, a in zip(Q, alpha)), Fraction(0))
        achieved.append(torus_norm(Fraction(s) * dot) * H * N ** (l - 1))
    return Q, achieved


def _ring(m: int, radius: int):
    """Canonical vectors with sup-norm exactly radius, lexicographic."""
    for Q in _iproduct(range(-radius, radius + 1), repeat=m):
        if max(abs(c) for c in Q) != radius:
            continue
        nz = next((c for c in Q if c != 0), 0)
        if nz > 0:
            yield Q
