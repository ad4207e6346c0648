"""Averaged sums over short intervals, arithmetic progressions, and
logarithmic weights.

Every inner window statistic is defined as the correctly rounded sum of
the float64 term values, and every outer accumulation follows the fixed
block summation policy in :mod:`moebius_lab.summation`; that pair of
conventions is what makes the fast rolling-window engines agree bit for
bit with the brute-force oracles, and makes results independent of the
worker count.

Three engines:

- "fast": exact rolling windows (integer accumulators); O(1) updates per
  n; bit-identical to "brute".
- "fast-prefix": vectorized per-residue prefix sums for large N; float64
  cumsum arithmetic, deterministic but not correctly rounded per window.
- "brute": O(N*h) re-summation, the oracle.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .arith import FactorTable, MultTable, primes_in_window, totient_ratio
from .errors import ConfigurationError, RangeError
from .phase import PolyPhase, format_literal
from .summation import (
    BLOCK,
    ExactComplexSum,
    block_partials,
    cabs,
    combine_partials,
)

CHUNK = 1 << 20  # work unit for parallel n-ranges; a multiple of BLOCK
EXACT_CAP = 2 * 10**6  # N*s above this switches auto mode to fast-prefix


# ---------------------------------------------------------------------------
# specs and reports


@dataclass(frozen=True)
class ShortAPSpec:
    """Parameters of a short-progression average."""

    N: int
    h: int
    s: int
    poly: PolyPhase
    weight: MultTable

    def validate(self) -> None:
        if self.h < 3:
            raise ConfigurationError("h must be >= 3 (the bound needs loglog h > 0)")
        if self.s < 1:
            raise ConfigurationError("s must be >= 1")
        if self.N < 10 * self.h * self.s:
            raise ConfigurationError(
                f"N={self.N} too small against h*s={self.h * self.s} (need N >= 10*h*s)"
            )
        if self.weight.n_max < self.N + self.h * self.s:
            raise RangeError(
                f"weight table covers [1, {self.weight.n_max}], need {self.N + self.h * self.s}"
            )


@dataclass
class AverageReport:
    """An averaged value with its parameters and comparison bound."""

    value: float
    N: int
    h: int
    s: int
    poly: str
    bound: float | None
    ratio: float | None
    algorithm: str
    seconds: float
    outside_paper_regime: bool

    def to_json_line(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)

    def csv_row(self) -> list:
        return [self.N, self.h, self.s, self.poly, repr(self.value),
                "" if self.bound is None else repr(self.bound),
                "" if self.ratio is None else repr(self.ratio),
                self.algorithm, f"{self.seconds:.3f}"]


CSV_HEADER = ["N", "h", "s", "poly", "value", "bound", "ratio", "algo", "seconds"]


def reports_to_csv(reports) -> str:
    lines = [",".join(CSV_HEADER)]
    for r in reports:
        lines.append(",".join(str(x) for x in r.csv_row()))
    return "\n".join(lines) + "\n"


def _regime_flag(N: int, h: int, s: int) -> bool:
    return s * math.log(h) > 0.5 * math.log(N) ** (1 / 32)


def _decay_bound(h: int, s: int, ft: FactorTable | None) -> float | None:
    """(s/phi(s)) * loglog h / log h, or None without a factor table."""
    if s == 1:
        ratio = 1.0
    elif ft is None:
        return None
    else:
        ratio = float(totient_ratio(s, ft))
    return ratio * math.log(math.log(h)) / math.log(h)


# ---------------------------------------------------------------------------
# shared term construction


def term_arrays(poly: PolyPhase, weight: MultTable, lo: int, hi: int):
    """Float64 re/im parts of weight(m) * e(P(m)) for m in [lo, hi).

    Both the fast engines and the brute oracle read these same arrays, so
    their inputs are bitwise identical by construction.
    """
    fracs = poly.eval_block(lo, hi)
    w = weight.values_block(lo, hi)
    angles = 2.0 * np.pi * fracs
    re = np.cos(angles)
    im = np.sin(angles)
    if weight.is_integer_valued():
        wf = w.astype(np.float64)
        return re * wf, im * wf
    wre, wim = w.real.copy(), w.imag.copy()
    return re * wre - im * wim, re * wim + im * wre


# ---------------------------------------------------------------------------
# short-progression average: (1/(N s)) sum_a sum_n |h^-1 sum_{m=a(s), n<m<=n+hs} w(m) e(P(m))|


def short_ap_average(
    spec: ShortAPSpec,
    *,
    algorithm: str = "auto",
    workers: int = 1,
    ft: FactorTable | None = None,
) -> AverageReport:
    spec.validate()
    t0 = time.perf_counter()
    N, h, s = spec.N, spec.h, spec.s
    if algorithm == "auto":
        algorithm = "fast" if N * s <= EXACT_CAP else "fast-prefix"
    if algorithm == "fast":
        total = _short_ap_exact(spec, workers)
    elif algorithm == "fast-prefix":
        total = _short_ap_prefix(spec, workers)
    elif algorithm == "brute":
        total = _short_ap_brute(spec)
    else:
        raise ConfigurationError(f"unknown algorithm {algorithm!r}")
    value = total / (N * s)
    bound = _decay_bound(h, s, ft)
    return AverageReport(
        value=value,
        N=N,
        h=h,
        s=s,
        poly=format_literal(spec.poly),
        bound=bound,
        ratio=(value / bound if bound else None),
        algorithm=algorithm,
        seconds=time.perf_counter() - t0,
        outside_paper_regime=_regime_flag(N, h, s),
    )


def _chunk_ranges(N: int):
    return [(c0, min(c0 + CHUNK, N + 1)) for c0 in range(1, N + 1, CHUNK)]


def _run_chunks(fn, ranges, workers: int):
    """Map fn over chunk ranges, preserving order; threads share read-only
    tables, and the fixed combination order keeps results worker-invariant."""
    if workers <= 1:
        parts = [fn(r) for r in ranges]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(fn, ranges))
    merged = []
    for p in parts:
        merged.extend(p)
    return combine_partials(merged)


def _short_ap_exact(spec: ShortAPSpec, workers: int) -> float:
    N, h, s = spec.N, spec.h, spec.s
    hs = h * s
    re_t, im_t = term_arrays(spec.poly, spec.weight, 1, N + hs + 1)
    # arrays are indexed so position m-1 holds the value at m
    re_list, im_list = re_t.tolist(), im_t.tolist()

    def run(chunk):
        c0, c1 = chunk
        accs = [ExactComplexSum() for _ in range(s)]
        mags = [0.0] * s
        for m in range(c0 + 1, c0 + hs + 1):
            a = (m - 1) % s
            accs[a].add(re_list[m - 1], im_list[m - 1])
        for a in range(s):
            mags[a] = accs[a].abs()
        v = np.empty(c1 - c0, dtype=np.float64)
        for n in range(c0, c1):
            if n > c0:
                a = (n - 1) % s
                acc = accs[a]
                acc.add(re_list[n + hs - 1], im_list[n + hs - 1])
                acc.remove(re_list[n - 1], im_list[n - 1])
                mags[a] = acc.abs()
            acc_v = 0.0
            for a in range(s):
                acc_v += mags[a] / h
            v[n - c0] = acc_v
        return block_partials(v)

    return _run_chunks(run, _chunk_ranges(N), workers)


def _short_ap_prefix(spec: ShortAPSpec, workers: int) -> float:
    N, h, s = spec.N, spec.h, spec.s
    hs = h * s
    re_t, im_t = term_arrays(spec.poly, spec.weight, 1, N + hs + 1)
    terms = re_t + 1j * im_t
    del re_t, im_t
    prefixes = []
    for a in range(1, s + 1):
        sub = terms[a - 1 :: s]  # values at m = a, a+s, ...
        C = np.empty(sub.size + 1, dtype=np.complex128)
        C[0] = 0.0
        np.cumsum(sub, out=C[1:])
        prefixes.append(C)
    del terms

    def run(chunk):
        c0, c1 = chunk
        ns = np.arange(c0, c1, dtype=np.int64)
        v = np.zeros(c1 - c0, dtype=np.float64)
        for a in range(1, s + 1):
            C = prefixes[a - 1]
            j = (ns - a) // s + 1
            W = C[j + h] - C[j]
            v += np.abs(W) / h
        return block_partials(v)

    return _run_chunks(run, _chunk_ranges(N), workers)


def _short_ap_brute(spec: ShortAPSpec) -> float:
    N, h, s = spec.N, spec.h, spec.s
    hs = h * s
    re_t, im_t = term_arrays(spec.poly, spec.weight, 1, N + hs + 1)
    v = np.empty(N, dtype=np.float64)
    fsum = math.fsum
    for n in range(1, N + 1):
        acc_v = 0.0
        for a in range(1, s + 1):
            m0 = n + 1 + ((a - (n + 1)) % s)
            sl = slice(m0 - 1, n + hs, s)
            re = fsum(re_t[sl].tolist())
            im = fsum(im_t[sl].tolist())
            acc_v += cabs(re, im) / h
        v[n - 1] = acc_v
    return combine_partials(block_partials(v))


# ---------------------------------------------------------------------------
# self-correlation: (1/N) sum_n |h^-1 sum_{l<=h} w(n+ls) e(P(n+ls))|^2


def self_correlation_average(
    N: int,
    h: int,
    s: int,
    poly: PolyPhase,
    weight: MultTable,
    *,
    algorithm: str = "auto",
    workers: int = 1,
    ft: FactorTable | None = None,
) -> AverageReport:
    if weight.n_max < N + h * s:
        raise RangeError(
            f"weight table covers [1, {weight.n_max}], need {N + h * s}"
        )
    t0 = time.perf_counter()
    if algorithm == "auto":
        algorithm = "fast" if N * 2 <= EXACT_CAP else "fast-prefix"
    if algorithm == "fast":
        total = _self_corr_exact(N, h, s, poly, weight, workers)
    elif algorithm == "fast-prefix":
        total = _self_corr_prefix(N, h, s, poly, weight, workers)
    elif algorithm == "brute":
        total = _self_corr_brute(N, h, s, poly, weight)
    else:
        raise ConfigurationError(f"unknown algorithm {algorithm!r}")
    value = total / N
    bound = _decay_bound(h, s, ft) if h >= 3 else None
    return AverageReport(
        value=value,
        N=N,
        h=h,
        s=s,
        poly=format_literal(poly),
        bound=bound,
        ratio=(value / bound if bound else None),
        algorithm=algorithm,
        seconds=time.perf_counter() - t0,
        outside_paper_regime=_regime_flag(N, h, s),
    )


def _window_sq(re: float, im: float, h: int) -> float:
    return (re * re + im * im) / float(h * h)


def _self_corr_exact(N, h, s, poly, weight, workers) -> float:
    hs = h * s
    re_t, im_t = term_arrays(poly, weight, 1, N + hs + 1)
    re_list, im_list = re_t.tolist(), im_t.tolist()

    def run(chunk):
        c0, c1 = chunk
        # one rolling window per residue class of n mod s
        accs: dict[int, ExactComplexSum] = {}
        vals: dict[int, float] = {}
        v = np.empty(c1 - c0, dtype=np.float64)
        for n in range(c0, c1):
            r = n % s
            if r not in accs:
                acc = ExactComplexSum()
                for l in range(1, h + 1):
                    m = n + l * s
                    acc.add(re_list[m - 1], im_list[m - 1])
                accs[r] = acc
            else:
                acc = accs[r]
                acc.remove(re_list[n - 1], im_list[n - 1])
                acc.add(re_list[n + hs - 1], im_list[n + hs - 1])
            vals[r] = _window_sq(acc.re(), acc.im(), h)
            v[n - c0] = vals[r]
        return block_partials(v)

    return _run_chunks(run, _chunk_ranges(N), workers)


def _self_corr_prefix(N, h, s, poly, weight, workers) -> float:
    hs = h * s
    re_t, im_t = term_arrays(poly, weight, 1, N + hs + 1)
    terms = re_t + 1j * im_t
    del re_t, im_t
    prefixes = []
    for r in range(s):
        m0 = r if r != 0 else s  # smallest m >= 1 with m = r (mod s)
        sub = terms[m0 - 1 :: s]
        C = np.empty(sub.size + 1, dtype=np.complex128)
        C[0] = 0.0
        np.cumsum(sub, out=C[1:])
        prefixes.append((m0, C))
    del terms

    def run(chunk):
        c0, c1 = chunk
        ns = np.arange(c0, c1, dtype=np.int64)
        v = np.empty(c1 - c0, dtype=np.float64)
        for r in range(s):
            m0, C = prefixes[r]
            mask = (ns % s) == r
            sel = ns[mask]
            if sel.size == 0:
                continue
            # window terms are m = n+s .. n+hs; first index in the class list
            j = (sel + s - m0) // s
            W = C[j + h] - C[j]
            v[mask] = (W.real**2 + W.imag**2) / float(h * h)
        return block_partials(v)

    return _run_chunks(run, _chunk_ranges(N), workers)


def _self_corr_brute(N, h, s, poly, weight) -> float:
    hs = h * s
    re_t, im_t = term_arrays(poly, weight, 1, N + hs + 1)
    fsum = math.fsum
    v = np.empty(N, dtype=np.float64)
    for n in range(1, N + 1):
        sl = slice(n + s - 1, n + hs, s)
        re = fsum(re_t[sl].tolist())
        im = fsum(im_t[sl].tolist())
        v[n - 1] = _window_sq(re, im, h)
    return combine_partials(block_partials(v))


# ---------------------------------------------------------------------------
# the regrouping identity between shifted windows and progression windows


@dataclass
class WindowIdentityReport:
    lhs: float
    rhs: float
    discrepancy: float
    bound: float
    c_id: float
    skipped: bool
    notice: str
    seconds: float


def window_identity_check(
    N: int,
    h: int,
    s: int,
    poly: PolyPhase,
    weight: MultTable,
    *,
    c_id: float = 1.0,
    workers: int = 1,
) -> WindowIdentityReport:
    """Both sides of the shifted-window regrouping, exactly.

    lhs = sum_n |sum_{l<=h} w(n+ls) e(P(n+ls))|, rhs regroups the same
    mass over progression windows; they differ by boundary terms of size
    O(N), checked against c_id * (N + h**2 s**2).
    """
    t0 = time.perf_counter()
    if h * s >= N:
        return WindowIdentityReport(
            lhs=float("nan"),
            rhs=float("nan"),
            discrepancy=float("nan"),
            bound=c_id * (N + h * h * s * s),
            c_id=c_id,
            skipped=True,
            notice="degenerate: h*s >= N, both sides boundary-dominated",
            seconds=time.perf_counter() - t0,
        )
    hs = h * s
    re_t, im_t = term_arrays(poly, weight, 1, N + hs + 1)
    re_list, im_list = re_t.tolist(), im_t.tolist()

    def run_lhs(chunk):
        c0, c1 = chunk
        accs: dict[int, ExactComplexSum] = {}
        v = np.empty(c1 - c0, dtype=np.float64)
        for n in range(c0, c1):
            r = n % s
            if r not in accs:
                acc = ExactComplexSum()
                for l in range(1, h + 1):
                    acc.add(re_list[n + l * s - 1], im_list[n + l * s - 1])
                accs[r] = acc
            else:
                acc = accs[r]
                acc.remove(re_list[n - 1], im_list[n - 1])
                acc.add(re_list[n + hs - 1], im_list[n + hs - 1])
            v[n - c0] = acc.abs()
        return block_partials(v)

    def run_rhs(chunk):
        c0, c1 = chunk
        accs = [ExactComplexSum() for _ in range(s)]
        mags = [0.0] * s
        for m in range(c0 + 1, c0 + hs + 1):
            accs[(m - 1) % s].add(re_list[m - 1], im_list[m - 1])
        for a in range(s):
            mags[a] = accs[a].abs()
        v = np.empty(c1 - c0, dtype=np.float64)
        for x in range(c0, c1):
            if x > c0:
                a = (x - 1) % s
                acc = accs[a]
                acc.add(re_list[x + hs - 1], im_list[x + hs - 1])
                acc.remove(re_list[x - 1], im_list[x - 1])
                mags[a] = acc.abs()
            acc_v = 0.0
            for a in range(s):
                acc_v += mags[a]
            v[x - c0] = acc_v
        return block_partials(v)

    lhs = _run_chunks(run_lhs, _chunk_ranges(N), workers)
    rhs = _run_chunks(run_rhs, _chunk_ranges(N), workers) / s
    disc = abs(lhs - rhs)
    return WindowIdentityReport(
        lhs=lhs,
        rhs=rhs,
        discrepancy=disc,
        bound=c_id * (N + h * h * s * s),
        c_id=c_id,
        skipped=False,
        notice="",
        seconds=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# autocorrelation probe against the heuristic level 6h/pi^2


@dataclass
class ChowlaReport:
    value: float
    target: float
    ratio: float
    N: int
    h: int
    s: int
    seconds: float

    def to_json_line(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


def chowla_probe(N: int, h: int, s: int, weight: MultTable) -> ChowlaReport:
    """(1/N) sum_n |sum_{l<=h} w(n+ls)|^2 for an integer-valued weight.

    Pure integer accumulation: window sums are int32, their squares are
    summed exactly in int64 and divided once.
    """
    if not weight.is_integer_valued():
        raise ConfigurationError("the autocorrelation probe needs an integer weight")
    if weight.n_max < N + h * s:
        raise RangeError(f"weight table covers [1, {weight.n_max}], need {N + h * s}")
    t0 = time.perf_counter()
    w = weight.values_block(1, N + h * s + 1).astype(np.int32)
    W = np.zeros(N, dtype=np.int32)
    for l in range(1, h + 1):
        # values at m = n + l*s for n = 1..N live at positions n + l*s - 1
        W += w[l * s : l * s + N]
    total = int(np.sum(W.astype(np.int64) ** 2))
    value = total / N
    target = 6.0 * h / math.pi**2
    return ChowlaReport(
        value=value,
        target=target,
        ratio=value / target,
        N=N,
        h=h,
        s=s,
        seconds=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# logarithmically weighted two-point correlation


@dataclass
class LogCorrelationReport:
    value_re: float
    value_im: float
    magnitude: float
    N: int
    h1: int
    h2: int
    poly: str
    seconds: float

    def to_json_line(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


def log_average_correlation(
    N: int,
    h1: int,
    h2: int,
    poly: PolyPhase,
    weight: MultTable,
    *,
    workers: int = 1,
) -> LogCorrelationReport:
    """(1/log N) sum_n w(n+h1) w(n+h2) e(P(n)) / n."""
    if h1 == h2:
        raise ConfigurationError("the two shifts must differ (the diagonal is excluded)")
    hi_shift = max(h1, h2)
    if weight.n_max < N + hi_shift:
        raise RangeError(f"weight table covers [1, {weight.n_max}], need {N + hi_shift}")
    t0 = time.perf_counter()

    def run(chunk):
        c0, c1 = chunk
        ns = np.arange(c0, c1, dtype=np.float64)
        w1 = np.asarray(weight.values_block(c0 + h1, c1 + h1), dtype=np.complex128)
        w2 = np.asarray(weight.values_block(c0 + h2, c1 + h2), dtype=np.complex128)
        fr = poly.eval_block(c0, c1)
        z = np.exp(2j * np.pi * fr)
        terms = w1 * w2 * z / ns
        return [block_partials(terms.real), block_partials(terms.imag)]

    ranges = _chunk_ranges(N)
    if workers <= 1:
        parts = [run(r) for r in ranges]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, ranges))
    re = combine_partials([p for pr in parts for p in pr[0]]) / math.log(N)
    im = combine_partials([p for pr in parts for p in pr[1]]) / math.log(N)
    return LogCorrelationReport(
        value_re=re,
        value_im=im,
        magnitude=cabs(re, im),
        N=N,
        h1=h1,
        h2=h2,
        poly=format_literal(poly),
        seconds=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# Ramare-weight approximate identity


@dataclass
class RamareReport:
    total_error: float
    bound: float  # H / P_min
    p_min: int
    window_start: int
    window_length: int
    members: int
    nonzero_errors: int
    seconds: float

    def to_json_line(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


def ramare_decomposition_error(
    window_start: int,
    H: int,
    s: int,
    p_lo: int,
    p_hi: int,
    weight: MultTable,
    ft: FactorTable,
) -> RamareReport:
    """Brute-force both sides of the prime-divisor reweighting identity.

    For m in (window_start, window_start + H*s] lying in the one-window
    dense set, compares w(m) against the Ramare-weighted sum over prime
    divisors in the window (p_lo, p_hi] coprime to s; returns the summed
    absolute error and the comparison level H / p_min.
    """
    t0 = time.perf_counter()
    ps = primes_in_window(p_lo, p_hi, s)
    if not ps:
        raise ConfigurationError(f"no primes in ({p_lo}, {p_hi}] coprime to {s}")
    pset = set(ps)
    hi = window_start + H * s
    if weight.n_max < hi or ft.n_max < hi:
        raise RangeError(f"tables must cover {hi}")
    errors = []
    members = 0
    nonzero = 0
    for m in range(window_start + 1, hi + 1):
        if m < 2:
            continue
        fac = ft.factorize(m)
        window_ps = [p for p, _ in fac if p in pset]
        if not window_ps:
            continue
        members += 1
        approx = 0.0 + 0.0j
        for p in window_ps:
            l = m // p
            omega_l = sum(1 for q, _ in ft.factorize(l) if q in pset) if l > 1 else 0
            approx += complex(weight.value(p)) * complex(weight.value(l)) / (1 + omega_l)
        err = abs(complex(weight.value(m)) - approx)
        if err > 0:
            nonzero += 1
        errors.append(err)
    total = math.fsum(errors)
    return RamareReport(
        total_error=total,
        bound=H / min(ps),
        p_min=min(ps),
        window_start=window_start,
        window_length=H * s,
        members=members,
        nonzero_errors=nonzero,
        seconds=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# decay scan over h


@dataclass
class ScanResult:
    reports: list
    strictly_decreasing: bool
    max_ratio: float

    def to_json_lines(self) -> str:
        return "\n".join(r.to_json_line() for r in self.reports) + "\n"


def bound_ratio_scan(
    N: int,
    s: int,
    poly: PolyPhase,
    h_list,
    weight: MultTable,
    ft: FactorTable,
    *,
    algorithm: str = "auto",
    workers: int = 1,
) -> ScanResult:
    """One short-progression average per h, with the decay-bound ratios."""
    reports = []
    for h in h_list:
        if h < 3:
            raise ConfigurationError("every h must be >= 3")
        spec = ShortAPSpec(N=N, h=h, s=s, poly=poly, weight=weight)
        reports.append(
            short_ap_average(spec, algorithm=algorithm, workers=workers, ft=ft)
        )
    values = [r.value for r in reports]
    decreasing = all(a > b for a, b in zip(values, values[1:]))
    return ScanResult(
        reports=reports,
        strictly_decreasing=decreasing,
        max_ratio=max(r.ratio for r in reports),
    )
