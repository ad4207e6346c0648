"""Prime-sum distances between 1-bounded multiplicative functions and the
grid-minimized pretentiousness functionals.

The distance is sum over primes p <= X, p not dividing s, of
(1 - Re f(p) conj(g(p))) / p.  The functionals minimize the squared
distance between f * chi and n -> n^it over Dirichlet characters chi of
the excluded modulus and a finite t-grid; the continuous infimum over
|t| <= T is discretized with recorded spacing (default 0.5 / log X, which
bounds the per-prime phase slack of t log p by 0.5), so every reported
minimum is an upper bound for the true infimum and says so.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .arith import DirichletCharacter, FactorTable, MultTable, enumerate_characters, primes_up_to
from .errors import ConfigurationError, RangeError, ResourceError

DEFAULT_GRID_FACTOR = 0.5
GRID_BUDGET = 5 * 10**6  # (characters x t-points) upper bound


@dataclass(frozen=True)
class DistanceQuery:
    f: MultTable
    g: MultTable
    X: int
    s: int = 1


def distance_squared(query: DistanceQuery) -> float:
    """Squared distance sum_{p <= X, p not | s} (1 - Re f(p) conj(g(p))) / p."""
    f, g, X, s = query.f, query.g, query.X, query.s
    if f.n_max < X or g.n_max < X:
        raise RangeError(f"tables must cover X={X}")
    ps = [p for p in primes_up_to(X).tolist() if s % p != 0]
    terms = []
    for p in ps:
        fp = complex(f.value(p))
        gp = complex(g.value(p))
        terms.append((1.0 - (fp * gp.conjugate()).real) / p)
    return math.fsum(terms)


@dataclass
class MResult:
    """Grid minimum of the twisted-distance functional (an upper bound
    for the continuous infimum)."""

    value: float
    modulus: int
    chi_index: int
    t: float
    X: int
    T: float
    Y: int | None
    grid_spacing: float
    is_upper_bound: bool = True

    def to_json_line(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)

    def csv_row(self) -> list:
        return [self.X, self.T, "" if self.Y is None else self.Y, self.modulus,
                self.chi_index, repr(self.t), repr(self.value), repr(self.grid_spacing)]


M_CSV_HEADER = ["X", "T", "Y", "s_star", "chi_index", "t_star", "M", "grid_spacing"]


def _t_grid(T: float, spacing: float) -> np.ndarray:
    n = int(math.floor(T / spacing))
    ts = np.arange(-n, n + 1, dtype=np.float64) * spacing
    return ts


def m_s(
    f: MultTable,
    s: int,
    X: int,
    T: float,
    *,
    t_spacing: float | None = None,
    ft: FactorTable | None = None,
    characters: list[DirichletCharacter] | None = None,
) -> MResult:
    """Exact minimum over characters mod s and the finite t-grid.

    Ties break to the smallest character index, then smallest t (the grid
    is scanned in order and only strict improvements replace the best).
    """
    if f.n_max < X:
        raise RangeError(f"table covers [1, {f.n_max}], need X={X}")
    spacing = t_spacing if t_spacing is not None else DEFAULT_GRID_FACTOR / math.log(max(X, 3))
    chars = characters if characters is not None else enumerate_characters(s, ft)
    ts = _t_grid(T, spacing)
    if len(chars) * ts.size > GRID_BUDGET:
        raise ResourceError(
            f"grid of {len(chars)} characters x {ts.size} t-points exceeds budget"
        )
    ps = primes_up_to(X)
    if s > 1:
        ps = ps[np.gcd(ps, s) == 1]
    pf = ps.astype(np.float64)
    logp = np.log(pf)
    inv_p = 1.0 / pf
    fvals = np.array([complex(f.value(int(p))) for p in ps], dtype=np.complex128)

    best = None
    # e(-i t log p) is shared by every character; loop t outside
    for t in ts.tolist():
        osc = np.exp(-1j * t * logp)
        for ci, chi in enumerate(chars):
            zv = fvals * chi.value_table[ps % chi.modulus] if s > 1 else fvals
            val = float(np.sum(inv_p * (1.0 - (zv * osc).real)))
            if best is None or val < best[0]:
                best = (val, ci, t)
    value, ci, t = best
    return MResult(
        value=value,
        modulus=s,
        chi_index=ci,
        t=t,
        X=X,
        T=T,
        Y=None,
        grid_spacing=spacing,
    )


def m_global(
    f: MultTable,
    X: int,
    T: float,
    Y: int,
    *,
    t_spacing: float | None = None,
    ft: FactorTable | None = None,
) -> MResult:
    """Minimum of the modulus functional over s <= Y.

    Ties break to the smallest modulus (scanned in increasing order with
    strict improvement).
    """
    if Y < 1:
        raise ConfigurationError("Y must be >= 1")
    best = None
    for s in range(1, Y + 1):
        r = m_s(f, s, X, T, t_spacing=t_spacing, ft=ft)
        if best is None or r.value < best.value:
            best = r
    return MResult(
        value=best.value,
        modulus=best.modulus,
        chi_index=best.chi_index,
        t=best.t,
        X=X,
        T=T,
        Y=Y,
        grid_spacing=best.grid_spacing,
    )


@dataclass
class ProbeRow:
    X: int
    M: float
    third_loglog: float

    def to_json_line(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


def nonpretentious_probe(
    f: MultTable,
    X_list,
    T: float,
    Y: int,
    *,
    t_spacing: float | None = None,
    ft: FactorTable | None = None,
) -> list[ProbeRow]:
    """One row per cutoff: the grid minimum next to (1/3) loglog X.

    Only the monotone increase of the M column is a claim; the 1/3
    constant column is printed for orientation, never asserted.
    """
    rows = []
    for X in X_list:
        r = m_global(f, X, T, Y, t_spacing=t_spacing, ft=ft)
        rows.append(ProbeRow(X=X, M=r.value, third_loglog=math.log(math.log(X)) / 3.0))
    return rows
