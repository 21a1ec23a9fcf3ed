"""Exact divisor-sum error terms in arithmetic progressions, and scans
over moduli (all, squarefree, smooth) comparing them against the classical
bound shapes.

E(x, q, a) is kept as an exact rational: both tau sums are integers and
the only division is by phi(q). Scans convert to float once per cell and
reduce with math.fsum, so results do not depend on thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import numpy as np

from .arith import ArithTables, is_smooth


@dataclass(frozen=True)
class APErrorReport:
    """One (x, q, a) cell of the divisor sum in arithmetic progressions.

    E = ap_sum - coprime_sum / phi(q), exact. The two ratios normalize
    |E| by the Weil-type envelope q^{-1/4} x^{1/2} and by x / q.
    """

    x: float
    q: int
    a: int
    ap_sum: int
    coprime_sum: int
    E: Fraction
    weil_ratio: float
    linear_ratio: float
    coprime: bool  # flags cells with gcd(a, q) > 1, which (1.1)-style
    # statements exclude but the twisted decomposition needs


@dataclass(frozen=True)
class TwistedErrorReport:
    """E'(N, q, a) for squarefree q, assembled from plain E cells.

    delta = gcd(a, q), qprime = q / delta, and terms holds one row
    (d, a_d, x_d, E, contribution) per divisor d of delta.
    """

    N: float
    q: int
    a: int
    delta: int
    qprime: int
    terms: tuple
    Eprime: Fraction


def residue_tau_sums(x: float, q: int, tables: ArithTables) -> np.ndarray:
    """sums[a] = sum of tau(n) over n <= x with n = a (mod q), exact int64."""
    if q < 1:
        raise ValueError("q must be >= 1")
    X = int(math.floor(x))
    if X > tables.limit:
        raise ValueError(f"x={x} exceeds table limit {tables.limit}")
    if X < 1:
        return np.zeros(q, dtype=np.int64)
    t = tables.tau[1 : X + 1].astype(np.int64, copy=False)
    full = (X // q) * q
    col = t[:full].reshape(-1, q).sum(axis=0) if full else np.zeros(q, dtype=np.int64)
    tail = t[full:]
    col[: tail.size] += tail
    sums = np.zeros(q, dtype=np.int64)
    sums[(np.arange(q) + 1) % q] = col
    return sums


def _coprime_mask(q: int) -> np.ndarray:
    return np.gcd(np.arange(q, dtype=np.int64), q) == 1


def divisor_error(x: float, q: int, a: int, tables: ArithTables) -> APErrorReport:
    """Exact E(x, q, a); a is not required to be coprime to q."""
    if not 0 <= a < q:
        raise ValueError(f"residue a={a} outside [0, {q})")
    sums = residue_tau_sums(x, q, tables)
    return _report_from_sums(x, q, a, sums)


def _report_from_sums(x: float, q: int, a: int, sums: np.ndarray) -> APErrorReport:
    phi_q = int(np.count_nonzero(_coprime_mask(q)))
    ap_sum = int(sums[a])
    coprime_sum = int(sums[_coprime_mask(q)].sum())
    e = Fraction(ap_sum * phi_q - coprime_sum, phi_q)
    abs_e = abs(float(e))
    return APErrorReport(
        x=x,
        q=q,
        a=a,
        ap_sum=ap_sum,
        coprime_sum=coprime_sum,
        E=e,
        weil_ratio=abs_e * q ** 0.25 * x ** -0.5,
        linear_ratio=abs_e * q / x,
        coprime=gcd(a, q) == 1,
    )


def _squarefree_divisors(n: int, tables: ArithTables) -> list[int]:
    divs = [1]
    for p in tables.distinct_primes(n):
        divs += [d * p for d in divs]
    return sorted(divs)


def twisted_error(N: float, q: int, a: int, tables: ArithTables) -> TwistedErrorReport:
    """E'(N, q, a) = tau(delta) * sum over d | delta of mu(d)/tau(d) *
    E(N/(delta d), q/delta, a_d), with delta = gcd(a, q) and
    a_d the class a * (delta d)^{-1} mod q/delta."""
    if not 0 <= a < q:
        raise ValueError(f"residue a={a} outside [0, {q})")
    tables.check_range(q)
    if tables.mu[q] == 0:
        raise ValueError(f"q={q} is not squarefree")
    delta = gcd(a, q) if a else q
    qprime = q // delta
    terms = []
    total = Fraction(0)
    for d in _squarefree_divisors(delta, tables):
        x_d = N / (delta * d)
        if qprime == 1:
            a_d = 0
        else:
            a_d = a * pow(delta * d, -1, qprime) % qprime
        cell = divisor_error(x_d, qprime, a_d, tables)
        weight = Fraction(int(tables.mu[d]), int(tables.tau[d]))
        contribution = weight * cell.E
        terms.append((d, a_d, x_d, cell.E, contribution))
        total += contribution
    eprime = int(tables.tau[delta]) * total
    return TwistedErrorReport(
        N=N, q=q, a=a, delta=delta, qprime=qprime, terms=tuple(terms), Eprime=eprime
    )


# ---------------------------------------------------------------------------
# scans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScanRow:
    q: int
    squarefree: bool
    max_abs_e: float
    argmax_a: int
    weil_ratio: float
    linear_ratio: float


@dataclass(frozen=True)
class BvScanResult:
    x: float
    theta: float
    A: float
    q_max: int
    rows: tuple
    total: float
    total_squarefree: float
    normalized_ratio: float
    normalized_ratio_squarefree: float


@dataclass(frozen=True)
class SmoothScanResult:
    x: float
    theta: float
    eta: float
    delta_prime: float
    flavor: str  # "x": prime factors <= x^eta; "q": <= q^eta
    q_max: int
    rows: tuple
    max_ratio: float | None
    argmax_q: int | None


def _max_coprime_cell(x: float, q: int, tables: ArithTables) -> tuple[float, int]:
    """(max over coprime a of |E(x,q,a)|, smallest attaining a), exact max."""
    sums = residue_tau_sums(x, q, tables)
    mask = _coprime_mask(q)
    phi_q = int(np.count_nonzero(mask))
    coprime_sum = int(sums[mask].sum())
    # compare |sums[a]*phi - coprime_sum| in integers: exact ordering
    scaled = np.abs(sums * phi_q - coprime_sum)
    scaled[~mask] = -1
    a_best = int(np.argmax(scaled))
    return float(Fraction(int(scaled[a_best]), phi_q)), a_best


def _scan_rows(x: float, qs, tables: ArithTables, threads: int):
    def one(q: int) -> ScanRow:
        max_e, a_best = _max_coprime_cell(x, q, tables)
        return ScanRow(
            q=q,
            squarefree=bool(tables.mu[q] != 0),
            max_abs_e=max_e,
            argmax_a=a_best,
            weil_ratio=max_e * q ** 0.25 * x ** -0.5,
            linear_ratio=max_e * q / x,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, qs))
    return [one(q) for q in qs]


def bv_scan(
    x: float,
    theta: float,
    tables: ArithTables,
    A: float = 1.0,
    threads: int = 1,
) -> BvScanResult:
    """Sum over q <= x^theta of max over coprime a of |E(x, q, a)|,
    plus the same sum over squarefree q only, normalized by x/(log x)^A."""
    q_max = int(math.floor(x ** theta))
    rows = _scan_rows(x, range(1, q_max + 1), tables, threads)
    total = math.fsum(r.max_abs_e for r in rows)
    total_sf = math.fsum(r.max_abs_e for r in rows if r.squarefree)
    norm = x / math.log(x) ** A
    return BvScanResult(
        x=x,
        theta=theta,
        A=A,
        q_max=q_max,
        rows=tuple(rows),
        total=total,
        total_squarefree=total_sf,
        normalized_ratio=total / norm,
        normalized_ratio_squarefree=total_sf / norm,
    )


def smooth_scan(
    x: float,
    theta: float,
    eta: float,
    delta_prime: float,
    tables: ArithTables,
    flavor: str = "x",
    threads: int = 1,
) -> SmoothScanResult:
    """Over squarefree smooth q <= x^theta: max over coprime a of
    |E(x,q,a)| * q / x^(1-delta_prime) per q, and its maximum.

    flavor "x" admits q whose prime factors are <= x^eta; flavor "q"
    uses the modulus-relative bound q^eta. An empty modulus set yields
    an empty report, not an error.
    """
    if flavor not in ("x", "q"):
        raise ValueError("flavor must be 'x' or 'q'")
    q_max = int(math.floor(x ** theta))

    def qualifies(q: int) -> bool:
        if tables.mu[q] == 0:
            return False
        bound = x ** eta if flavor == "x" else q ** eta
        return is_smooth(q, bound, tables)

    qs = [q for q in range(1, q_max + 1) if qualifies(q)]
    rows = _scan_rows(x, qs, tables, threads)
    scale = x ** (1.0 - delta_prime)
    ratios = [r.max_abs_e * r.q / scale for r in rows]
    if rows:
        i_best = max(range(len(rows)), key=lambda i: ratios[i])
        max_ratio, argmax_q = ratios[i_best], rows[i_best].q
    else:
        max_ratio, argmax_q = None, None
    return SmoothScanResult(
        x=x,
        theta=theta,
        eta=eta,
        delta_prime=delta_prime,
        flavor=flavor,
        q_max=q_max,
        rows=tuple(rows),
        max_ratio=max_ratio,
        argmax_q=argmax_q,
    )
