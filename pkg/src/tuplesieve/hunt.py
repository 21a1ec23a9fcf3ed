"""Scan for integers n <= x whose shifted tuple n + h has squarefree
product and total divisor count below a threshold.

The squarefree-product condition splits into per-component squarefreeness
plus pairwise coprimality; the latter only fails at primes dividing some
difference h_j - h_i, so those few primes are screened directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .admissible import AdmissibleTuple
from .arith import ArithTables


@dataclass(frozen=True)
class HuntResult:
    h: tuple
    x: float
    rho: float
    floor_rho: int
    hits: np.ndarray          # all qualifying n, ascending
    qualified_count: int      # n with squarefree product (any divisor sum)
    min_sum: int | None       # smallest total divisor count seen
    running_min: tuple        # (n, sum) pairs where a new minimum appeared
    histogram: dict           # total divisor count -> count, over qualified n
    normalized_count: float | None  # hits * (log log x)(log x)^k / x


def _prime_factors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def hunt(h: AdmissibleTuple, x: float, rho: float, tables: ArithTables) -> HuntResult:
    """All n in [1, x] with squarefree product over n + h and total
    divisor count <= floor(rho), plus summary statistics."""
    X = int(math.floor(x))
    if X + max(h.h) > tables.limit:
        raise ValueError("x + max(h) exceeds table limit")
    if X < 1:
        raise ValueError("x must be >= 1")
    n = np.arange(1, X + 1, dtype=np.int64)

    qualified = np.ones(X, dtype=bool)
    for hi in h.h:
        qualified &= tables.mu[n + hi] != 0
    for i in range(h.k):
        for j in range(i + 1, h.k):
            for p in _prime_factors(h.h[j] - h.h[i]):
                qualified &= (n + h.h[i]) % p != 0

    sums = np.zeros(X, dtype=np.int64)
    for hi in h.h:
        sums += tables.tau[n + hi]

    floor_rho = math.floor(rho)
    hits = n[qualified & (sums <= floor_rho)]

    q_n = n[qualified]
    q_sums = sums[qualified]
    running: list[tuple[int, int]] = []
    if q_n.size:
        run_min = np.minimum.accumulate(q_sums)
        new_min = np.ones(q_n.size, dtype=bool)
        new_min[1:] = q_sums[1:] < run_min[:-1]
        running = [(int(a), int(b)) for a, b in zip(q_n[new_min], q_sums[new_min])]
    histogram = {
        int(v): int(c) for v, c in zip(*np.unique(q_sums, return_counts=True))
    }

    normalized = None
    if X >= 3:
        loglog = math.log(math.log(X))
        if loglog > 0:
            normalized = hits.size * loglog * math.log(X) ** h.k / X

    return HuntResult(
        h=h.h,
        x=x,
        rho=rho,
        floor_rho=floor_rho,
        hits=hits,
        qualified_count=int(q_n.size),
        min_sum=int(q_sums.min()) if q_n.size else None,
        running_min=tuple(running),
        histogram=histogram,
        normalized_count=normalized,
    )


def density_report(results) -> list[dict]:
    """Hit counts over an x grid with the normalization
    count * (log log x)(log x)^k / x; descriptive only."""
    results = list(results)
    if len(results) < 2:
        raise ValueError("density report needs at least 2 grid points")
    rows = []
    for res in results:
        k = len(res.h)
        X = int(math.floor(res.x))
        loglog = math.log(math.log(X)) if X >= 3 else float("nan")
        ratio = res.hits.size * loglog * math.log(X) ** k / X if X >= 3 else float("nan")
        rows.append(
            {
                "x": res.x,
                "rho": res.rho,
                "hits": int(res.hits.size),
                "qualified": res.qualified_count,
                "normalized": ratio,
            }
        )
    return rows
