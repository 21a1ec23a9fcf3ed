"""Sieved tables of arithmetic functions on an initial segment [1, limit].

One smallest-prime-factor sieve is built first; tau, mu and phi are then
derived from the shared factorization structure (each n pulls its values
from n // spf(n)), so a single pass of sieving feeds all four tables.

Tables can be persisted to a little-endian binary cache file keyed by the
limit, which lets repeated scans skip the build.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from math import comb, gcd, isqrt
from pathlib import Path

import numpy as np

# 11 bytes per entry across the four arrays; default cap keeps a build
# within ~1.5 GB of table memory.
DEFAULT_LIMIT_CAP = 120_000_000

_CACHE_MAGIC = b"TUPSIEVE"
_CACHE_VERSION = 1


class CapacityError(Exception):
    """Requested table limit exceeds the configured memory cap."""


@dataclass
class ArithTables:
    """Arrays indexed by n for 0 <= n <= limit (index 0 is unused).

    tau[n] = number of divisors, mu[n] = Moebius value, phi[n] = totient,
    spf[n] = smallest prime factor with the sentinel spf[1] = 1.
    """

    limit: int
    tau: np.ndarray   # uint16
    mu: np.ndarray    # int8
    phi: np.ndarray   # uint32
    spf: np.ndarray   # uint32

    def check_range(self, n: int) -> None:
        if not 1 <= n <= self.limit:
            raise ValueError(f"n={n} outside table range [1, {self.limit}]")

    def factorize(self, n: int) -> list[tuple[int, int]]:
        """(prime, exponent) pairs of n, ascending, via the spf table."""
        self.check_range(n)
        out = []
        spf = self.spf
        while n > 1:
            p = int(spf[n])
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        return out

    def distinct_primes(self, n: int) -> list[int]:
        self.check_range(n)
        out = []
        spf = self.spf
        while n > 1:
            p = int(spf[n])
            out.append(p)
            while n % p == 0:
                n //= p
        return out

    def is_squarefree(self, n: int) -> bool:
        self.check_range(n)
        return self.mu[n] != 0


def build_tables(limit: int, cap: int = DEFAULT_LIMIT_CAP) -> ArithTables:
    """Sieve tau/mu/phi/spf up to limit (inclusive). Deterministic."""
    if limit < 1:
        raise ValueError("limit must be >= 1")
    if limit > cap:
        raise CapacityError(f"limit {limit} exceeds cap {cap}")

    size = limit + 1
    spf = np.zeros(size, dtype=np.uint32)
    for p in range(2, isqrt(limit) + 1):
        if spf[p] == 0:
            sl = spf[p * p :: p]
            sl[sl == 0] = p
    unmarked = spf == 0
    spf[unmarked] = np.arange(size, dtype=np.uint32)[unmarked]
    if limit >= 1:
        spf[1] = 1  # sentinel: keeps hot loops free of a None case

    tau = np.zeros(size, dtype=np.uint16)
    mu = np.zeros(size, dtype=np.int8)
    phi = np.zeros(size, dtype=np.uint32)
    # exponent of spf(n) in n, needed for the tau recurrence
    cnt = np.zeros(size, dtype=np.uint8)

    tau[1] = 1
    mu[1] = 1
    phi[1] = 1
    idx = np.arange(size, dtype=np.uint32)
    prime_mask = (spf == idx) & (idx >= 2)
    primes = np.flatnonzero(prime_mask)
    tau[primes] = 2
    mu[primes] = -1
    phi[primes] = primes - 1
    cnt[primes] = 1

    done = prime_mask
    done[0] = done[1] = True
    # peel composites by factorization depth: n is ready once n // spf(n) is
    pending = np.flatnonzero(~done).astype(np.int64)
    while pending.size:
        p = spf[pending].astype(np.int64)
        q = pending // p
        ready = done[q]
        cur, curq, curp = pending[ready], q[ready], p[ready]
        repeated = spf[curq] == curp

        cq = cnt[curq].astype(np.uint16)
        cnt[cur] = np.where(repeated, cq + 1, 1).astype(np.uint8)
        mu[cur] = np.where(repeated, 0, -mu[curq])
        phi[cur] = np.where(
            repeated,
            phi[curq].astype(np.uint64) * curp.astype(np.uint64),
            phi[curq].astype(np.uint64) * (curp - 1).astype(np.uint64),
        ).astype(np.uint32)
        tq = tau[curq].astype(np.uint32)
        tau[cur] = np.where(
            repeated, tq // (cq + 1) * (cq + 2), tq * 2
        ).astype(np.uint16)

        done[cur] = True
        pending = pending[~ready]

    return ArithTables(limit=limit, tau=tau, mu=mu, phi=phi, spf=spf)


def tau_k(n: int, k: int, tables: ArithTables) -> int:
    """Number of ordered factorizations of n into k positive parts."""
    if k < 1:
        raise ValueError("k must be >= 1")
    tables.check_range(n)
    out = 1
    for _, e in tables.factorize(n):
        out *= comb(e + k - 1, k - 1)
    return out


def is_squarefree_product(values, tables: ArithTables) -> bool:
    """True iff the product of the values is squarefree, i.e. every value
    is squarefree and the values are pairwise coprime."""
    vals = list(values)
    for v in vals:
        tables.check_range(v)
        if tables.mu[v] == 0:
            return False
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            if gcd(vals[i], vals[j]) > 1:
                return False
    return True


def is_smooth(n: int, bound: float, tables: ArithTables) -> bool:
    """True iff every prime factor of n is <= bound (vacuous for n = 1)."""
    tables.check_range(n)
    spf = tables.spf
    while n > 1:
        p = int(spf[n])
        if p > bound:
            return False
        while n % p == 0:
            n //= p
    return True


# ---------------------------------------------------------------------------
# cache file: magic(8) version(<u32) limit(<u64), then tau/mu/phi/spf raw
# ---------------------------------------------------------------------------

def cache_path(limit: int, cache_dir) -> Path:
    return Path(cache_dir) / f"arith-{limit}.tsv.bin"


def save_tables(tables: ArithTables, cache_dir) -> Path:
    path = cache_path(tables.limit, cache_dir)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    with open(tmp, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(struct.pack("<IQ", _CACHE_VERSION, tables.limit))
        fh.write(tables.tau.astype("<u2", copy=False).tobytes())
        fh.write(tables.mu.astype("i1", copy=False).tobytes())
        fh.write(tables.phi.astype("<u4", copy=False).tobytes())
        fh.write(tables.spf.astype("<u4", copy=False).tobytes())
    tmp.replace(path)
    return path


def load_tables(limit: int, cache_dir) -> ArithTables:
    path = cache_path(limit, cache_dir)
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _CACHE_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        version, stored_limit = struct.unpack("<IQ", fh.read(12))
        if version != _CACHE_VERSION:
            raise ValueError(f"{path}: unsupported cache version {version}")
        if stored_limit != limit:
            raise ValueError(f"{path}: stores limit {stored_limit}, wanted {limit}")
        size = limit + 1
        tau = np.fromfile(fh, dtype="<u2", count=size)
        mu = np.fromfile(fh, dtype="i1", count=size)
        phi = np.fromfile(fh, dtype="<u4", count=size)
        spf = np.fromfile(fh, dtype="<u4", count=size)
    if spf.size != size:
        raise ValueError(f"{path}: truncated cache file")
    return ArithTables(limit=limit, tau=tau, mu=mu, phi=phi, spf=spf)


def load_or_build(limit: int, cache_dir=None, cap: int = DEFAULT_LIMIT_CAP) -> ArithTables:
    """Load tables from the cache directory, building and saving on a miss."""
    if cache_dir is not None and cache_path(limit, cache_dir).exists():
        return load_tables(limit, cache_dir)
    tables = build_tables(limit, cap=cap)
    if cache_dir is not None:
        save_tables(tables, cache_dir)
    return tables
