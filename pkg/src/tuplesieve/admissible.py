"""Admissible tuples and the W-trick residue construction.

A set of k distinct residues is admissible when it misses at least one
class modulo every prime; for p > k this is automatic, so certification
only ever inspects primes p <= k. The W-trick picks b (mod W), with
W the product of primes below D0, so that every b + h_i is coprime to W.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import gcd
from pathlib import Path


def _primes_below(bound: float) -> list[int]:
    if bound <= 2:
        return []
    n = int(bound - 1) if float(bound).is_integer() else int(bound)
    sieve = bytearray([1]) * (n + 1)
    sieve[0:2] = b"\x00\x00"
    for p in range(2, int(n ** 0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = b"\x00" * len(sieve[p * p :: p])
    return [p for p in range(2, n + 1) if sieve[p]]


@dataclass(frozen=True)
class AdmissibleTuple:
    """A certified admissible tuple.

    witnesses maps each prime p <= checked_up_to to a residue class
    not hit by any h_i mod p.
    """

    h: tuple[int, ...]
    k: int
    checked_up_to: int
    witnesses: dict[int, int] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {"h": list(self.h), "k": self.k, "checked_up_to": self.checked_up_to},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "AdmissibleTuple":
        obj = json.loads(text)
        result = is_admissible(obj["h"])
        if not isinstance(result, AdmissibleTuple):
            raise ValueError(f"stored tuple is not admissible: {result}")
        return result

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "AdmissibleTuple":
        return cls.from_json(Path(path).read_text())


@dataclass(frozen=True)
class AdmissibilityViolation:
    """First prime at which the residues cover every class."""

    h: tuple[int, ...]
    prime: int

    def __str__(self) -> str:
        return f"not admissible at p={self.prime}"


def is_admissible(h) -> AdmissibleTuple | AdmissibilityViolation:
    """Certify admissibility of h, or report the first failing prime.

    Only primes p <= len(h) are inspected: k residues cannot cover the
    p classes of a larger prime.
    """
    hs = tuple(sorted(int(x) for x in h))
    if len(set(hs)) != len(hs):
        raise ValueError("tuple elements must be distinct")
    if any(x < 0 for x in hs):
        raise ValueError("tuple elements must be nonnegative")
    k = len(hs)
    witnesses: dict[int, int] = {}
    checked = 0
    for p in _primes_below(k + 1):
        hit = {x % p for x in hs}
        if len(hit) == p:
            return AdmissibilityViolation(h=hs, prime=p)
        witnesses[p] = min(set(range(p)) - hit)
        checked = p
    return AdmissibleTuple(h=hs, k=k, checked_up_to=checked, witnesses=witnesses)


def greedy_admissible(k: int, search_cap: int = 10_000) -> AdmissibleTuple:
    """Smallest-first greedy admissible k-tuple.

    Scans 0, 1, 2, ... and keeps every candidate that preserves
    admissibility; deterministic, not optimized for narrowness.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    chosen: list[int] = []
    for n in range(search_cap + 1):
        if isinstance(is_admissible(chosen + [n]), AdmissibleTuple):
            chosen.append(n)
            if len(chosen) == k:
                result = is_admissible(chosen)
                assert isinstance(result, AdmissibleTuple)
                return result
    raise ValueError(f"search cap {search_cap} exhausted with {len(chosen)} of {k} elements")


def crt_combine(r1: int, m1: int, r2: int, m2: int) -> tuple[int, int]:
    """Combine r1 (mod m1) and r2 (mod m2) for coprime moduli."""
    m = m1 * m2
    r = (r1 + m1 * ((r2 - r1) * pow(m1, -1, m2) % m2)) % m
    return r, m


def w_trick(h: AdmissibleTuple, d0: float) -> tuple[int, int]:
    """Return (W, b): W the product of primes p < d0 and b mod W with
    every b + h_i coprime to W.

    Per prime, the smallest class avoiding all -h_i mod p is chosen; the
    classes are then combined by the Chinese remainder theorem. Any valid
    b would serve; this rule makes the choice reproducible.
    """
    b, w = 0, 1
    for p in _primes_below(d0):
        forbidden = {(-x) % p for x in h.h}
        if len(forbidden) == p:
            raise ValueError(f"tuple not admissible at p={p}; no residue exists")
        c = min(set(range(p)) - forbidden)
        b, w = crt_combine(b, w, c, p)
    for hi in h.h:
        assert gcd(b + hi, w) == 1
    return w, b
