"""Direct evaluation of the higher-rank sieve sums and their predictions.

S1 sums the squared divisor-tuple weights over n in (N, 2N] restricted to
the W-trick class; S2 additionally weights by tau(n + h_m). Both are
computed exactly: the support tuples are enumerated once in lexicographic
order and their weights accumulated along arithmetic progressions, which
reproduces, n by n, the same IEEE addition sequence as a per-n divisor
enumeration; final reductions use math.fsum (exactly rounded), so results
are independent of scheduling.

The H2' decomposition splits one divisor-tuple cell of the twisted sum
into its two predicted main terms and an exact residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .admissible import AdmissibleTuple, crt_combine, w_trick
from .arith import ArithTables
from .testfn import FunctionalEstimates, SmoothHandle, c_integral

EULER_GAMMA = float(np.euler_gamma)

VARPI_MAX = 55.0 / 12756.0


@dataclass(frozen=True)
class SieveConfig:
    """Ties together the W-trick and the weight support.

    R = N^r_exponent; when built from the smooth-moduli parameters,
    r_exponent = (1/2)(2/3 + varpi) - delta and kappa = 2 eta0/(2/3 + varpi),
    so R^kappa = N^(eta0 - kappa delta); the exact exponent is recorded in
    rkappa_exponent rather than rounded back to eta0.
    """

    k: int
    N: int
    D0: float
    W: int
    b: int
    r_exponent: float
    kappa: float
    varpi: float | None = None
    eta0: float | None = None
    delta: float | None = None

    @property
    def R(self) -> float:
        return float(self.N) ** self.r_exponent

    @property
    def log_R(self) -> float:
        return self.r_exponent * math.log(self.N)

    @property
    def rkappa_exponent(self) -> float:
        return self.kappa * self.r_exponent

    @classmethod
    def from_parameters(
        cls,
        k: int,
        N: int,
        h: AdmissibleTuple,
        D0: float,
        varpi: float,
        eta0: float,
        delta: float,
    ) -> "SieveConfig":
        if not 0 < varpi < VARPI_MAX:
            raise ValueError(f"varpi must lie in (0, {VARPI_MAX})")
        if delta <= 0 or eta0 <= 0:
            raise ValueError("eta0 and delta must be positive")
        W, b = w_trick(h, D0)
        return cls(
            k=k,
            N=N,
            D0=D0,
            W=W,
            b=b,
            r_exponent=0.5 * (2.0 / 3.0 + varpi) - delta,
            kappa=2.0 * eta0 / (2.0 / 3.0 + varpi),
            varpi=varpi,
            eta0=eta0,
            delta=delta,
        )

    @classmethod
    def from_r_exponent(
        cls,
        k: int,
        N: int,
        h: AdmissibleTuple,
        D0: float,
        r_exponent: float,
        kappa: float = 1.0,
    ) -> "SieveConfig":
        """Desk-scale constructor: set R = N^r_exponent directly."""
        if r_exponent <= 0:
            raise ValueError("r_exponent must be positive")
        W, b = w_trick(h, D0)
        return cls(k=k, N=N, D0=D0, W=W, b=b, r_exponent=r_exponent, kappa=kappa)


@dataclass
class WeightSystem:
    """Weights lambda_d = mu(d_1)...mu(d_k) F(log d_1/log R, ...),
    supported on tuples with squarefree components <= R^kappa whose
    product is squarefree, coprime to W and < R."""

    config: SieveConfig
    F: SmoothHandle
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def component_cap(self) -> int:
        return int(math.floor(min(self.config.R, self.config.R ** self.config.kappa)))

    def in_support(self, d, tables: ArithTables) -> bool:
        cap = self.component_cap
        prod = 1
        for dj in d:
            if dj < 1 or dj > cap or tables.mu[dj] == 0:
                return False
            prod *= dj
        if prod >= self.config.R or math.gcd(prod, self.config.W) > 1:
            return False
        # product squarefree <=> squarefree components pairwise coprime
        return _pairwise_coprime(d)

    def weight(self, d: tuple, tables: ArithTables) -> float:
        hit = self._cache.get(d)
        if hit is not None:
            return hit
        if not self.in_support(d, tables):
            self._cache[d] = 0.0
            return 0.0
        sign = 1
        for dj in d:
            sign *= int(tables.mu[dj])
        log_r = self.config.log_R
        ts = np.array([math.log(dj) / log_r for dj in d])
        val = sign * self.F.value(ts)
        self._cache[d] = val
        return val


def _pairwise_coprime(d) -> bool:
    for i in range(len(d)):
        for j in range(i + 1, len(d)):
            if math.gcd(d[i], d[j]) > 1:
                return False
    return True


def lambda_weight(d, ws: WeightSystem, tables: ArithTables) -> float:
    """The sieve weight of one divisor tuple (0 outside the support)."""
    return ws.weight(tuple(int(x) for x in d), tables)


def _support_candidates(ws: WeightSystem, tables: ArithTables) -> list[int]:
    cap = ws.component_cap
    w = ws.config.W
    return [
        d
        for d in range(1, cap + 1)
        if tables.mu[d] != 0 and math.gcd(d, w) == 1
    ]


def _support_tuples(ws: WeightSystem, tables: ArithTables):
    """All support tuples in ascending lexicographic order."""
    cfg = ws.config
    candidates = _support_candidates(ws, tables)
    k = cfg.k
    out: list[int] = [1] * k

    def rec(j: int, prod: int):
        if j == k:
            yield tuple(out)
            return
        for d in candidates:
            p = prod * d
            if p >= cfg.R:
                break  # candidates ascend, so larger d only grow the product
            if d > 1 and math.gcd(d, prod) > 1:
                continue
            out[j] = d
            yield from rec(j + 1, p)
        out[j] = 1

    yield from rec(0, 1)


def _window(cfg: SieveConfig) -> tuple[int, int]:
    """First member and count of {n in (N, 2N] : n = b (mod W)}."""
    n0 = cfg.N + 1 + (cfg.b - (cfg.N + 1)) % cfg.W
    if n0 > 2 * cfg.N:
        return n0, 0
    return n0, (2 * cfg.N - n0) // cfg.W + 1


def inner_sums(ws: WeightSystem, h: AdmissibleTuple, tables: ArithTables) -> tuple[np.ndarray, np.ndarray]:
    """(n values, sum of lambda_d over d | n + h) for the whole window."""
    cfg = ws.config
    if cfg.k != h.k:
        raise ValueError("tuple size does not match config k")
    if 2 * cfg.N + max(h.h) > tables.limit:
        raise ValueError("window exceeds table limit")
    n0, count = _window(cfg)
    inner = np.zeros(count, dtype=np.float64)
    w_inv_cache: dict[int, int] = {}
    for d in _support_tuples(ws, tables):
        lam = ws.weight(d, tables)
        if lam == 0.0:
            continue
        prod = 1
        c, mod = 0, 1
        for dj, hj in zip(d, h.h):
            if dj > 1:
                c, mod = crt_combine(c, mod, (-hj) % dj, dj)
            prod *= dj
        w_inv = w_inv_cache.get(prod)
        if w_inv is None:
            w_inv = pow(cfg.W, -1, prod) if prod > 1 else 0
            w_inv_cache[prod] = w_inv
        t0 = (c - n0) * w_inv % prod
        inner[t0::prod] += lam
    n_values = n0 + cfg.W * np.arange(count, dtype=np.int64)
    return n_values, inner


def s1_direct(ws: WeightSystem, h: AdmissibleTuple, tables: ArithTables) -> float:
    """Exact sum over the window of the squared inner weight sums."""
    _, inner = inner_sums(ws, h, tables)
    return math.fsum(float(v) * float(v) for v in inner)


def s2_direct(
    ws: WeightSystem,
    h: AdmissibleTuple,
    tables: ArithTables,
    m: int | None = None,
) -> float:
    """Exact tau-weighted sum: tau(n + h_m) against the squared inner
    sums; m = None sums the per-m values over all coordinates."""
    if m is None:
        return math.fsum(s2_direct(ws, h, tables, m=j) for j in range(ws.config.k))
    if not 0 <= m < ws.config.k:
        raise ValueError("m out of range")
    n_values, inner = inner_sums(ws, h, tables)
    taus = tables.tau[n_values + h.h[m]]
    return math.fsum(float(t) * float(v) * float(v) for t, v in zip(taus, inner))


def s_of_rho(rho: float, s1: float, s2: float) -> float:
    """rho * S1 - S2; positivity certifies window elements with small
    total divisor count."""
    return rho * s1 - s2


# ---------------------------------------------------------------------------
# H2' decomposition of one divisor-tuple cell of the twisted sum
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class H2PrimeDecomposition:
    """lhs = X/f + X* v/f* + r for one twist index m and tuple d.

    q is the combined modulus W prod d_j and a the congruence class of
    n + h_m modulo q reconstructed from the defining congruences.
    """

    m: int
    d: tuple
    lhs: int
    X: float
    Xstar: float
    f_val: float
    fstar_val: float
    v_val: float
    r: float
    q: int
    a: int


def h2prime_decompose(
    m: int,
    d,
    ws: WeightSystem,
    h: AdmissibleTuple,
    tables: ArithTables,
) -> H2PrimeDecomposition:
    """Exact lhs by enumeration against the predicted main terms."""
    cfg = ws.config
    d = tuple(int(x) for x in d)
    if not 0 <= m < cfg.k:
        raise ValueError("m out of range")
    if not ws.in_support(d, tables):
        raise ValueError(f"tuple {d} outside the weight support")
    if 2 * cfg.N + max(h.h) > tables.limit:
        raise ValueError("window exceeds table limit")

    # congruence class of n: n = b (W), n = -h_j (d_j); moduli coprime
    c, mod = cfg.b % cfg.W, cfg.W
    for dj, hj in zip(d, h.h):
        if dj > 1:
            c, mod = crt_combine(c, mod, (-hj) % dj, dj)
    n0, _ = _window(cfg)
    # first window member congruent to c mod `mod` (mod is a multiple of W,
    # and both c and n0 reduce to b mod W, so this stays in the W class)
    first = n0 + ((c - n0) % mod)
    assert first % cfg.W == cfg.b % cfg.W
    lhs = 0
    if first <= 2 * cfg.N:
        ns = np.arange(first, 2 * cfg.N + 1, mod, dtype=np.int64)
        lhs = int(tables.tau[ns + h.h[m]].sum())

    w_primes = tables.distinct_primes(cfg.W) if cfg.W > 1 else []
    phi_w = 1
    for p in w_primes:
        phi_w *= p - 1
    n_f = float(cfg.N)
    x_main = (
        phi_w
        / cfg.W**2
        * n_f
        * (
            math.log(n_f)
            + 2.0 * EULER_GAMMA
            - 1.0
            + sum(2.0 * math.log(p) / (p - 1) for p in w_primes)
        )
    )
    x_star = -phi_w / cfg.W**2 * n_f

    dm = d[m]
    dm_primes = tables.distinct_primes(dm) if dm > 1 else []
    f_val = float(tables.phi[dm]) / (dm * float(tables.tau[dm]))
    for p in dm_primes:
        f_val *= 2.0 * p / (2.0 * p - 1.0)
    for dj in d:
        f_val *= dj * dj / float(tables.phi[dj])

    v_val = (
        math.log(dm)
        - sum(math.log(p) / (2.0 * p - 1.0) for p in dm_primes)
        - sum(
            2.0 * math.log(p) / (p - 1.0)
            for j, dj in enumerate(d)
            if j != m and dj > 1
            for p in tables.distinct_primes(dj)
        )
    )

    r = lhs - x_main / f_val - x_star * v_val / f_val
    q = cfg.W * math.prod(d)
    a = (c + h.h[m]) % q
    return H2PrimeDecomposition(
        m=m,
        d=d,
        lhs=lhs,
        X=x_main,
        Xstar=x_star,
        f_val=f_val,
        fstar_val=f_val,
        v_val=v_val,
        r=r,
        q=q,
        a=a,
    )


# ---------------------------------------------------------------------------
# main-term predictions (asymptotic, so compared as trends, not equalities)
# ---------------------------------------------------------------------------

def _w_scale(cfg: SieveConfig, tables: ArithTables) -> float:
    phi_w = 1
    for p in (tables.distinct_primes(cfg.W) if cfg.W > 1 else []):
        phi_w *= p - 1
    return cfg.W ** (cfg.k - 1) / phi_w**cfg.k * cfg.N / cfg.log_R**cfg.k


def predict_s1(ws: WeightSystem, tables: ArithTables, tol: float = 1e-8) -> float:
    """(W^(k-1)/phi(W)^k) N / (log R)^k times the all-ones
    cross-integral C(F, F), which for these symmetric weights is I(F)."""
    ones = (1,) * ws.config.k
    c_ff = c_integral(ws.F, ws.F, ones, tol=tol)
    return _w_scale(ws.config, tables) * c_ff


def predict_s2(m: int, ws: WeightSystem, est: FunctionalEstimates, tables: ArithTables) -> float:
    """(W^(k-1)/phi(W)^k) N / (log R)^k times
    ((log N/log R) alpha - beta1 - 4 beta2); independent of m for the
    symmetric weight profiles implemented here."""
    if not 0 <= m < ws.config.k:
        raise ValueError("m out of range")
    cfg = ws.config
    log_ratio = math.log(cfg.N) / cfg.log_R
    bracket = (
        log_ratio * est.alpha_k.value - est.beta1_k.value - 4.0 * est.beta2_k.value
    )
    return _w_scale(cfg, tables) * bracket
