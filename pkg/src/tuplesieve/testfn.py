"""The smoothed sieve test function and its variational functionals.

The 1-D profile is g(t) = e^{-t/2}(1 - t/T) on [0, T], zero beyond.
h1 is a radial bump equal to 1 on the shrunken simplex (coordinate sum
<= 1 - delta1) and vanishing outside the unit simplex; h2 is a 1-D cutoff
equal to 1 on [0, T - delta2] and vanishing beyond T. Both ramps use the
quintic smoothstep s(u) = 6u^5 - 15u^4 + 10u^3, so their slopes are
bounded by (15/8)/delta.

F is the k-fold repeated integral of h1(t) * prod_j h2(k t_j) g(k t_j)
with alternating sign, which makes the full mixed first derivative F^(1)
recover that product in closed form. The functionals alpha, beta1, beta2
and I(F) are integrals of F^(1) and F^(1+e_m) over the truncated simplex,
estimated by Monte Carlo with reported standard errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.integrate import quad


class QuadratureError(Exception):
    """Adaptive quadrature failed to reach the requested error target."""


def smoothstep(u):
    """Quintic ramp: 0 for u <= 0, 1 for u >= 1, 6u^5-15u^4+10u^3 between."""
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (u * (6.0 * u - 15.0) + 10.0)


def smoothstep_prime(u):
    """Derivative of the quintic ramp; its maximum is 15/8 at u = 1/2."""
    u = np.asarray(u, dtype=float)
    inside = (u > 0.0) & (u < 1.0)
    v = np.where(inside, u, 0.5)
    out = np.where(inside, 30.0 * v * v * (1.0 - v) * (1.0 - v), 0.0)
    return out if out.ndim else float(out)


def g_eval(t, T: float):
    """e^{-t/2} (1 - t/T) on [0, T], zero for t > T."""
    t = np.asarray(t, dtype=float)
    inside = (t >= 0.0) & (t <= T)
    tt = np.where(inside, t, 0.0)
    out = np.where(inside, np.exp(-tt / 2.0) * (1.0 - tt / T), 0.0)
    return out if out.ndim else float(out)


def g_prime(t, T: float):
    t = np.asarray(t, dtype=float)
    inside = (t >= 0.0) & (t <= T)
    tt = np.where(inside, t, 0.0)
    out = np.where(inside, -np.exp(-tt / 2.0) * ((1.0 - tt / T) / 2.0 + 1.0 / T), 0.0)
    return out if out.ndim else float(out)


def gram_integrals(T: float) -> tuple[float, float, float]:
    """Closed forms of the three 1-D profile integrals on [0, T]:
    Upsilon = int g^2, int t g'^2, int t g^2."""
    if T <= 0:
        raise ValueError("T must be positive")
    eT = math.exp(-T)
    upsilon = 1.0 - 2.0 * (T + eT - 1.0) / T**2
    it_gprime2 = 0.25 - (T * eT + eT - 1.0) / (2.0 * T**2)
    it_g2 = 1.0 + (6.0 - 4.0 * T - 2.0 * T * eT - 6.0 * eT) / T**2
    return upsilon, it_gprime2, it_g2


def mu_ratio(T: float) -> float:
    """Mean of t under g^2 dt, i.e. (int t g^2) / (int g^2).

    Computed from the closed forms; always in (0, 1)."""
    upsilon, _, it_g2 = gram_integrals(T)
    return it_g2 / upsilon


@dataclass
class TestFunction:
    """Parameters of the smoothed test function in k variables.

    Defaults follow the large-k choices T = k/log log k and
    delta1 = sqrt(log k)/k, which are only meaningful for k >= 3;
    small-k experiments should set T and delta1 explicitly.
    """

    __test__ = False  # domain name; keep pytest from collecting it

    k: int
    T: float | None = None
    delta1: float | None = None
    delta2: float = 1e-2
    _phi_cache: dict = field(default_factory=dict, repr=False, compare=False)
    _f_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.T is None:
            if self.k < 3:
                raise ValueError("default T = k/log log k needs k >= 3; pass T")
            self.T = self.k / math.log(math.log(self.k))
        if self.delta1 is None:
            if self.k < 2:
                raise ValueError("default delta1 = sqrt(log k)/k needs k >= 2; pass delta1")
            self.delta1 = math.sqrt(math.log(self.k)) / self.k
        if self.T <= 0:
            raise ValueError("T must be positive")
        if not 0 < self.delta1 < 1:
            raise ValueError("delta1 must lie in (0, 1)")
        if not 0 < self.delta2 < min(1.0, self.T):
            raise ValueError("delta2 must lie in (0, min(1, T))")

    @property
    def component_cap(self) -> float:
        """1-D support bound of each coordinate of F (t-units)."""
        return self.T / self.k

    @property
    def box_cap(self) -> float:
        """Support of F fits in [0, box_cap]^k."""
        return min(self.component_cap, 1.0)

    # -- bump factors ------------------------------------------------------

    def h1(self, ts):
        """Radial simplex bump at points of shape (..., k)."""
        r = np.asarray(ts, dtype=float).sum(axis=-1)
        out = smoothstep((1.0 - r) / self.delta1)
        return out if np.ndim(out) else float(out)

    def h1_partial(self, ts):
        """d h1 / d t_j (independent of j; radial)."""
        r = np.asarray(ts, dtype=float).sum(axis=-1)
        out = -smoothstep_prime((1.0 - r) / self.delta1) / self.delta1
        return out if np.ndim(out) else float(out)

    def h2(self, u):
        """1-D cutoff in g-units: 1 on [0, T - delta2], 0 beyond T."""
        out = smoothstep((self.T - np.asarray(u, dtype=float)) / self.delta2)
        return out if np.ndim(out) else float(out)

    def h2_prime(self, u):
        out = -smoothstep_prime((self.T - np.asarray(u, dtype=float)) / self.delta2) / self.delta2
        return out if np.ndim(out) else float(out)

    def phi1d(self, u):
        """The 1-D factor h2(u) g(u) in g-units."""
        return self.h2(u) * g_eval(u, self.T)

    # -- closed-form mixed derivatives ------------------------------------

    def f1_values(self, ts) -> np.ndarray:
        """F^(1) = h1(t) prod_j h2(k t_j) g(k t_j) at points (n, k)."""
        ts = np.atleast_2d(np.asarray(ts, dtype=float))
        u = self.k * ts
        return self.h1(ts) * np.prod(self.phi1d(u), axis=-1)

    def f1em_values(self, ts, m: int) -> np.ndarray:
        """F^(1 + e_m) at points (n, k), as the three-term product rule
        on h1, h2 and g (0-based coordinate index m)."""
        ts = np.atleast_2d(np.asarray(ts, dtype=float))
        u = self.k * ts
        phis = self.phi1d(u)
        others = np.prod(np.delete(phis, m, axis=-1), axis=-1)
        um = u[..., m]
        h1v = self.h1(ts)
        i1 = self.h1_partial(ts) * others * phis[..., m]
        i2 = self.k * h1v * self.h2_prime(um) * g_eval(um, self.T) * others
        i3 = self.k * h1v * self.h2(um) * g_prime(um, self.T) * others
        return i1 + i2 + i3


def F_mixed_derivative(ts, direction: int | None, tf: TestFunction) -> float:
    """F^(1) (direction None) or F^(1+e_m) (direction = 0-based m)."""
    ts = np.asarray(ts, dtype=float)
    if ts.shape != (tf.k,):
        raise ValueError(f"point must have shape ({tf.k},)")
    if direction is None:
        return float(tf.f1_values(ts)[0])
    if not 0 <= direction < tf.k:
        raise ValueError("direction out of range")
    return float(tf.f1em_values(ts, direction)[0])


# ---------------------------------------------------------------------------
# F itself, by nested adaptive quadrature of the defining repeated integral
# ---------------------------------------------------------------------------

_PHI_TOL = 1e-12


def _smoothstep_s(u: float) -> float:
    if u <= 0.0:
        return 0.0
    if u >= 1.0:
        return 1.0
    return u * u * u * (u * (6.0 * u - 15.0) + 10.0)


def _scalar_factors(tf: TestFunction):
    """Scalar (math-only) versions of the 1-D factor and the radial bump,
    for the quadrature recursion where numpy call overhead dominates."""
    T, k, d1, d2 = tf.T, tf.k, tf.delta1, tf.delta2

    def phi(u: float) -> float:
        ku = k * u
        if ku < 0.0 or ku >= T:
            return 0.0
        return _smoothstep_s((T - ku) / d2) * math.exp(-ku / 2.0) * (1.0 - ku / T)

    def h1r(r: float) -> float:
        return _smoothstep_s((1.0 - r) / d1)

    return phi, h1r


def _phi_tail(tf: TestFunction, t: float) -> float:
    """int_t^{T/k} h2(k u) g(k u) du, memoized on the exact argument."""
    cap = tf.component_cap
    if t >= cap:
        return 0.0
    key = t
    hit = tf._phi_cache.get(key)
    if hit is not None:
        return hit
    phi, _ = _scalar_factors(tf)
    breaks = [u for u in ((tf.T - tf.delta2) / tf.k,) if t < u < cap]
    val, _ = quad(phi, t, cap, epsabs=_PHI_TOL, epsrel=1e-12, limit=200, points=breaks or None)
    tf._phi_cache[key] = val
    return val


def F_eval(ts, tf: TestFunction, tol: float = 1e-8, grid: float | None = None) -> float:
    """F at a point, via nested adaptive quadrature over [t_j, T/k] boxes.

    Zero outside the truncated simplex. With grid set, the point is
    snapped to that lattice and values are cached on it (F is symmetric,
    so points are canonicalized by sorting first).
    """
    ts = np.asarray(ts, dtype=float)
    if ts.shape != (tf.k,):
        raise ValueError(f"point must have shape ({tf.k},)")
    if np.any(ts < 0):
        raise ValueError("coordinates must be nonnegative")
    if grid is not None:
        ts = np.round(ts / grid) * grid
    cap = tf.component_cap
    if np.any(ts >= cap) or ts.sum() >= 1.0:
        return 0.0
    t_sorted = tuple(sorted(ts.tolist(), reverse=True))
    if grid is not None:
        key = (t_sorted, tol)
        hit = tf._f_cache.get(key)
        if hit is not None:
            return hit

    k = tf.k
    plateau = 1.0 - tf.delta1
    level_tol = max(tol / max(k, 1), 1e-13)
    phi, h1r = _scalar_factors(tf)
    h2_break = (tf.T - tf.delta2) / tf.k

    def rec(j: int, sigma: float) -> float:
        if sigma >= 1.0:
            return 0.0
        remaining = k - j
        if remaining == 0:
            return h1r(sigma)
        if sigma + remaining * cap <= plateau:
            out = 1.0
            for i in range(j, k):
                out *= _phi_tail(tf, t_sorted[i])
            return out
        hi = min(cap, 1.0 - sigma)
        lo = t_sorted[j]
        if lo >= hi:
            return 0.0
        if remaining == 1:
            def integrand(u: float) -> float:
                return phi(u) * h1r(sigma + u)
        else:
            def integrand(u: float) -> float:
                return phi(u) * rec(j + 1, sigma + u)
        # split at the bump seams of this level and at the points where the
        # next level's limits or plateau shortcut switch branches, so the
        # adaptive rule only ever sees smooth pieces
        seam_candidates = [h2_break, plateau - sigma, 1.0 - sigma, 1.0 - sigma - cap]
        if remaining >= 2:
            seam_candidates.append(plateau - sigma - (remaining - 1) * cap)
            seam_candidates.extend(1.0 - sigma - t_sorted[i] for i in range(j + 1, k))
        breaks = sorted(u for u in set(seam_candidates) if lo < u < hi)
        val, err = quad(
            integrand,
            lo,
            hi,
            epsabs=level_tol,
            epsrel=1e-9,
            limit=200,
            points=breaks or None,
        )
        if j == 0 and err > 50 * max(level_tol, abs(val) * 1e-8):
            raise QuadratureError(f"requested {level_tol:g}, achieved {err:g}")
        return val

    value = (-1.0) ** k * rec(0, 0.0)
    if grid is not None:
        tf._f_cache[key] = value
    return value


# ---------------------------------------------------------------------------
# Monte Carlo functionals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class McEstimate:
    value: float
    se: float


@dataclass(frozen=True)
class FunctionalEstimates:
    """Monte Carlo estimates of the variational functionals, with the
    closed-form 1-D quantities carried along."""

    alpha_k: McEstimate
    beta1_k: McEstimate
    beta2_k: McEstimate
    I_F: McEstimate
    Upsilon: float
    mu_ratio: float
    sample_count: int
    seed: int


_MC_BLOCK = 1 << 16


def functionals_mc(tf: TestFunction, samples: int, seed: int) -> FunctionalEstimates:
    """Estimate alpha^(k), beta1^(k), beta2^(k) and I(F) by uniform
    sampling of the box [0, box_cap]^k (points outside the simplex
    contribute zero through the integrands).

    Deterministic for a fixed seed: samples are drawn in fixed-size
    blocks with per-block child seeds, so the result does not depend on
    how blocks might be scheduled.
    """
    if samples < 1000:
        raise ValueError("use at least 1000 samples")
    cap = tf.box_cap
    vol = cap ** tf.k
    m = tf.k - 1  # functionals use the last coordinate; F is symmetric

    n_done = 0
    block_sums = {name: [] for name in ("a", "b1", "b2", "iF")}
    block_sq = {name: [] for name in ("a", "b1", "b2", "iF")}
    block_index = 0
    while n_done < samples:
        nb = min(_MC_BLOCK, samples - n_done)
        rng = np.random.default_rng(np.random.SeedSequence([seed, block_index]))
        ts = rng.random((nb, tf.k)) * cap
        w1 = tf.f1_values(ts)
        wm = tf.f1em_values(ts, m)
        tm = ts[:, m]
        vals = {
            "a": tm * wm * wm,
            "b1": tm * tm * wm * wm,
            "b2": tm * wm * w1,
            "iF": w1 * w1,
        }
        for name, v in vals.items():
            block_sums[name].append(float(np.sum(v)))
            block_sq[name].append(float(np.sum(v * v)))
        n_done += nb
        block_index += 1

    def estimate(name: str) -> McEstimate:
        s = math.fsum(block_sums[name])
        s2 = math.fsum(block_sq[name])
        mean = s / samples
        var = max(s2 / samples - mean * mean, 0.0) * samples / (samples - 1)
        return McEstimate(value=vol * mean, se=vol * math.sqrt(var / samples))

    upsilon, _, _ = gram_integrals(tf.T)
    return FunctionalEstimates(
        alpha_k=estimate("a"),
        beta1_k=estimate("b1"),
        beta2_k=estimate("b2"),
        I_F=estimate("iF"),
        Upsilon=upsilon,
        mu_ratio=mu_ratio(tf.T),
        sample_count=samples,
        seed=seed,
    )


def polynomial_functionals(k: int, a: int) -> FunctionalEstimates:
    """Exact functional values for the polynomial profile (1 - sum t)^a.

    All four integrals reduce to Dirichlet-type simplex integrals with
    rational values, so the standard errors are zero and no sampling is
    involved; the g-specific fields are not meaningful here and are NaN.
    """
    if a < k:
        i_f = alpha = beta1 = beta2 = Fraction(0)
    else:
        c0 = Fraction(math.factorial(a), math.factorial(a - k))
        i_f = c0 * c0 * Fraction(
            math.factorial(2 * a - 2 * k), math.factorial(2 * a - k)
        )
        if a == k:
            alpha = beta1 = beta2 = Fraction(0)
        else:
            c1 = Fraction(math.factorial(a), math.factorial(a - k - 1))
            alpha = c1 * c1 * Fraction(
                math.factorial(2 * a - 2 * k - 2), math.factorial(2 * a - k - 1)
            )
            beta1 = 2 * c1 * c1 * Fraction(
                math.factorial(2 * a - 2 * k - 2), math.factorial(2 * a - k)
            )
            beta2 = -c0 * c1 * Fraction(
                math.factorial(2 * a - 2 * k - 1), math.factorial(2 * a - k)
            )
    exact = lambda v: McEstimate(value=float(v), se=0.0)
    return FunctionalEstimates(
        alpha_k=exact(alpha),
        beta1_k=exact(beta1),
        beta2_k=exact(beta2),
        I_F=exact(i_f),
        Upsilon=math.nan,
        mu_ratio=math.nan,
        sample_count=0,
        seed=0,
    )


# ---------------------------------------------------------------------------
# weighted derivative cross-integrals of two smooth handles
# ---------------------------------------------------------------------------

class SmoothHandle:
    """A compactly supported function on [0, cap]^k whose mixed partial
    derivatives are available through .partial(alpha).

    Orders without a closed form are synthesized per a fixed scheme:
    a zero order is raised by integrating the next-higher derivative
    over its coordinate tail; an excess order is lowered by a central
    finite difference of step fd_step.
    """

    k: int
    cap: float
    simplex_radius: float | None = None
    fd_step: float = 1e-4

    def value(self, ts) -> float:
        raise NotImplementedError

    def partial(self, alpha):
        raise NotImplementedError

    def _fd(self, fn, j: int):
        h = self.fd_step

        def out(ts):
            tp = np.array(ts, dtype=float)
            tm = np.array(ts, dtype=float)
            tp[j] += h
            tm[j] = max(tm[j] - h, 0.0)
            return (fn(tp) - fn(tm)) / (tp[j] - tm[j])

        return out

    def _integrate_up(self, fn, j: int):
        def out(ts):
            ts = np.asarray(ts, dtype=float)

            def inner(u):
                p = ts.copy()
                p[j] = u
                return fn(p)

            val, _ = quad(inner, ts[j], self.cap, epsabs=1e-10, epsrel=1e-10, limit=200)
            return -val

        return out


class PolynomialF(SmoothHandle):
    """(1 - t_1 - ... - t_k)^a on the unit simplex, zero outside.

    All mixed partials are closed-form, which makes this the cheap
    alternative weight profile and the exact oracle for cross-integrals.
    """

    def __init__(self, k: int, a: int):
        if a < 1:
            raise ValueError("exponent must be >= 1")
        self.k = k
        self.a = a
        self.cap = 1.0
        self.simplex_radius = 1.0

    def value(self, ts) -> float:
        return self.partial((0,) * self.k)(ts)

    def partial(self, alpha):
        alpha = tuple(int(x) for x in alpha)
        order = sum(alpha)
        if order > self.a:
            return lambda ts: 0.0
        coeff = (-1.0) ** order * math.factorial(self.a) / math.factorial(self.a - order)
        power = self.a - order

        def out(ts):
            s = 1.0 - float(np.sum(ts))
            if s <= 0.0:
                return 0.0
            return coeff * s**power

        return out


class SmoothedF(SmoothHandle):
    """Handle exposing the smoothed test function's derivatives.

    The all-ones order and all-ones-plus-one orders are closed form;
    other orders follow the SmoothHandle synthesis scheme.
    """

    def __init__(self, tf: TestFunction, tol: float = 1e-8):
        self.tf = tf
        self.k = tf.k
        self.cap = tf.box_cap
        self.simplex_radius = 1.0
        self.tol = tol

    def value(self, ts) -> float:
        return F_eval(ts, self.tf, tol=self.tol)

    def partial(self, alpha):
        alpha = tuple(int(x) for x in alpha)
        if len(alpha) != self.k or any(a < 0 for a in alpha):
            raise ValueError(f"bad derivative order {alpha}")
        if all(a == 1 for a in alpha):
            return lambda ts: F_mixed_derivative(ts, None, self.tf)
        if sorted(alpha) == [1] * (self.k - 1) + [2]:
            m = alpha.index(2)
            return lambda ts: F_mixed_derivative(ts, m, self.tf)
        for j, a in enumerate(alpha):
            if a == 0:
                raised = alpha[:j] + (1,) + alpha[j + 1 :]
                return self._integrate_up(self.partial(raised), j)
        j = max(range(self.k), key=lambda i: alpha[i])
        lowered = alpha[:j] + (alpha[j] - 1,) + alpha[j + 1 :]
        return self._fd(self.partial(lowered), j)


def c_integral(G: SmoothHandle, H: SmoothHandle, a, b=None, c=None, tol: float = 1e-8) -> float:
    """Weighted cross-integral of mixed derivatives:

        (-1)^(|a|+|b|) int prod_j t_j^(c_j-1)/(c_j-1)! G^(a)(t) H^(b)(t) dt

    over [0, infinity)^k (effectively the joint support box). The
    symmetric two-index form is the default b = c = a, where the sign
    is +1.
    """
    a = tuple(int(x) for x in a)
    b = a if b is None else tuple(int(x) for x in b)
    c = a if c is None else tuple(int(x) for x in c)
    if not (len(a) == len(b) == len(c) == G.k == H.k):
        raise ValueError("order tuples must match the handles' dimension")
    if any(x < 1 for x in c):
        raise ValueError("weight orders c_j must be >= 1")
    k = G.k
    sign = (-1.0) ** (sum(a) + sum(b))
    ga = G.partial(a)
    hb = H.partial(b)
    cap = min(G.cap, H.cap)
    radius = None
    if G.simplex_radius is not None and H.simplex_radius is not None:
        radius = min(G.simplex_radius, H.simplex_radius)
    wcoef = [1.0 / math.factorial(cj - 1) for cj in c]
    level_tol = max(tol / max(k, 1), 1e-13)

    point = np.zeros(k)

    def rec(j: int, sigma: float) -> float:
        if j == k:
            return ga(point) * hb(point)
        hi = cap if radius is None else min(cap, radius - sigma)
        if hi <= 0.0:
            return 0.0

        def integrand(u):
            point[j] = u
            w = wcoef[j] * u ** (c[j] - 1) if c[j] > 1 else wcoef[j]
            return w * rec(j + 1, sigma + u)

        val, err = quad(integrand, 0.0, hi, epsabs=level_tol, epsrel=1e-10, limit=200)
        point[j] = 0.0
        if j == 0 and err > 50 * max(level_tol, abs(val) * 1e-8):
            raise QuadratureError(f"requested {level_tol:g}, achieved {err:g}")
        return val

    return sign * rec(0, 0.0)


def c_star_j(G: SmoothHandle, H: SmoothHandle, alpha, j: int, tol: float = 1e-8) -> float:
    """C(G,H)^(a,a,a+e_j) - C(G,H)^(a-e_j,a,a) - C(G,H)^(a,a-e_j,a)."""
    alpha = tuple(int(x) for x in alpha)
    up = alpha[:j] + (alpha[j] + 1,) + alpha[j + 1 :]
    down = alpha[:j] + (alpha[j] - 1,) + alpha[j + 1 :]
    return (
        c_integral(G, H, alpha, alpha, up, tol=tol)
        - c_integral(G, H, down, alpha, alpha, tol=tol)
        - c_integral(G, H, alpha, down, alpha, tol=tol)
    )


# ---------------------------------------------------------------------------
# the almost-prime threshold
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RhoBound:
    value: float
    se: float
    k: int
    varpi: float
    delta: float


def rho_bound(k: int, varpi: float, delta: float, est: FunctionalEstimates) -> RhoBound:
    """rho = k alpha / ((1/2 (2/3 + varpi) - delta) I(F)) - k beta1/I(F)
    - 4k beta2/I(F); any rho above this makes the sieve count positive.

    The standard error treats the four Monte Carlo inputs as
    independent, which is approximate since they share samples.
    """
    if est.I_F.value <= 0:
        raise ValueError("I(F) estimate must be positive")
    denom = 0.5 * (2.0 / 3.0 + varpi) - delta
    if denom <= 0:
        raise ValueError("1/2(2/3 + varpi) - delta must be positive")
    i_f = est.I_F.value
    numer = k * (est.alpha_k.value / denom - est.beta1_k.value - 4.0 * est.beta2_k.value)
    value = numer / i_f
    var_numer = (k / denom * est.alpha_k.se) ** 2 + (k * est.beta1_k.se) ** 2 + (
        4.0 * k * est.beta2_k.se
    ) ** 2
    se = math.sqrt(var_numer / i_f**2 + (numer * est.I_F.se / i_f**2) ** 2)
    return RhoBound(value=value, se=se, k=k, varpi=varpi, delta=delta)


def rho_asymptotic_constant() -> Fraction:
    """The exact coefficient of k^2 in the large-k threshold:
    1 / (4/3 + 2 * 55/12756), reduced."""
    return 1 / (Fraction(4, 3) + 2 * Fraction(55, 12756))
