import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import quad

from tuplesieve.testfn import (
    F_eval,
    F_mixed_derivative,
    McEstimate,
    FunctionalEstimates,
    SmoothedF,
    PolynomialF,
    SmoothHandle,
    TestFunction,
    c_integral,
    c_star_j,
    functionals_mc,
    g_eval,
    g_prime,
    gram_integrals,
    mu_ratio,
    polynomial_functionals,
    rho_asymptotic_constant,
    rho_bound,
    smoothstep,
    smoothstep_prime,
)

from _oracles import dirichlet_simplex_integral


# -- 1-D profile -------------------------------------------------------------

def test_g_values():
    assert g_eval(0.0, 10.0) == 1.0
    assert g_eval(10.0, 10.0) == 0.0
    assert g_eval(2.0, 10.0) == pytest.approx(0.8 * math.exp(-1.0), rel=1e-15)
    assert g_eval(10.5, 10.0) == 0.0


def test_gram_closed_forms_vs_quadrature():
    for T in (5.0, 10.0, 20.0, 50.0):
        ups, tgp2, tg2 = gram_integrals(T)
        assert abs(ups - quad(lambda t: g_eval(t, T) ** 2, 0, T, epsabs=1e-13)[0]) < 1e-12
        assert abs(tgp2 - quad(lambda t: t * g_prime(t, T) ** 2, 0, T, epsabs=1e-13)[0]) < 1e-12
        assert abs(tg2 - quad(lambda t: t * g_eval(t, T) ** 2, 0, T, epsabs=1e-13)[0]) < 1e-12
        assert ups >= 1.0 - 2.0 / T


def test_gram_T10_value():
    ups, _, _ = gram_integrals(10.0)
    assert ups == pytest.approx(1.0 - 2.0 * (9.0 + math.exp(-10.0)) / 100.0, rel=1e-15)


def test_mu_ratio_properties():
    last = 0.0
    for T in (0.5, 1.0, 2.0, 5.0, 20.0, 100.0):
        mu = mu_ratio(T)
        assert 0.0 < mu < 1.0
        assert mu > last  # mean of t under g^2 grows with the support
        last = mu
    # T -> infinity limit: the profile squared tends to a unit exponential
    assert 1.0 - mu_ratio(5000.0) < 1e-3


def test_mu_ratio_matches_quadrature():
    T = 10.0
    num = quad(lambda t: t * g_eval(t, T) ** 2, 0, T, epsabs=1e-13)[0]
    den = quad(lambda t: g_eval(t, T) ** 2, 0, T, epsabs=1e-13)[0]
    assert abs(mu_ratio(T) - num / den) < 1e-10


# -- bumps --------------------------------------------------------------------

def test_smoothstep_shape():
    assert smoothstep(-1.0) == 0.0 and smoothstep(0.0) == 0.0
    assert smoothstep(1.0) == 1.0 and smoothstep(2.0) == 1.0
    assert smoothstep(0.5) == 0.5
    assert smoothstep_prime(0.5) == pytest.approx(15.0 / 8.0, rel=1e-15)


def test_bump_slope_bounds():
    tf = TestFunction(k=2, T=1.5, delta1=0.12, delta2=0.05)
    u = np.linspace(0.0, 1.6, 20001)
    h2p = np.abs(tf.h2_prime(u))
    assert h2p.max() <= (15.0 / 8.0) / tf.delta2 + 1e-12
    assert h2p.max() > 0.9 * (15.0 / 8.0) / tf.delta2  # the bound is attained
    rs = np.linspace(0.0, 1.1, 20001)
    pts = np.stack([rs, np.zeros_like(rs)], axis=-1)
    h1p = np.abs(tf.h1_partial(pts))
    assert h1p.max() <= (15.0 / 8.0) / tf.delta1 + 1e-12


def test_h_supports():
    tf = TestFunction(k=2, T=1.5, delta1=0.12, delta2=0.05)
    assert tf.h1(np.array([0.3, 0.3])) == 1.0
    assert tf.h1(np.array([0.6, 0.45])) == 0.0
    assert 0.0 < tf.h1(np.array([0.5, 0.45])) < 1.0
    assert tf.h2(0.5) == 1.0 and tf.h2(1.5) == 0.0 and 0.0 < tf.h2(1.47) < 1.0


def test_test_function_validation():
    with pytest.raises(ValueError):
        TestFunction(k=2)  # default T needs k >= 3
    with pytest.raises(ValueError):
        TestFunction(k=2, T=1.0, delta1=0.1, delta2=1.5)
    tf = TestFunction(k=10)
    assert tf.T == pytest.approx(10.0 / math.log(math.log(10.0)))
    assert tf.delta1 == pytest.approx(math.sqrt(math.log(10.0)) / 10.0)


# -- F and its derivatives -----------------------------------------------------

@pytest.fixture(scope="module")
def tf2():
    return TestFunction(k=2, T=1.5, delta1=0.25, delta2=0.2)


def test_F_support(tf2):
    rng = np.random.default_rng(17)
    cap = tf2.component_cap
    for _ in range(1000):
        p = rng.random(2) * 2.0
        if np.any(p >= cap) or p.sum() >= 1.0:
            assert F_eval(p, tf2) == 0.0
    with pytest.raises(ValueError):
        F_eval(np.array([-0.1, 0.2]), tf2)
    with pytest.raises(ValueError):
        F_eval(np.array([0.1, 0.2, 0.3]), tf2)


def test_F_symmetric(tf2):
    rng = np.random.default_rng(23)
    for _ in range(10):
        p = rng.random(2) * 0.45
        assert F_eval(p, tf2, tol=1e-9) == F_eval(p[::-1], tf2, tol=1e-9)


def test_F_lattice_cache(tf2):
    p = np.array([0.2004, 0.3002])
    v1 = F_eval(p, tf2, tol=1e-9, grid=0.01)
    v2 = F_eval(np.array([0.20, 0.30]), tf2, tol=1e-9, grid=0.01)
    assert v1 == v2  # snapped to the same lattice point, served from cache


def test_F1_plateau_is_product_of_g(tf2):
    # inside the plateau both bumps are 1, so F^(1) is a pure g product
    p = np.array([0.2, 0.3])
    expected = g_eval(0.4, 1.5) * g_eval(0.6, 1.5)
    assert F_mixed_derivative(p, None, tf2) == pytest.approx(expected, rel=1e-15)
    # and the directional derivative keeps only the g' term
    expected_m = 2.0 * g_prime(0.4, 1.5) * g_eval(0.6, 1.5)
    assert F_mixed_derivative(p, 0, tf2) == pytest.approx(expected_m, rel=1e-15)


def test_F1_vanishes_outside(tf2):
    assert F_mixed_derivative(np.array([0.5, 0.51]), None, tf2) == 0.0
    assert F_mixed_derivative(np.array([0.76, 0.1]), None, tf2) == 0.0


def _mixed_fd(p, tf, h, tol):
    acc = 0.0
    for signs in itertools.product((1, -1), repeat=tf.k):
        acc += np.prod(signs) * F_eval(p + h * np.array(signs), tf, tol=tol)
    return acc / (2 * h) ** tf.k


def _mixed_fd4(p, tf, h, tol):
    # Richardson-extrapolated central difference, 4th order
    return (4.0 * _mixed_fd(p, tf, h / 2, tol) - _mixed_fd(p, tf, h, tol)) / 3.0


def _interior_points(tf, n, h, seed):
    rng = np.random.default_rng(seed)
    cap = tf.box_cap
    margin = 2.5 * h
    seam = (tf.T - tf.delta2) / tf.k
    pts = []
    while len(pts) < n:
        p = rng.random(tf.k) * cap
        s = p.sum()
        if not (np.all(p > margin) and np.all(p < cap - margin)):
            continue
        if s > 1.0 - tf.k * h - 0.02:
            continue
        if np.any(np.abs(p - seam) < margin):
            continue
        if abs(s - (1.0 - tf.delta1)) < tf.k * margin or abs(s - 1.0) < tf.k * margin:
            continue
        pts.append(p)
    return pts


def test_derivative_vs_finite_differences_k2(tf2):
    for p in _interior_points(tf2, 6, 0.02, seed=91):
        fd = _mixed_fd4(p, tf2, 0.02, tol=1e-6)
        cf = F_mixed_derivative(p, None, tf2)
        assert abs(fd - cf) / abs(cf) < 1e-3


def test_directional_derivative_vs_fd_of_f1(tf2):
    # F^(1+e_m) against a Richardson difference of the closed-form F^(1),
    # probing each bump regime: plateau, radial shell, 1-D cutoff ramp
    probes = [
        np.array([0.20, 0.30]),  # plateau
        np.array([0.40, 0.45]),  # radial shell: sum inside (0.75, 1)
        np.array([0.20, 0.68]),  # cutoff ramp: k t_m inside (1.3, 1.5)
        np.array([0.33, 0.66]),  # shell and ramp together
    ]
    for m in (0, 1):
        for p in probes:
            def f1_along(x):
                q = p.copy()
                q[m] = x
                return F_mixed_derivative(q, None, tf2)

            h = 1e-3
            d1 = (f1_along(p[m] + h) - f1_along(p[m] - h)) / (2 * h)
            d2 = (f1_along(p[m] + h / 2) - f1_along(p[m] - h / 2)) / h
            fd = (4.0 * d2 - d1) / 3.0
            cf = F_mixed_derivative(p, m, tf2)
            assert abs(fd - cf) <= 5e-6 * max(1.0, abs(cf)), (m, p)


def test_directional_derivative_k3_spot():
    tf = TestFunction(k=3, T=1.8, delta1=0.2, delta2=0.2)
    p = np.array([0.15, 0.30, 0.42])
    for m in (0, 2):
        def f1_along(x):
            q = p.copy()
            q[m] = x
            return F_mixed_derivative(q, None, tf)

        h = 1e-3
        fd = (f1_along(p[m] + h) - f1_along(p[m] - h)) / (2 * h)
        cf = F_mixed_derivative(p, m, tf)
        assert abs(fd - cf) <= 1e-4 * max(1.0, abs(cf))


def test_quadrature_error_target(tf2):
    v6 = F_eval(np.array([0.21, 0.33]), tf2, tol=1e-6)
    v12 = F_eval(np.array([0.21, 0.33]), tf2, tol=1e-12)
    assert abs(v6 - v12) < 1e-6


def test_F_k1_against_1d_quadrature():
    # with T below the shrunken-simplex edge the radial bump never bites,
    # so |F(0)| is the plain 1-D mass of the cutoff profile
    tf = TestFunction(k=1, T=0.6, delta1=0.1, delta2=0.05)
    expected, _ = quad(lambda u: tf.phi1d(u), 0.0, 0.6, epsabs=1e-12)
    got = F_eval(np.array([0.0]), tf, tol=1e-10)
    assert got == pytest.approx(-expected, abs=1e-9)  # sign (-1)^k at k = 1
    mid = F_eval(np.array([0.25]), tf, tol=1e-10)
    expected_mid, _ = quad(lambda u: tf.phi1d(u), 0.25, 0.6, epsabs=1e-12)
    assert mid == pytest.approx(-expected_mid, abs=1e-9)


# -- Monte Carlo functionals ---------------------------------------------------

def test_mc_deterministic(tf2):
    a = functionals_mc(tf2, 50_000, seed=5)
    b = functionals_mc(tf2, 50_000, seed=5)
    assert a == b
    c = functionals_mc(tf2, 50_000, seed=6)
    assert c != a


def test_mc_nonnegative_and_errors_reported(tf2):
    est = functionals_mc(tf2, 50_000, seed=1)
    assert est.alpha_k.value >= 0.0 and est.I_F.value >= 0.0
    assert est.beta1_k.value >= 0.0
    for field in (est.alpha_k, est.beta1_k, est.beta2_k, est.I_F):
        assert field.se > 0.0
    assert est.sample_count == 50_000 and est.seed == 1
    assert est.Upsilon == gram_integrals(tf2.T)[0]
    assert est.mu_ratio == mu_ratio(tf2.T)


def test_mc_requires_samples(tf2):
    with pytest.raises(ValueError):
        functionals_mc(tf2, 100, seed=0)


def test_mc_close_to_quadrature_quick(tf2):
    est = functionals_mc(tf2, 100_000, seed=12)
    cap = tf2.box_cap

    def inner(t1):
        return quad(
            lambda t2: float(tf2.f1_values(np.array([[t1, t2]]))[0]) ** 2,
            0, cap, epsabs=1e-9, limit=200,
        )[0]

    i_f = quad(inner, 0, cap, epsabs=1e-8, limit=200)[0]
    assert abs(est.I_F.value - i_f) < 4 * est.I_F.se


def test_k4_box_bound_membership():
    # normalized I(F) sits between the crude restriction lower bound
    # (minus the measured shell mass) and the full box product bound
    k, T, d1, d2 = 4, 1.0, 0.1, 0.01
    tf = TestFunction(k=k, T=T, delta1=d1, delta2=d2)
    ups = gram_integrals(T)[0]
    mu = mu_ratio(T)
    factor = 1.0 - T / (k * (1.0 - T / k - mu) ** 2)
    est = functionals_mc(tf, 400_000, seed=5)
    norm = k**k / ups ** (k - 1)

    rng = np.random.default_rng(123)
    cap = tf.box_cap
    ts = rng.random((400_000, k)) * cap
    r = ts.sum(axis=1)
    g2 = np.prod(g_eval(k * ts, T) ** 2, axis=1)
    shell_vals = np.where((r > 1 - d1) & (r <= 1.0), g2, 0.0)
    vol = cap**k
    shell = vol * shell_vals.mean()
    shell_se = vol * shell_vals.std() / math.sqrt(len(shell_vals))

    value = norm * est.I_F.value
    slack = 3.0 * norm * (est.I_F.se + shell_se)
    assert value >= factor * ups - norm * shell - slack
    assert value <= ups + slack


# -- cross-integrals -------------------------------------------------------------

class _ScaledPoly(SmoothHandle):
    """c * (1 - sum t)^a, for the hand-checkable one-dimensional cases."""

    def __init__(self, k, a, scale):
        self.inner = PolynomialF(k, a)
        self.k = k
        self.cap = 1.0
        self.simplex_radius = 1.0
        self.scale = scale

    def value(self, ts):
        return self.scale * self.inner.value(ts)

    def partial(self, alpha):
        f = self.inner.partial(alpha)
        return lambda ts: self.scale * f(ts)


def test_c_integral_linear_profile():
    lin = PolynomialF(1, 1)  # (1 - t); derivative is the constant -1
    assert c_integral(lin, lin, (1,)) == pytest.approx(1.0, abs=1e-12)


def test_c_integral_quadratic_profile():
    half = _ScaledPoly(1, 2, 0.5)  # (1 - t)^2 / 2
    assert c_integral(half, half, (1,)) == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_c_integral_k2_poly_vs_exact():
    pf = PolynomialF(2, 2)
    got = c_integral(pf, pf, (1, 1))
    # F^(1,1) = 2 on the simplex; integral is 4 * vol = 2
    exact = 4 * dirichlet_simplex_integral((0, 0), 0, 2)
    assert got == pytest.approx(float(exact), abs=1e-10)


def _exact_poly_c(a, b, c, k, A):
    sa, sb = sum(a), sum(b)
    if sa > A or sb > A:
        return Fraction(0)
    coef = Fraction(math.factorial(A), math.factorial(A - sa)) * Fraction(
        math.factorial(A), math.factorial(A - sb)
    )
    weight = Fraction(1)
    for cj in c:
        weight /= math.factorial(cj - 1)
    integral = dirichlet_simplex_integral([cj - 1 for cj in c], 2 * A - sa - sb, k)
    # the (-1)^(sa+sb) sign cancels against the derivative signs
    return coef * weight * integral


def test_c_integral_three_index_and_star():
    pf = PolynomialF(2, 4)
    alpha = (1, 2)
    up, down = (1, 3), (1, 1)
    for orders in ((alpha, alpha, up), (down, alpha, alpha), (alpha, down, alpha)):
        got = c_integral(pf, pf, *orders)
        exact = _exact_poly_c(*orders, k=2, A=4)
        assert got == pytest.approx(float(exact), abs=1e-9)
    star = c_star_j(pf, pf, alpha, 1)
    exact_star = (
        _exact_poly_c(alpha, alpha, up, 2, 4)
        - _exact_poly_c(down, alpha, alpha, 2, 4)
        - _exact_poly_c(alpha, down, alpha, 2, 4)
    )
    assert float(exact_star) == pytest.approx(-3.2, abs=1e-12)
    assert star == pytest.approx(float(exact_star), abs=1e-8)


def test_c_integral_validation():
    pf = PolynomialF(2, 3)
    with pytest.raises(ValueError):
        c_integral(pf, pf, (1,))
    with pytest.raises(ValueError):
        c_integral(pf, pf, (1, 1), (1, 1), (0, 1))


def test_polynomial_functionals_vs_c_integral():
    # alpha, beta1, beta2 and I(F) are all weighted cross-integrals
    k, a = 2, 3
    pf = PolynomialF(k, a)
    exact = polynomial_functionals(k, a)
    ones = (1,) * k
    em = (1, 2)
    assert exact.I_F.value == pytest.approx(c_integral(pf, pf, ones), abs=1e-10)
    assert exact.alpha_k.value == pytest.approx(
        c_integral(pf, pf, em, em, em), abs=1e-9
    )
    assert exact.beta1_k.value == pytest.approx(
        2.0 * c_integral(pf, pf, em, em, (1, 3)), abs=1e-9
    )
    assert exact.beta2_k.value == pytest.approx(
        -c_integral(pf, pf, em, ones, em), abs=1e-9
    )


def test_polynomial_functionals_small_exponent():
    low = polynomial_functionals(2, 2)  # exponent k: first derivatives constant
    assert low.alpha_k.value == 0.0 and low.I_F.value == pytest.approx(2.0)
    lower = polynomial_functionals(2, 1)
    assert lower.I_F.value == 0.0


def test_smoothed_handle_partials(tf2):
    pf = SmoothedF(tf2, tol=1e-9)
    p = np.array([0.2, 0.3])
    # raising a zero order integrates the closed form back down
    v = pf.partial((1, 0))(p)
    h = 1e-4
    fd = (F_eval(p + [h, 0], tf2, tol=1e-10) - F_eval(p - [h, 0], tf2, tol=1e-10)) / (2 * h)
    assert abs(v - fd) / abs(fd) < 1e-6
    # order (2,1) is the closed-form directional derivative
    assert pf.partial((2, 1))(p) == F_mixed_derivative(p, 0, tf2)
    # excess orders fall back to finite differences of the closed form
    f21 = pf.partial((2, 1))
    ref = (f21(p + [0, h]) - f21(p - [0, h])) / (2 * h)
    assert abs(pf.partial((2, 2))(p) - ref) / abs(ref) < 1e-6
    with pytest.raises(ValueError):
        pf.partial((1, -1))


# -- the threshold ----------------------------------------------------------------

def test_rho_collapses_without_beta_terms():
    zero = McEstimate(0.0, 0.0)
    one = McEstimate(1.0, 0.0)
    est = FunctionalEstimates(
        alpha_k=one, beta1_k=zero, beta2_k=zero, I_F=one,
        Upsilon=1.0, mu_ratio=0.5, sample_count=0, seed=0,
    )
    varpi, delta = 0.004, 1e-3
    for k in (2, 5, 11):
        expected = k / (0.5 * (2.0 / 3.0 + varpi) - delta)
        assert rho_bound(k, varpi, delta, est).value == pytest.approx(expected, rel=1e-14)


def test_rho_finite_positive_k3():
    tf = TestFunction(k=3, T=1.0, delta1=0.12, delta2=0.05)
    est = functionals_mc(tf, 200_000, seed=7)
    bound = rho_bound(3, 0.004, 1e-3, est)
    assert math.isfinite(bound.value) and bound.value > 0.0
    assert bound.se > 0.0


def test_rho_rejects_bad_inputs():
    one = McEstimate(1.0, 0.0)
    zero_if = FunctionalEstimates(
        alpha_k=one, beta1_k=one, beta2_k=one, I_F=McEstimate(0.0, 0.0),
        Upsilon=1.0, mu_ratio=0.5, sample_count=0, seed=0,
    )
    with pytest.raises(ValueError):
        rho_bound(3, 0.004, 1e-3, zero_if)
    ok = FunctionalEstimates(
        alpha_k=one, beta1_k=one, beta2_k=one, I_F=one,
        Upsilon=1.0, mu_ratio=0.5, sample_count=0, seed=0,
    )
    with pytest.raises(ValueError):
        rho_bound(3, 0.004, 0.4, ok)  # denominator driven negative


def test_rho_per_k2_drifts_toward_asymptotic_constant():
    # with T growing linearly in k the ratio of profile integrals drives
    # rho / k^2 down toward the large-k coefficient
    varpi = 0.004
    target = 1.0 / (4.0 / 3.0 + 2.0 * varpi)
    dists = []
    for k in (3, 4, 5, 6):
        tf = TestFunction(k=k, T=0.2 * k, delta1=0.1, delta2=0.05)
        est = functionals_mc(tf, 300_000, seed=11)
        bound = rho_bound(k, varpi, 1e-3, est)
        dists.append(abs(bound.value / k**2 - target))
    assert all(d2 < d1 for d1, d2 in zip(dists, dists[1:]))


def test_rho_asymptotic_constant_exact():
    const = rho_asymptotic_constant()
    assert const == Fraction(2126, 2853)
    assert abs(float(const) - 0.745181) < 1e-6
    assert const < Fraction(3, 4)
