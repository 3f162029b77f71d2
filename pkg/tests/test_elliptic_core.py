import math
import warnings
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from elliptic_cs.elliptic_core import (
    ModelParameters,
    QSeries,
    b_expansion_table,
    b_factor,
    b_power,
    binomial_series,
    check_b_expansion,
    generalized_binomial,
    log_b_derivative,
    potential_V,
    potential_fourier_coefficients,
    product_truncation_error,
    theta1,
    theta1_log_derivative,
    weierstrass_constant,
    weierstrass_p,
    weierstrass_zeta,
)
from elliptic_cs.errors import PoleError
from elliptic_cs.series_algebra import TruncationWarning


def standard_theta1(u, q, terms=60):
    return 2 * sum((-1) ** n * q ** ((n + 0.5) ** 2) * math.sin((2 * n + 1) * u) for n in range(terms))


def lattice_wp(z, q, box=50):
    beta = -2 * math.log(q)
    total = 1 / z**2
    for m in range(-box, box + 1):
        for n in range(-box, box + 1):
            if m == 0 and n == 0:
                continue
            w = 2 * math.pi * m + 1j * beta * n
            total += 1 / (z - w) ** 2 - 1 / w**2
    return total


def row_summed_wp(z, q, rows=40):
    """wp from sum_m 1/(z - 2 pi m - i beta n)^2 = 1/(4 sin^2((z - i beta n)/2)), minus the same at z = 0."""
    beta = -2 * math.log(q)
    total = 0.25 / math.sin(z / 2) ** 2 - 1 / 12
    for n in range(1, rows):
        for s in (1, -1):
            w = 1j * beta * n * s
            total += 0.25 / np.sin((z - w) / 2) ** 2 - 0.25 / np.sin(-w / 2) ** 2
    return total


# ---------------------------------------------------------------------------
# parameters and series


def test_model_parameters_derived_fields():
    p = ModelParameters(3, "3/2", 0.2)
    assert p.lam == Fraction(3, 2) and p.exact
    assert p.gamma == 2 * p.lam * (p.lam - 1)
    back = ModelParameters.from_beta(3, 1.5, p.beta)
    assert abs(back.q - p.q) <= 1e-14 * p.q
    assert ModelParameters(2, 1.0).beta == math.inf


@pytest.mark.parametrize("bad", [dict(N=0, lam=1), dict(N=2, lam=-1), dict(N=2, lam=1, q=1.0), dict(N=2, lam=1, q=-0.1)])
def test_model_parameters_reject(bad):
    with pytest.raises(ValueError):
        ModelParameters(**bad)


@given(st.floats(0.01, 0.99))
def test_beta_round_trip(q):
    p = ModelParameters(2, 1.3, q)
    assert abs(math.exp(-p.beta / 2) - q) <= 1e-14 * q


coeff = st.fractions(max_denominator=20).filter(lambda f: abs(f) < 50)
series3 = st.lists(coeff, min_size=4, max_size=4).map(QSeries)


@given(series3, series3, series3)
def test_qseries_ring_laws(a, b, c):
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a
    assert a * QSeries.one(3) == a


def test_qseries_product_truncates():
    a = QSeries([1, 1, 0])
    assert (a * a).coeffs == (1, 2, 1)
    assert (QSeries([0, 1, 0]) * QSeries([0, 0, 1])).coeffs == (0, 0, 0)


@given(st.integers(1, 9), st.sampled_from([1, -1]), st.lists(coeff, min_size=2, max_size=2))
def test_qseries_inverse(lead, sign, rest):
    s = QSeries([sign * lead] + rest)
    assert s * s.inverse() == QSeries.one(2)


def test_qseries_evaluation():
    assert QSeries([1, 2, 3])(0.5) == pytest.approx(1 + 2 * 0.25 + 3 * 0.0625)


# ---------------------------------------------------------------------------
# theta and the potential


def test_theta1_q0():
    assert theta1(math.pi / 2, 0, 10) == 1.0


def test_theta1_odd():
    assert theta1(0.7, 0.3) == pytest.approx(-theta1(-0.7, 0.3), rel=1e-15)


def test_theta1_against_standard_series():
    q = 0.25
    norm = 2 * q**0.25 * np.prod([1 - q ** (2 * n) for n in range(1, 200)])
    assert abs(norm * theta1(0.9, q, 40) - standard_theta1(0.9, q)) < 1e-12


def test_theta1_rejects_bad_nome():
    with pytest.raises(ValueError):
        theta1(0.3, 1.0)


def test_potential_at_pi():
    assert potential_V(math.pi, 0) == pytest.approx(0.25, abs=1e-15)


def test_potential_even_at_q0():
    assert potential_V(1.1, 0) == potential_V(-1.1, 0)


def test_potential_matches_finite_differences():
    mpmath.mp.dps = 30
    q = mpmath.mpf("0.3")

    def log_theta(u):
        f = mpmath.sin(u)
        for n in range(1, 51):
            f *= 1 - 2 * q ** (2 * n) * mpmath.cos(2 * u) + q ** (4 * n)
        return mpmath.log(f)

    r, h = mpmath.mpf("1.3"), mpmath.mpf("1e-5")
    fd = -(log_theta((r + h) / 2) - 2 * log_theta(r / 2) + log_theta((r - h) / 2)) / h**2
    assert abs(potential_V(1.3, 0.3, 50) - float(fd)) < 1e-6


def test_potential_pole():
    with pytest.raises(PoleError):
        potential_V(2 * math.pi, 0.2)
    with pytest.raises(PoleError):
        log_b_derivative(0.0, 0.1)


@settings(max_examples=40)
@given(st.floats(0.05, 2 * math.pi - 0.05), st.floats(0, 0.6))
def test_potential_even_and_periodic(r, q):
    v = potential_V(r, q)
    assert potential_V(-r, q) == pytest.approx(v, rel=1e-12)
    assert potential_V(r + 2 * math.pi, q) == pytest.approx(v, rel=1e-9)


def test_potential_q0_closed_form():
    r = np.linspace(0.1, 2 * math.pi - 0.1, 500)
    assert np.max(np.abs(potential_V(r, 0) - 0.25 / np.sin(r / 2) ** 2)) < 1e-13


def test_theta_log_derivative_against_finite_differences():
    rng = np.random.default_rng(11)
    h = 1e-5
    for _ in range(50):
        r = rng.uniform(0.2, math.pi - 0.2)
        q = rng.uniform(0, 0.6)
        fd = (np.log(theta1(r + h, q)) - np.log(theta1(r - h, q))) / (2 * h)
        assert abs(theta1_log_derivative(r, q) - fd) < 1e-7


def test_log_b_derivative_is_minus_potential_primitive():
    h = 1e-5
    for r in (0.4, 1.7, 3.0):
        fd = (log_b_derivative(r + h, 0.35) - log_b_derivative(r - h, 0.35)) / (2 * h)
        assert fd == pytest.approx(-potential_V(r, 0.35), rel=1e-8)


def test_truncation_error_estimate():
    assert product_truncation_error(0.5, 10) < 1e-6
    assert product_truncation_error(0.0, 3) == 0.0


# ---------------------------------------------------------------------------
# Weierstrass functions


def test_wp_minus_potential_is_constant():
    d1 = weierstrass_p(0.5, 0.2) - potential_V(0.5, 0.2)
    d2 = weierstrass_p(2.0, 0.2) - potential_V(2.0, 0.2)
    assert abs(d1 - d2) < 1e-10


def test_zeta_is_odd():
    assert weierstrass_zeta(-0.8, 0.3) == pytest.approx(-weierstrass_zeta(0.8, 0.3), rel=1e-14)


def test_wp_against_lattice_sum():
    ref = lattice_wp(1.0, 0.25)
    assert abs(weierstrass_p(1.0, 0.25) - ref.real) < 1e-4
    assert abs(ref.imag) < 1e-8


def test_wp_against_row_summed_lattice():
    for z in (0.4, 1.0, 2.9):
        ref = row_summed_wp(z, 0.25)
        assert abs(weierstrass_p(z, 0.25) - ref.real) < 1e-12


def test_constant_is_exposed():
    assert weierstrass_constant(0.0) == pytest.approx(-1 / 12)
    assert weierstrass_p(1.2, 0.3) - potential_V(1.2, 0.3) == pytest.approx(weierstrass_constant(0.3))


def test_zeta_derivative_is_minus_wp():
    h = 1e-5
    for r in (0.6, 2.2):
        fd = (weierstrass_zeta(r + h, 0.3) - weierstrass_zeta(r - h, 0.3)) / (2 * h)
        assert fd == pytest.approx(-weierstrass_p(r, 0.3), rel=1e-8)


# ---------------------------------------------------------------------------
# Fourier coefficients and the b factor


def test_fourier_coefficients_n1():
    fwd, bwd = potential_fourier_coefficients(5, 3)[0]
    assert fwd.coeffs == (1, 1, 1, 1, 1, 1)
    assert bwd.coeffs == (0, 1, 1, 1, 1, 1)


def test_fourier_coefficients_n2():
    _, bwd = potential_fourier_coefficients(4, 2)[1]
    assert bwd[1] == 0 and bwd[2] == 2  # n s_2^2 with n = 2


def test_fourier_forward_minus_backward():
    for n, (fwd, bwd) in enumerate(potential_fourier_coefficients(6, 5), start=1):
        assert fwd - bwd == QSeries.constant(n, 6)


def test_fourier_series_reproduces_potential():
    """V(r + i eps) from the one-sided series -sum n (c_n^2 e^{inz} + s_n^2 e^{-inz})."""
    q, eps, nmax = 0.2, 0.3, 400
    r = np.array([0.7, 2.1, 4.0])
    z = r + 1j * eps
    n = np.arange(1, nmax + 1)[:, None]
    s2 = q ** (2 * n) / (1 - q ** (2 * n))
    series = -np.sum(n * ((1 + s2) * np.exp(1j * n * z) + s2 * np.exp(-1j * n * z)), axis=0)
    assert np.max(np.abs(series - potential_V(z, q))) < 1e-10


def test_b_factor_proportional_to_theta():
    r = np.linspace(0.2, 6.0, 20)
    ratio = b_factor(r, 0.3) / theta1(r / 2, 0.3)
    assert np.ptp(np.abs(ratio)) / np.abs(ratio[0]) < 1e-11
    assert np.allclose(ratio, -2j)


def test_b_power_branch_rules():
    lam = 0.7
    r = 1.3
    assert b_power(-r, 0.2, lam) == pytest.approx(np.exp(1j * math.pi * lam) * b_power(r, 0.2, lam))
    assert b_power(r + 2 * math.pi, 0.2, lam) == pytest.approx(np.exp(-1j * math.pi * lam) * b_power(r, 0.2, lam))
    assert abs(b_power(r, 0.2, 1.0) - b_factor(r, 0.2)) < 1e-14


def test_generalized_binomial_recurrence():
    assert generalized_binomial(Fraction(5), 2) == 10
    assert generalized_binomial(Fraction(-1, 2), 2) == Fraction(3, 8)
    assert binomial_series(Fraction(1), 3) == [1, -1, 0, 0]


def test_b_expansion_lambda_one():
    poly = check_b_expansion(1, 0, 4)
    assert {e: c.coeffs for e, c in poly} == {(0,): (1,), (1,): (-1,)}
    assert not poly.truncated


def test_b_expansion_geometric():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        poly = check_b_expansion(-1, 0, 5)
    assert [poly.coefficient((k,))[0] for k in range(6)] == [1] * 6
    assert poly.truncated
    assert any(issubclass(w.category, TruncationWarning) for w in caught)


def test_b_expansion_against_brute_force():
    lam = Fraction(3, 2)
    kmax, L = 6, 2

    def binom_terms(a, power_w, power_q):
        return {(power_w * k, power_q * k): c for k, c in enumerate(binomial_series(a, kmax))}

    def mul(x, y):
        out = {}
        for (w1, l1), c1 in x.items():
            for (w2, l2), c2 in y.items():
                if l1 + l2 <= L:
                    out[(w1 + w2, l1 + l2)] = out.get((w1 + w2, l1 + l2), 0) + c1 * c2
        return out

    prod = mul(mul(binom_terms(-lam, 1, 0), binom_terms(-lam, 1, 1)), binom_terms(-lam, -1, 1))
    table = b_expansion_table(-lam, L, 4)
    assert table[1][1] == prod[(1, 1)]


@settings(max_examples=15, deadline=None)
@given(st.fractions(min_value=Fraction(1, 4), max_value=3, max_denominator=4), st.integers(0, 3))
def test_b_expansion_inverse_pair(a, L):
    kmax = 6
    up = b_expansion_table(a, L, kmax + L)
    down = b_expansion_table(-a, L, kmax + L)
    for k in range(-L, kmax + 1):
        total = QSeries.zero(L)
        for k1, c1 in up.items():
            c2 = down.get(k - k1)
            if c2 is not None:
                total = total + c1 * c2
        assert total == (QSeries.one(L) if k == 0 else QSeries.zero(L))
