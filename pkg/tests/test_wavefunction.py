import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from elliptic_cs.elliptic_core import ModelParameters
from elliptic_cs.errors import CutoffInsufficient, PoleError
from elliptic_cs.series_algebra import LaurentPoly
from elliptic_cs.spectrum_recursion import solve_recursion
from elliptic_cs.verification import compare_with_jack, plane_wave_extrapolated
from elliptic_cs.wavefunction import (
    PlaneWaveCache,
    assemble_eigenfunction,
    center_of_mass_exponent,
    check_distinct,
    closure_cutoff,
    compute_P,
    compute_P_escalating,
    delta_factor,
    delta_log_gradient,
    delta_log_laplacian,
    may_be_nonzero,
)


@pytest.mark.parametrize("n", [0, 1, 3, -2])
def test_single_particle_polynomial(n):
    poly = compute_P((n,), ModelParameters(1, 1), 0)
    expected = LaurentPoly.monomial((n,)) if n >= 0 else LaurentPoly.zero(1)
    assert poly == expected


def test_ground_polynomial_is_constant():
    poly = compute_P((0, 0), ModelParameters(2, Fraction(3, 2)), 0)
    assert poly.exponents() == [(0, 0)]


def test_plane_wave_polynomial_against_quadrature():
    lam = Fraction(3, 2)
    poly = compute_P((1, 0), ModelParameters(2, lam), 0)
    x = np.array([0.4, 2.3])
    ref = plane_wave_extrapolated(x, (1, 0), lam, degree=1)
    assert abs(poly.evaluate(x) - ref) < 1e-8


def test_finite_support_and_cutoff_stability():
    params = ModelParameters(2, Fraction(3, 2))
    K = closure_cutoff((2, 0), 2)
    base = compute_P((2, 0), params, 2, K)
    for extra in (4, 8):
        assert compute_P((2, 0), params, 2, K + extra) == base
    assert 0 < len(base) < 100


def test_audit_flags_short_cutoff():
    with pytest.raises(CutoffInsufficient):
        compute_P((3, 0), ModelParameters(2, Fraction(3, 2)), 2, K=1, audit=True)


def test_escalating_cutoff_reaches_closure():
    params = ModelParameters(2, Fraction(1, 2))
    poly, K = compute_P_escalating((2, 1), params, 1)
    assert poly == compute_P((2, 1), params, 1)


def test_vanishing_rule():
    assert not may_be_nonzero((2, -1), 0)
    assert may_be_nonzero((2, -1), 1)
    assert compute_P((2, -1), ModelParameters(2, Fraction(3, 2)), 0).is_zero()


def test_polynomials_symmetric():
    params = ModelParameters(3, Fraction(1, 2))
    for n in [(1, 0, 0), (2, 1, 0), (1, 1, -1)]:
        assert compute_P(n, params, 1).is_symmetric()


def test_cache_is_insert_only():
    cache = PlaneWaveCache(ModelParameters(2, 2), 1)
    first = cache((1, 0))
    assert (1, 0) in cache
    assert cache((1, 0)) is first


def test_delta_q0_modulus():
    d = delta_factor(np.array([0.0, 1.3]), ModelParameters(2, 2, 0.0))
    assert abs(d) == pytest.approx(4 * math.sin(0.65) ** 2, rel=1e-14)


def test_delta_log_gradient_finite_differences():
    params = ModelParameters(3, 0.7, 0.2)
    rng = np.random.default_rng(4)
    h = 1e-5
    for _ in range(5):
        x = np.sort(rng.uniform(0, 2 * np.pi, 3))
        if np.min(np.diff(np.r_[x, x[0] + 2 * np.pi])) < 0.2:
            continue
        grad = delta_log_gradient(x, params)
        for j in range(3):
            dx = np.zeros(3)
            dx[j] = h
            fd = (np.log(delta_factor(x + dx, params)) - np.log(delta_factor(x - dx, params))) / (2 * h)
            assert abs(grad[j] - fd.real) < 1e-6
            assert abs(fd.imag) < 1e-6


def test_delta_log_laplacian_finite_differences():
    params = ModelParameters(2, 1.5, 0.3)
    x = np.array([0.3, 2.0])
    h = 1e-4
    total = 0.0
    for j in range(2):
        dx = np.zeros(2)
        dx[j] = h
        f = lambda y: np.log(np.abs(delta_factor(y, params)))
        total += (f(x + dx) - 2 * f(x) + f(x - dx)) / h**2
    assert abs(delta_log_laplacian(x, params) - total) < 1e-5


def test_delta_swap_phase():
    params = ModelParameters(2, 0.7, 0.2)
    x = np.array([0.5, 1.9])
    ratio = delta_factor(x[::-1], params) / delta_factor(x, params)
    assert abs(abs(ratio) - 1) < 1e-13
    assert min(abs(ratio - np.exp(1j * math.pi * 0.7)), abs(ratio - np.exp(-1j * math.pi * 0.7))) < 1e-12


def test_pole_detection():
    with pytest.raises(PoleError):
        check_distinct(np.array([1.0, 1.0 + 2 * np.pi]))
    check_distinct(np.array([0.0, 1.0]))


def test_center_of_mass_exponent():
    for N in (1, 2, 3, 4):
        com = center_of_mass_exponent(ModelParameters(N, Fraction(3, 2)))
        assert com.exponent == N * Fraction(3, 2) / 2
        assert com.matches_pair_display == (N == 2)
        assert not com.matches_series_display


@pytest.mark.parametrize("N, lam, n", [(2, 0.7, (1, 0)), (3, 1.5, (1, 0, 0))])
def test_quasi_periodicity(N, lam, n):
    params = ModelParameters(N, lam, 0.2)
    sol = solve_recursion(params, n, 1)
    _, psi = assemble_eigenfunction(sol)
    x = np.array([0.3, 1.9, 4.1][:N])
    base = psi.value(x, 0.2)
    for j in range(1, N + 1):
        y = x.copy()
        y[j - 1] += 2 * np.pi
        phase = np.exp(1j * np.pi * lam * (2 * N - 2 * j + 1))
        assert abs(psi.value(y, 0.2) - phase * base) < 1e-10 * abs(base)


def test_jack_degeneration_n2():
    lam = Fraction(3, 2)
    jack, _ = assemble_eigenfunction(solve_recursion(ModelParameters(2, lam), (1, 0), 0))
    order0 = jack.order(0)
    assert order0[(1, 0)] == order0[(0, 1)]
    assert set(order0) == {(1, 0), (0, 1)}


def test_jack_matches_oracle():
    lam = Fraction(1, 2)
    jack, _ = assemble_eigenfunction(solve_recursion(ModelParameters(3, lam), (2, 1, 0), 0))
    assert compare_with_jack(jack.order(0), (2, 1, 0), lam) < 1e-12


def test_ground_state_jack_constant():
    jack, psi = assemble_eigenfunction(solve_recursion(ModelParameters(2, Fraction(3, 2)), (0, 0), 0))
    assert jack.coefficients.exponents() == [(0, 0)]
    x = np.array([0.2, 1.7])
    ratio = psi.value(x, 0.0) / delta_factor(x, ModelParameters(2, Fraction(3, 2)))
    assert abs(abs(ratio) - abs(jack.order(0)[(0, 0)])) < 1e-12


def _ground_residual(L, q=0.15):
    params = ModelParameters(2, 2, q)
    sol = solve_recursion(params, (0, 0), L)
    _, psi = assemble_eigenfunction(sol)
    x = np.array([[0.1, 2.0], [1.0, 4.5], [0.3, 3.3]])
    return psi.relative_residual(x, q, float(sol.energy(q))).max()


@pytest.mark.xfail(strict=True, reason="truncation residual at L=3, q=0.15 is about 2e-4 (order q^8 with a large prefactor)")
def test_ground_state_residual_l3():
    assert _ground_residual(3) < 1e-6


def test_ground_state_residual_reaches_target_at_higher_order():
    assert _ground_residual(6) < 1e-6
    # the L = 3 residual is pure truncation: it falls like q^8
    ratio = _ground_residual(3, 0.15) / _ground_residual(3, 0.075)
    assert 2**7.5 < ratio < 2**8.5


def test_jack_symmetric_each_order():
    jack, _ = assemble_eigenfunction(solve_recursion(ModelParameters(3, 2), (1, 0, 0), 2))
    assert jack.is_symmetric()


def test_missing_table_entry():
    sol = solve_recursion(ModelParameters(2, 2), (1, 0), 1)
    with pytest.raises(KeyError):
        assemble_eigenfunction(sol, P_table={})


def test_jack_serialization():
    jack, _ = assemble_eigenfunction(solve_recursion(ModelParameters(2, Fraction(3, 2)), (1, 0), 1))
    data = json.loads(jack.to_json())
    assert data["metadata"]["n"] == [1, 0]
    assert data["metadata"]["lambda"] == "3/2"
    assert LaurentPoly.from_dict(data) == jack.coefficients


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 3), st.integers(0, 2))
def test_polynomial_support_finite(top, L):
    poly = compute_P((top, 0), ModelParameters(2, Fraction(5, 2)), L)
    lo, hi = poly.support_bounds()
    assert hi.max() <= top + L + 2 and lo.min() >= -L - 2
