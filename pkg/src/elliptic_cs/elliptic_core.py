"""Theta functions, the elliptic pair potential and its q^2-expansions.

All numerical evaluators use the product form of the Jacobi theta function
with the overall constant set to one,

    theta1(u) = sin(u) * prod_{n>=1} (1 - 2 q^{2n} cos(2u) + q^{4n}),

and the lattice of the Weierstrass functions has periods 2*pi and i*beta with
q = exp(-beta/2).  Series objects (`QSeries`) are power series in q^2 whose
coefficients are plain Python scalars: `fractions.Fraction` when the
statistics parameter is rational (exact mode) and `float` otherwise.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import PoleError

DEFAULT_TRUNCATION = 64


def as_lambda(value) -> Fraction | float:
    """Normalise a statistics parameter.

    Strings of the form ``"p/s"`` or ``"p"`` and ``Fraction``/``int`` values
    give an exact rational; decimal strings and floats are treated as
    irrational.
    """
    if isinstance(value, str):
        text = value.strip()
        if not text:
            raise ValueError("empty statistics parameter")
        if "/" in text:
            return Fraction(text)
        try:
            return Fraction(int(text))
        except ValueError:
            return float(text)
    if isinstance(value, bool):
        raise TypeError("statistics parameter must be numeric")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    return float(value)


@dataclass(frozen=True)
class ModelParameters:
    """Parameters of one model instance.

    ``lam`` is either a ``Fraction`` (declared rational; exact series
    arithmetic) or a ``float`` (declared irrational).  The coupling and the
    inverse temperature are derived on access.
    """

    N: int
    lam: Fraction | float
    q: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "lam", as_lambda(self.lam))
        if not isinstance(self.N, numbers.Integral) or self.N < 1:
            raise ValueError(f"particle count must be a positive integer, got {self.N!r}")
        if not self.lam > 0:
            raise ValueError(f"statistics parameter must be positive, got {self.lam}")
        if not 0 <= self.q < 1:
            raise ValueError(f"nome must lie in [0, 1), got {self.q}")

    @classmethod
    def from_beta(cls, N, lam, beta):
        return cls(N, lam, math.exp(-beta / 2))

    @property
    def exact(self) -> bool:
        return isinstance(self.lam, Fraction)

    @property
    def gamma(self):
        return 2 * self.lam * (self.lam - 1)

    @property
    def beta(self) -> float:
        return math.inf if self.q == 0 else -2.0 * math.log(self.q)

    def with_q(self, q) -> "ModelParameters":
        return ModelParameters(self.N, self.lam, q)


def _check_nome(q):
    if not 0 <= q < 1:
        raise ValueError(f"nome must lie in [0, 1), got {q}")


class QSeries:
    """Power series sum_l c_l q^{2l} truncated at order L (so L+1 coefficients).

    Instances are immutable.  Products truncate at the smaller of the two
    orders; sums require equal orders.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable, order: int | None = None):
        c = tuple(coeffs)
        if order is not None:
            if len(c) > order + 1:
                c = c[: order + 1]
            else:
                c = c + (0,) * (order + 1 - len(c))
        if not c:
            raise ValueError("a QSeries needs at least one coefficient")
        object.__setattr__(self, "coeffs", c)

    def __setattr__(self, name, value):
        raise AttributeError("QSeries is immutable")

    @classmethod
    def zero(cls, order):
        return cls((0,) * (order + 1))

    @classmethod
    def one(cls, order):
        return cls((1,) + (0,) * order)

    @classmethod
    def constant(cls, value, order):
        return cls((value,) + (0,) * order)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, i):
        return self.coeffs[i]

    def __iter__(self):
        return iter(self.coeffs)

    def __repr__(self):
        return f"QSeries({list(self.coeffs)!r})"

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def __bool__(self):
        return not self.is_zero()

    def __eq__(self, other):
        if isinstance(other, QSeries):
            return self.coeffs == other.coeffs
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def _coerce(self, other):
        if isinstance(other, QSeries):
            if other.order != self.order:
                raise ValueError(f"truncation mismatch: {self.order} vs {other.order}")
            return other
        return QSeries.constant(other, self.order)

    def __add__(self, other):
        other = self._coerce(other)
        return QSeries(a + b for a, b in zip(self.coeffs, other.coeffs))

    __radd__ = __add__

    def __neg__(self):
        return QSeries(-a for a in self.coeffs)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, QSeries):
            return QSeries(series_product(self.coeffs, other.coeffs))
        return QSeries(a * other for a in self.coeffs)

    __rmul__ = __mul__

    def truncate(self, order):
        return QSeries(self.coeffs, order=order)

    def shift(self, steps):
        """Multiply by q^{2 steps}, keeping the truncation order."""
        if steps <= 0:
            return self
        return QSeries((0,) * steps + self.coeffs[: len(self.coeffs) - steps])

    def inverse(self):
        c = self.coeffs
        if c[0] == 0:
            raise ZeroDivisionError("QSeries with vanishing constant term")
        out = [Fraction(1, c[0]) if isinstance(c[0], int) else 1 / c[0]]
        for k in range(1, len(c)):
            s = sum(c[j] * out[k - j] for j in range(1, k + 1))
            out.append(-s * out[0])
        return QSeries(out)

    def __call__(self, q):
        """Evaluate at a numeric nome (Horner in q^2)."""
        x = q * q
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + float(c)
        return acc

    def to_float(self):
        return QSeries(float(c) for c in self.coeffs)


def series_product(a: Sequence, b: Sequence) -> list:
    """Truncated Cauchy product of two coefficient sequences."""
    n = min(len(a), len(b))
    out = [0] * n
    for i in range(n):
        ai = a[i]
        if ai == 0:
            continue
        for j in range(n - i):
            bj = b[j]
            if bj != 0:
                out[i + j] += ai * bj
    return out


# ---------------------------------------------------------------------------
# numerical evaluators


def _nomes(q, truncation):
    return q ** (2 * np.arange(1, truncation + 1))


def product_truncation_error(q, truncation=DEFAULT_TRUNCATION) -> float:
    """Size of the first omitted factor deviation, ~ 2 q^{2(T+1)}/(1-q^2)."""
    _check_nome(q)
    return 2.0 * q ** (2 * (truncation + 1)) / (1.0 - q * q)


def theta1(r, q, truncation=DEFAULT_TRUNCATION):
    """Product form of theta_1 with unit normalisation; accepts arrays and complex r."""
    _check_nome(q)
    if truncation < 1:
        raise ValueError("truncation must be >= 1")
    r = np.asarray(r)
    out = np.sin(r)
    if q == 0:
        return out[()]
    c2 = np.cos(2 * r)
    for a in _nomes(q, truncation):
        if a == 0.0:
            break
        out = out * (1 - 2 * a * c2 + a * a)
    return out[()]


def theta1_log_derivative(u, q, truncation=DEFAULT_TRUNCATION):
    """theta1'(u)/theta1(u)."""
    return 2.0 * log_b_derivative(2 * np.asarray(u), q, truncation)


def _pole_check(r):
    r = np.asarray(r)
    if np.isrealobj(r):
        s = np.abs(np.sin(r / 2))
        if np.any(s < 1e-14):
            raise PoleError("evaluation at a lattice point r = 0 mod 2*pi")


def log_b_derivative(r, q, truncation=DEFAULT_TRUNCATION):
    """d/dr log theta1(r/2) = cot(r/2)/2 + sum_n 2 a sin r / (1 - 2 a cos r + a^2), a = q^{2n}.

    This is the log-derivative of the ground-state pair factor b_0(r).
    """
    _check_nome(q)
    _pole_check(r)
    r = np.asarray(r)
    out = 0.5 / np.tan(r / 2)
    if q > 0:
        s, c = np.sin(r), np.cos(r)
        for a in _nomes(q, truncation):
            if a == 0.0:
                break
            out = out + 2 * a * s / (1 - 2 * a * c + a * a)
    return out[()]


def potential_V(r, q, truncation=DEFAULT_TRUNCATION):
    """V(r) = -d^2/dr^2 log theta1(r/2), from the term-by-term analytic derivative."""
    _check_nome(q)
    _pole_check(r)
    r = np.asarray(r)
    out = 0.25 / np.sin(r / 2) ** 2
    if q > 0:
        s, c = np.sin(r), np.cos(r)
        for a in _nomes(q, truncation):
            if a == 0.0:
                break
            d = 1 - 2 * a * c + a * a
            out = out - (2 * a * c * d - 4 * a * a * s * s) / (d * d)
    return out[()]


def weierstrass_constant(q, truncation=DEFAULT_TRUNCATION) -> float:
    """The constant wp(r) - V(r), fixed by the vanishing constant term of wp's Laurent series at 0."""
    _check_nome(q)
    if q == 0:
        return -1.0 / 12.0
    a = _nomes(q, truncation)
    return float(-1.0 / 12.0 + np.sum(2 * a / (1 - a) ** 2))


def weierstrass_eta1(q, truncation=DEFAULT_TRUNCATION) -> float:
    """zeta(pi), the quasi-period of zeta for the real half-period pi."""
    return -math.pi * weierstrass_constant(q, truncation)


def weierstrass_p(r, q, truncation=DEFAULT_TRUNCATION):
    """Weierstrass wp for the lattice 2*pi Z + i*beta Z (real r)."""
    return potential_V(r, q, truncation) + weierstrass_constant(q, truncation)


def weierstrass_zeta(r, q, truncation=DEFAULT_TRUNCATION):
    """Weierstrass zeta for the lattice 2*pi Z + i*beta Z; zeta' = -wp."""
    r = np.asarray(r)
    out = log_b_derivative(r, q, truncation) - weierstrass_constant(q, truncation) * r
    return out[()] if isinstance(out, np.ndarray) else out


def b_factor(r, q, truncation=DEFAULT_TRUNCATION):
    """b_0(r) = -2i sin(r/2) prod_n (1 - 2 q^{2n} cos r + q^{4n})."""
    return -2j * theta1(np.asarray(r) / 2, q, truncation)


def b_power(r, q, exponent, truncation=DEFAULT_TRUNCATION):
    """b_0(r)^exponent on the branch exp(-i a r/2) (1 - e^{ir})^a prod(...)^a.

    (1 - e^{ir})^a uses the principal branch, so the result is continuous on
    every interval (2 pi k, 2 pi (k+1)) and picks up exp(-i pi a) under
    r -> r + 2 pi.
    """
    _check_nome(q)
    _pole_check(r)
    r = np.asarray(r, dtype=float)
    a = float(exponent)
    out = np.exp(-0.5j * a * r) * (1 - np.exp(1j * r)) ** a
    if q > 0:
        c = np.cos(r)
        prod = np.ones_like(r)
        for m in _nomes(q, truncation):
            if m == 0.0:
                break
            prod = prod * (1 - 2 * m * c + m * m)
        out = out * prod**a
    return out[()]


# ---------------------------------------------------------------------------
# q^2-series


def sinh2_series(n, order) -> QSeries:
    """s_n^2 = q^{2n}/(1-q^{2n}) = sum_{m>=1} q^{2nm} as a QSeries."""
    return QSeries(1 if (l > 0 and l % n == 0) else 0 for l in range(order + 1))


def cosh2_series(n, order) -> QSeries:
    """c_n^2 = 1 + s_n^2."""
    return sinh2_series(n, order) + 1


def potential_fourier_coefficients(L, n_max):
    """Hopping weights of the pair potential, as q^2-series.

    V(r) = -sum_{n>=1} [n c_n^2 e^{inr} + n s_n^2 e^{-inr}] (boundary value of
    the one-sided expansion).  Returns ``[(forward_n, backward_n), ...]`` for
    n = 1..n_max with forward = n c_n^2 and backward = n s_n^2.
    """
    return [(cosh2_series(n, L) * n, sinh2_series(n, L) * n) for n in range(1, n_max + 1)]


def fourier_weights(q, n_max):
    """Numeric (n c_n^2, n s_n^2) arrays for n = 1..n_max."""
    _check_nome(q)
    n = np.arange(1, n_max + 1)
    s2 = q ** (2 * n) / (1 - q ** (2 * n))
    return n * (1 + s2), n * s2


def generalized_binomial(a, k: int):
    """C(a, k) via C(a, 0) = 1, C(a, k) = C(a, k-1) (a - k + 1)/k."""
    c = Fraction(1) if isinstance(a, (int, Fraction)) else 1.0
    for j in range(1, k + 1):
        c = c * (a - j + 1) / j
    return c


def binomial_series(a, k_max: int) -> list:
    """Coefficients of (1 - z)^a up to z^k_max: (-1)^k C(a, k)."""
    exact = isinstance(a, (int, Fraction))
    c = Fraction(1) if exact else 1.0
    out = [c]
    for k in range(1, k_max + 1):
        c = -c * (a - k + 1) / k
        out.append(c)
    return out


def b_expansion_table(exponent, L: int, k_max: int) -> dict[int, QSeries]:
    """Coefficients of check_b(r)^exponent in w = e^{ir} and q^2.

    check_b(r) = (1 - w) prod_{m>=1} (1 - q^{2m} w)(1 - q^{2m}/w); every factor
    is expanded with the generalized binomial series in positive powers of its
    small variable.  Returns {k: QSeries} for -L <= k <= k_max, dropping zero
    entries.  Entries with k <= k_max are exact through order L.
    """
    if isinstance(exponent, int):
        exponent = Fraction(exponent)
    top = k_max + L
    width = top + L + 1  # index = k + L
    table = [[0] * (L + 1) for _ in range(width)]
    for k, c in enumerate(binomial_series(exponent, top)):
        table[k + L][0] = c
    for m in range(1, L + 1):
        jmax = L // m
        factor = binomial_series(exponent, jmax)
        for sign in (1, -1):
            new = [row[:] for row in table]
            for j in range(1, jmax + 1):
                f = factor[j]
                if f == 0:
                    continue
                dl = m * j
                dk = sign * j
                for idx in range(width):
                    row = table[idx]
                    tgt = idx + dk
                    if tgt < 0 or tgt >= width:
                        continue
                    dest = new[tgt]
                    for l in range(L + 1 - dl):
                        v = row[l]
                        if v != 0:
                            dest[l + dl] += v * f
            table = new
    out = {}
    for k in range(-L, k_max + 1):
        coeffs = table[k + L]
        if any(c != 0 for c in coeffs):
            out[k] = QSeries(coeffs)
    return out


def check_b_expansion(exponent, L: int, k_max: int, warn: bool = True):
    """check_b(r)^exponent as a one-variable LaurentPoly in w = e^{ir}.

    The series is infinite unless the exponent is a non-negative integer; in
    that case terms above k_max are cut and the cut is recorded in the
    polynomial's metadata (and a `TruncationWarning` is emitted when
    ``warn``).
    """
    import warnings

    from .series_algebra import LaurentPoly, TruncationWarning

    table = b_expansion_table(exponent, L, k_max)
    finite = isinstance(exponent, (int, Fraction)) and exponent == int(exponent) and exponent >= 0
    if finite:
        probe = b_expansion_table(exponent, L, k_max + int(exponent) * (L + 1) + 1)
        cut = any(k > k_max for k in probe)
    else:
        cut = True
    poly = LaurentPoly(1, L, {(k,): c for k, c in table.items()}, truncated=cut)
    if cut and warn:
        warnings.warn(
            f"expansion of check_b^{exponent} cut at w^{k_max}", TruncationWarning, stacklevel=2
        )
    return poly
