"""Sparse Laurent polynomials in z_j = exp(i x_j) with QSeries coefficients."""

from __future__ import annotations

import itertools
import json
import math
from fractions import Fraction
from types import MappingProxyType

import numpy as np

from .elliptic_core import QSeries, cosh2_series, sinh2_series, series_product
from .errors import WindowOverflow


class TruncationWarning(UserWarning):
    pass


def _is_exact(value) -> bool:
    return isinstance(value, (int, Fraction))


class LaurentPoly:
    """Sparse map exponent-vector -> QSeries, all of truncation order L.

    Zero coefficients are never stored.  ``window`` optionally bounds every
    exponent entry to ``[lo, hi]``; producing a term outside it raises
    `WindowOverflow`.  ``truncated`` records that terms were deliberately cut
    (by `restrict` or by an expansion cutoff).
    """

    __slots__ = ("N", "L", "_terms", "window", "truncated")

    def __init__(self, N, L, terms=None, window=None, truncated=False):
        self.N = int(N)
        self.L = int(L)
        self.window = None if window is None else (int(window[0]), int(window[1]))
        self.truncated = bool(truncated)
        clean = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != self.N:
                raise ValueError(f"exponent {exp} has length {len(exp)}, expected {self.N}")
            if not isinstance(c, QSeries):
                c = QSeries.constant(c, self.L)
            elif c.order != self.L:
                raise ValueError(f"coefficient order {c.order} != {self.L}")
            if not c.is_zero():
                clean[exp] = c
        self._terms = clean
        self._check_window()

    def _check_window(self):
        if self.window is None:
            return
        lo, hi = self.window
        for exp in self._terms:
            if any(e < lo or e > hi for e in exp):
                raise WindowOverflow(f"term {exp} outside exponent window [{lo}, {hi}]")

    @classmethod
    def _raw(cls, N, L, terms, window=None, truncated=False):
        p = cls.__new__(cls)
        p.N, p.L, p.window, p.truncated = N, L, window, truncated
        p._terms = terms
        p._check_window()
        return p

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, N, L=0):
        return cls(N, L)

    @classmethod
    def one(cls, N, L=0):
        return cls(N, L, {(0,) * N: QSeries.one(L)})

    @classmethod
    def monomial(cls, exp, coeff=1, L=0):
        return cls(len(exp), L, {tuple(exp): coeff})

    @classmethod
    def variable(cls, j, N, L=0, power=1):
        exp = [0] * N
        exp[j] = power
        return cls(N, L, {tuple(exp): 1})

    # -- container protocol --------------------------------------------------

    @property
    def terms(self):
        return MappingProxyType(self._terms)

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(sorted(self._terms.items()))

    def coefficient(self, exp) -> QSeries:
        return self._terms.get(tuple(exp), QSeries.zero(self.L))

    def is_zero(self) -> bool:
        return not self._terms

    def __eq__(self, other):
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return self.N == other.N and self.L == other.L and self._terms == other._terms

    def __repr__(self):
        body = " + ".join(f"{list(c.coeffs)}*z^{e}" for e, c in self)
        return f"LaurentPoly(N={self.N}, L={self.L}, {body or '0'})"

    def exponents(self):
        return sorted(self._terms)

    def at_order(self, l) -> dict:
        """The q^{2l} slice as {exponent: scalar}."""
        return {e: c[l] for e, c in sorted(self._terms.items()) if c[l] != 0}

    def support_bounds(self):
        if not self._terms:
            return None
        arr = np.array(list(self._terms))
        return arr.min(axis=0), arr.max(axis=0)

    # -- arithmetic ----------------------------------------------------------

    def _compatible(self, other):
        if self.N != other.N:
            raise ValueError(f"variable count mismatch: {self.N} vs {other.N}")
        if self.L != other.L:
            raise ValueError(f"truncation mismatch: {self.L} vs {other.L}")

    def _merged_window(self, other):
        if self.window is None:
            return other.window
        if other.window is None:
            return self.window
        return (max(self.window[0], other.window[0]), min(self.window[1], other.window[1]))

    def __add__(self, other):
        if not isinstance(other, LaurentPoly):
            other = LaurentPoly(self.N, self.L, {(0,) * self.N: other})
        self._compatible(other)
        acc = {e: list(c.coeffs) for e, c in self._terms.items()}
        for e, c in other._terms.items():
            if e in acc:
                row = acc[e]
                for i, v in enumerate(c.coeffs):
                    row[i] += v
            else:
                acc[e] = list(c.coeffs)
        return self._from_lists(acc, self._merged_window(other), self.truncated or other.truncated)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly._raw(
            self.N, self.L, {e: -c for e, c in self._terms.items()}, self.window, self.truncated
        )

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def _from_lists(self, acc, window, truncated):
        terms = {}
        for e, row in acc.items():
            if any(v != 0 for v in row):
                terms[e] = QSeries(row)
        return LaurentPoly._raw(self.N, self.L, terms, window, truncated)

    def scale(self, factor):
        """Multiply by a scalar or a QSeries."""
        if isinstance(factor, QSeries):
            if factor.order != self.L:
                factor = factor.truncate(self.L)
            terms = {e: c * factor for e, c in self._terms.items()}
        else:
            terms = {e: c * factor for e, c in self._terms.items()}
        terms = {e: c for e, c in terms.items() if not c.is_zero()}
        return LaurentPoly._raw(self.N, self.L, terms, self.window, self.truncated)

    def __mul__(self, other):
        if not isinstance(other, LaurentPoly):
            return self.scale(other)
        self._compatible(other)
        L1 = self.L + 1
        acc = {}
        right = [(e, c.coeffs) for e, c in other._terms.items()]
        for e1, c1 in self._terms.items():
            c1 = c1.coeffs
            for e2, c2 in right:
                e = tuple(a + b for a, b in zip(e1, e2))
                prod = series_product(c1, c2)
                row = acc.get(e)
                if row is None:
                    acc[e] = prod
                else:
                    for i in range(L1):
                        row[i] += prod[i]
        return self._from_lists(acc, self._merged_window(other), self.truncated or other.truncated)

    def __rmul__(self, other):
        return self.scale(other)

    def shift(self, exp):
        """Multiply by the monomial z^exp."""
        terms = {tuple(a + b for a, b in zip(e, exp)): c for e, c in self._terms.items()}
        return LaurentPoly._raw(self.N, self.L, terms, self.window, self.truncated)

    def truncate(self, L):
        terms = {e: c.truncate(L) for e, c in self._terms.items()}
        return LaurentPoly(self.N, L, terms, self.window, self.truncated)

    def restrict(self, window):
        """Drop terms outside [lo, hi]^N and record the cut."""
        lo, hi = window
        kept = {e: c for e, c in self._terms.items() if all(lo <= x <= hi for x in e)}
        cut = self.truncated or len(kept) != len(self._terms)
        return LaurentPoly._raw(self.N, self.L, kept, (lo, hi), cut)

    def map_coefficients(self, fn):
        return LaurentPoly(self.N, self.L, {e: fn(c) for e, c in self._terms.items()},
                           self.window, self.truncated)

    def to_float(self):
        return self.map_coefficients(QSeries.to_float)

    # -- symmetry ------------------------------------------------------------

    def permute(self, perm):
        """Relabel variables: exponent of z_{perm[j]} in the result is the old exponent of z_j."""
        terms = {}
        for e, c in self._terms.items():
            new = [0] * self.N
            for j, pj in enumerate(perm):
                new[pj] = e[j]
            terms[tuple(new)] = c
        return LaurentPoly._raw(self.N, self.L, terms, self.window, self.truncated)

    def symmetrize(self):
        """Average over all N! permutations of the variables."""
        acc = {}
        for perm in itertools.permutations(range(self.N)):
            for e, c in self._terms.items():
                key = tuple(e[perm[j]] for j in range(self.N))
                row = acc.setdefault(key, [0] * (self.L + 1))
                for i, v in enumerate(c.coeffs):
                    row[i] += v
        weight = Fraction(1, math.factorial(self.N))
        acc = {e: [v * weight for v in row] for e, row in acc.items()}
        return self._from_lists(acc, self.window, self.truncated)

    def is_symmetric(self, tol=1e-12) -> bool:
        """Exact comparison in rational mode, relative tolerance ``tol`` otherwise."""
        exact = all(_is_exact(v) for c in self._terms.values() for v in c.coeffs)
        scale = max((abs(v) for c in self._terms.values() for v in c.coeffs), default=0)
        for e, c in self._terms.items():
            for perm in itertools.permutations(e):
                if perm == e:
                    continue
                other = self._terms.get(perm)
                if other is None:
                    other = QSeries.zero(self.L)
                if exact:
                    if other != c:
                        return False
                elif any(abs(a - b) > tol * max(scale, 1e-300) for a, b in zip(c.coeffs, other.coeffs)):
                    return False
        return True

    # -- numerics ------------------------------------------------------------

    def _arrays(self, q):
        if not self._terms:
            return np.zeros((0, self.N)), np.zeros(0)
        exps = np.array(sorted(self._terms), dtype=float)
        coeffs = np.array([self._terms[tuple(int(v) for v in e)](q) for e in exps.astype(int)])
        return exps, coeffs

    def evaluate(self, x, q=0.0):
        """Value at z_j = exp(i x_j) with every QSeries summed at nome q.

        ``x`` may have shape (N,) or (S, N) for S sample points.
        """
        exps, coeffs = self._arrays(q)
        x = np.asarray(x, dtype=float)
        phase = np.exp(1j * (x @ exps.T))
        return phase @ coeffs

    def derivatives(self, x, q=0.0):
        """(value, gradient, second derivatives d^2/dx_j^2) at the sample points."""
        exps, coeffs = self._arrays(q)
        x = np.atleast_2d(np.asarray(x, dtype=float))
        phase = np.exp(1j * (x @ exps.T))
        value = phase @ coeffs
        grad = (phase * coeffs) @ (1j * exps)
        second = (phase * coeffs) @ (-(exps**2))
        return value, grad, second

    def coefficient_norm(self, q=0.0) -> float:
        return float(sum(abs(c(q)) for c in self._terms.values()))

    # -- serialisation -------------------------------------------------------

    def to_dict(self):
        return {
            "N": self.N,
            "L": self.L,
            "terms": [
                {"exp": list(e), "qcoeffs": [scalar_to_json(v) for v in c.coeffs]}
                for e, c in sorted(self._terms.items())
            ],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data):
        terms = {
            tuple(t["exp"]): QSeries(scalar_from_json(v) for v in t["qcoeffs"])
            for t in data["terms"]
        }
        return cls(data["N"], data["L"], terms)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def scalar_to_json(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, int):
        return str(v)
    return float(v)


def scalar_from_json(v):
    if isinstance(v, str):
        return Fraction(v)
    return float(v)


def symmetrize(p: LaurentPoly) -> LaurentPoly:
    return p.symmetrize()


def is_symmetric(p: LaurentPoly, tol=1e-12) -> bool:
    return p.is_symmetric(tol)


def evaluate(p: LaurentPoly, x, q=0.0):
    return p.evaluate(x, q)


def pair_vectors(N):
    """The vectors E_jk (e_j - e_k) for j < k, in lexicographic pair order."""
    out = []
    for j in range(N):
        for k in range(j + 1, N):
            v = [0] * N
            v[j], v[k] = 1, -1
            out.append(tuple(v))
    return out


def apply_laplacian_and_potential(p: LaurentPoly, params, offset=None, window=None) -> LaurentPoly:
    """Action of the Hamiltonian on sum_e p_e F(x; offset + e) in mode space.

    Each exponent vector e of ``p`` labels the mode vector offset + e.  The
    derivative term is diagonal with the unperturbed energy of that mode; the
    pair potential hops e -> e + k E_jk with weight -gamma k c_k^2 and
    e -> e - k E_jk with weight -gamma k s_k^2.  Forward hops never terminate,
    so a window [lo, hi] on the exponents is required; hops leaving it are
    dropped and the result is flagged ``truncated``.
    """
    from .spectrum_recursion import energy_zero

    if window is None:
        window = p.window
    if window is None:
        raise WindowOverflow("an exponent window is required: the forward hops are unbounded")
    lo, hi = window
    for e in p.terms:
        if any(v < lo or v > hi for v in e):
            raise WindowOverflow(f"input term {e} outside window {window}")
    N, L = p.N, p.L
    offset = tuple(offset) if offset is not None else (0,) * N
    gamma = params.gamma
    acc = {}
    truncated = p.truncated

    def add(e, series):
        row = acc.setdefault(e, [0] * (L + 1))
        for i, v in enumerate(series):
            row[i] += v

    kmax = hi - lo
    forward = [None] + [cosh2_series(k, L) * (-gamma * k) for k in range(1, kmax + 1)]
    backward = [None] + [sinh2_series(k, L) * (-gamma * k) for k in range(1, kmax + 1)]
    for e, c in p.terms.items():
        mode = tuple(o + v for o, v in zip(offset, e))
        add(e, (c * energy_zero(mode, params.lam)).coeffs)
        if gamma == 0 or N < 2:
            continue
        # forward hops never terminate, so any finite window cuts some of them
        truncated = True
        for E in pair_vectors(N):
            for k in range(1, kmax + 1):
                for sign, table in ((1, forward), (-1, backward)):
                    target = tuple(v + sign * k * d for v, d in zip(e, E))
                    if all(lo <= t <= hi for t in target):
                        add(target, (c * table[k]).coeffs)
    out = {e: QSeries(row) for e, row in acc.items() if any(v != 0 for v in row)}
    return LaurentPoly._raw(N, L, out, (lo, hi), truncated)
