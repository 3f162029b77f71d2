"""Plane-wave polynomials, the ground-state factor and assembled eigenfunctions.

The plane-wave polynomial of a mode vector n is the constant term in y of

    e^{i n.y} prod_{j<k} check_b(y_j - y_k)^lam / prod_{j,k} check_b(x_j - y_k)^lam

with every factor expanded in positive powers of its plane wave.  Writing the
numerator factor of pair (j, k) as sum_a g(a) e^{ia(y_j - y_k)} and the
denominator factors of y_k as sum_b h(b) z_j^b e^{-ib y_k}, extraction of the
y_k mode leaves, for each pair-exponent vector a, the product over k of

    H_B(z) = [t^B] prod_j G(z_j t),    B_k = n_k + sum_{l>k} a_kl - sum_{j<k} a_jk,

where G is the expansion of check_b^{-lam}.  Every negative plane-wave power
costs at least one power of q^2, so only finitely many a contribute through
order L.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .elliptic_core import (
    ModelParameters,
    QSeries,
    b_expansion_table,
    b_power,
    log_b_derivative,
    potential_V,
    series_product,
)
from .errors import CutoffInsufficient, PoleError
from .series_algebra import LaurentPoly, scalar_to_json
from .spectrum_recursion import (
    SpectralSolution,
    as_modes,
    pair_list,
    quasi_momenta,
)

MAX_CUTOFF = 512


def closure_cutoff(n, L: int) -> int:
    """Plane-wave cutoff beyond which the extracted coefficients cannot change."""
    n = as_modes(n)
    N = len(n)
    P = N * (N - 1) // 2
    size = sum(abs(v) for v in n)
    return max(size + P * L, size + 2 * (N - 1) * L, 1)


def may_be_nonzero(n, L: int) -> bool:
    """False when some suffix sum of n is below -L, which forces the polynomial to vanish."""
    n = as_modes(n)
    return all(sum(n[c:]) >= -L for c in range(len(n)))


def _negativity(k):
    return -k if k < 0 else 0


class _Kernel:
    """Expansion tables shared by all mode vectors at fixed (N, lam, L, K)."""

    def __init__(self, params: ModelParameters, L: int, K: int):
        self.N, self.L, self.K = params.N, L, K
        lam = params.lam
        self.numer = b_expansion_table(lam, L, K)
        self.denom = b_expansion_table(-lam, L, K)
        self._H = {}
        self._products = {}

    def H(self, B: int) -> dict:
        """[t^B] prod_j G(z_j t) as {exponent: coefficient list}."""
        if B in self._H:
            return self._H[B]
        N, L, K = self.N, self.L, self.K
        out = {}
        if B >= -L:
            rng = range(-L, min(K, B + (N - 1) * L) + 1)

            def rec(j, rest, neg, exps, coeffs):
                if j == N - 1:
                    b = rest
                    if b < -L or b > K:
                        return
                    if neg + _negativity(b) > L:
                        return
                    c = self.denom.get(b)
                    if c is None:
                        return
                    prod = series_product(coeffs, c.coeffs)
                    if any(v != 0 for v in prod):
                        out[exps + (b,)] = prod
                    return
                for b in rng:
                    nb = neg + _negativity(b)
                    if nb > L:
                        continue
                    c = self.denom.get(b)
                    if c is None:
                        continue
                    rec(j + 1, rest - b, nb, exps + (b,), series_product(coeffs, c.coeffs))

            rec(0, B, 0, (), [1] + [0] * L)
        self._H[B] = out
        return out

    def product(self, Bs: tuple) -> dict:
        key = tuple(sorted(Bs))
        if key in self._products:
            return self._products[key]
        acc = {(0,) * self.N: [1] + [0] * self.L}
        for B in key:
            acc = _poly_mul(acc, self.H(B), self.L)
            if not acc:
                break
        self._products[key] = acc
        return acc


def _poly_mul(a: dict, b: dict, L: int) -> dict:
    out = {}
    for e1, c1 in a.items():
        for e2, c2 in b.items():
            e = tuple(x + y for x, y in zip(e1, e2))
            prod = series_product(c1, c2)
            row = out.get(e)
            if row is None:
                out[e] = prod
            else:
                for i in range(L + 1):
                    row[i] += prod[i]
    return {e: c for e, c in out.items() if any(v != 0 for v in c)}


def _pair_exponents(n, L, K):
    """Pair-exponent vectors a with every B_k >= -L and total negativity <= L."""
    N = len(n)
    pairs = pair_list(N)
    P = len(pairs)
    if P == 0:
        yield (), tuple(n), 0
        return
    for a in itertools.product(range(-L, K + 1), repeat=P):
        neg = sum(_negativity(x) for x in a)
        if neg > L:
            continue
        B = list(n)
        for (j, k), x in zip(pairs, a):
            B[j] += x
            B[k] -= x
        if all(b >= -L for b in B):
            yield a, tuple(B), neg


class PlaneWaveCache:
    """Memo of plane-wave polynomials keyed by mode vector (insert-only)."""

    def __init__(self, params: ModelParameters, L: int, K: int | None = None):
        self.params, self.L, self.K = params, L, K
        self._kernels = {}
        self._polys = {}

    def kernel(self, K):
        if K not in self._kernels:
            self._kernels[K] = _Kernel(self.params, self.L, K)
        return self._kernels[K]

    def __call__(self, n) -> LaurentPoly:
        n = as_modes(n)
        if n not in self._polys:
            K = self.K if self.K is not None else closure_cutoff(n, self.L)
            self._polys[n] = _compute(n, self.params, self.L, self.kernel(K))
        return self._polys[n]

    def __contains__(self, n):
        return as_modes(n) in self._polys


def _compute(n, params, L, kernel: _Kernel) -> LaurentPoly:
    N = params.N
    if len(n) != N:
        raise ValueError(f"mode vector {n} has length {len(n)}, expected N={N}")
    weights = {}
    if N == 1:
        weights[(n[0],)] = [1] + [0] * L
    else:
        for a, B, _ in _pair_exponents(n, L, kernel.K):
            w = [1] + [0] * L
            for x in a:
                c = kernel.numer.get(x)
                if c is None:
                    w = None
                    break
                w = series_product(w, c.coeffs)
            if w is None or not any(v != 0 for v in w):
                continue
            key = tuple(sorted(B))
            row = weights.get(key)
            if row is None:
                weights[key] = w
            else:
                for i in range(L + 1):
                    row[i] += w[i]
    acc = {}
    for Bs, w in weights.items():
        if not any(v != 0 for v in w):
            continue
        for e, c in kernel.product(Bs).items():
            prod = series_product(w, c)
            row = acc.get(e)
            if row is None:
                acc[e] = prod
            else:
                for i in range(L + 1):
                    row[i] += prod[i]
    terms = {e: QSeries(c) for e, c in acc.items() if any(v != 0 for v in c)}
    return LaurentPoly(N, L, terms)


def compute_P(n, params: ModelParameters, L: int, K: int | None = None, audit: bool = False) -> LaurentPoly:
    """Plane-wave polynomial of mode vector n through order q^{2L}.

    ``K`` is the plane-wave cutoff of the factor expansions; by default the
    closure bound, beyond which nothing changes.  With ``audit`` the result is
    recomputed at K + 4 and `CutoffInsufficient` is raised if any coefficient
    moves.
    """
    n = as_modes(n)
    if K is None:
        K = closure_cutoff(n, L)
    poly = _compute(n, params, L, _Kernel(params, L, K))
    if audit:
        wider = _compute(n, params, L, _Kernel(params, L, K + 4))
        if wider != poly:
            raise CutoffInsufficient(f"plane-wave cutoff K={K} is not closed for n={n}")
    return poly


def compute_P_escalating(n, params, L, K0=2, cap=MAX_CUTOFF) -> tuple[LaurentPoly, int]:
    """Double K from K0 until the result is stable under K -> K + 4."""
    K = K0
    while K <= cap:
        try:
            return compute_P(n, params, L, K, audit=True), K
        except CutoffInsufficient:
            K *= 2
    raise CutoffInsufficient(f"no stable plane-wave cutoff up to {cap} for n={as_modes(n)}")


# ---------------------------------------------------------------------------
# ground-state factor and the centre-of-mass phase


@dataclass(frozen=True)
class CenterOfMass:
    exponent: object
    matches_pair_display: bool
    matches_series_display: bool


def ground_state_leading_exponents(N, lam) -> tuple:
    """Leading plane-wave exponents of prod_{j<k} b_0(x_k - x_j)^lam.

    b_0(r) = e^{-ir/2} check_b(r), so pair (j, k) contributes lam/2 to x_j and
    -lam/2 to x_k.
    """
    half = Fraction(lam) / 2 if isinstance(lam, (int, Fraction)) else lam / 2
    out = [0] * N
    for j, k in pair_list(N):
        out[j] += half
        out[k] -= half
    return tuple(out)


def center_of_mass_exponent(params: ModelParameters) -> CenterOfMass:
    """Exponent c of the phase e^{i c sum_j x_j}.

    Fixed by requiring the leading plane wave of J Delta e^{ic sum x} to be
    e^{i P.x} with the quasi-momenta P, i.e. c = P_j - n_j - (Delta exponent)_j,
    which must come out the same for every j.
    """
    N, lam = params.N, params.lam
    zero = (0,) * N
    P = quasi_momenta(zero, lam)
    d = ground_state_leading_exponents(N, lam)
    cs = {p - e for p, e in zip(P, d)}
    if len(cs) != 1 and max(cs) - min(cs) > 1e-12:
        raise AssertionError(f"inconsistent centre-of-mass exponents {cs}")
    c = cs.pop()
    return CenterOfMass(c, c == lam, c == N * lam)


def _differences(x):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return x


def delta_factor(x, params: ModelParameters):
    """prod_{j<k} b_0(x_k - x_j)^lam on the branch of `b_power`.

    On the ordered sector x_1 < ... < x_N < x_1 + 2 pi every argument lies in
    (0, 2 pi), where the branch is continuous; elsewhere the 2 pi phase rule of
    `b_power` applies.  ``x`` may be (N,) or (S, N).
    """
    X = _differences(x)
    out = np.ones(X.shape[0], dtype=complex)
    for j, k in pair_list(params.N):
        out = out * b_power(X[:, k] - X[:, j], params.q, float(params.lam))
    return out if np.ndim(x) > 1 else out[0]


def delta_log_gradient(x, params: ModelParameters):
    """d/dx_j log Delta = lam sum_{k != j} g(x_j - x_k), g = (log b_0)'."""
    X = _differences(x)
    lam = float(params.lam)
    grad = np.zeros(X.shape)
    for j, k in pair_list(params.N):
        g = log_b_derivative(X[:, j] - X[:, k], params.q)
        grad[:, j] += lam * g
        grad[:, k] -= lam * g
    return grad if np.ndim(x) > 1 else grad[0]


def delta_log_second(x, params: ModelParameters):
    """d^2/dx_j^2 log Delta = -lam sum_{k != j} V(x_j - x_k), per j."""
    X = _differences(x)
    lam = float(params.lam)
    out = np.zeros(X.shape)
    for j, k in pair_list(params.N):
        v = potential_V(X[:, j] - X[:, k], params.q)
        out[:, j] -= lam * v
        out[:, k] -= lam * v
    return out if np.ndim(x) > 1 else out[0]


def delta_log_laplacian(x, params: ModelParameters):
    return np.sum(delta_log_second(x, params), axis=-1)


def pair_potential_sum(x, params: ModelParameters):
    X = _differences(x)
    out = np.zeros(X.shape[0])
    for j, k in pair_list(params.N):
        out += potential_V(X[:, j] - X[:, k], params.q)
    return out if np.ndim(x) > 1 else out[0]


# ---------------------------------------------------------------------------
# assembly


@dataclass
class EllipticJack:
    """J_n(x|q) as one LaurentPoly with QSeries coefficients."""

    n: tuple
    coefficients: LaurentPoly
    solution: SpectralSolution | None = field(default=None, repr=False)
    normalization: str = "alpha_0(0) = 1, alpha_l(0) = 0 for l >= 1"

    @property
    def L(self):
        return self.coefficients.L

    def order(self, l) -> dict:
        """J^l as {exponent: scalar}."""
        return self.coefficients.at_order(l)

    def is_symmetric(self, tol=1e-12) -> bool:
        return self.coefficients.is_symmetric(tol)

    def evaluate(self, x, q):
        return self.coefficients.evaluate(x, q)

    def to_dict(self) -> dict:
        out = self.coefficients.to_dict()
        lam = self.solution.params.lam if self.solution is not None else None
        out["metadata"] = {
            "n": list(self.n),
            "lambda": scalar_to_json(lam) if lam is not None else None,
            "q_order": self.L,
            "normalization": self.normalization,
        }
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


class Eigenfunction:
    """Pointwise evaluator of psi = J Delta e^{i c sum x} and of (H psi)/psi pieces."""

    def __init__(self, jack: EllipticJack, params: ModelParameters, com: CenterOfMass):
        self.jack = jack
        self.params = params
        self.com = com
        self.c = float(com.exponent)

    def _at(self, q):
        return self.params.with_q(q)

    def value(self, x, q):
        p = self._at(q)
        x = np.asarray(x, dtype=float)
        J = self.jack.evaluate(x, q)
        phase = np.exp(1j * self.c * np.sum(x, axis=-1))
        return J * delta_factor(x, p) * phase

    def apply_hamiltonian(self, x, q):
        """(H psi)/Phi and J at the samples, Phi = Delta e^{ic sum x}.

        H psi / Phi = -sum_j [J'' + 2 (log Phi)' J' + ((log Phi)'' + (log Phi)'^2) J] + gamma sum V J.
        """
        p = self._at(q)
        X = np.atleast_2d(np.asarray(x, dtype=float))
        J, dJ, d2J = self.jack.coefficients.derivatives(X, q)
        lg = 1j * self.c + delta_log_gradient(X, p)
        l2 = delta_log_second(X, p)
        kinetic = np.sum(d2J + 2 * lg * dJ + (l2 + lg**2) * J[:, None], axis=1)
        HJ = -kinetic + float(p.gamma) * pair_potential_sum(X, p) * J
        return HJ, J

    def relative_residual(self, x, q, energy):
        HJ, J = self.apply_hamiltonian(x, q)
        return np.abs(HJ - energy * J) / np.abs(J)


def required_shifts(solution: SpectralSolution) -> dict:
    """Fiber sums of alpha whose shifted modes can carry a nonzero polynomial."""
    out = {}
    for v, series in solution.fiber_series().items():
        mode = tuple(a + b for a, b in zip(solution.n, v))
        if may_be_nonzero(mode, solution.L):
            out[mode] = series
    return out


def assemble_eigenfunction(solution: SpectralSolution, P_table=None, K=None):
    """J_n = sum_mu alpha(mu) P(n + mu), truncated at q^{2L}; returns (EllipticJack, Eigenfunction).

    ``P_table`` maps mode vectors to plane-wave polynomials; by default they
    are computed (and memoised) on demand.
    """
    params = solution.params
    L = solution.L
    if P_table is None:
        P_table = PlaneWaveCache(params, L, K)
    total = LaurentPoly(params.N, L)
    for mode, series in required_shifts(solution).items():
        if isinstance(P_table, PlaneWaveCache):
            poly = P_table(mode)
        else:
            try:
                poly = P_table[mode]
            except KeyError:
                raise KeyError(f"no plane-wave polynomial supplied for mode vector {mode}") from None
        if poly.L != L:
            poly = poly.truncate(L)
        total = total + poly.scale(series)
    jack = EllipticJack(solution.n, total, solution)
    return jack, Eigenfunction(jack, params, center_of_mass_exponent(params))


def is_pole(x) -> bool:
    x = np.asarray(x, dtype=float)
    d = np.abs(np.sin((x[:, None] - x[None, :]) / 2))
    np.fill_diagonal(d, 1.0)
    return bool(np.any(d < 1e-12))


def check_distinct(x):
    if is_pole(x):
        raise PoleError("coincident particle coordinates")
