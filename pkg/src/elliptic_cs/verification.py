"""Independent numerical checks: elliptic identities, eigen-residuals and diagonalisation oracles."""

from __future__ import annotations

import itertools
import json
from collections import defaultdict
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg

from .elliptic_core import (
    ModelParameters,
    _nomes,
    b_power,
    fourier_weights,
    log_b_derivative,
    potential_V,
    theta1,
    weierstrass_p,
    weierstrass_zeta,
)
from .errors import CutoffInsufficient
from .spectrum_recursion import pair_list

MIN_SEPARATION = 0.1


# ---------------------------------------------------------------------------
# sampling


def circular_gaps(points):
    """Smallest distance mod 2 pi between any two entries of each row."""
    P = np.atleast_2d(points)
    d = np.abs(P[:, :, None] - P[:, None, :])
    d = np.minimum(d % (2 * np.pi), (-d) % (2 * np.pi))
    n = P.shape[1]
    d[:, np.arange(n), np.arange(n)] = np.inf
    return d.min(axis=(1, 2))


def sample_ordered(N, samples, rng, min_sep=MIN_SEPARATION):
    """Uniform points on the ordered sector -pi < x_1 < ... < x_N < pi, rejection for separation."""
    out = []
    while len(out) < samples:
        x = np.sort(rng.uniform(-np.pi, np.pi, N))
        if N == 1 or circular_gaps(x)[0] >= min_sep:
            out.append(x)
    return np.array(out)


def sample_pairs(N, samples, rng, min_sep=MIN_SEPARATION):
    """(x, y) pairs whose 2N coordinates are pairwise separated by min_sep (mod 2 pi)."""
    xs, ys = [], []
    while len(xs) < samples:
        x = np.sort(rng.uniform(-np.pi, np.pi, N))
        y = np.sort(rng.uniform(-np.pi, np.pi, N))
        if circular_gaps(np.concatenate([x, y]))[0] >= min_sep:
            xs.append(x)
            ys.append(y)
    return np.array(xs), np.array(ys)


# ---------------------------------------------------------------------------
# reports


@dataclass
class IdentityReport:
    max_abs_residual: float
    max_rel_residual: float
    sample_points: list
    method: str
    residuals: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    seed: int | None = None

    def to_dict(self):
        d = asdict(self)
        d["sample_points"] = [[list(map(float, x)), list(map(float, y))] for x, y in self.sample_points]
        return d

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


# ---------------------------------------------------------------------------
# the two-set identity


def _log_derivatives(x, y, lam, q):
    """First and second x- and y-derivatives of log F for one sample."""
    N = len(x)
    g = lambda r: log_b_derivative(r, q)
    gp = lambda r: -potential_V(r, q)
    dx = np.zeros(N)
    dy = np.zeros(N)
    dxx = np.zeros(N)
    dyy = np.zeros(N)
    for j in range(N):
        for k in range(N):
            if k != j:
                dx[j] += g(x[j] - x[k])
                dxx[j] += gp(x[j] - x[k])
                dy[j] += g(y[j] - y[k])
                dyy[j] += gp(y[j] - y[k])
            dx[j] -= g(x[j] - y[k])
            dxx[j] -= gp(x[j] - y[k])
            dy[j] += g(x[k] - y[j])
            dyy[j] -= gp(x[k] - y[j])
    return lam * dx, lam * dy, lam * dxx, lam * dyy


def _identity_rhs(x, y, lam, q):
    gamma = 2 * lam * (lam - 1)
    terms = [
        (weierstrass_p(x[j] - x[k], q), weierstrass_p(y[j] - y[k], q)) for j, k in pair_list(len(x))
    ]
    value = gamma * sum(a - b for a, b in terms)
    scale = abs(gamma) * sum(abs(a) + abs(b) for a, b in terms)
    return value, scale


def log_abs_F(x, y, lam, q):
    """log |F(x; y)| from theta1 (the phase is locally constant away from zeros)."""
    N = len(x)
    t = lambda u: np.log(np.abs(theta1(u, q)))
    s = 0.0
    for j, k in pair_list(N):
        s += t(0.5 * (x[k] - x[j])) + t(0.5 * (y[j] - y[k]))
    for j in range(N):
        for k in range(N):
            s -= t(0.5 * (x[j] - y[k]))
    return lam * s


FD_STENCIL = (np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0, np.array([-2, -1, 0, 1, 2]))


def _fd_lhs(x, y, lam, q, h):
    """sum_j (d^2/dx_j^2 - d^2/dy_j^2) F / F by fourth-order central differences of |F|."""
    w, offs = FD_STENCIL
    base = log_abs_F(x, y, lam, q)
    F = lambda xx, yy: np.exp(log_abs_F(xx, yy, lam, q) - base)
    total = 0.0
    scale = 0.0
    for j in range(len(x)):
        for which, sign in ((0, 1.0), (1, -1.0)):
            vals = []
            for o in offs:
                xx, yy = x.copy(), y.copy()
                (xx if which == 0 else yy)[j] += o * h
                vals.append(F(xx, yy))
            d2 = float(np.dot(w, vals)) / h**2
            total += sign * d2
            scale += abs(d2)
    return total, scale


def check_remarkable_identity(N, lam, q, samples=50, method="analytic", seed=0, h=1e-4):
    """Residual of sum_j (d_xj^2 - d_yj^2) F = 2 lam (lam-1) sum_{j<k} [wp(x_jk) - wp(y_jk)] F.

    Both sides are divided by F.  Relative residuals use the larger of the
    two sides' term magnitudes as scale.
    """
    if method not in ("analytic", "fd"):
        raise ValueError(f"unknown method {method!r}")
    lam = float(lam)
    rng = np.random.default_rng(seed)
    X, Y = sample_pairs(N, samples, rng)
    if circular_gaps(np.concatenate([X, Y], axis=1)).min() < MIN_SEPARATION:
        raise ValueError("degenerate sample")
    abs_res, rel_res = [], []
    for x, y in zip(X, Y):
        rhs, rscale = _identity_rhs(x, y, lam, q)
        if method == "analytic":
            dx, dy, dxx, dyy = _log_derivatives(x, y, lam, q)
            parts = np.concatenate([dx**2, dxx, -(dy**2), -dyy])
            # grouped so that the cancelling N = 1 terms cancel exactly
            lhs = float((np.sum(dx**2) - np.sum(dy**2)) + (np.sum(dxx) - np.sum(dyy)))
            lscale = float(np.sum(np.abs(parts)))
        else:
            lhs, lscale = _fd_lhs(x, y, lam, q, h)
        r = abs(lhs - rhs)
        abs_res.append(r)
        scale = max(lscale, rscale)
        rel_res.append(r / scale if scale > 0 else r)
    return IdentityReport(
        max_abs_residual=float(max(abs_res)),
        max_rel_residual=float(max(rel_res)),
        sample_points=list(zip(X, Y)),
        method=method,
        residuals=[float(v) for v in rel_res],
        params={"N": N, "lambda": lam, "q": q, "samples": samples},
        seed=seed,
    )


# ---------------------------------------------------------------------------
# zeta identity


def zeta_identity_residual(x, y, q):
    """[zeta(x) + zeta(y) + zeta(z)]^2 - [wp(x) + wp(y) + wp(z)] with z = -x - y."""
    z = -x - y
    s = weierstrass_zeta(x, q) + weierstrass_zeta(y, q) + weierstrass_zeta(z, q)
    p = weierstrass_p(x, q) + weierstrass_p(y, q) + weierstrass_p(z, q)
    return s * s - p


def _lattice_distance(r):
    r = np.asarray(r)
    return np.abs((r + np.pi) % (2 * np.pi) - np.pi)


def check_zeta_identity(q, samples=100, seed=0, min_dist=0.3):
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    while len(xs) < samples:
        x, y = rng.uniform(-np.pi, np.pi, 2)
        if min(_lattice_distance(x), _lattice_distance(y), _lattice_distance(x + y)) >= min_dist:
            xs.append(x)
            ys.append(y)
    xs, ys = np.array(xs), np.array(ys)
    res = np.abs(zeta_identity_residual(xs, ys, q))
    scale = np.abs(weierstrass_p(xs, q)) + np.abs(weierstrass_p(ys, q)) + np.abs(weierstrass_p(-xs - ys, q))
    return IdentityReport(
        max_abs_residual=float(res.max()),
        max_rel_residual=float((res / scale).max()),
        sample_points=[(np.array([x]), np.array([y])) for x, y in zip(xs, ys)],
        method="analytic",
        residuals=[float(v) for v in res],
        params={"q": q, "samples": samples},
        seed=seed,
    )


# ---------------------------------------------------------------------------
# eigen-residuals


@dataclass
class ResidualReport:
    q_values: list
    max_residual: list
    slope: float | None
    samples: int
    seed: int
    resampled: int = 0

    def to_dict(self):
        return asdict(self)


def eigen_residual(eigenfunction, energy, q_values, samples=20, seed=0, floor=1e-8):
    """Max over samples of |H psi - E(q) psi| / |psi| at each q, and the log-log slope in q.

    Points where |J| falls below ``floor`` times its median are redrawn.
    """
    N = eigenfunction.params.N
    rng = np.random.default_rng(seed)
    X = sample_ordered(N, samples, rng)
    resampled = 0
    J = np.abs(eigenfunction.jack.evaluate(X, max(q_values)))
    for _ in range(100):
        small = J < floor * np.median(J)
        if not small.any():
            break
        X[small] = sample_ordered(N, int(small.sum()), rng)
        resampled += int(small.sum())
        J = np.abs(eigenfunction.jack.evaluate(X, max(q_values)))
    maxima = []
    for q in q_values:
        E = energy(q) if callable(energy) else energy
        maxima.append(float(eigenfunction.relative_residual(X, q, E).max()))
    slope = None
    positive = [(q, r) for q, r in zip(q_values, maxima) if q > 0 and r > 0]
    if len(positive) >= 2:
        lq, lr = np.log([p[0] for p in positive]), np.log([p[1] for p in positive])
        slope = float(np.polyfit(lq, lr, 1)[0])
    return ResidualReport(list(map(float, q_values)), maxima, slope, samples, seed, resampled)


# ---------------------------------------------------------------------------
# two-particle Galerkin oracle


def _h1_and_derivative(r, q):
    """h(r) = g(r) - cot(r/2)/2 and h'(r) without the trigonometric singular parts."""
    h = np.zeros_like(r)
    hp = np.zeros_like(r)
    if q == 0:
        return h, hp
    s, c = np.sin(r), np.cos(r)
    for a in _nomes(q, 64):
        if a == 0.0:
            break
        d = 1 - 2 * a * c + a * a
        h += 2 * a * s / d
        hp += (2 * a * c * d - 4 * a * a * s * s) / (d * d)
    return h, hp


def ground_state_potential_coefficients(q, kmax, grid=4096):
    """Cosine coefficients w_k of W = g^2 + g' (regular at r = 0), from an FFT on a shifted grid.

    With g = cot(r/2)/2 + h, W = -1/4 + cot(r/2) h + h^2 + h'.
    """
    r = (np.arange(grid) + 0.5) * 2 * np.pi / grid
    h, hp = _h1_and_derivative(r, q)
    W = -0.25 + h / np.tan(r / 2) + h * h + hp
    F = np.fft.rfft(W) / grid
    F = F * np.exp(-1j * np.pi * np.arange(F.size) / grid)  # undo the half-cell shift
    w = 2 * F.real
    w[0] /= 2
    return w[: kmax + 1]


def galerkin_matrix(params: ModelParameters, total_momentum: int, cutoff: int):
    """Relative-coordinate operator for N = 2 in the basis cos(s r/2), s = K mod 2, conjugated by |b_0|^lam.

    psi = |b_0(r)|^lam u(r) e^{i (K + N lam)(x_1 + x_2)/2}, and on u the
    Hamiltonian acts as

        D u = -2 u'' - 4 lam g u' + [(K + 2 lam)^2/2 - 2 lam^2 W] u,   W = g^2 + g'.

    ``cutoff`` is the number of basis functions.
    """
    if params.N != 2:
        raise ValueError("the Galerkin oracle is implemented for N = 2")
    lam = float(params.lam)
    q = params.q
    K = total_momentum
    ss = [2 * i + (K % 2) for i in range(cutoff)]
    idx = {s: i for i, s in enumerate(ss)}
    D = np.zeros((cutoff, cutoff))
    smax = ss[-1]
    nmax = smax + 2
    fw, bw = fourier_weights(q, nmax)
    a = 2 * bw / np.arange(1, nmax + 1)  # sine coefficients of h: 2 s_n^2
    w = ground_state_potential_coefficients(q, smax)
    c0 = (K + 2 * lam) ** 2 / 2

    def add(s_out, col, v):
        i = idx.get(s_out)
        if i is not None:
            D[i, col] += v

    for col, s in enumerate(ss):
        add(s, col, s * s / 2 + c0)
        # -4 lam g u' with u' = -(s/2) sin(s r/2)
        coef = 2 * lam * s
        if s > 0:
            add(s, col, coef * 0.5)
            for sp in range(s - 2, -1, -2):
                add(sp, col, coef * (0.5 if sp == 0 else 1.0))
        for n in range(1, nmax + 1):
            v = coef * a[n - 1] / 2
            add(abs(s - 2 * n), col, v)
            add(s + 2 * n, col, -v)
        for k, wk in enumerate(w):
            v = -2 * lam**2 * wk
            if k == 0:
                add(s, col, v)
            else:
                add(abs(s - 2 * k), col, v / 2)
                add(s + 2 * k, col, v / 2)
    return D, ss


def galerkin_eigenvalues(params, total_momentum, cutoff):
    D, _ = galerkin_matrix(params, total_momentum, cutoff)
    ev = np.linalg.eigvals(D)
    return np.sort(ev.real), float(np.max(np.abs(ev.imag)))


def galerkin_oracle(params: ModelParameters, cutoff=40, total_momentum=0, levels=5, tol=1e-8):
    """Low-lying eigenvalues of the two-particle sector with the given total momentum.

    Raises `CutoffInsufficient` if they drift by more than ``tol`` between
    ``cutoff`` and ``cutoff + 8`` basis functions.
    """
    if params.N == 1:
        lam = float(params.lam)
        return np.sort([(m + lam / 2) ** 2 for m in range(-cutoff, cutoff + 1)])[:levels]
    levels = min(levels, cutoff)
    ev, _ = galerkin_eigenvalues(params, total_momentum, cutoff)
    ev2, _ = galerkin_eigenvalues(params, total_momentum, cutoff + 8)
    drift = float(np.max(np.abs(ev[:levels] - ev2[:levels])))
    if drift > tol:
        raise CutoffInsufficient(f"Galerkin eigenvalues drift by {drift:.3e} from cutoff {cutoff} to {cutoff + 8}")
    return ev[:levels]


def galerkin_drift(params, total_momentum, cutoff, levels=3):
    ev, _ = galerkin_eigenvalues(params, total_momentum, cutoff)
    ev2, _ = galerkin_eigenvalues(params, total_momentum, cutoff + 8)
    return float(np.max(np.abs(ev[:levels] - ev2[:levels])))


def galerkin_hermitian_form(params: ModelParameters, total_momentum: int, cutoff: int, grid=8192):
    """Symmetric stiffness and Gram matrices for the weight |b_0(r)|^{2 lam} on (0, 2 pi).

    S_st = int w [2 u_s' u_t' + ((K + 2 lam)^2/2 - 2 lam^2 W) u_s u_t],  G_st = int w u_s u_t.
    The generalized eigenvalues of (S, G) coincide with those of `galerkin_matrix`.
    """
    lam = float(params.lam)
    q = params.q
    K = total_momentum
    r = (np.arange(grid) + 0.5) * 2 * np.pi / grid
    wgt = np.abs(b_power(r, q, 1.0)) ** (2 * lam) * (2 * np.pi / grid)
    h, hp = _h1_and_derivative(r, q)
    W = -0.25 + h / np.tan(r / 2) + h * h + hp
    U = (K + 2 * lam) ** 2 / 2 - 2 * lam**2 * W
    ss = np.array([2 * i + (K % 2) for i in range(cutoff)])
    C = np.cos(np.outer(ss, r) / 2)
    dC = -(ss[:, None] / 2) * np.sin(np.outer(ss, r) / 2)
    S = 2 * (dC * wgt) @ dC.T + (C * (wgt * U)) @ C.T
    G = (C * wgt) @ C.T
    return S, G


def galerkin_hermitian_eigenvalues(params, total_momentum, cutoff, grid=8192):
    S, G = galerkin_hermitian_form(params, total_momentum, cutoff, grid)
    return scipy.linalg.eigh(S, G, eigvals_only=True)


# ---------------------------------------------------------------------------
# trigonometric Jack oracle


def partitions(total, parts):
    """Partitions of ``total`` into at most ``parts`` parts, padded with zeros, in reverse lexicographic order."""

    def rec(rest, maxpart, k):
        if k == 0:
            if rest == 0:
                yield ()
            return
        for p in range(min(rest, maxpart), -1, -1):
            for tail in rec(rest - p, p, k - 1):
                yield (p,) + tail

    return list(rec(total, total, parts))


def _monomial_terms(kappa):
    return set(itertools.permutations(kappa))


def _sutherland_action(kappa, lam):
    """The operator sum_j D_j^2 + lam sum_{j<k} (z_j+z_k)/(z_j-z_k) (D_j - D_k) on m_kappa."""
    N = len(kappa)
    out = defaultdict(float)
    terms = _monomial_terms(kappa)
    for a in terms:
        out[a] += sum(v * v for v in a)
    for j, k in pair_list(N):
        for a in terms:
            d = a[j] - a[k]
            if d <= 0:
                continue
            # (z_j + z_k) (z_j z_k)^{a_k} h_{d-1}(z_j, z_k) times lam d
            for i in range(d):
                for extra in ((1, 0), (0, 1)):
                    e = list(a)
                    e[j] = a[k] + i + extra[0]
                    e[k] = a[k] + (d - 1 - i) + extra[1]
                    out[tuple(e)] += lam * d
    return out


def sutherland_jack_oracle(kappa, lam):
    """Jack polynomial for partition kappa as {sorted exponent: coefficient}, coefficient of m_kappa = 1.

    Diagonalises the trigonometric Sutherland operator on the symmetric
    monomials of degree |kappa| in len(kappa) variables.  The operator is
    triangular in dominance order, so the wanted eigenvalue is its diagonal
    entry at kappa.
    """
    kappa = tuple(kappa)
    lam = float(lam)
    basis = partitions(sum(kappa), len(kappa))
    index = {p: i for i, p in enumerate(basis)}
    A = np.zeros((len(basis), len(basis)))
    for col, p in enumerate(basis):
        for e, v in _sutherland_action(p, lam).items():
            if tuple(sorted(e, reverse=True)) == e:
                A[index[e], col] += v
    target = A[index[kappa], index[kappa]]
    ev, vec = np.linalg.eig(A)
    i = int(np.argmin(np.abs(ev - target)))
    v = vec[:, i].real
    v = v / v[index[kappa]]
    return {p: float(v[index[p]]) for p in basis}, float(ev[i].real)


def compare_with_jack(jack_terms: dict, kappa, lam):
    """Max relative deviation between the coefficients of a symmetric polynomial and the Jack polynomial, up to one constant."""
    ref, _ = sutherland_jack_oracle(kappa, lam)
    lead = complex(jack_terms.get(tuple(kappa), 0))
    if lead == 0:
        return np.inf
    err = 0.0
    scale = max(abs(v) for v in ref.values())
    keys = set(ref) | {e for e in jack_terms if tuple(sorted(e, reverse=True)) == e}
    for p in keys:
        mine = complex(jack_terms.get(p, 0)) / lead
        err = max(err, abs(mine - ref.get(p, 0.0)) / scale)
    return err


# ---------------------------------------------------------------------------
# quadrature of the plane-wave integral at q = 0


def plane_wave_quadrature(x, n, lam, eps, points=2048):
    """Trapezoid quadrature of the regularised y-integral at q = 0 for N = 2, regulator eps on every factor."""
    lam = float(lam)
    y = np.arange(points) * 2 * np.pi / points
    y1, y2 = np.meshgrid(y, y, indexing="ij")
    bcheck = lambda r: 1 - np.exp(1j * r - 2 * eps)
    num = bcheck(y1 - y2) ** lam
    den = 1.0
    for xj in x:
        for yk in (y1, y2):
            den = den * bcheck(xj - yk) ** lam
    integrand = np.exp(1j * (n[0] * y1 + n[1] * y2)) * num / den
    return integrand.mean()


def plane_wave_extrapolated(x, n, lam, degree, eps_values=None, points=2048):
    """Extrapolate the regularised integral to eps = 0.

    At q = 0 it is a polynomial of known maximal degree in t = exp(-2 eps);
    fit it over several eps and evaluate at t = 1.
    """
    if eps_values is None:
        eps_values = np.linspace(0.02, 0.05, degree + 3)
    t = np.exp(-2 * np.asarray(eps_values))
    vals = np.array([plane_wave_quadrature(x, n, lam, e, points) for e in eps_values])
    re = np.polyval(np.polyfit(t, vals.real, degree), 1.0)
    im = np.polyval(np.polyfit(t, vals.imag, degree), 1.0)
    return re + 1j * im
