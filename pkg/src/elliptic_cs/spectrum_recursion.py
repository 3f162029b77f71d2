"""Mode vectors, resonance bookkeeping and the triangular q^2 recursion.

The eigenfunction is sought as sum_l q^{2l} sum_mu alpha_l(mu) F(n + mu) where
mu = sum_{j<k} mu_jk E_jk runs over pair-shift vectors.  Coefficients obey

    alpha_l(mu) [E0(n+mu) - E0(n)] = sum_{m=1}^{l} E_m alpha_{l-m}(mu)
        + gamma sum_{j<k} sum_{p>=1} p alpha_l(mu - p e_jk)
        + gamma sum_{j<k} sum_{p s <= l} p [alpha_{l-ps}(mu - p e_jk) + alpha_{l-ps}(mu + p e_jk)]

with alpha_l(mu) = 0 as soon as some mu_jk < -l.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

from .elliptic_core import ModelParameters, QSeries
from .errors import ResonanceObstruction, WindowOverflow
from .series_algebra import scalar_to_json

RESONANCE_RTOL = 1e-9


# ---------------------------------------------------------------------------
# lattice vectors


@dataclass(frozen=True)
class ModeVector:
    n: tuple

    def __post_init__(self):
        object.__setattr__(self, "n", tuple(int(v) for v in self.n))

    @classmethod
    def parse(cls, text: str) -> "ModeVector":
        return cls(tuple(int(t) for t in text.replace(" ", "").split(",") if t))

    @property
    def N(self) -> int:
        return len(self.n)

    @property
    def highest_weight(self) -> bool:
        return all(a >= b for a, b in zip(self.n, self.n[1:])) and (not self.n or self.n[-1] >= 0)

    def __iter__(self):
        return iter(self.n)

    def __len__(self):
        return len(self.n)

    def __getitem__(self, i):
        return self.n[i]

    def __add__(self, shift):
        return ModeVector(tuple(a + b for a, b in zip(self.n, shift)))


def as_modes(n) -> tuple:
    return tuple(n.n) if isinstance(n, ModeVector) else tuple(int(v) for v in n)


def pair_list(N):
    return [(j, k) for j in range(N) for k in range(j + 1, N)]


@dataclass(frozen=True)
class MuVector:
    """Integer pair shifts mu_jk, j < k, in lexicographic pair order."""

    N: int
    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(int(v) for v in self.entries))
        if len(self.entries) != self.N * (self.N - 1) // 2:
            raise ValueError(f"expected {self.N * (self.N - 1) // 2} pair entries, got {len(self.entries)}")

    @classmethod
    def zero(cls, N):
        return cls(N, (0,) * (N * (N - 1) // 2))

    @classmethod
    def from_pairs(cls, N, mapping):
        return cls(N, tuple(mapping.get(p, 0) for p in pair_list(N)))

    def __getitem__(self, pair):
        return self.entries[pair_list(self.N).index(tuple(pair))]

    def mode_shift(self) -> tuple:
        return mode_shift(self.entries, self.N)

    def __le__(self, other):
        return all(a <= b for a, b in zip(self.entries, other.entries))

    def __lt__(self, other):
        return self <= other and self != other


def mode_shift(mu, N) -> tuple:
    """The N-vector sum_{j<k} mu_jk (e_j - e_k)."""
    v = [0] * N
    for (j, k), m in zip(pair_list(N), mu):
        v[j] += m
        v[k] -= m
    return tuple(v)


def precedes(a, b) -> bool:
    """Strict partial order on (l, mu): l' < l, or l' = l and mu' <= mu with mu' != mu."""
    (l1, m1), (l2, m2) = a, b
    if l1 != l2:
        return l1 < l2
    return m1 != m2 and all(x <= y for x, y in zip(m1, m2))


# ---------------------------------------------------------------------------
# energies and resonances


def quasi_momenta(n, lam) -> tuple:
    """P_j = n_j + (N - j + 1/2) lam with 1-based j."""
    n = as_modes(n)
    N = len(n)
    half = Fraction(1, 2) if isinstance(lam, (int, Fraction)) else 0.5
    return tuple(nj + (N - j + half) * lam for j, nj in enumerate(n, start=1))


def sutherland_momenta(n, lam) -> tuple:
    """Quasi-momenta with the centre of mass removed: n_j + lam (N + 1 - 2j)/2."""
    N = len(as_modes(n))
    shift = lam * N / 2 if not isinstance(lam, (int, Fraction)) else Fraction(lam) * N / 2
    return tuple(p - shift for p in quasi_momenta(n, lam))


def energy_zero(n, lam):
    return sum(p * p for p in quasi_momenta(n, lam))


def resonance_factor(n, mu, lam=None) -> tuple[int, int]:
    """Integers (A, B) with E0(n + mu) - E0(n) = A + B lam."""
    n = as_modes(n)
    N = len(n)
    mu = mu.entries if isinstance(mu, MuVector) else tuple(mu)
    v = mode_shift(mu, N)
    A = 2 * sum(m * (n[j] - n[k]) for (j, k), m in zip(pair_list(N), mu)) + sum(x * x for x in v)
    B = 2 * sum(m * (k - j) for (j, k), m in zip(pair_list(N), mu))
    return A, B


def is_resonant(A: int, B: int, lam) -> bool:
    """Exact test of A + B lam = 0.

    A ``Fraction`` lam counts as declared rational.  A float lam counts as
    declared irrational, so only A = B = 0 resonates; if A + B lam nevertheless
    vanishes numerically the declaration is inconsistent and ValueError is
    raised.
    """
    if isinstance(lam, (int, Fraction)):
        lam = Fraction(lam)
        return A * lam.denominator + B * lam.numerator == 0
    if A == 0 and B == 0:
        return True
    if abs(A + B * lam) <= 1e-9 * (abs(A) + abs(B) * abs(lam)):
        raise ValueError(
            f"A + B*lambda = {A} + {B}*{lam} vanishes numerically but lambda is declared "
            "irrational; pass it as a fraction p/s"
        )
    return False


def count_resonances(n, lam, window) -> list:
    """All mu != 0 in the box [lo, hi]^{pairs} with a resonant denominator."""
    N = len(as_modes(n))
    lo, hi = window
    found = []
    for mu in itertools.product(range(lo, hi + 1), repeat=N * (N - 1) // 2):
        if any(mu):
            A, B = resonance_factor(n, mu)
            if is_resonant(A, B, lam):
                found.append(mu)
    return found


# ---------------------------------------------------------------------------
# the recursion


def suffix_sums(n) -> tuple:
    """S_c = n_c + ... + n_{N-1} for cuts c = 1..N-1 (0-based)."""
    n = as_modes(n)
    return tuple(sum(n[c:]) for c in range(1, len(n)))


def _crossing(N):
    """For each cut c, the pair indices (j, k) with j < c <= k."""
    pairs = pair_list(N)
    return [[i for i, (j, k) in enumerate(pairs) if j < c <= k] for c in range(1, N)]


def window_sites(n, l, M) -> list:
    """Sites solved at order l.

    mu_jk >= -l, and for every cut c the pair shifts crossing it sum to at most
    S_c + M - l.  The region is closed under all reads of the recursion and,
    for M >= L, contains every mu whose shifted mode can carry a nonzero
    plane-wave polynomial at the orders still needed.
    """
    n = as_modes(n)
    N = len(n)
    P = N * (N - 1) // 2
    if P == 0:
        return [()]
    cuts = _crossing(N)
    bounds = [S + M - l for S in suffix_sums(n)]
    upper = []
    for i in range(P):
        ub = min(bounds[c] + (len(cuts[c]) - 1) * l for c in range(N - 1) if i in cuts[c])
        upper.append(ub)
    sites = []
    for mu in itertools.product(*(range(-l, ub + 1) for ub in upper)):
        if all(sum(mu[i] for i in cuts[c]) <= bounds[c] for c in range(N - 1)):
            sites.append(mu)
    return sites


def in_window(n, l, M, mu) -> bool:
    N = len(as_modes(n))
    if any(m < -l for m in mu):
        return False
    cuts = _crossing(N)
    return all(sum(mu[i] for i in cuts[c]) <= S + M - l for c, S in enumerate(suffix_sums(n)))


def default_schedule(l, sites):
    """Sites with a negative entry first, then the rest; each block by entry sum, then lexicographic."""
    return sorted(sites, key=lambda mu: (all(m >= 0 for m in mu), sum(mu), mu))


@dataclass
class SpectralSolution:
    params: ModelParameters
    n: tuple
    L: int
    M: int
    alpha: dict
    energy: QSeries
    resonances: list = field(default_factory=list)
    trace: dict | None = None
    visit_order: list = field(default_factory=list)
    alpha0: object = 1

    @property
    def complete(self) -> bool:
        """False when some resonance constraint was recorded as violated."""
        return all(r["status"] != "violated" for r in self.resonances)

    @property
    def N(self):
        return self.params.N

    def energy_value(self, q) -> float:
        return self.energy(q)

    def alpha_series(self, mu) -> QSeries:
        mu = tuple(mu)
        return QSeries(self.alpha.get((l, mu), 0) for l in range(self.L + 1))

    def sites(self) -> set:
        return {mu for (_, mu) in self.alpha}

    def fiber_series(self) -> dict:
        """Sum of alpha over pair shifts with the same mode shift, as QSeries keyed by the shift."""
        acc = defaultdict(lambda: [0] * (self.L + 1))
        for (l, mu), a in self.alpha.items():
            if a != 0:
                acc[mode_shift(mu, self.N)][l] += a
        return {v: QSeries(row) for v, row in sorted(acc.items()) if any(x != 0 for x in row)}

    def support_violations(self) -> list:
        return [(l, mu) for (l, mu), a in self.alpha.items() if a != 0 and any(m < -l for m in mu)]

    def to_dict(self) -> dict:
        return {
            "params": {
                "N": self.params.N,
                "lambda": scalar_to_json(self.params.lam),
                "lambda_declared": "rational" if self.params.exact else "irrational",
                "gamma": scalar_to_json(self.params.gamma),
            },
            "n": list(self.n),
            "L": self.L,
            "M": self.M,
            "alpha0": scalar_to_json(self.alpha0),
            "energy": [scalar_to_json(c) for c in self.energy.coeffs],
            "alpha": [
                {"l": l, "mu": list(mu), "value": scalar_to_json(a)}
                for (l, mu), a in sorted(self.alpha.items())
                if a != 0
            ],
            "complete": self.complete,
            "resonances": [
                {
                    "l": r["l"],
                    "mu": list(r["mu"]),
                    "status": r["status"],
                    "residual": scalar_to_json(r["residual"]),
                }
                for r in self.resonances
            ],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["l"] + [f"mu_{j + 1}{k + 1}" for j, k in pair_list(self.N)] + ["value"])
        for (l, mu), a in sorted(self.alpha.items()):
            if a != 0:
                w.writerow([l, *mu, scalar_to_json(a)])
        return buf.getvalue()


def solve_recursion(
    params: ModelParameters,
    n,
    L: int,
    M: int | None = None,
    alpha0=1,
    trace: bool = False,
    schedule=None,
    resonance_policy: str = "fiber",
    on_obstruction: str = "raise",
) -> SpectralSolution:
    """Forward substitution of the recursion through order L.

    ``M`` is the slack of the site window above the suffix-sum bound (default
    and minimum L).  ``resonance_policy`` is ``"fiber"`` (default) or
    ``"strict"``.  Pair shifts with the same mode shift multiply the same
    plane-wave function, so under ``"fiber"`` a resonant constraint only has
    to hold summed over such a fiber; the fiber of the zero shift fixes the
    energy.  ``"strict"`` demands every site's constraint separately.

    A violated constraint raises `ResonanceObstruction`; with
    ``on_obstruction="record"`` it is logged with status ``"violated"`` and
    the solution is marked incomplete instead.
    """
    n = as_modes(n)
    N = params.N
    if len(n) != N:
        raise ValueError(f"mode vector {n} has length {len(n)}, expected N={N}")
    if L < 0:
        raise ValueError("L must be non-negative")
    if M is None:
        M = L
    if M < L:
        raise ValueError(f"window slack M={M} must be at least L={L}")
    if resonance_policy not in ("fiber", "strict"):
        raise ValueError(f"unknown resonance policy {resonance_policy!r}")
    if on_obstruction not in ("raise", "record"):
        raise ValueError(f"unknown obstruction handling {on_obstruction!r}")
    exact = params.exact
    lam = params.lam
    gamma = params.gamma
    if exact:
        alpha0 = Fraction(alpha0)
    else:
        alpha0 = float(alpha0)
        gamma = float(gamma)
    zero = Fraction(0) if exact else 0.0
    P = N * (N - 1) // 2
    units = [tuple(1 if i == a else 0 for i in range(P)) for a in range(P)]
    E0 = energy_zero(n, lam)
    energies = [E0] + [None] * L
    alpha = {}
    visit = {}
    deps = {} if trace else None
    resonances = []
    order = []
    schedule = schedule or default_schedule
    kernel_index = {}

    def read(l, mu, reads):
        if any(m < -l for m in mu):
            return zero
        key = (l, mu)
        if reads is not None:
            reads.append(key)
        if key in alpha:
            return alpha[key]
        if not in_window(n, l, M, mu):
            raise WindowOverflow(f"recursion read alpha_{l}{mu} outside the site window (M={M})")
        return zero  # not yet visited; recorded for the audit

    def shifted(mu, a, p):
        return tuple(m + p if i == a else m for i, m in enumerate(mu))

    def rhs(l, mu, reads):
        """Right-hand side without the E_l alpha_0(mu) term, plus the scale of its terms."""
        total, scale = zero, 0.0
        for m in range(1, l):
            a = read(l - m, mu, reads)
            if a != 0:
                t = energies[m] * a
                total += t
                scale += abs(float(t))
        hop = zero
        for a in range(P):
            for p in range(1, mu[a] + l + 1):
                v = read(l, shifted(mu, a, -p), reads)
                if v != 0:
                    hop += p * v
            for p in range(1, l + 1):
                for s in range(1, l // p + 1):
                    lo = l - p * s
                    v = read(lo, shifted(mu, a, -p), reads) + read(lo, shifted(mu, a, p), reads)
                    if v != 0:
                        hop += p * v
        t = gamma * hop
        total += t
        scale += abs(float(t))
        return total, scale

    def satisfied(value, scale):
        if exact:
            return value == 0
        return abs(value) <= RESONANCE_RTOL * max(scale, 1e-300)

    for l in range(L + 1):
        sites = window_sites(n, l, M)
        pending = defaultdict(list)  # mode shift -> [(mu, residual, scale)]
        for mu in schedule(l, sites):
            reads = [] if trace else None
            key = (l, mu)
            if not any(mu):
                if l == 0:
                    value = alpha0
                else:
                    total, scale = rhs(l, mu, reads)
                    fiber = [total]
                    if resonance_policy == "fiber":
                        fiber += [r for (_, r, _) in pending.get((0,) * N, [])]
                    energies[l] = -sum(fiber, zero) / alpha0
                    value = zero
            else:
                total, scale = rhs(l, mu, reads)
                if l > 0 and all(m >= 0 for m in mu):
                    a = read(0, mu, reads)
                    if energies[l] is None:
                        if reads is not None:
                            reads.append(("E", l))
                    elif a != 0:
                        t = energies[l] * a
                        total += t
                        scale += abs(float(t))
                A, B = resonance_factor(n, mu)
                if is_resonant(A, B, lam):
                    v = mode_shift(mu, N)
                    pending[v].append((mu, total, scale))
                    value = zero
                else:
                    value = total / (A + B * lam)
            alpha[key] = value
            visit[key] = len(order)
            order.append(key)
            if trace:
                deps[key] = reads
        # resonant constraints, checked per fiber of equal mode shift
        for v, members in sorted(pending.items()):
            fiber_sum = sum((r for (_, r, _) in members), zero)
            fiber_ok = satisfied(fiber_sum, sum(s for (_, _, s) in members))
            for mu, r, s in members:
                if satisfied(r, s):
                    status = "satisfied"
                elif resonance_policy == "fiber" and not any(v):
                    status = "energy-fiber"
                elif resonance_policy == "fiber" and fiber_ok:
                    status = "fiber"
                elif on_obstruction == "raise":
                    raise ResonanceObstruction(l, mu, fiber_sum if resonance_policy == "fiber" else r)
                else:
                    status = "violated"
                resonances.append({"l": l, "mu": mu, "status": status, "residual": r, "shift": v})

    sol = SpectralSolution(
        params=params,
        n=n,
        L=L,
        M=M,
        alpha={k: a for k, a in alpha.items()},
        energy=QSeries(energies),
        resonances=resonances,
        trace={"deps": deps, "visit": visit} if trace else None,
        visit_order=order,
        alpha0=alpha0,
    )
    bad = sol.support_violations()
    if bad:
        raise AssertionError(f"support restriction violated at {bad[:3]}")
    return sol


# ---------------------------------------------------------------------------
# audits


@dataclass
class AuditReport:
    checked: int
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def dependency_audit(solution: SpectralSolution) -> AuditReport:
    """Check that every coefficient read only strictly smaller, already computed entries."""
    if solution.trace is None:
        raise ValueError("solve with trace=True to audit dependencies")
    deps, visit = solution.trace["deps"], solution.trace["visit"]
    violations = []
    for key, reads in deps.items():
        for r in reads:
            if r[0] == "E":
                violations.append((key, r, "energy used before it was determined"))
                continue
            if not precedes(r, key):
                violations.append((key, r, "not smaller in the partial order"))
            elif r not in visit or visit[r] >= visit[key]:
                violations.append((key, r, "read before it was computed"))
    return AuditReport(len(deps), violations)


def divisor_sum(l: int) -> int:
    """sum_{p=1}^{l} floor(l/p): the number of (p, s) with p s <= l."""
    return sum(l // p for p in range(1, l + 1))


def dependency_bound(l: int, mu) -> int:
    """Upper bound on the number of reads made for site (l, mu)."""
    P = len(mu)
    return l + sum(m + l for m in mu) + 2 * P * divisor_sum(l)


def window_convergence(params, n, L, M=None, extra=2) -> dict:
    """Re-solve with a wider site window and report the changes."""
    base = solve_recursion(params, n, L, M)
    wide = solve_recursion(params, n, L, base.M + extra)
    de = max(abs(float(a - b)) for a, b in zip(base.energy.coeffs, wide.energy.coeffs))
    da = max(
        (abs(float(a - wide.alpha.get(k, 0))) for k, a in base.alpha.items()),
        default=0.0,
    )
    return {"M": base.M, "M_wide": wide.M, "energy_change": de, "alpha_change": da}
