"""Command-line entry point.

    python3 -m elliptic_cs solve --N 2 --lambda 2 --n 1,0 --L 3
    python3 -m elliptic_cs verify-zeta --q 0.2 --samples 100 --seed 7

Settings come from flags, then a flat ``key=value`` file given by
``--config``, then defaults.  Results are JSON (or CSV) on stdout or in
``--out``; a one-line summary goes to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from .elliptic_core import ModelParameters, as_lambda
from .errors import ConfigError, CutoffInsufficient, ResonanceObstruction, WindowOverflow
from .series_algebra import scalar_to_json
from .spectrum_recursion import ModeVector, dependency_audit, solve_recursion
from .verification import (
    check_remarkable_identity,
    check_zeta_identity,
    compare_with_jack,
    eigen_residual,
    galerkin_eigenvalues,
    galerkin_drift,
)
from .wavefunction import assemble_eigenfunction

COMMANDS = ("solve", "jack", "verify-identity", "verify-zeta", "verify-eigen", "oracle-compare")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_RESONANCE = 3
EXIT_CUTOFF = 4
EXIT_WINDOW = 5

DEFAULTS = {
    "N": "2",
    "lambda": "2",
    "q": "0",
    "n": None,
    "L": "3",
    "M": None,
    "K": None,
    "samples": None,
    "seed": "0",
    "method": None,
    "out": None,
    "format": "json",
}

DEFAULT_SAMPLES = {"verify-identity": 50, "verify-zeta": 100, "verify-eigen": 20}
DEFAULT_METHOD = {"verify-identity": "fd"}

THRESHOLDS = {
    ("verify-identity", "analytic"): 1e-8,
    ("verify-identity", "fd"): 1e-6,
    "verify-zeta": 1e-10,
    "oracle-compare": 1e-6,
}


@dataclass
class JobConfig:
    command: str
    params: ModelParameters
    n: tuple
    L: int
    M: int | None
    K: int | None
    lambda_declared: str
    seed: int
    samples: int
    method: str
    output_path: str | None
    format: str
    raw: dict = field(default_factory=dict)

    def echo(self) -> dict:
        """The resolved settings, for provenance."""
        return {
            "command": self.command,
            "N": self.params.N,
            "lambda": scalar_to_json(self.params.lam),
            "lambda_declared": self.lambda_declared,
            "q": self.params.q,
            "n": list(self.n),
            "L": self.L,
            "M": self.M,
            "K": self.K,
            "samples": self.samples,
            "seed": self.seed,
            "method": self.method,
            "format": self.format,
        }


def read_config_file(path) -> dict:
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}", "expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in DEFAULTS:
                raise ConfigError(key, f"unknown configuration key in {path}")
            values[key] = value
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="elliptic_cs", description="Series solutions of the elliptic Calogero-Sutherland model")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key=value file; flags override it")
        p.add_argument("--N", dest="N")
        p.add_argument("--lambda", dest="lambda", help="decimal (irrational) or p/s (rational)")
        p.add_argument("--q", dest="q")
        p.add_argument("--n", dest="n", help="comma-separated mode vector")
        p.add_argument("--L", dest="L")
        p.add_argument("--M", dest="M")
        p.add_argument("--K", dest="K")
        p.add_argument("--samples", dest="samples")
        p.add_argument("--seed", dest="seed")
        p.add_argument("--method", dest="method")
        p.add_argument("--out", dest="out")
        p.add_argument("--format", dest="format")
    return parser


def _int(field_name, text, minimum=None):
    try:
        value = int(text)
    except (TypeError, ValueError):
        raise ConfigError(field_name, f"expected an integer, got {text!r}") from None
    if minimum is not None and value < minimum:
        raise ConfigError(field_name, f"must be at least {minimum}, got {value}")
    return value


def config_parse(argv) -> JobConfig:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    path = args.pop("config")
    merged = dict(DEFAULTS)
    if path:
        merged.update(read_config_file(path))
    merged.update({k: v for k, v in args.items() if v is not None})

    N = _int("N", merged["N"], 1)
    lam_text = merged["lambda"]
    if lam_text is None or not str(lam_text).strip():
        raise ConfigError("lambda", "empty value for --lambda")
    try:
        lam = as_lambda(str(lam_text))
    except (ValueError, ZeroDivisionError):
        raise ConfigError("lambda", f"cannot parse {lam_text!r}") from None
    if not lam > 0:
        raise ConfigError("lambda", f"must be positive, got {lam_text}")
    try:
        q = float(merged["q"])
    except ValueError:
        raise ConfigError("q", f"cannot parse {merged['q']!r}") from None
    if not 0 <= q < 1:
        raise ConfigError("q", f"must lie in [0, 1), got {q}")
    if merged["n"] is None:
        n = (0,) * N
    else:
        try:
            n = ModeVector.parse(str(merged["n"])).n
        except ValueError:
            raise ConfigError("n", f"cannot parse {merged['n']!r}") from None
        if len(n) != N:
            raise ConfigError("n", f"has {len(n)} entries but N={N}")
    L = _int("L", merged["L"], 0)
    M = None if merged["M"] is None else _int("M", merged["M"], L)
    K = None if merged["K"] is None else _int("K", merged["K"], 1)
    seed = _int("seed", merged["seed"])
    samples = _int("samples", merged["samples"] or DEFAULT_SAMPLES.get(command, 20), 1)
    method = merged["method"] or DEFAULT_METHOD.get(command, "analytic")
    if method not in ("analytic", "fd"):
        raise ConfigError("method", f"must be analytic or fd, got {method!r}")
    fmt = merged["format"]
    if fmt not in ("json", "csv"):
        raise ConfigError("format", f"must be json or csv, got {fmt!r}")
    declared = "rational" if isinstance(lam, Fraction) else "irrational"
    return JobConfig(
        command=command,
        params=ModelParameters(N, lam, q),
        n=n,
        L=L,
        M=M,
        K=K,
        lambda_declared=declared,
        seed=seed,
        samples=samples,
        method=method,
        output_path=merged["out"],
        format=fmt,
        raw=merged,
    )


# ---------------------------------------------------------------------------
# workflows; each returns (passed, result dict, csv rows, summary line)


def _solve(cfg):
    sol = solve_recursion(cfg.params.with_q(0.0), cfg.n, cfg.L, cfg.M, trace=True)
    audit = dependency_audit(sol)
    result = sol.to_dict()
    result["audit"] = {"checked": audit.checked, "violations": len(audit.violations)}
    if cfg.params.q > 0:
        result["energy_at_q"] = sol.energy(cfg.params.q)
    rows = list(csv.reader(io.StringIO(sol.to_csv())))
    summary = f"energy series {[scalar_to_json(c) for c in sol.energy.coeffs]}"
    return audit.ok and sol.complete, result, rows, summary


def _jack(cfg):
    sol = solve_recursion(cfg.params.with_q(0.0), cfg.n, cfg.L, cfg.M)
    jack, _ = assemble_eigenfunction(sol, K=cfg.K)
    result = jack.to_dict()
    result["energy"] = [scalar_to_json(c) for c in sol.energy.coeffs]
    rows = [[f"e{j + 1}" for j in range(cfg.params.N)] + [f"q2^{l}" for l in range(cfg.L + 1)]]
    rows += [[*e, *(scalar_to_json(v) for v in c.coeffs)] for e, c in jack.coefficients]
    return jack.is_symmetric(), result, rows, f"{len(jack.coefficients)} terms, symmetric={jack.is_symmetric()}"


def _verify_identity(cfg):
    rep = check_remarkable_identity(
        cfg.params.N, float(cfg.params.lam), cfg.params.q, cfg.samples, cfg.method, cfg.seed
    )
    tol = THRESHOLDS[("verify-identity", cfg.method)]
    result = rep.to_dict()
    result["tolerance"] = tol
    rows = [["sample", "relative_residual"]] + [[i, r] for i, r in enumerate(rep.residuals)]
    return rep.max_rel_residual < tol, result, rows, f"max relative residual {rep.max_rel_residual:.3e} ({cfg.method})"


def _verify_zeta(cfg):
    rep = check_zeta_identity(cfg.params.q, cfg.samples, cfg.seed)
    tol = THRESHOLDS["verify-zeta"]
    result = rep.to_dict()
    result["tolerance"] = tol
    rows = [["sample", "abs_residual"]] + [[i, r] for i, r in enumerate(rep.residuals)]
    return rep.max_abs_residual < tol, result, rows, f"max absolute residual {rep.max_abs_residual:.3e}"


def _verify_eigen(cfg):
    sol = solve_recursion(cfg.params.with_q(0.0), cfg.n, cfg.L, cfg.M)
    _, ef = assemble_eigenfunction(sol, K=cfg.K)
    qs = [cfg.params.q] if cfg.params.q > 0 else [0.05, 0.1, 0.15, 0.2]
    rep = eigen_residual(ef, sol.energy, qs, cfg.samples, cfg.seed)
    target = 2 * (cfg.L + 1) - 0.5
    passed = rep.slope is None or rep.slope >= target
    result = rep.to_dict()
    result["slope_target"] = target
    rows = [["q", "max_residual"]] + [[q, r] for q, r in zip(rep.q_values, rep.max_residual)]
    return passed, result, rows, f"max residuals {['%.2e' % r for r in rep.max_residual]}, slope {rep.slope}"


def _oracle_compare(cfg):
    sol = solve_recursion(cfg.params.with_q(0.0), cfg.n, cfg.L, cfg.M)
    tol = THRESHOLDS["oracle-compare"]
    if cfg.params.q == 0:
        jack, _ = assemble_eigenfunction(sol, K=cfg.K)
        err = compare_with_jack(jack.order(0), cfg.n, float(cfg.params.lam))
        result = {"oracle": "jack", "max_relative_deviation": err}
        return err < 1e-9, result, [["oracle", "deviation"], ["jack", err]], f"Jack deviation {err:.3e}"
    if cfg.params.N != 2:
        raise ConfigError("N", "the Galerkin oracle needs N = 2 when q > 0")
    cutoff = cfg.K or 40
    K = sum(cfg.n)
    ev, _ = galerkin_eigenvalues(cfg.params, K, cutoff)
    drift = galerkin_drift(cfg.params, K, cutoff)
    if drift > 1e-8:
        raise CutoffInsufficient(f"Galerkin eigenvalues drift by {drift:.3e} at cutoff {cutoff}")
    E = sol.energy(cfg.params.q)
    nearest = float(ev[np.argmin(np.abs(ev - E))])
    diff = abs(nearest - E)
    result = {
        "oracle": "galerkin",
        "series_energy": E,
        "galerkin_energy": nearest,
        "difference": diff,
        "drift": drift,
        "cutoff": cutoff,
    }
    rows = [["series_energy", "galerkin_energy", "difference"], [E, nearest, diff]]
    return diff < tol, result, rows, f"series {E:.10f} vs Galerkin {nearest:.10f}"


WORKFLOWS = {
    "solve": _solve,
    "jack": _jack,
    "verify-identity": _verify_identity,
    "verify-zeta": _verify_zeta,
    "verify-eigen": _verify_eigen,
    "oracle-compare": _oracle_compare,
}


def _render(cfg, passed, result, rows) -> str:
    provenance = {"version": __version__, "config": cfg.echo()}
    if cfg.format == "json":
        doc = {"provenance": provenance, "passed": passed, "result": result}
        return json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"
    buf = io.StringIO()
    for key, value in sorted(provenance["config"].items()):
        buf.write(f"# {key}={value}\n")
    buf.write(f"# version={__version__}\n# passed={passed}\n")
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Fraction):
        return str(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def run(cfg: JobConfig) -> int:
    passed, result, rows, summary = WORKFLOWS[cfg.command](cfg)
    text = _render(cfg, passed, result, rows)
    if cfg.output_path:
        with open(cfg.output_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"{cfg.command}: {summary} [{'ok' if passed else 'FAILED'}]", file=sys.stderr)
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def main(argv=None) -> int:
    try:
        cfg = config_parse(sys.argv[1:] if argv is None else argv)
        return run(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResonanceObstruction as exc:
        print(f"resonance obstruction: {exc}", file=sys.stderr)
        return EXIT_RESONANCE
    except CutoffInsufficient as exc:
        print(f"cutoff insufficient: {exc}", file=sys.stderr)
        return EXIT_CUTOFF
    except WindowOverflow as exc:
        print(f"window overflow: {exc}", file=sys.stderr)
        return EXIT_WINDOW
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
