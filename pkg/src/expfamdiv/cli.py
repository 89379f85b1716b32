"""Command-line front end.

Subcommands::

    expfamdiv div     closed-form divergence, optionally checked by quadrature
    expfamdiv verify  run the identity / inequality suites
    expfamdiv sweep   tabulate scaled Jensen divergences against the oracle over alpha
    expfamdiv deform  power-mean deformation sweep with convexity verdicts

Exit codes: 0 pass (or oracle skipped), 2 failed check, 1 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import divergences as dv
from . import oracle as orc
from .deformation import (DeformationSpec, convexity_certificate, deform, exponential_zp,
                          identity, power)
from .errors import ConvergenceError, DomainError, IntegrationError, NotConvexError
from .families import FamilyModel, Kind, family_from_json, make_family, source_to_natural
from .suites import run_suite

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2
DIV_KINDS = ("kl", "alpha", "hellinger", "bhattacharyya", "renyi")
DEFAULT_TOL = 1e-6


class UsageError(Exception):
    pass


# -- output helpers ------------------------------------------------------------


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(obj[k], indent, level + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON: sorted keys, doubles with 17 significant digits, non-finite as null."""
    return _encode(obj, indent, 0)


def write_atomic(path: str, text: str) -> None:
    """Write ``text`` to ``path`` through a temp file in the same directory."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else (fmt_float(v) if isinstance(v, (float, np.floating)) else v)
                    for v in row])
    return buf.getvalue()


# -- argument parsing ----------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}")


def parse_family(text: str) -> tuple:
    """A family name (``exponential``, ``centerednormalnd:3``) or a JSON document."""
    text = text.strip()
    try:
        if text.startswith("{"):
            return family_from_json(text)
        name, _, dim = text.partition(":")
        return make_family(name, int(dim) if dim else 1), None
    except (ValueError, KeyError, json.JSONDecodeError, DomainError) as exc:
        raise UsageError(f"bad --family {text!r}: {exc}")


def _theta(model: FamilyModel, text: Optional[str], source: bool, fallback=None) -> np.ndarray:
    if text is None:
        if fallback is None:
            raise UsageError("missing parameter")
        return fallback
    vals = _floats(text)
    try:
        return source_to_natural(model, vals) if source else model.check(vals)
    except (DomainError, ValueError) as exc:
        raise UsageError(str(exc))


def resolve_seed(seed: Optional[int]) -> int:
    if seed is not None:
        return seed
    env = os.environ.get("EXPFAM_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"EXPFAM_SEED must be an integer, got {env!r}")


# -- div -------------------------------------------------------------------------


@dataclass
class DivergenceReport:
    request: dict
    closed_form: float
    oracle: Optional[float] = None
    abs_err: Optional[float] = None
    rel_err: Optional[float] = None
    tolerance: float = DEFAULT_TOL
    verdict: str = "oracle-skipped"
    extra: dict = field(default_factory=dict)

    def finalize(self):
        if self.oracle is None:
            self.verdict = "oracle-skipped"
            return self
        self.abs_err = abs(self.closed_form - self.oracle)
        self.rel_err = self.abs_err / abs(self.oracle) if self.oracle != 0 else (0.0 if self.abs_err == 0 else math.inf)
        ok = self.abs_err <= self.tolerance or self.rel_err <= self.tolerance
        self.verdict = "pass" if ok else "fail"
        return self

    def to_dict(self):
        return {
            "request": self.request,
            "closed_form": self.closed_form,
            "oracle": self.oracle,
            "abs_err": self.abs_err,
            "rel_err": self.rel_err,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
        }


def closed_form(model: FamilyModel, t1, t2, kind: str, alpha: Optional[float], normalized: bool) -> float:
    """Parameter-side value of a density divergence between ``p_t1`` and ``p_t2``."""
    F, Z = model.generator("F"), model.generator("Z")
    if kind == "kl":
        return dv.bregman(F if normalized else Z, t2, t1)
    if kind == "hellinger":
        return -math.expm1(-dv.jensen(F, t1, t2)) if normalized else dv.jensen(Z, t1, t2)
    branch, a = dv._branch(alpha)
    if kind == "alpha":
        if not normalized:
            return dv.jensen_scaled(Z, t1, t2, alpha)
        if branch in ("0", "1"):
            return dv.jensen_scaled(F, t1, t2, alpha)
        return -math.expm1(-dv.jensen_skewed(F, t1, t2, a)) / (a * (1.0 - a))
    if kind == "bhattacharyya":
        if normalized or branch in ("0", "1"):
            # endpoints are the (extended) KL limits in both modes
            return dv.jensen_scaled(F if normalized else Z, t1, t2, alpha)
        return -F(a * t1 + (1.0 - a) * t2) / (a * (1.0 - a))
    if kind == "renyi":
        if branch in ("0", "1"):
            raise UsageError("renyi needs alpha strictly between 0 and 1")
        if normalized:
            return dv.jensen_skewed(F, t1, t2, a) / (1.0 - a)
        return F(a * t1 + (1.0 - a) * t2) / (a - 1.0)
    raise UsageError(f"unknown divergence kind {kind!r}")


def oracle_value(model: FamilyModel, t1, t2, kind: str, alpha, normalized: bool,
                 scheme: orc.IntegrationScheme) -> float:
    p = orc.density_fn(model, t1, normalized)
    q = orc.density_fn(model, t2, normalized)
    if kind == "kl":
        return orc.kl_extended(p, q, scheme)
    if kind == "hellinger":
        return orc.hellinger_sq(p, q, scheme)
    if kind == "alpha":
        return orc.alpha_div(p, q, alpha, scheme)
    if kind == "bhattacharyya":
        return orc.bhattacharyya_scaled(p, q, alpha, scheme)
    return orc.renyi_div(p, q, alpha, scheme)


def cmd_div(args) -> int:
    model, theta_doc = parse_family(args.family)
    t1 = _theta(model, args.theta1, args.source_param, theta_doc)
    t2 = _theta(model, args.theta2, args.source_param)
    if args.kind in ("alpha", "bhattacharyya", "renyi") and args.alpha is None:
        raise UsageError(f"--kind {args.kind} needs --alpha")
    alpha = args.alpha
    if alpha is not None and not (0.0 <= alpha <= 1.0):
        raise UsageError("--alpha must lie in [0, 1]")
    normalized = not args.unnormalized
    seed = resolve_seed(args.seed)
    request = {
        "family": {"kind": model.kind.value, "dim": model.dim},
        "theta1": t1.tolist(),
        "theta2": t2.tolist(),
        "kind": args.kind,
        "alpha": alpha,
        "normalized": normalized,
        "oracle": bool(args.oracle),
        "seed": seed,
    }
    try:
        value = closed_form(model, t1, t2, args.kind, alpha, normalized)
    except DomainError as exc:
        raise UsageError(str(exc))
    report = DivergenceReport(request, value, tolerance=args.tolerance)
    if args.oracle:
        scheme = orc.default_scheme(model.support, seed)
        report.oracle = oracle_value(model, t1, t2, args.kind, alpha, normalized, scheme)
    report.finalize()
    print(dumps(report.to_dict()))
    return EXIT_FAIL if report.verdict == "fail" else EXIT_OK


# -- verify ----------------------------------------------------------------------


def cmd_verify(args) -> int:
    seed = resolve_seed(args.seed)
    families = None
    if args.family:
        families = [parse_family(f)[0] for f in args.family]
    try:
        checks = run_suite(args.suite, families, seed)
    except ValueError as exc:
        raise UsageError(str(exc))
    failed = [c for c in checks if not c.passed]
    summary = {
        "suite": args.suite,
        "seed": seed,
        "n_checks": len(checks),
        "n_failed": len(failed),
        "passed": not failed,
        "checks": [c.to_dict() for c in checks],
    }
    print(dumps(summary))
    return EXIT_FAIL if failed else EXIT_OK


# -- sweep -----------------------------------------------------------------------

SWEEP_COLUMNS = ("alpha", "jensen_F_scaled", "bhattacharyya_oracle", "jensen_Z_scaled",
                 "alpha_div_oracle", "err_F", "err_Z")


def sweep_rows(model: FamilyModel, t1, t2, alphas: Sequence[float], seed: int = 0):
    F, Z = model.generator("F"), model.generator("Z")
    scheme = orc.default_scheme(model.support, seed)
    p, q = orc.density_fn(model, t1, True), orc.density_fn(model, t2, True)
    pu, qu = orc.density_fn(model, t1, False), orc.density_fn(model, t2, False)
    rows = []
    for a in alphas:
        jf = dv.jensen_scaled(F, t1, t2, a)
        jz = dv.jensen_scaled(Z, t1, t2, a)
        bo = orc.bhattacharyya_scaled(p, q, a, scheme)
        ao = orc.alpha_div(pu, qu, a, scheme)
        rows.append((float(a), jf, bo, jz, ao, abs(jf - bo), abs(jz - ao)))
    return rows


def cmd_sweep(args) -> int:
    model, theta_doc = parse_family(args.family)
    t1 = _theta(model, args.theta1, args.source_param, theta_doc)
    t2 = _theta(model, args.theta2, args.source_param)
    lo, hi = _floats(args.alpha_range) if args.alpha_range else (0.1, 0.9)
    if not (0.0 < lo <= hi < 1.0):
        raise UsageError("--alpha-range must lie inside (0, 1)")
    if args.steps < 1:
        raise UsageError("--steps must be positive")
    alphas = [round(v, 12) for v in np.linspace(lo, hi, args.steps)]
    if args.endpoints:
        alphas = [0.0] + alphas + [1.0]
    rows = sweep_rows(model, t1, t2, alphas, resolve_seed(args.seed))
    text = csv_text(SWEEP_COLUMNS, rows)
    if args.output:
        write_atomic(args.output, text)
    else:
        sys.stdout.write(text)
    worst = max(max(r[5], r[6]) for r in rows)
    return EXIT_FAIL if worst > args.tolerance else EXIT_OK


# -- deform ----------------------------------------------------------------------

DEFORM_COLUMNS = ("p", "verdict", "bregman")


def _p_values(text: str) -> List[float]:
    vals = _floats(text)
    if len(vals) != 3 or vals[2] <= 0 or vals[1] < vals[0]:
        raise UsageError("--p-range expects lo,hi,step with step > 0")
    lo, hi, step = vals
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(n)]


def deform_rows(model: FamilyModel, which: str, ps, grid, t1, t2):
    base = model.generator(which)
    rows = []
    for p in ps:
        if model.kind is Kind.EXPONENTIAL and which == "Z":
            gen = exponential_zp(p)
        else:
            gen = deform(base, DeformationSpec(identity(), power(p).inverse()))
        cert = convexity_certificate(gen, grid)
        value = dv.bregman(gen, t1, t2) if cert.convex else None
        rows.append((float(p), cert.verdict, value))
    return rows


def cmd_deform(args) -> int:
    model, theta_doc = parse_family(args.family)
    if model.n_params != 1:
        raise UsageError("deform supports one-parameter families")
    t1 = _theta(model, args.theta1, args.source_param, theta_doc if theta_doc is not None else np.array([1.0]))
    t2 = _theta(model, args.theta2, args.source_param, np.array([2.0]))
    if args.grid:
        g = _floats(args.grid)
        if len(g) != 3 or g[2] < 2:
            raise UsageError("--grid expects lo,hi,n with n >= 2")
        grid = [np.array([v]) for v in np.linspace(g[0], g[1], int(g[2]))]
    elif model.kind is Kind.EXPONENTIAL:
        grid = [np.array([v]) for v in np.linspace(0.2, 5.0, 25)]
    else:
        grid = model.sample_grid()
    for pt in grid:
        if not model.in_domain(pt):
            raise UsageError(f"grid point {pt.tolist()} outside the parameter space")
    if args.spec:
        try:
            spec = DeformationSpec.from_json(args.spec)
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            raise UsageError(f"bad --spec: {exc}")
        gen = deform(model.generator(args.generator), spec)
        cert = convexity_certificate(gen, grid)
        try:
            value = dv.bregman(gen, t1, t2) if cert.convex else None
        except DomainError:
            value = None
        rows = [(None, cert.verdict, value)]
    else:
        rows = deform_rows(model, args.generator, _p_values(args.p_range), grid, t1, t2)
    if args.output and args.output.endswith(".csv"):
        write_atomic(args.output, csv_text(DEFORM_COLUMNS, rows))
    else:
        doc = dumps({
            "family": model.kind.value,
            "generator": args.generator,
            "theta1": t1.tolist(),
            "theta2": t2.tolist(),
            "rows": [dict(zip(DEFORM_COLUMNS, r)) for r in rows],
        })
        if args.output:
            write_atomic(args.output, doc + "\n")
        else:
            print(doc)
    return EXIT_OK


# -- entry point ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="expfamdiv", description="Divergences between exponential-family densities.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, thetas=True):
        p.add_argument("--family", required=True, help="family name (e.g. exponential, centerednormalnd:3) or JSON {kind, dim, theta}")
        if thetas:
            p.add_argument("--theta1", help="comma-separated natural parameter (defaults to the JSON theta)")
            p.add_argument("--theta2", help="comma-separated natural parameter")
            p.add_argument("--source-param", action="store_true",
                           help="read thetas as source parameters (rate, probability, variance, mean/variance)")
        p.add_argument("--seed", type=int, default=None, help="Monte-Carlo seed (default: $EXPFAM_SEED or 0)")

    d = sub.add_parser("div", help="closed-form divergence with optional quadrature check")
    common(d)
    d.add_argument("--kind", choices=DIV_KINDS, required=True)
    d.add_argument("--alpha", type=float, default=None)
    d.add_argument("--unnormalized", action="store_true", help="use unnormalized densities")
    d.add_argument("--oracle", action="store_true", help="compare against numerical integration")
    d.add_argument("--tolerance", type=float, default=DEFAULT_TOL)
    d.set_defaults(func=cmd_div)

    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("suite", choices=("convexity", "identities", "legendre", "deformation", "all"))
    v.add_argument("--family", action="append", help="restrict to a family (repeatable)")
    v.add_argument("--seed", type=int, default=None)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sweep", help="alpha sweep of scaled Jensen divergences vs the oracle")
    common(s)
    s.add_argument("--alpha-range", default=None, help="lo,hi inside (0, 1); default 0.1,0.9")
    s.add_argument("--steps", type=int, default=9)
    s.add_argument("--endpoints", action="store_true", help="add alpha=0 and alpha=1 rows")
    s.add_argument("--output", default=None, help="CSV path (stdout if omitted)")
    s.add_argument("--tolerance", type=float, default=DEFAULT_TOL)
    s.set_defaults(func=cmd_sweep)

    f = sub.add_parser("deform", help="power-mean deformation sweep")
    common(f)
    f.add_argument("--generator", choices=("F", "Z"), default="Z")
    f.add_argument("--p-range", default="-2,3,0.25", help="lo,hi,step")
    f.add_argument("--spec", default=None, help='JSON {"rho": {...}, "tau": {...}} instead of a p-range')
    f.add_argument("--grid", default=None, help="lo,hi,n convexity test grid")
    f.add_argument("--output", default=None, help="output path; .csv gives CSV, anything else JSON")
    f.set_defaults(func=cmd_deform)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"expfamdiv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, IntegrationError, NotConvexError) as exc:
        print(f"expfamdiv: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
