"""Command-line front end.

Exit codes: 0 ok, 1 failed reproduction or exhausted decision budget,
2 usage or input error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from . import catalog, lam
from .complex import (Carrier, MetricSpec, diameter, measured_mesh, mesh_bound, product_complex,
                      validate)
from .io import (algebra_from_json, complex_from_json, complex_to_json, load_carrier, metric_to_json,
                 rational_arg, read_json, resolve_complex)
from .rational import fmt
from .theory import (Interpretation, Theory, check_interpretation, format_theory, is_abelian_bounded,
                     is_undemanding, parse_term, parse_theory, power_theory, product_theory)


class UsageError(Exception):
    pass


def _rational(text: str):
    try:
        return rational_arg(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive(text: str):
    x = _rational(text)
    if x <= 0:
        raise argparse.ArgumentTypeError("tolerance must be positive")
    return x


class Out:
    def __init__(self, fmt_: str, timing: bool, stream=None) -> None:
        self.json = fmt_ == "json-lines"
        self.timing = timing
        self.stream = stream or sys.stdout

    def emit(self, record: dict, text: str) -> None:
        if self.json:
            self.stream.write(json.dumps(record, sort_keys=True) + "\n")
        else:
            self.stream.write(text.rstrip("\n") + "\n")
        self.stream.flush()


def _read_theory(path: str) -> Theory:
    return parse_theory(Path(path).read_text())


def _theory_record(th: Theory) -> dict:
    return {"theory": format_theory(th).strip()}


# ---------------------------------------------------------------- theory


def cmd_theory(a, out: Out) -> int:
    if a.action == "parse":
        th = _read_theory(a.inp)
        out.emit(_theory_record(th), format_theory(th))
    elif a.action == "product":
        th = product_theory(_read_theory(a.left), _read_theory(a.right), a.p)
        out.emit(_theory_record(th), format_theory(th))
    elif a.action == "power":
        th = power_theory(_read_theory(a.inp), a.n)
        out.emit(_theory_record(th), format_theory(th))
    elif a.action == "interpret":
        gamma, sigma = _read_theory(a.gamma), _read_theory(a.sigma)
        raw = read_json(a.assign)
        assign = {k: parse_term(v, sigma.type) for k, v in raw.items()}
        interp = Interpretation.from_dict(gamma.type, sigma.type, assign)
        ok = check_interpretation(gamma, interp, sigma)
        out.emit({"interpretation": ok}, "VALID" if ok else "INVALID")
    elif a.action == "undemanding":
        ok = is_undemanding(_read_theory(a.inp))
        out.emit({"undemanding": ok}, "UNDEMANDING" if ok else "DEMANDING")
    elif a.action == "abelian":
        res = is_abelian_bounded(_read_theory(a.inp), a.bound)
        out.emit({"abelian": res.found, "witness": {n: list(c) for n, c in res.witness}}, str(res))
    return 0


# ---------------------------------------------------------------- complex


def cmd_complex(a, out: Out) -> int:
    if a.action == "validate":
        K, _ = complex_from_json(read_json(a.inp), close=False)
        v = validate(K)
        out.emit({"valid": v is None, "violation": None if v is None else str(v)},
                 "VALID" if v is None else f"INVALID {v}")
        return 0
    if a.action == "product":
        K1, m1, _ = resolve_complex(a.left)
        K2, m2, _ = resolve_complex(a.right)
        P, _, _ = product_complex(K1, K2)
        metric = None
        if m1 is not None or m2 is not None:
            metric = MetricSpec.product(m1 or MetricSpec(), m2 or MetricSpec(), a.combine)
        rec = complex_to_json(P, metric)
        out.emit(rec, json.dumps(rec))
        return 0
    K, m, name = resolve_complex(a.inp)
    C = Carrier(K, m, name)
    if a.action == "subdivide":
        L = C.tower.level(a.m)
        rec = complex_to_json(L)
        out.emit(rec, json.dumps(rec))
    elif a.action == "mesh":
        got = measured_mesh(K, a.m, C)
        bound = mesh_bound(K, a.m)
        rec = {"m": a.m, "mesh_square": fmt(got.square), "bound_square": fmt(bound.square),
               "within": got <= bound}
        out.emit(rec, f"mesh^2 {fmt(got.square)} <= {fmt(bound.square)}: {got <= bound}")
    elif a.action == "diameter":
        lo, hi = diameter(K, carrier=C)
        rec = {"lo": fmt(lo), "hi": fmt(hi)}
        if m is not None:
            rec["metric"] = metric_to_json(m)
        out.emit(rec, f"[{fmt(lo)}, {fmt(hi)}] ~ {float(hi):.6f}")
    return 0


# ---------------------------------------------------------------- lambda / decide


def cmd_lambda(a, out: Out) -> int:
    sigma = _read_theory(a.theory)
    arities = dict(sigma.type.symbols)
    base = Path(a.algebra).parent
    A = algebra_from_json(read_json(a.algebra), arities, base)
    worst = None
    for e in sigma.equations:
        iv = lam.sup_equation(A, e, a.tol)
        out.emit({"equation": str(e), "interval": iv.to_json()}, f"{e}: {iv}")
        worst = iv if worst is None else type(iv)(max(worst.lo, iv.lo), max(worst.hi, iv.hi),
                                                   worst.cells + iv.cells, worst.capped or iv.capped)
    if worst is not None:
        out.emit({"lambda": worst.to_json()}, f"lambda: {worst} (exact [{fmt(worst.lo)}, {fmt(worst.hi)}])")
    return 0


def _decision_text(d: lam.Decision) -> str:
    parts = [d.verdict]
    if d.interval is not None:
        parts.append(f"interval {d.interval}")
    parts.append(f"candidates {d.candidates_examined}/{d.candidates_raw}")
    if d.min_lo is not None:
        parts.append(f"min_lo {fmt(d.min_lo)}")
    if d.budget_exhausted:
        parts.append("budget exhausted")
    return " ".join(parts)


def cmd_decide(a, out: Out) -> int:
    C = load_carrier(a.complex)
    sigma = _read_theory(a.theory)
    d = lam.decide_within(C, sigma, a.M, a.N, a.q, a.tol, threads=a.threads, max_candidates=a.budget)
    out.emit(d.to_json(out.timing), _decision_text(d))
    return 1 if d.budget_exhausted else 0


def _show(th) -> str:
    return " ".join(format_theory(th).split()) or "(empty theory)"


def cmd_enumerate(a, out: Out) -> int:
    kw = dict(threads=a.threads, tol=a.tol)
    budget = a.budget if a.budget is not None else 10_000
    if a.stream == "B":
        for rec in lam.stream_B(budget, **kw):
            sx = rec.sextuple
            out.emit(rec.to_json(out.timing),
                     f"{sx.complex_name} M={sx.M} N={sx.N} q={sx.r}/{sx.s} | {_show(sx.theory)}")
    elif a.stream == "E":
        if a.alpha is None:
            raise UsageError("enumerate E needs --alpha")
        for th in lam.stream_E(a.complex, a.alpha, budget, **kw):
            out.emit(_theory_record(th), _show(th))
    else:
        for th, s in lam.stream_F(a.complex, budget, **kw):
            rec = _theory_record(th)
            rec["s"] = s
            out.emit(rec, f"s={s} | {_show(th)}")
    return 0


def cmd_repro(a, out: Out) -> int:
    if a.all == (a.name is not None):
        raise UsageError("repro needs exactly one of NAME or --all")
    if a.all:
        reports = catalog.run_all(threads=a.threads, include_stubs=True)
    else:
        if a.name not in catalog.REGISTRY and a.name not in catalog.STUBS:
            raise UsageError(f"unknown catalog entry {a.name!r}; known: {', '.join(catalog.names())}")
        reports = [catalog.run(a.name)]
    for r in reports:
        out.emit(r.to_json(out.timing), r.line())
    failed = sum(not r.passed for r in reports)
    if a.all:
        out.emit({"summary": {"total": len(reports), "failed": failed}},
                 f"{len(reports) - failed}/{len(reports)} passed")
    return 1 if failed else 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=_positive, default=_rational("1/100"), help="tolerance r/s")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--budget", type=int, default=None)
    common.add_argument("--format", choices=("text", "json-lines"), default="text")
    common.add_argument("--timing", action="store_true", help="include wall times in records")

    p = argparse.ArgumentParser(prog="approxsat", description="Certified approximate satisfaction bounds.")
    sub = p.add_subparsers(dest="command", required=True)

    th = sub.add_parser("theory")
    ta = th.add_subparsers(dest="action", required=True)
    for name in ("parse", "undemanding"):
        s = ta.add_parser(name, parents=[common])
        s.add_argument("--in", dest="inp", required=True)
    s = ta.add_parser("abelian", parents=[common])
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--bound", type=int, default=2)
    s = ta.add_parser("power", parents=[common])
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--n", type=int, required=True)
    s = ta.add_parser("product", parents=[common])
    s.add_argument("--left", required=True)
    s.add_argument("--right", required=True)
    s.add_argument("--p", default="p")
    s = ta.add_parser("interpret", parents=[common])
    s.add_argument("--gamma", required=True)
    s.add_argument("--sigma", required=True)
    s.add_argument("--assign", required=True, help="JSON object symbol -> term text")
    th.set_defaults(func=cmd_theory)

    cx = sub.add_parser("complex")
    ca = cx.add_subparsers(dest="action", required=True)
    s = ca.add_parser("validate", parents=[common])
    s.add_argument("--in", dest="inp", required=True)
    for name in ("subdivide", "mesh"):
        s = ca.add_parser(name, parents=[common])
        s.add_argument("--in", dest="inp", required=True)
        s.add_argument("--m", type=int, default=1)
    s = ca.add_parser("diameter", parents=[common])
    s.add_argument("--in", dest="inp", required=True)
    s = ca.add_parser("product", parents=[common])
    s.add_argument("--left", required=True)
    s.add_argument("--right", required=True)
    s.add_argument("--combine", choices=("rho", "sigma", "tau"), default="rho")
    cx.set_defaults(func=cmd_complex)

    lm = sub.add_parser("lambda")
    la = lm.add_subparsers(dest="action", required=True)
    s = la.add_parser("sup", parents=[common])
    s.add_argument("--algebra", required=True)
    s.add_argument("--theory", required=True)
    lm.set_defaults(func=cmd_lambda)

    dc = sub.add_parser("decide", parents=[common])
    dc.add_argument("--complex", required=True)
    dc.add_argument("--theory", required=True)
    dc.add_argument("--M", type=int, required=True)
    dc.add_argument("--N", type=int, required=True)
    dc.add_argument("--q", type=_positive, required=True)
    dc.set_defaults(func=cmd_decide, tol=_rational("1/50"))

    en = sub.add_parser("enumerate", parents=[common])
    en.add_argument("stream", choices=("B", "E", "F"))
    en.add_argument("--alpha", type=_rational)
    en.add_argument("--complex", default="edge")
    en.set_defaults(func=cmd_enumerate, tol=_rational("1/50"))

    rp = sub.add_parser("repro", parents=[common])
    rp.add_argument("name", nargs="?")
    rp.add_argument("--all", action="store_true")
    rp.set_defaults(func=cmd_repro)
    return p


def main(argv: Sequence[str] | None = None, stream=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if a.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    out = Out(a.format, a.timing, stream)
    try:
        return a.func(a, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
