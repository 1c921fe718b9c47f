"""Command-line front end.  Every subcommand prints (or writes) a JSON report.

Exit codes: 0 success, 1 bad input, 2 a theorem-level verdict failed
(inconsistent labels or several closed control sets).
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import controlsets as cs
from . import coxeter, decomp, flag, tree
from .errors import PadicControlError
from .matrix import Matrix
from .padic import PAdicContext, arith, invert

FORMAT_VERSION = cs.FORMAT_VERSION


class InputError(Exception):
    pass


def _ctx(args, guard: int = 0) -> PAdicContext:
    try:
        return PAdicContext(args.p, args.precision + guard)
    except ValueError as exc:
        field = "p" if "prime" in str(exc) else "precision"
        raise InputError(f"{field}: {exc}") from None


def _load_json(text: str, field: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{field}: malformed JSON ({exc.msg} at column {exc.colno})") from None


def _matrix(ctx: PAdicContext, text: str, field: str = "matrix") -> Matrix:
    rows = _load_json(text, field) if text.strip().startswith("[[") and '"' in text else None
    try:
        return Matrix.parse(ctx, rows if rows is not None else text)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise InputError(f"{field}: {exc}") from None


def _padic_json(x) -> dict:
    return {"text": str(x), "valuation": None if x.is_zero() else x.valuation,
            "digits": x.digits, "rational": str(x.lift())}


# -- subcommands ---------------------------------------------------------------------

def cmd_padic(args) -> dict:
    ctx = _ctx(args)
    try:
        x = ctx(args.x)
        y = ctx(args.y) if args.y is not None else None
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"x/y: {exc}") from None
    if args.op == "inv":
        res = invert(x)
    elif args.op == "div":
        res = x / y
    elif args.op == "val":
        res = x
    else:
        if y is None:
            raise InputError("y: required for binary operations")
        res = arith(args.op, x, y)
    out = {"op": args.op, "x": _padic_json(x), "result": _padic_json(res), "norm": str(res.norm)}
    if y is not None:
        out["y"] = _padic_json(y)
    return out


def cmd_weyl(args) -> dict:
    n = args.n
    if n not in (2, 3):
        raise InputError("n: only 2 and 3 are supported")
    out = {"n": n, "coxeter_matrix": coxeter.coxeter_matrix(n),
           "elements": [{"word": w.word_str(), "perm": list(w.perm), "length": w.length}
                        for w in coxeter.enumerate_group(n)]}
    if args.element:
        try:
            w = coxeter.parse_element(args.element, n)
        except ValueError as exc:
            raise InputError(f"element: {exc}") from None
        out["element"] = {"word": w.word_str(), "perm": list(w.perm), "length": w.length,
                          "inverse": w.inverse().word_str()}
    if args.cosets is not None:
        J = [int(t) for t in args.cosets.split(",") if t.strip()]
        try:
            out["cosets"] = [[u.word_str() for u in sorted(c.elements, key=coxeter.WeylElement.sort_key)]
                             for c in coxeter.cosets(J, n)]
        except ValueError as exc:
            raise InputError(f"cosets: {exc}") from None
    return out


def cmd_tree(args) -> dict:
    ctx = _ctx(args, cs.GUARD)
    p = args.p
    if args.action == "classify":
        g = _matrix(ctx, args.matrix)
        if not g.is_sl():
            raise InputError("matrix: determinant is not 1")
        res = tree.classify_isometry(g)
        if isinstance(res, tree.Elliptic):
            return {"kind": "elliptic", "fixed_vertex": str(res.fixed_vertex)}
        return {"kind": "hyperbolic", "translation_length": res.translation_length,
                "axis_vertex": str(res.axis_vertex)}
    if args.action == "vertex":
        return {"vertex": str(tree.vertex_from_matrix(_matrix(ctx, args.matrix)))}
    u = _vertex(args.u, p, "u")
    if args.action == "distance":
        return {"u": str(u), "v": str(_vertex(args.v, p, "v")), "distance": tree.distance(u, _vertex(args.v, p, "v"))}
    if args.action == "neighbors":
        return {"vertex": str(u), "neighbors": [str(w) for w in tree.neighbors(u)]}
    if args.action == "ball":
        verts = [(r, str(w)) for r, w in tree.ball(u, args.radius)]
        if args.dot:
            Path(args.dot).write_text(tree.ball_dot(u, args.radius))
        return {"center": str(u), "radius": args.radius, "vertices": verts}
    raise InputError(f"action: unknown tree action {args.action!r}")


def _vertex(text, p, field):
    if text is None:
        return tree.base_vertex(p)
    try:
        return tree.TreeVertex.parse(text, p)
    except (ValueError, IndexError) as exc:
        raise InputError(f"{field}: {exc}") from None


def _factors(shown: PAdicContext, **mats) -> dict:
    # p-adic text at the requested precision; the balanced rational lifts are for reading
    out = {name: [[str(shown(x.lift())) for x in row] for row in m.rows] for name, m in mats.items()}
    out["rational"] = {name: m.to_rationals() for name, m in mats.items()}
    return out


def cmd_decomp(args) -> dict:
    ctx, shown = _ctx(args, cs.GUARD), _ctx(args)
    g = _matrix(ctx, args.matrix)
    out = {}
    kinds = ["iwasawa", "cartan", "bruhat", "spectral"] if args.kind == "all" else [args.kind]
    for kind in kinds:
        if kind == "iwasawa":
            f = decomp.iwasawa(g)
            out["iwasawa"] = _factors(shown, k=f.k, t=f.t, u=f.u)
        elif kind == "cartan":
            f = decomp.cartan(g)
            out["cartan"] = dict(_factors(shown, k1=f.k1, a=f.a, k2=f.k2), exponents=list(f.exponents))
        elif kind == "bruhat":
            out["bruhat"] = decomp.bruhat_position(g).word_str()
        elif kind == "spectral":
            s = decomp.spectral_valuations(g)
            out["spectral"] = {"valuations": [str(v) for v in s.valuations], "regular": s.regular,
                               "hyperbolic": s.hyperbolic}
    return out


def cmd_flag(args) -> dict:
    ctx = _ctx(args, cs.GUARD)
    p, N = args.p, args.precision

    def parse_flag(text, field):
        try:
            return flag.Flag.parse(text, p, N)
        except ValueError as exc:
            raise InputError(f"{field}: {exc}") from None

    if args.action == "census":
        ref = flag.standard_flag(args.n, p, N) if args.flag is None else parse_flag(args.flag, "flag")
        return {"reference": str(ref), "counts": flag.open_cell_census(ref, args.samples, args.seed)}
    if args.action == "position":
        a, b = parse_flag(args.flag, "flag"), parse_flag(args.other, "other")
        return {"position": flag.relative_position(a, b).w.word_str()}
    g = _matrix(ctx, args.matrix)
    if args.action == "act":
        return {"image": str(flag.act(g, parse_flag(args.flag, "flag")))}
    if args.action == "fixed":
        return {"fixed": {w.word_str(): str(f) for w, f in
                          sorted(flag.fixed_flags(g, N).items(), key=lambda kv: kv[0].sort_key())}}
    if args.action == "iterate":
        lim, k = flag.iterate_to_limit(g, parse_flag(args.flag, "flag"), args.kmax)
        return {"limit": str(lim), "steps": k}
    raise InputError(f"action: unknown flag action {args.action!r}")


def _spec_from_args(args) -> cs.SemigroupSpec:
    data = {}
    if args.spec:
        data = _load_json(_read(args.spec, "spec"), "spec")
        if not isinstance(data, dict):
            raise InputError("spec: expected a JSON object")
    for key in ("p", "precision", "group", "max_word_len"):
        val = getattr(args, key)
        if val is not None:
            data[key] = val
    if args.gens:
        gens = _load_json(_read(args.gens, "gens"), "gens")
        data["generators"] = gens["generators"] if isinstance(gens, dict) else gens
    for key in ("p", "precision", "group", "generators"):
        if key not in data:
            raise InputError(f"{key}: missing")
    try:
        ctx = PAdicContext(int(data["p"]), int(data["precision"]) + cs.GUARD)
    except ValueError as exc:
        field = "p" if "prime" in str(exc) else "precision"
        raise InputError(f"{field}: {exc}") from None
    gens = []
    for i, rows in enumerate(data["generators"]):
        try:
            gens.append(Matrix.parse(ctx, [[x if isinstance(x, (int, str)) else str(x) for x in r] for r in rows]))
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise InputError(f"generators[{i}]: {exc}") from None
    try:
        return cs.SemigroupSpec(str(data["group"]).upper(), int(data["p"]), int(data["precision"]), tuple(gens),
                                max_word_len=int(data.get("max_word_len", 4)), seed=args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _read(path: str, field: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{field}: cannot read {path} ({exc.strerror})") from None


def cmd_control_sets(args):
    spec = _spec_from_args(args)
    graph, report = cs.analyze(spec)
    body = cs.report_json(spec, graph, report)
    if args.dot:
        inv = report.invariant()
        Path(args.dot).write_text(cs.emit_dot(graph, inv.nodes if inv else None))
    bad = any(isinstance(v, str) and (v.startswith("Inconsistent") or v.startswith("MultipleSinks"))
              for v in report.verdicts.values())
    return body, 2 if bad else 0


# -- entry point ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="padic-control", description=__doc__)
    ap.add_argument("--output", "-o", help="write the JSON report here instead of stdout")
    ap.add_argument("--seed", type=int, default=0, help="seed for randomized steps (recorded in the report)")
    ap.add_argument("--verbose", "-v", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, precision=3):
        sp.add_argument("--p", type=int, required=True)
        sp.add_argument("--precision", "-N", type=int, default=precision)

    sp = sub.add_parser("padic", help="p-adic arithmetic")
    common(sp)
    sp.add_argument("--op", choices=["add", "sub", "mul", "div", "inv", "val"], default="add")
    sp.add_argument("--x", required=True)
    sp.add_argument("--y")

    sp = sub.add_parser("weyl", help="Weyl group of type A")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--element")
    sp.add_argument("--cosets", help="comma-separated generator subset J")

    sp = sub.add_parser("tree", help="Bruhat-Tits tree of SL2")
    sp.add_argument("action", choices=["classify", "vertex", "distance", "neighbors", "ball"])
    common(sp)
    sp.add_argument("--matrix")
    sp.add_argument("--u")
    sp.add_argument("--v")
    sp.add_argument("--radius", type=int, default=1)
    sp.add_argument("--dot")

    sp = sub.add_parser("decomp", help="Iwasawa, Cartan, Bruhat and spectral data")
    common(sp)
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--kind", choices=["iwasawa", "cartan", "bruhat", "spectral", "all"], default="all")

    sp = sub.add_parser("flag", help="flags, relative position, fixed flags, dynamics")
    sp.add_argument("action", choices=["act", "position", "census", "fixed", "iterate"])
    common(sp)
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--matrix")
    sp.add_argument("--flag")
    sp.add_argument("--other")
    sp.add_argument("--samples", type=int, default=0)
    sp.add_argument("--kmax", type=int, default=40)

    sp = sub.add_parser("control-sets", help="control sets of a generated semigroup")
    sp.add_argument("--spec", help="JSON spec {p, precision, group, generators, max_word_len}")
    sp.add_argument("--gens", help="JSON list of generator matrices")
    sp.add_argument("--p", type=int)
    sp.add_argument("--precision", "-N", type=int)
    sp.add_argument("--group", choices=["SL2", "SL3"])
    sp.add_argument("--max-word-len", dest="max_word_len", type=int)
    sp.add_argument("--dot", help="also write the orbit graph as DOT")
    return ap


HANDLERS = {"padic": cmd_padic, "weyl": cmd_weyl, "tree": cmd_tree, "decomp": cmd_decomp, "flag": cmd_flag}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "control-sets":
            body, code = cmd_control_sets(args)
        else:
            body, code = HANDLERS[args.command](args), 0
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PadicControlError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    body = dict(body)
    body.setdefault("format_version", FORMAT_VERSION)
    body.setdefault("seed", args.seed)
    body["command"] = args.command
    text = json.dumps(body, sort_keys=True, indent=2, default=_default) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return code


def _default(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


if __name__ == "__main__":
    sys.exit(main())
