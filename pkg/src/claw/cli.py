"""Command line interface.

Commands operate on corpus documents: verification checks, solved-form
operator tables, symmetry actions with invariance classification,
classification equations for spans, current reconstruction from a
scaling symmetry, linear ansatz solving, and a regression runner that
evaluates every [expect] block of a document.

Exit status: 0 when every reported verdict is a success, 1 when any
check fails or a computation reports an error verdict, 2 on usage,
parse or lookup errors.
"""

from __future__ import annotations

import argparse
import json
import sys as _sysmod
from fractions import Fraction
from typing import Optional

from .conslaw import (
    check_adjoint_symmetry, check_helmholtz, check_multiplier,
    currents_equivalent, extract_multiplier, multiplier_reduced,
    multipliers_match, r_of_multiplier, r_of_symmetry,
    scaling_reconstruct, verify_current,
)
from .errors import (
    ClawError, DomainError, ScalingCritical, WeightIndeterminate,
)
from .expr import MINUS_ONE, ZERO, add, mul, par, rat, subs, to_str
from .parser import _jet_suffix, parse_document, parse_in_system
from .symaction import (
    action_matrix, action_on_multiplier, bilinear_system, check_symmetry,
    equations_match, invariance_check, solve_fixed_a, solve_linear_ansatz,
)
from .system import Current, GOperator, goperator_equal
from .zerotest import BOTH, CANONICAL, ZeroTest, is_zero

_OK_VERDICTS = {"Pass", "Skip", "Info", "Invariant", "Homogeneous",
                "Neither"}

_EMPTY_OP = GOperator({})


# ---------------------------------------------------------------------------
# parameter bindings

def _parse_param_flags(items) -> dict:
    out = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        name = name.strip()
        if not sep or not name:
            raise DomainError(f"bad --param {item!r}, expected name=value")
        try:
            out[name] = Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise DomainError(f"bad --param value {value.strip()!r}")
    return out


def _merge_when(base: dict, extra: dict, where: str) -> dict:
    out = dict(base)
    for k, v in extra.items():
        if k in out and out[k] != v:
            raise DomainError(
                f"{where} requires {k} = {v}, conflicting with "
                f"{k} = {out[k]}")
        out[k] = v
    return out


def _consistent(when: dict, bindings: dict) -> bool:
    return all(bindings.get(k, v) == v for k, v in when.items())


class _Bound:
    """A document with rational values substituted for some parameters."""

    def __init__(self, doc, bindings: dict):
        self.doc = doc
        self.bindings = dict(bindings)
        self.sys = (doc.system.bind_params(self.bindings)
                    if self.bindings else doc.system)
        self._m = {par(k): rat(v) for k, v in self.bindings.items()}

    def expr(self, e):
        return subs(e, self._m)

    def symmetry(self, name) -> dict:
        d = self.doc.symmetries[name]
        return {v: self.expr(d.comps.get(v, ZERO))
                for v in self.sys.ctx.dep}

    def multiplier(self, name) -> dict:
        d = self.doc.multipliers[name]
        return {a: self.expr(d.comps.get(a, ZERO))
                for a in self.sys.eq_ids}

    def current(self, name) -> Current:
        d = self.doc.currents[name]
        return Current(tuple(self.expr(c) for c in d.comps))

    def weights(self) -> dict:
        if self.doc.scaling is None:
            raise DomainError(
                "the document declares no scaling weights")
        return {k: self.expr(v) for k, v in self.doc.scaling.items()}

    def rop_rows(self, name) -> dict:
        d = self.doc.rops[name]
        return {row: GOperator({k: self.expr(c)
                                for k, c in op.coeffs.items()})
                for row, op in d.rows.items()}


def _get(table: dict, name: str, what: str):
    obj = table.get(name)
    if obj is None:
        raise DomainError(f"unknown {what} {name!r}")
    return obj


# ---------------------------------------------------------------------------
# reports

def _result(name: str, verdict: str, lam: Optional[str] = None,
            details: Optional[str] = None) -> dict:
    r = {"name": name, "verdict": verdict}
    if lam is not None:
        r["lambda"] = lam
    if details is not None:
        r["details"] = details
    return r


def _report(ns, doc, results, cli_b) -> dict:
    return {
        "command": ns.command,
        "system": doc.system.name,
        "results": results,
        "seed": ns.seed,
        "params": {k: str(cli_b[k]) for k in sorted(cli_b)},
    }


def _emit(reports, as_json: bool) -> int:
    if as_json:
        payload = reports[0] if len(reports) == 1 else reports
        print(json.dumps(payload, indent=2))
    else:
        for rep in reports:
            if len(reports) > 1:
                print(f"== {rep['system']} ==")
            for r in rep["results"]:
                line = f"{r['name']}: {r['verdict']}"
                if "lambda" in r:
                    line += f"  lambda = {r['lambda']}"
                print(line)
                for dl in r.get("details", "").splitlines():
                    print("    " + dl)
            ok = sum(r["verdict"] in _OK_VERDICTS for r in rep["results"])
            n = len(rep["results"])
            if n != 1 or rep["command"] == "regress":
                print(f"{ok}/{n} ok")
    bad = any(r["verdict"] not in _OK_VERDICTS
              for rep in reports for r in rep["results"])
    return 1 if bad else 0


def _format_rop(ctx, rows: dict) -> str:
    lines = []
    for row in sorted(rows):
        op = rows[row]
        if not op.coeffs:
            lines.append(f"R.{row} = 0")
            continue
        for (b, midx), coeff in op.items():
            suffix = _jet_suffix(ctx, midx)
            col = b + (f"_{suffix}" if suffix else "")
            lines.append(f"R.{row}.{col} = {to_str(coeff, ctx)}")
    return "\n".join(lines)


def _format_components(ctx, comps: dict) -> str:
    return "\n".join(f"{k} = {to_str(comps[k], ctx)}"
                     for k in sorted(comps))


# ---------------------------------------------------------------------------
# shared command plumbing

def _setup(ns, default_mode: str = CANONICAL):
    cfg = ZeroTest(ns.zero_test or default_mode, ns.trials, ns.tol,
                   ns.seed)
    cli_b = _parse_param_flags(ns.param)
    with open(ns.file, encoding="utf-8") as fh:
        doc = parse_document(fh.read(), cfg)
    for k in cli_b:
        if all(p.name != k for p in doc.system.ctx.params):
            raise DomainError(f"unknown parameter {k!r}")
    return doc, cfg, cli_b


_CHECK_TABLES = {
    "symmetry": "symmetries",
    "multiplier": "multipliers",
    "adjoint": "multipliers",
    "helmholtz": "multipliers",
    "current": "currents",
}


def _cmd_check(ns) -> int:
    doc, cfg, cli_b = _setup(ns)
    table = getattr(doc, _CHECK_TABLES[ns.kind])
    names = ns.names or [n for n, o in table.items()
                         if _consistent(o.when, cli_b)]
    results = []
    for nm in names:
        obj = _get(table, nm, ns.kind)
        b = _merge_when(cli_b, obj.when, nm)
        bd = _Bound(doc, b)
        try:
            if ns.kind == "symmetry":
                ok = check_symmetry(bd.sys, bd.symmetry(nm), cfg)
            elif ns.kind == "multiplier":
                ok = check_multiplier(bd.sys, bd.multiplier(nm), cfg)
            elif ns.kind == "adjoint":
                ok = check_adjoint_symmetry(bd.sys, bd.multiplier(nm), cfg)
            elif ns.kind == "helmholtz":
                ok = check_helmholtz(bd.sys, bd.multiplier(nm), cfg)
            else:
                ok = verify_current(bd.sys, bd.current(nm), None, cfg)
            results.append(_result(nm, "Pass" if ok else "Fail"))
        except ClawError as err:
            results.append(_result(nm, type(err).__name__,
                                   details=str(err)))
    return _emit([_report(ns, doc, results, cli_b)], ns.json)


def _cmd_rop(ns) -> int:
    doc, cfg, cli_b = _setup(ns)
    table = doc.symmetries if ns.kind == "symmetry" else doc.multipliers
    obj = _get(table, ns.name, ns.kind)
    bd = _Bound(doc, _merge_when(cli_b, obj.when, ns.name))
    try:
        if ns.kind == "symmetry":
            rows = r_of_symmetry(bd.sys, bd.symmetry(ns.name), cfg)
        else:
            rows = r_of_multiplier(bd.sys, bd.multiplier(ns.name), cfg)
        results = [_result(ns.name, "Info",
                           details=_format_rop(bd.sys.ctx, rows))]
    except ClawError as err:
        results = [_result(ns.name, type(err).__name__, details=str(err))]
    return _emit([_report(ns, doc, results, cli_b)], ns.json)


def _act_bound(ns, doc, cli_b):
    p = _get(doc.symmetries, ns.symmetry, "symmetry")
    q = _get(doc.multipliers, ns.multiplier, "multiplier")
    b = _merge_when(cli_b, p.when, ns.symmetry)
    b = _merge_when(b, q.when, ns.multiplier)
    return _Bound(doc, b)


def _cmd_act(ns) -> int:
    doc, cfg, cli_b = _setup(ns)
    bd = _act_bound(ns, doc, cli_b)
    name = f"{ns.symmetry} on {ns.multiplier}"
    try:
        act = action_on_multiplier(bd.sys, bd.symmetry(ns.symmetry),
                                   bd.multiplier(ns.multiplier), cfg)
        red = multiplier_reduced(bd.sys, act)
        res = invariance_check(bd.sys, bd.symmetry(ns.symmetry),
                               bd.multiplier(ns.multiplier), cfg)
        details = _format_components(bd.sys.ctx, red)
        lam = to_str(res.lam) if res.lam is not None else None
        results = [_result(name, res.kind, lam=lam, details=details)]
    except ClawError as err:
        results = [_result(name, type(err).__name__, details=str(err))]
    return _emit([_report(ns, doc, results, cli_b)], ns.json)


def _cmd_invariance(ns) -> int:
    doc, cfg, cli_b = _setup(ns)
    bd = _act_bound(ns, doc, cli_b)
    name = f"{ns.symmetry} on {ns.multiplier}"
    try:
        res = invariance_check(bd.sys, bd.symmetry(ns.symmetry),
                               bd.multiplier(ns.multiplier), cfg)
        lam = to_str(res.lam) if res.lam is not None else None
        details = res.detail or None
        results = [_result(name, res.kind, lam=lam, details=details)]
    except ClawError as err:
        results = [_result(name, type(err).__name__, details=str(err))]
    return _emit([_report(ns, doc, results, cli_b)], ns.json)


def _parse_vector(text: str, n: int, what: str) -> tuple:
    try:
        vec = tuple(Fraction(v.strip()) for v in text.split(","))
    except (ValueError, ZeroDivisionError):
        raise DomainError(f"bad {what} vector {text!r}")
    if len(vec) != n:
        raise DomainError(f"{what} vector needs {n} entries, got "
                          + str(len(vec)))
    return vec


def _span_decl(ns, doc, cli_b):
    """The aceqs block naming the spans for homog, with merged bindings."""
    if ns.aceqs:
        decl = _get(doc.aceqs, ns.aceqs, "aceqs block")
    elif doc.aceqs:
        decl = next(iter(doc.aceqs.values()))
    else:
        p_names = tuple(n for n, o in doc.symmetries.items()
                        if _consistent(o.when, cli_b))
        q_names = tuple(n for n, o in doc.multipliers.items()
                        if _consistent(o.when, cli_b))
        from .parser import AceqsDecl
        decl = AceqsDecl("span", p_names, q_names, ())
    b = _merge_when(cli_b, decl.when, decl.name)
    for n in decl.p_names:
        b = _merge_when(b, doc.symmetries[n].when, n)
    for n in decl.q_names:
        b = _merge_when(b, doc.multipliers[n].when, n)
    return decl, _Bound(doc, b)


def _cmd_homog(ns) -> int:
    doc, cfg, cli_b = _setup(ns)
    decl, bd = _span_decl(ns, doc, cli_b)
    ps = [bd.symmetry(n) for n in decl.p_names]
    qs = [bd.multiplier(n) for n in decl.q_names]
    try:
        if ns.eigen:
            if not ns.c:
                raise DomainError("--eigen needs --c")
            cvec = _parse_vector(ns.c, len(ps), "--c")
            p = {v: add(*[mul(rat(c), pj[v])
                          for c, pj in zip(cvec, ps)] or [ZERO])
                 for v in bd.sys.ctx.dep}
            am = action_matrix(bd.sys, p, qs, cfg)
            results = [_result(decl.name, "Info", details=str(am))]
        elif ns.a:
            avec = _parse_vector(ns.a, len(qs), "--a")
            bs = bilinear_system(bd.sys, ps, qs, cfg)
            sol = solve_fixed_a(bs, avec)
            lam = (to_str(sol.bindings["lam"])
                   if "lam" in sol.bindings else None)
            results = [_result(decl.name, "Info", lam=lam,
                               details=str(sol))]
        else:
            bs = bilinear_system(bd.sys, ps, qs, cfg)
            body = "\n".join("0 = " + to_str(e) for e in bs.equations)
            results = [_result(decl.name, "Info",
                               details=body or "no constraints")]
    except ClawError as err:
        results = [_result(decl.name, type(err).__name__,
                           details=str(err))]
    return _emit([_report(ns, doc, results, cli_b)], ns.json)


def _cmd_reconstruct(ns) -> int:
    doc, cfg, cli_b = _setup(ns)
    names = ns.names or [n for n, o in doc.multipliers.items()
                         if _consistent(o.when, cli_b)]
    results = []
    for nm in names:
        obj = _get(doc.multipliers, nm, "multiplier")
        bd = _Bound(doc, _merge_when(cli_b, obj.when, nm))
        ctx = bd.sys.ctx
        try:
            w, cur = scaling_reconstruct(bd.sys, bd.multiplier(nm),
                                         bd.weights(), cfg)
            lines = [f"w = {to_str(w)}",
                     f"T = {to_str(cur.t, ctx)}"]
            for v, comp in zip(ctx.indep[1:], cur.x):
                lines.append(f"X.{v} = {to_str(comp, ctx)}")
            results.append(_result(nm, "Pass", details="\n".join(lines)))
        except ClawError as err:
            results.append(_result(nm, type(err).__name__,
                                   details=str(err)))
    return _emit([_report(ns, doc, results, cli_b)], ns.json)


def _cmd_solve_ansatz(ns) -> int:
    doc, cfg, cli_b = _setup(ns)
    bd = _Bound(doc, cli_b)
    keys = doc.system.eq_ids if ns.which == "multiplier" \
        else doc.system.ctx.dep
    basis = []
    for term in ns.terms:
        if ":" in term:
            comps = {}
            for part in term.split(";"):
                slot, _, body = part.partition(":")
                slot = slot.strip()
                if slot not in keys:
                    raise DomainError(f"unknown component {slot!r}")
                comps[slot] = bd.expr(
                    parse_in_system(body, doc.system))
            basis.append(comps)
        else:
            basis.append(bd.expr(parse_in_system(term, doc.system)))
    try:
        sols = solve_linear_ansatz(bd.sys, basis, ns.which, cfg)
        if not sols:
            results = [_result("ansatz", "Info", details="no solutions")]
        else:
            results = [
                _result(f"sol{i + 1}", "Info",
                        details=_format_components(bd.sys.ctx, sol))
                for i, sol in enumerate(sols)]
    except ClawError as err:
        results = [_result("ansatz", type(err).__name__,
                           details=str(err))]
    return _emit([_report(ns, doc, results, cli_b)], ns.json)


# ---------------------------------------------------------------------------
# expectation evaluation

def _bilinear_for(doc, decl, bindings: dict, cfg, cache: dict):
    b = _merge_when(bindings, decl.when, decl.name)
    for n in decl.p_names:
        b = _merge_when(b, doc.symmetries[n].when, n)
    for n in decl.q_names:
        b = _merge_when(b, doc.multipliers[n].when, n)
    key = (decl.name, tuple(sorted(b.items())))
    hit = cache.get(key)
    if hit is not None:
        return hit
    bd = _Bound(doc, b)
    bs = bilinear_system(bd.sys,
                         [bd.symmetry(n) for n in decl.p_names],
                         [bd.multiplier(n) for n in decl.q_names], cfg)
    cache[key] = (bd, bs)
    return bd, bs


def evaluate_expect(doc, exp, cli_bindings: dict, cfg,
                    cache: Optional[dict] = None) -> dict:
    """Evaluate one [expect] assertion; returns a result record."""
    cache = cache if cache is not None else {}
    name = exp.name
    t = exp.that
    kind = t[0]
    try:
        base = _merge_when(cli_bindings, exp.when, name)

        if kind in _CHECK_TABLES:
            want = t[2]
            obj = getattr(doc, _CHECK_TABLES[kind])[t[1]]
            bd = _Bound(doc, _merge_when(base, obj.when, t[1]))
            if kind == "symmetry":
                got = check_symmetry(bd.sys, bd.symmetry(t[1]), cfg)
            elif kind == "multiplier":
                got = check_multiplier(bd.sys, bd.multiplier(t[1]), cfg)
            elif kind == "adjoint":
                got = check_adjoint_symmetry(bd.sys, bd.multiplier(t[1]),
                                             cfg)
            elif kind == "helmholtz":
                got = check_helmholtz(bd.sys, bd.multiplier(t[1]), cfg)
            else:
                got = verify_current(bd.sys, bd.current(t[1]), None, cfg)
            if got is want:
                return _result(name, "Pass")
            return _result(name, "Fail", details=(
                f"{kind} check on {t[1]} returned "
                + ("pass" if got else "fail")))

        if kind == "pairing":
            b = _merge_when(base, doc.currents[t[1]].when, t[1])
            b = _merge_when(b, doc.multipliers[t[2]].when, t[2])
            bd = _Bound(doc, b)
            qx, corr = extract_multiplier(bd.sys, bd.current(t[1]), cfg)
            if not verify_current(bd.sys, corr, qx, cfg):
                return _result(name, "Fail", details=(
                    "corrected current fails the characteristic "
                    "identity"))
            s = multipliers_match(bd.sys, qx, bd.multiplier(t[2]), cfg)
            if s is None:
                return _result(name, "Fail", details=(
                    f"extracted multiplier of {t[1]} is not a rational "
                    f"multiple of {t[2]}"))
            if t[3] is not None and s != t[3]:
                return _result(name, "Fail", details=(
                    f"scale = {s}, expected {t[3]}"))
            return _result(name, "Pass", details=f"scale = {s}")

        if kind == "rop":
            _, rkind, target, tname = t
            table = (doc.symmetries if rkind == "symmetry"
                     else doc.multipliers)
            b = _merge_when(base, table[target].when, target)
            b = _merge_when(b, doc.rops[tname].when, tname)
            bd = _Bound(doc, b)
            if rkind == "symmetry":
                actual = r_of_symmetry(bd.sys, bd.symmetry(target), cfg)
            else:
                actual = r_of_multiplier(bd.sys, bd.multiplier(target),
                                         cfg)
            expected = bd.rop_rows(tname)
            for row in sorted(set(actual) | set(expected)):
                if not goperator_equal(bd.sys,
                                       actual.get(row, _EMPTY_OP),
                                       expected.get(row, _EMPTY_OP),
                                       cfg):
                    return _result(name, "Fail",
                                   details=f"row {row} differs")
            return _result(name, "Pass")

        if kind == "invariance":
            _, pn, qn, want, lamx = t
            b = _merge_when(base, doc.symmetries[pn].when, pn)
            b = _merge_when(b, doc.multipliers[qn].when, qn)
            bd = _Bound(doc, b)
            res = invariance_check(bd.sys, bd.symmetry(pn),
                                   bd.multiplier(qn), cfg)
            ok = res.kind.lower() == want
            if ok and want == "homogeneous":
                ok = is_zero(add(res.lam, mul(MINUS_ONE, bd.expr(lamx))),
                             bd.sys.ctx.params, cfg)
            lam = to_str(res.lam) if res.lam is not None else None
            if ok:
                return _result(name, "Pass", lam=lam)
            return _result(name, "Fail", lam=lam, details=str(res))

        if kind == "reconstruct":
            _, qn, target, sc = t
            b = _merge_when(base, doc.multipliers[qn].when, qn)
            literal = target in ("critical", "indeterminate")
            if not literal:
                b = _merge_when(b, doc.currents[target].when, target)
            bd = _Bound(doc, b)
            try:
                w, cur = scaling_reconstruct(bd.sys, bd.multiplier(qn),
                                             bd.weights(), cfg)
            except ScalingCritical as err:
                if target == "critical":
                    return _result(name, "Pass")
                return _result(name, "Fail", details=str(err))
            except WeightIndeterminate as err:
                if target == "indeterminate":
                    return _result(name, "Pass")
                return _result(name, "Fail", details=str(err))
            if literal:
                return _result(name, "Fail", details=(
                    "reconstruction succeeded with w = " + to_str(w)))
            want = bd.current(target).scale(rat(sc))
            if currents_equivalent(bd.sys, cur, want, cfg):
                return _result(name, "Pass",
                               details=f"w = {to_str(w)}")
            return _result(name, "Fail", details=(
                f"reconstructed current differs from {target} by a "
                "nontrivial current"))

        if kind == "aceqs":
            decl = doc.aceqs[t[1]]
            bd, bs = _bilinear_for(doc, decl, base, cfg, cache)
            expected = [bd.expr(e) for e in decl.equations]
            if equations_match(bs, expected, cfg):
                return _result(name, "Pass", details=(
                    f"{len(bs.equations)} equations"))
            got = "; ".join("0 = " + to_str(e) for e in bs.equations)
            return _result(name, "Fail", details=(
                "computed equations differ: " + (got or "none")))

        if kind == "homog":
            _, acename, avec, lamx = t
            decl = doc.aceqs[acename]
            bd, bs = _bilinear_for(doc, decl, base, cfg, cache)
            sol = solve_fixed_a(bs, avec)
            if "lam" not in sol.bindings:
                return _result(name, "Fail", details=(
                    "lam is not determined: " + str(sol)))
            lam = sol.bindings["lam"]
            # compare on the solution space: reduce the stated value
            # through the solved constraints on the c coefficients
            fix = {par(n): e for n, e in sol.bindings.items()
                   if n != "lam"}
            want = subs(bd.expr(lamx), fix) if fix else bd.expr(lamx)
            if is_zero(add(lam, mul(MINUS_ONE, want)),
                       bs.params, cfg):
                return _result(name, "Pass", lam=to_str(lam))
            return _result(name, "Fail", lam=to_str(lam),
                           details="expected lam = " + to_str(bd.expr(lamx)))

        raise DomainError(f"unknown assertion kind {kind!r}")
    except ClawError as err:
        return _result(name, type(err).__name__, details=str(err))


def run_expects(doc, cli_bindings: dict, cfg) -> list:
    cache: dict = {}
    return [evaluate_expect(doc, e, cli_bindings, cfg, cache)
            for e in doc.expects]


def _cmd_regress(ns) -> int:
    cfg = ZeroTest(ns.zero_test or BOTH, ns.trials, ns.tol, ns.seed)
    cli_b = _parse_param_flags(ns.param)
    reports = []
    for path in ns.files:
        with open(path, encoding="utf-8") as fh:
            doc = parse_document(fh.read(), cfg)
        results = run_expects(doc, cli_b, cfg)
        reports.append(_report(ns, doc, results, cli_b))
    return _emit(reports, ns.json)


# ---------------------------------------------------------------------------
# argument parsing

def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--param", action="append", metavar="NAME=VALUE",
                        default=[],
                        help="bind a parameter to a rational value")
    common.add_argument("--zero-test", dest="zero_test",
                        choices=["canonical", "numeric", "both"],
                        help="zero-test mode (default: canonical, "
                        "regress: both)")
    common.add_argument("--trials", type=int, default=8)
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--json", action="store_true",
                        help="machine-readable report")

    ap = argparse.ArgumentParser(
        prog="claw",
        description="Verify and classify conservation laws of normal "
        "PDE systems.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common],
                       help="run a verification check")
    p.add_argument("kind", choices=list(_CHECK_TABLES))
    p.add_argument("file")
    p.add_argument("names", nargs="*",
                   help="declared objects (default: all that apply)")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("rop", parents=[common],
                       help="solved-form operator table of a symmetry "
                       "or multiplier")
    p.add_argument("kind", choices=["symmetry", "multiplier"])
    p.add_argument("file")
    p.add_argument("name")
    p.set_defaults(func=_cmd_rop)

    p = sub.add_parser("act", parents=[common],
                       help="action of a symmetry on a multiplier")
    p.add_argument("file")
    p.add_argument("symmetry")
    p.add_argument("multiplier")
    p.set_defaults(func=_cmd_act)

    p = sub.add_parser("invariance", parents=[common],
                       help="classify a multiplier under a symmetry")
    p.add_argument("file")
    p.add_argument("symmetry")
    p.add_argument("multiplier")
    p.set_defaults(func=_cmd_invariance)

    p = sub.add_parser("homog", parents=[common],
                       help="classification equations for declared spans")
    p.add_argument("file")
    p.add_argument("--aceqs", metavar="NAME",
                   help="use the named aceqs block (default: first)")
    p.add_argument("--a", metavar="CSV",
                   help="solve with these assumed multiplier "
                   "coefficients")
    p.add_argument("--eigen", action="store_true",
                   help="action matrix and eigenvectors")
    p.add_argument("--c", metavar="CSV",
                   help="symmetry coefficients for --eigen")
    p.set_defaults(func=_cmd_homog)

    p = sub.add_parser("reconstruct", parents=[common],
                       help="rebuild currents from multipliers through "
                       "the scaling symmetry")
    p.add_argument("file")
    p.add_argument("names", nargs="*")
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("solve-ansatz", parents=[common],
                       help="solve determining equations over a span")
    p.add_argument("which", choices=["multiplier", "symmetry"])
    p.add_argument("file")
    p.add_argument("terms", nargs="+", metavar="term",
                   help="basis expression, or slot:expr;slot:expr")
    p.set_defaults(func=_cmd_solve_ansatz)

    p = sub.add_parser("regress", parents=[common],
                       help="evaluate every [expect] block")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=_cmd_regress)
    return ap


def main(argv=None) -> int:
    ns = _build_parser().parse_args(argv)
    try:
        return ns.func(ns)
    except ClawError as err:
        print(f"error: {err}", file=_sysmod.stderr)
        return 2
    except OSError as err:
        print(f"error: {err}", file=_sysmod.stderr)
        return 2


if __name__ == "__main__":
    _sysmod.exit(main())
