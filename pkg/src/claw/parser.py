"""Document format and expression grammar.

A corpus document is sectioned key-value text: a [system] block
declaring variables, parameters, equations and leads, followed by any
number of [symmetry], [multiplier], [current], [rop], [aceqs] and
[expect] blocks. Expressions use `+ - * / ^` (with `^` right
associative), `exp(...)`, `ln(...)`, integer and rational literals, and
jet variables written as the dependent name, an underscore, and a
string of independent-variable letters (`u_txx`; the letter multiset is
canonicalized, so `u_xt` equals `u_tx`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .calculus import Context
from .errors import ParseError, UnknownSymbol
from .expr import (
    Expr, Jet, Param, ZERO, add, div, exp_, is_scalar, jet, ln_, mul, neg,
    par, pow_, rat, sub, to_str, var,
)
from .system import GOperator, PdeSystem, RANKINGS
from .zerotest import ZeroTest

__all__ = [
    "CorpusDocument", "SymmetryDecl", "MultiplierDecl", "CurrentDecl",
    "RopDecl", "AceqsDecl", "ExpectDecl", "parse_document",
    "parse_expression", "print_document",
]


# ---------------------------------------------------------------------------
# expression grammar

_OPS = set("+-*/^()")
_FUNCS = {"exp", "ln"}


class _Scope:
    """Resolves identifiers to kernel atoms."""

    def __init__(self, indep=(), dep=(), params=(), extra=()):
        self.indep = tuple(indep)
        self.dep = set(dep)
        self.params = set(params)
        self.extra = set(extra)
        self.letters = {}
        for i, name in enumerate(self.indep):
            self.letters[name] = i

    def resolve(self, word: str, line, col) -> Expr:
        if "_" in word:
            head, _, tail = word.rpartition("_")
            if head in self.dep and tail and \
                    all(ch in self.letters for ch in tail):
                midx = [0] * len(self.indep)
                for ch in tail:
                    midx[self.letters[ch]] += 1
                return jet(head, tuple(midx))
            raise UnknownSymbol(f"unknown symbol {word!r}", line, col)
        if word in self.dep:
            return jet(word, (0,) * len(self.indep))
        if word in self.letters:
            return var(word)
        if word in self.params or word in self.extra:
            return par(word)
        raise UnknownSymbol(f"unknown symbol {word!r}", line, col)


class _ExprParser:
    def __init__(self, text: str, scope: _Scope, line: int, col0: int):
        self.text = text
        self.scope = scope
        self.line = line
        self.col0 = col0
        self.pos = 0
        self.toks = self._lex()
        self.i = 0

    def _err(self, msg: str, pos: int):
        raise ParseError(msg, self.line, self.col0 + pos + 1)

    def _lex(self):
        toks = []
        i = 0
        s = self.text
        while i < len(s):
            ch = s[i]
            if ch.isspace():
                i += 1
                continue
            if ch in _OPS:
                toks.append((ch, ch, i))
                i += 1
                continue
            if ch.isdigit():
                j = i
                while j < len(s) and s[j].isdigit():
                    j += 1
                toks.append(("num", s[i:j], i))
                i = j
                continue
            if ch.isalpha() or ch == "_":
                j = i
                while j < len(s) and (s[j].isalnum() or s[j] == "_"):
                    j += 1
                toks.append(("word", s[i:j], i))
                i = j
                continue
            self._err(f"unexpected character {ch!r}", i)
        toks.append(("end", "", len(s)))
        return toks

    def _peek(self):
        return self.toks[self.i]

    def _next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def parse(self) -> Expr:
        e = self._sum()
        kind, val, pos = self._peek()
        if kind != "end":
            self._err(f"unexpected {val!r}", pos)
        return e

    def _sum(self) -> Expr:
        e = self._product()
        while True:
            kind, _v, _p = self._peek()
            if kind == "+":
                self._next()
                e = add(e, self._product())
            elif kind == "-":
                self._next()
                e = sub(e, self._product())
            else:
                return e

    def _product(self) -> Expr:
        e = self._unary()
        while True:
            kind, _v, pos = self._peek()
            if kind == "*":
                self._next()
                e = mul(e, self._unary())
            elif kind == "/":
                self._next()
                e = self._guard(lambda rhs=self._unary(): div(e, rhs), pos)
            else:
                return e

    def _unary(self) -> Expr:
        kind, _v, _p = self._peek()
        if kind == "-":
            self._next()
            return neg(self._unary())
        return self._power()

    def _power(self) -> Expr:
        base = self._atom()
        kind, _v, pos = self._peek()
        if kind == "^":
            self._next()
            expo = self._unary()
            return self._guard(lambda: pow_(base, expo), pos)
        return base

    def _guard(self, thunk, pos: int) -> Expr:
        from .errors import ExprError
        try:
            return thunk()
        except ExprError as ex:
            self._err(str(ex), pos)

    def _atom(self) -> Expr:
        kind, val, pos = self._next()
        if kind == "num":
            return rat(Fraction(val))
        if kind == "(":
            e = self._sum()
            k2, v2, p2 = self._next()
            if k2 != ")":
                self._err("expected ')'", p2)
            return e
        if kind == "word":
            if val in _FUNCS and self._peek()[0] == "(":
                self._next()
                arg = self._sum()
                k2, _v2, p2 = self._next()
                if k2 != ")":
                    self._err("expected ')'", p2)
                fn = exp_ if val == "exp" else ln_
                return self._guard(lambda: fn(arg), pos)
            return self.scope.resolve(val, self.line, self.col0 + pos + 1)
        self._err(f"unexpected {val!r}" if val else "unexpected end of "
                  "expression", pos)


def parse_expression(text: str, scope: _Scope, line: int = 0,
                     col0: int = 0) -> Expr:
    return _ExprParser(text, scope, line, col0).parse()


def parse_in_system(text: str, sys: PdeSystem,
                    extra: Sequence[str] = ()) -> Expr:
    """Parse a standalone expression in the scope of a system."""
    scope = _Scope(sys.ctx.indep, sys.ctx.dep,
                   [p.name for p in sys.ctx.params], list(extra))
    return parse_expression(text, scope)


# ---------------------------------------------------------------------------
# document model

@dataclass(frozen=True)
class SymmetryDecl:
    name: str
    comps: dict                       # dep name -> Expr
    when: dict = field(default_factory=dict)


@dataclass(frozen=True)
class MultiplierDecl:
    name: str
    comps: dict                       # eq id -> Expr
    when: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CurrentDecl:
    name: str
    comps: tuple                      # aligned with indep order
    when: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RopDecl:
    """A solved-form operator table: kind is 'symmetry' or 'multiplier',
    target names the object it belongs to, rows maps a row label to a
    GOperator."""

    name: str
    kind: str
    target: str
    rows: dict
    when: dict = field(default_factory=dict)


@dataclass(frozen=True)
class AceqsDecl:
    """Expected classification equations for the spans of the named
    symmetries and multipliers."""

    name: str
    p_names: tuple
    q_names: tuple
    equations: tuple
    when: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExpectDecl:
    name: str
    that: tuple                       # parsed assertion, kind first
    when: dict = field(default_factory=dict)


@dataclass
class CorpusDocument:
    system: PdeSystem
    scaling: Optional[dict]
    symmetries: dict
    multipliers: dict
    currents: dict
    rops: dict
    aceqs: dict
    expects: list

    def __eq__(self, other):
        if not isinstance(other, CorpusDocument):
            return NotImplemented
        return _system_sig(self.system) == _system_sig(other.system) and \
            self.scaling == other.scaling and \
            self.symmetries == other.symmetries and \
            self.multipliers == other.multipliers and \
            self.currents == other.currents and \
            self.rops == other.rops and \
            self.aceqs == other.aceqs and \
            self.expects == other.expects


def _system_sig(sys: PdeSystem):
    return (
        sys.name, sys.ctx.indep, sys.ctx.dep,
        tuple((p.name, p.nonzero, p.excluded) for p in sys.ctx.params),
        sys.ranking.name,
        tuple((e.eq_id, e.expr, e.lead) for e in sys.eqs),
    )


# ---------------------------------------------------------------------------
# document parser

def _split_lines(text: str):
    for idx, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].rstrip()
        if not body.strip():
            continue
        yield idx, body


def _parse_when(value: str, params, line: int) -> dict:
    out = {}
    names = {p.name for p in params}
    for tok in value.split():
        if "=" not in tok:
            raise ParseError(f"bad binding {tok!r}, expected name=value",
                             line)
        name, _, v = tok.partition("=")
        if name not in names:
            raise ParseError(f"unknown parameter {name!r} in when", line)
        try:
            out[name] = Fraction(v)
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"bad rational {v!r} in when", line) from None
    return out


def _parse_jet_name(word: str, scope: _Scope, line: int):
    e = scope.resolve(word, line, None)
    from .expr import Jet
    if not isinstance(e, Jet):
        raise ParseError(f"{word!r} is not a jet variable", line)
    return e


def _parse_col_key(word: str, eq_ids, scope: _Scope, line: int):
    """Equation id with optional jet-style suffix: G, G_x, G1_tx."""
    n = len(scope.indep)
    if word in eq_ids:
        return word, (0,) * n
    head, _, tail = word.rpartition("_")
    if head in eq_ids and tail and all(ch in scope.letters for ch in tail):
        midx = [0] * n
        for ch in tail:
            midx[scope.letters[ch]] += 1
        return head, tuple(midx)
    raise ParseError(f"bad operator column {word!r}", line)


_EXPECT_KINDS = {
    "symmetry", "multiplier", "adjoint", "helmholtz", "current",
    "pairing", "rop", "invariance", "reconstruct", "aceqs", "homog",
}


def _parse_that(value: str, scope: _Scope, line: int,
                aceqs: Optional[dict] = None) -> tuple:
    words = value.split()
    if not words:
        raise ParseError("empty assertion", line)
    kind = words[0]
    if kind not in _EXPECT_KINDS:
        raise ParseError(f"unknown assertion kind {kind!r}", line)
    rest = words[1:]

    def flag(w):
        if w not in ("pass", "fail"):
            raise ParseError(f"expected pass or fail, got {w!r}", line)
        return w == "pass"

    if kind in ("symmetry", "multiplier", "adjoint", "helmholtz",
                "current"):
        if len(rest) != 2:
            raise ParseError(f"{kind} assertion needs a name and "
                             "pass/fail", line)
        return (kind, rest[0], flag(rest[1]))
    if kind == "pairing":
        if len(rest) == 2:
            return (kind, rest[0], rest[1], None)
        if len(rest) == 4 and rest[2] == "scale":
            return (kind, rest[0], rest[1], Fraction(rest[3]))
        raise ParseError("pairing assertion: current multiplier "
                         "[scale s]", line)
    if kind == "rop":
        if len(rest) != 3 or rest[0] not in ("symmetry", "multiplier"):
            raise ParseError("rop assertion: symmetry|multiplier name "
                             "table", line)
        return (kind, rest[0], rest[1], rest[2])
    if kind == "invariance":
        if len(rest) == 3 and rest[2] in ("invariant", "neither"):
            return (kind, rest[0], rest[1], rest[2], None)
        if len(rest) >= 4 and rest[2] == "homogeneous":
            lam = parse_expression(" ".join(rest[3:]), scope, line)
            return (kind, rest[0], rest[1], "homogeneous", lam)
        raise ParseError("invariance assertion: P Q "
                         "invariant|neither|homogeneous expr", line)
    if kind == "reconstruct":
        if len(rest) == 2:
            return (kind, rest[0], rest[1], Fraction(1))
        if len(rest) == 4 and rest[2] == "scale":
            return (kind, rest[0], rest[1], Fraction(rest[3]))
        raise ParseError("reconstruct assertion: Q current|critical"
                         "|indeterminate [scale s]", line)
    if kind == "aceqs":
        if len(rest) != 1:
            raise ParseError("aceqs assertion: name", line)
        return (kind, rest[0])
    if kind == "homog":
        if len(rest) >= 4 and rest[2] == "lambda":
            ace = (aceqs or {}).get(rest[0])
            if ace is None:
                raise ParseError(f"homog refers to undeclared aceqs "
                                 f"{rest[0]!r}", line)
            avec = tuple(Fraction(v) for v in rest[1].split(","))
            extra = [f"c{j + 1}" for j in range(len(ace.p_names))]
            extra.append("lam")
            cscope = _Scope(scope.indep, scope.dep, scope.params, extra)
            lam = parse_expression(" ".join(rest[3:]), cscope, line)
            return (kind, rest[0], avec, lam)
        raise ParseError("homog assertion: aceqs-name a1,a2,... lambda "
                         "expr", line)
    raise ParseError(f"unknown assertion kind {kind!r}", line)


def _validate_refs(symmetries, multipliers, currents, rops, aceqs,
                   expects):
    """Every cross-reference in rop, aceqs and expect blocks must name a
    declared object."""

    def need(table, name, what, where):
        if name not in table:
            raise ParseError(f"{where} refers to unknown {what} {name!r}")

    for r in rops.values():
        table = symmetries if r.kind == "symmetry" else multipliers
        need(table, r.target, r.kind, f"[rop] {r.name}")
    for a in aceqs.values():
        for n in a.p_names:
            need(symmetries, n, "symmetry", f"[aceqs] {a.name}")
        for n in a.q_names:
            need(multipliers, n, "multiplier", f"[aceqs] {a.name}")
    for e in expects:
        t, w = e.that, f"[expect] {e.name}"
        kind = t[0]
        if kind == "symmetry":
            need(symmetries, t[1], "symmetry", w)
        elif kind in ("multiplier", "adjoint", "helmholtz"):
            need(multipliers, t[1], "multiplier", w)
        elif kind == "current":
            need(currents, t[1], "current", w)
        elif kind == "pairing":
            need(currents, t[1], "current", w)
            need(multipliers, t[2], "multiplier", w)
        elif kind == "rop":
            table = symmetries if t[1] == "symmetry" else multipliers
            need(table, t[2], t[1], w)
            need(rops, t[3], "rop table", w)
            r = rops[t[3]]
            if r.kind != t[1] or r.target != t[2]:
                raise ParseError(f"{w}: table {t[3]!r} belongs to "
                                 f"{r.kind} {r.target!r}")
        elif kind == "invariance":
            need(symmetries, t[1], "symmetry", w)
            need(multipliers, t[2], "multiplier", w)
        elif kind == "reconstruct":
            need(multipliers, t[1], "multiplier", w)
            if t[2] not in ("critical", "indeterminate"):
                need(currents, t[2], "current", w)
        elif kind == "aceqs":
            need(aceqs, t[1], "aceqs block", w)
        elif kind == "homog":
            a = aceqs[t[1]]
            if len(t[2]) != len(a.q_names):
                raise ParseError(f"{w}: expected {len(a.q_names)} assumed"
                                 " coefficients, got " + str(len(t[2])))


def parse_document(text: str, cfg: Optional[ZeroTest] = None) \
        -> CorpusDocument:
    blocks = []
    current = None
    for line_no, body in _split_lines(text):
        stripped = body.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = (stripped[1:-1], line_no, [])
            blocks.append(current)
            continue
        if current is None:
            raise ParseError("content before the first section header",
                             line_no)
        if "=" not in body:
            raise ParseError("expected key = value", line_no)
        key, _, value = body.partition("=")
        current[2].append((line_no, key.strip(), value.strip(),
                           len(key) + 1))
    if not blocks or blocks[0][0] != "system":
        raise ParseError("document must start with a [system] block",
                         blocks[0][1] if blocks else 1)

    # ---- [system]
    head = blocks[0]
    name = None
    indep: tuple = ()
    dep: tuple = ()
    params: list = []
    ranking = "xmajor"
    eq_lines: dict = {}
    lead_lines: dict = {}
    scaling_line = None
    for line_no, key, value, vcol in head[2]:
        if key == "name":
            name = value
        elif key == "indep":
            indep = tuple(value.split())
        elif key == "dep":
            dep = tuple(value.split())
        elif key == "param":
            words = value.split()
            if not words:
                raise ParseError("empty param declaration", line_no)
            pname = words[0]
            nonzero = False
            excluded = []
            i = 1
            while i < len(words):
                if words[i] == "nonzero":
                    nonzero = True
                    i += 1
                elif words[i] == "exclude" and i + 1 < len(words):
                    excluded.append(Fraction(words[i + 1]))
                    i += 2
                else:
                    raise ParseError(
                        f"bad param attribute {words[i]!r}", line_no)
            params.append(Param(pname, nonzero, excluded))
        elif key == "ranking":
            if value not in RANKINGS:
                raise ParseError(f"unknown ranking {value!r}", line_no)
            ranking = value
        elif key == "scaling":
            scaling_line = (line_no, value)
        elif key.startswith("eq."):
            eq_lines[key[3:]] = (line_no, value, vcol)
        elif key.startswith("lead."):
            lead_lines[key[5:]] = (line_no, value)
        else:
            raise ParseError(f"unknown system key {key!r}", line_no)
    if name is None or not indep or not dep or not eq_lines:
        raise ParseError("[system] needs name, indep, dep and at least "
                         "one eq.<id>", head[1])
    for v in indep:
        if len(v) != 1 or not v.isalpha():
            raise ParseError(
                f"independent variable {v!r} must be a single letter",
                head[1])
    for d in dep:
        if d in _FUNCS:
            raise ParseError(f"dependent name {d!r} is reserved", head[1])
    scope = _Scope(indep, dep, [p.name for p in params])
    eqs = []
    for eq_id, (line_no, value, vcol) in eq_lines.items():
        if eq_id not in lead_lines:
            raise ParseError(f"missing lead.{eq_id}", line_no)
        expr = parse_expression(value, scope, line_no, vcol)
        llno, lval = lead_lines[eq_id]
        lead = _parse_jet_name(lval, scope, llno)
        eqs.append((eq_id, expr, lead))
    extra_leads = set(lead_lines) - set(eq_lines)
    if extra_leads:
        raise ParseError(
            "lead without equation: " + ", ".join(sorted(extra_leads)),
            head[1])
    sys = PdeSystem(name, Context(indep, dep, params), eqs,
                    ranking=RANKINGS[ranking], cfg=cfg or ZeroTest())
    scaling = None
    if scaling_line is not None:
        line_no, value = scaling_line
        scaling = {}
        for tok in value.split(","):
            tok = tok.strip()
            if ":" not in tok:
                raise ParseError(f"bad scaling entry {tok!r}, expected "
                                 "name:weight", line_no)
            vn, _, wtext = tok.partition(":")
            if vn not in indep and vn not in dep:
                raise ParseError(f"unknown variable {vn!r} in scaling",
                                 line_no)
            w = parse_expression(wtext, scope, line_no)
            if not is_scalar(w):
                raise ParseError(f"scaling weight for {vn!r} must be a "
                                 "constant", line_no)
            scaling[vn] = w
        missing = [v for v in indep + dep if v not in scaling]
        if missing:
            raise ParseError("scaling must cover every variable; missing "
                             + ", ".join(missing), line_no)

    # ---- named blocks
    symmetries: dict = {}
    multipliers: dict = {}
    currents: dict = {}
    rops: dict = {}
    aceqs: dict = {}
    expects: list = []
    eq_ids = tuple(e[0] for e in eqs)
    spatial = indep[1:]
    ace_scope_names = None

    def block_name(lines, header_line, kind):
        for line_no, key, value, _ in lines:
            if key == "name":
                return value
        raise ParseError(f"[{kind}] block needs a name", header_line)

    for kind, header_line, lines in blocks[1:]:
        if kind == "system":
            raise ParseError("duplicate [system] block", header_line)
        if kind not in ("symmetry", "multiplier", "current", "rop",
                        "aceqs", "expect"):
            raise ParseError(f"unknown section [{kind}]", header_line)
        bname = block_name(lines, header_line, kind)
        when: dict = {}
        for line_no, key, value, vcol in lines:
            if key == "when":
                when = _parse_when(value, params, line_no)
        if kind == "symmetry":
            comps = {}
            for line_no, key, value, vcol in lines:
                if key in ("name", "when"):
                    continue
                if not key.startswith("P."):
                    raise ParseError(f"unknown symmetry key {key!r}",
                                     line_no)
                d = key[2:]
                if d not in dep:
                    raise ParseError(f"unknown dependent {d!r}", line_no)
                comps[d] = parse_expression(value, scope, line_no, vcol)
            if bname in symmetries:
                raise ParseError(f"duplicate symmetry {bname!r}",
                                 header_line)
            symmetries[bname] = SymmetryDecl(bname, comps, when)
        elif kind == "multiplier":
            comps = {}
            for line_no, key, value, vcol in lines:
                if key in ("name", "when"):
                    continue
                if not key.startswith("Q."):
                    raise ParseError(f"unknown multiplier key {key!r}",
                                     line_no)
                a = key[2:]
                if a not in eq_ids:
                    raise ParseError(f"unknown equation id {a!r}", line_no)
                comps[a] = parse_expression(value, scope, line_no, vcol)
            if bname in multipliers:
                raise ParseError(f"duplicate multiplier {bname!r}",
                                 header_line)
            multipliers[bname] = MultiplierDecl(bname, comps, when)
        elif kind == "current":
            comps = {v: ZERO for v in indep}
            for line_no, key, value, vcol in lines:
                if key in ("name", "when"):
                    continue
                if key == "T":
                    comps[indep[0]] = parse_expression(value, scope,
                                                       line_no, vcol)
                elif key == "X" and len(spatial) == 1:
                    comps[spatial[0]] = parse_expression(value, scope,
                                                         line_no, vcol)
                elif key.startswith("X.") and key[2:] in spatial:
                    comps[key[2:]] = parse_expression(value, scope,
                                                      line_no, vcol)
                else:
                    raise ParseError(f"unknown current key {key!r}",
                                     line_no)
            if bname in currents:
                raise ParseError(f"duplicate current {bname!r}",
                                 header_line)
            currents[bname] = CurrentDecl(
                bname, tuple(comps[v] for v in indep), when)
        elif kind == "rop":
            rkind = None
            target = None
            rows: dict = {}
            for line_no, key, value, vcol in lines:
                if key in ("name", "when"):
                    continue
                if key == "for":
                    words = value.split()
                    if len(words) != 2 or words[0] not in ("symmetry",
                                                           "multiplier"):
                        raise ParseError(
                            "for = symmetry|multiplier name", line_no)
                    rkind, target = words
                elif key.startswith("R."):
                    parts = key.split(".")
                    if len(parts) != 3:
                        raise ParseError(f"bad operator key {key!r}, "
                                         "expected R.row.col", line_no)
                    _, row, colword = parts
                    colkey = _parse_col_key(colword, eq_ids, scope,
                                            line_no)
                    coeff = parse_expression(value, scope, line_no, vcol)
                    rows.setdefault(row, {})[colkey] = coeff
                else:
                    raise ParseError(f"unknown rop key {key!r}", line_no)
            if rkind is None:
                raise ParseError(f"[rop] {bname!r} needs a for line",
                                 header_line)
            row_names = eq_ids if rkind == "symmetry" else dep
            for row in rows:
                if row not in row_names:
                    raise ParseError(
                        f"bad operator row {row!r} for {rkind} table",
                        header_line)
            table = {row: GOperator(rows.get(row, {})) for row in row_names}
            if bname in rops:
                raise ParseError(f"duplicate rop {bname!r}", header_line)
            rops[bname] = RopDecl(bname, rkind, target, table, when)
        elif kind == "aceqs":
            p_names: tuple = ()
            q_names: tuple = ()
            equations = []
            for line_no, key, value, vcol in lines:
                if key in ("name", "when"):
                    continue
                if key == "P":
                    p_names = tuple(value.split())
                elif key == "Q":
                    q_names = tuple(value.split())
                elif key == "eq":
                    if ace_scope_names is None:
                        raise ParseError("aceqs block before P and Q "
                                         "lines", line_no)
                    equations.append(parse_expression(
                        value, ace_scope_names, line_no, vcol))
                else:
                    raise ParseError(f"unknown aceqs key {key!r}", line_no)
                if p_names and q_names and ace_scope_names is None:
                    extra = [f"a{i + 1}" for i in range(len(q_names))]
                    extra += [f"c{j + 1}" for j in range(len(p_names))]
                    extra.append("lam")
                    ace_scope_names = _Scope(indep, dep,
                                             [p.name for p in params],
                                             extra)
            if bname in aceqs:
                raise ParseError(f"duplicate aceqs {bname!r}", header_line)
            aceqs[bname] = AceqsDecl(bname, p_names, q_names,
                                     tuple(equations), when)
            ace_scope_names = None
        elif kind == "expect":
            that = None
            for line_no, key, value, vcol in lines:
                if key in ("name", "when"):
                    continue
                if key == "that":
                    that = _parse_that(value, scope, line_no, aceqs)
                else:
                    raise ParseError(f"unknown expect key {key!r}",
                                     line_no)
            if that is None:
                raise ParseError(f"[expect] {bname!r} needs a that line",
                                 header_line)
            expects.append(ExpectDecl(bname, that, when))
    _validate_refs(symmetries, multipliers, currents, rops, aceqs, expects)
    return CorpusDocument(sys, scaling, symmetries, multipliers, currents,
                          rops, aceqs, expects)


# ---------------------------------------------------------------------------
# printer

def _fmt_when(when: dict) -> str:
    return " ".join(f"{k}={v}" for k, v in sorted(when.items()))


def _jet_suffix(ctx, midx) -> str:
    return "".join(ctx.indep[i] * c for i, c in enumerate(midx))


def print_document(doc: CorpusDocument) -> str:
    sys = doc.system
    ctx = sys.ctx
    out = ["[system]", f"name = {sys.name}",
           "indep = " + " ".join(ctx.indep),
           "dep = " + " ".join(ctx.dep)]
    for p in ctx.params:
        line = f"param = {p.name}"
        if p.nonzero:
            line += " nonzero"
        for x in p.excluded:
            line += f" exclude {x}"
        out.append(line)
    if sys.ranking.name != "xmajor":
        out.append(f"ranking = {sys.ranking.name}")
    if doc.scaling is not None:
        out.append("scaling = " + ", ".join(
            f"{v}:{to_str(doc.scaling[v], ctx)}"
            for v in ctx.indep + ctx.dep))
    for e in sys.eqs:
        out.append(f"eq.{e.eq_id} = {to_str(e.expr, ctx)}")
        suffix = _jet_suffix(ctx, e.lead.midx)
        out.append(f"lead.{e.eq_id} = {e.lead.dep}"
                   + (f"_{suffix}" if suffix else ""))
    for s in doc.symmetries.values():
        out += ["", "[symmetry]", f"name = {s.name}"]
        if s.when:
            out.append(f"when = {_fmt_when(s.when)}")
        for d, e in s.comps.items():
            out.append(f"P.{d} = {to_str(e, ctx)}")
    for m in doc.multipliers.values():
        out += ["", "[multiplier]", f"name = {m.name}"]
        if m.when:
            out.append(f"when = {_fmt_when(m.when)}")
        for a, e in m.comps.items():
            out.append(f"Q.{a} = {to_str(e, ctx)}")
    for c in doc.currents.values():
        out += ["", "[current]", f"name = {c.name}"]
        if c.when:
            out.append(f"when = {_fmt_when(c.when)}")
        out.append(f"T = {to_str(c.comps[0], ctx)}")
        for i, v in enumerate(ctx.indep[1:], start=1):
            out.append(f"X.{v} = {to_str(c.comps[i], ctx)}")
    for r in doc.rops.values():
        out += ["", "[rop]", f"name = {r.name}",
                f"for = {r.kind} {r.target}"]
        if r.when:
            out.append(f"when = {_fmt_when(r.when)}")
        for row, gop in r.rows.items():
            for (b, midx), coeff in gop.items():
                suffix = _jet_suffix(ctx, midx)
                col = b + (f"_{suffix}" if suffix else "")
                out.append(f"R.{row}.{col} = {to_str(coeff, ctx)}")
    for a in doc.aceqs.values():
        out += ["", "[aceqs]", f"name = {a.name}"]
        if a.when:
            out.append(f"when = {_fmt_when(a.when)}")
        out.append("P = " + " ".join(a.p_names))
        out.append("Q = " + " ".join(a.q_names))
        for e in a.equations:
            out.append(f"eq = {to_str(e, ctx)}")
    for x in doc.expects:
        out += ["", "[expect]", f"name = {x.name}"]
        if x.when:
            out.append(f"when = {_fmt_when(x.when)}")
        out.append("that = " + _fmt_that(x.that, ctx))
    return "\n".join(out) + "\n"


def _fmt_that(that: tuple, ctx) -> str:
    kind = that[0]
    if kind in ("symmetry", "multiplier", "adjoint", "helmholtz",
                "current"):
        return f"{kind} {that[1]} {'pass' if that[2] else 'fail'}"
    if kind == "pairing":
        base = f"pairing {that[1]} {that[2]}"
        return base + (f" scale {that[3]}" if that[3] is not None else "")
    if kind == "rop":
        return f"rop {that[1]} {that[2]} {that[3]}"
    if kind == "invariance":
        if that[3] == "homogeneous":
            return (f"invariance {that[1]} {that[2]} homogeneous "
                    + to_str(that[4], ctx))
        return f"invariance {that[1]} {that[2]} {that[3]}"
    if kind == "reconstruct":
        out = f"reconstruct {that[1]} {that[2]}"
        if that[3] != 1:
            out += f" scale {that[3]}"
        return out
    if kind == "aceqs":
        return f"aceqs {that[1]}"
    if kind == "homog":
        avec = ",".join(str(v) for v in that[2])
        return f"homog {that[1]} {avec} lambda " + to_str(that[3], ctx)
    raise ValueError(f"unknown assertion {kind!r}")
