"""Normal PDE systems in solved form.

A system holds equations G^a = 0, each linear in a designated leading
derivative that is strictly maximal under the system's derivative
ranking. On top of the solved form this module provides reduction onto
the solution space, slack expansion off it (writing any expression as a
residual plus a linear differential operator acting on the G^a), and the
adjoint application of such operators.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence, Union

from .calculus import Context, d_multi, jet_partial, _signed_d_multi
from .errors import (
    DomainError, ExprError, NonTerminatingReduction, NonlinearInSlack,
    NotVanishingOnSolutions, RankingViolation,
)
from .expr import (
    Add, Expr, Jet, MINUS_ONE, Param, Rat, Slack, ZERO, _base_exp,
    _term_parts, add, contains_slack, iter_jets, midx_ge, midx_sub, mul,
    par, pow_, rat, slackv, subs, to_str,
)
from .zerotest import DEFAULT, ZeroTest, is_zero

__all__ = [
    "Ranking", "XMAJOR", "TMAJOR", "RANKINGS", "Equation", "PdeSystem",
    "GOperator", "Current", "Multiplier", "Characteristic",
    "goperator_equal",
]

# Components keyed by equation id (multipliers) or dependent variable
# name (characteristics).
Multiplier = Mapping[str, Expr]
Characteristic = Mapping[str, Expr]


class Ranking:
    """Total order on jets, given by a sort key on (multi-index, dep slot).

    xmajor compares by the count of the last spatial variable, then the
    previous ones, then the time count; tmajor puts the time count first.
    Both orders are translation invariant, so substituting a solved form
    strictly lowers rank and reduction terminates.
    """

    __slots__ = ("name", "_arrange")

    def __init__(self, name: str, arrange):
        self.name = name
        self._arrange = arrange

    def key(self, ctx: Context, w: Jet) -> tuple:
        return self._arrange(w.midx) + (ctx.dep.index(w.dep),)

    def __repr__(self) -> str:
        return f"Ranking({self.name})"


XMAJOR = Ranking("xmajor", lambda m: tuple(reversed(m[1:])) + (m[0],))
TMAJOR = Ranking("tmajor", lambda m: (m[0],) + tuple(reversed(m[1:])))
RANKINGS = {"xmajor": XMAJOR, "tmajor": TMAJOR}


class Equation:
    """One equation G = 0 in solved form coef*lead = coef*lead - G."""

    __slots__ = ("eq_id", "expr", "lead", "coef", "rhs")

    def __init__(self, eq_id: str, expr: Expr, lead: Jet, coef: Expr, rhs: Expr):
        self.eq_id = eq_id
        self.expr = expr
        self.lead = lead
        self.coef = coef
        self.rhs = rhs

    def __repr__(self) -> str:
        return f"Equation({self.eq_id}, lead={self.lead.dep}{self.lead.midx})"


class GOperator:
    """Linear differential operator acting on the equation vector:
    a finite map (equation id, MultiIndex) -> coefficient Expr."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Mapping[tuple, Expr]):
        table = {}
        for (a, m), c in coeffs.items():
            if c is not ZERO:
                table[(a, tuple(m))] = c
        self.coeffs = table

    def get(self, eq_id: str, midx) -> Expr:
        return self.coeffs.get((eq_id, tuple(midx)), ZERO)

    def items(self):
        return sorted(self.coeffs.items())

    def keys(self):
        return sorted(self.coeffs.keys())

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __len__(self) -> int:
        return len(self.coeffs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GOperator):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(frozenset(self.coeffs.items()))

    def reduced(self, sys: "PdeSystem") -> "GOperator":
        """Coefficients reduced on the solution space; zero entries drop."""
        out = {}
        for k, c in self.coeffs.items():
            r = sys.reduce_on_solutions(c)
            if not is_zero(r, sys.ctx.params, sys.cfg):
                out[k] = r
        return GOperator(out)

    def __repr__(self) -> str:
        body = ", ".join(f"{a}{list(m)}: {to_str(c)}" for (a, m), c in self.items())
        return "GOperator{" + body + "}"


def goperator_equal(sys: "PdeSystem", a: GOperator, b: GOperator,
                    cfg: ZeroTest | None = None) -> bool:
    """Coefficient maps agree after reduction on solutions."""
    cfg = cfg or sys.cfg
    ra, rb = a.reduced(sys), b.reduced(sys)
    for k in set(ra.coeffs) | set(rb.coeffs):
        d = add(ra.coeffs.get(k, ZERO), mul(MINUS_ONE, rb.coeffs.get(k, ZERO)))
        if not is_zero(d, sys.ctx.params, cfg):
            return False
    return True


class Current:
    """Conserved-current candidate: density T plus one flux per spatial
    variable, stored in independent-variable order."""

    __slots__ = ("comps",)

    def __init__(self, *comps):
        if len(comps) == 1 and isinstance(comps[0], (tuple, list)):
            comps = tuple(comps[0])
        self.comps = tuple(comps)

    @property
    def t(self) -> Expr:
        return self.comps[0]

    @property
    def x(self) -> tuple:
        return self.comps[1:]

    def divergence(self, ctx: Context) -> Expr:
        parts = []
        for vi, c in enumerate(self.comps):
            parts.append(d_multi(ctx, c, tuple(1 if i == vi else 0
                                               for i in range(len(ctx.indep)))))
        return add(*parts)

    def __add__(self, other: "Current") -> "Current":
        return Current(tuple(add(a, b) for a, b in zip(self.comps, other.comps)))

    def __sub__(self, other: "Current") -> "Current":
        return Current(tuple(add(a, mul(MINUS_ONE, b))
                             for a, b in zip(self.comps, other.comps)))

    def scale(self, c: Expr) -> "Current":
        return Current(tuple(mul(c, a) for a in self.comps))

    def __repr__(self) -> str:
        return "Current(" + ", ".join(to_str(c) for c in self.comps) + ")"


class PdeSystem:
    """A normal PDE system with a fixed solved form.

    eqs: sequence of (id, G expression, leading Jet). Construction
    validates normality: the lead occurs linearly with a nonvanishing
    coefficient, every other jet of G ranks strictly below the lead, and
    no lead is a derivative of another.
    """

    __slots__ = ("name", "ctx", "eqs", "by_id", "ranking", "cfg",
                 "assumptions", "_reducer_cache")

    def __init__(self, name: str, ctx: Context,
                 eqs: Sequence[tuple[str, Expr, Jet]],
                 ranking: Ranking = XMAJOR, cfg: ZeroTest = DEFAULT):
        self.name = name
        self.ctx = ctx
        self.ranking = ranking
        self.cfg = cfg
        self._reducer_cache = {}
        built = []
        assumptions = []
        seen_ids = set()
        n = len(ctx.indep)
        for eq_id, expr, lead in eqs:
            if eq_id in seen_ids:
                raise RankingViolation(f"duplicate equation id {eq_id!r}")
            seen_ids.add(eq_id)
            if lead.dep not in ctx.dep or len(lead.midx) != n:
                raise RankingViolation(
                    f"lead of {eq_id!r} does not fit the context")
            coef = jet_partial(expr, lead)
            if coef is ZERO:
                raise RankingViolation(
                    f"equation {eq_id!r} does not contain its lead "
                    f"{_jet_str(ctx, lead)}")
            if jet_partial(coef, lead) is not ZERO:
                raise RankingViolation(
                    f"equation {eq_id!r} is not linear in its lead "
                    f"{_jet_str(ctx, lead)}")
            if is_zero(coef, ctx.params, cfg):
                raise RankingViolation(
                    f"leading coefficient of {eq_id!r} vanishes")
            assumptions.append(
                f"coef[{eq_id}] = {to_str(coef, ctx)} is nonzero")
            lead_key = ranking.key(ctx, lead)
            for w in iter_jets(expr):
                if w is lead:
                    continue
                if ranking.key(ctx, w) >= lead_key:
                    raise RankingViolation(
                        f"jet {_jet_str(ctx, w)} in {eq_id!r} is not below "
                        f"the lead {_jet_str(ctx, lead)} under {ranking.name}")
            rest = add(expr, mul(MINUS_ONE, coef, lead))
            rhs = mul(MINUS_ONE, rest, pow_(coef, MINUS_ONE))
            built.append(Equation(eq_id, expr, lead, coef, rhs))
        for i, e1 in enumerate(built):
            for e2 in built[i + 1:]:
                if e1.lead.dep != e2.lead.dep:
                    continue
                if midx_ge(e1.lead.midx, e2.lead.midx) or \
                        midx_ge(e2.lead.midx, e1.lead.midx):
                    raise RankingViolation(
                        f"leads of {e1.eq_id!r} and {e2.eq_id!r} are "
                        f"derivatives of one another")
        self.eqs = tuple(built)
        self.by_id = {e.eq_id: e for e in built}
        self.assumptions = tuple(assumptions)

    @property
    def eq_ids(self) -> tuple:
        return tuple(e.eq_id for e in self.eqs)

    def equation(self, eq_id: str) -> Equation:
        return self.by_id[eq_id]

    def g_map(self) -> dict[str, Expr]:
        return {e.eq_id: e.expr for e in self.eqs}

    # -- reduction -------------------------------------------------------

    def _reducer(self, w: Jet):
        hit = self._reducer_cache.get(w)
        if hit is not None:
            return hit[0]
        cands = [e for e in self.eqs
                 if e.lead.dep == w.dep and midx_ge(w.midx, e.lead.midx)]
        if not cands:
            eq = None
        elif len(cands) == 1:
            eq = cands[0]
        else:
            eq = max(cands, key=lambda e: self.ranking.key(self.ctx, e.lead))
        self._reducer_cache[w] = (eq,)
        return eq

    def _substitution(self, e: Expr, with_slack: bool) -> dict:
        m = {}
        for w in iter_jets(e):
            eq = self._reducer(w)
            if eq is None:
                continue
            base = eq.rhs
            if with_slack:
                base = add(base, mul(pow_(eq.coef, MINUS_ONE),
                                     slackv(eq.eq_id, self.ctx.zero_midx())))
            m[w] = d_multi(self.ctx, base, midx_sub(w.midx, eq.lead.midx))
        return m

    def reduce_on_solutions(self, e: Expr, max_passes: int = 10000) -> Expr:
        """Substitute solved forms for every leading derivative and its
        differential consequences, to fixpoint."""
        if contains_slack(e):
            raise ExprError("reduce_on_solutions does not accept Slack nodes")
        for _ in range(max_passes):
            m = self._substitution(e, False)
            if not m:
                return e
            e = subs(e, m)
        raise NonTerminatingReduction(
            f"no fixpoint after {max_passes} passes; ranking is invalid")

    def slack_expand(self, e: Expr, max_passes: int = 10000):
        """Off-solution-space expansion e = residual + op(G).

        Leading derivatives are substituted by rhs + coef^{-1}*Slack and
        the result is split into a slack-free residual plus a GOperator.
        Slack monomials of degree two or more are absorbed by converting
        all but one factor back into explicit derivatives of G, keeping
        the identity exact; slack in any non-polynomial position raises
        NonlinearInSlack.
        """
        for _ in range(max_passes):
            m = self._substitution(e, True)
            if not m:
                break
            e = subs(e, m)
        else:
            raise NonTerminatingReduction(
                f"no fixpoint after {max_passes} passes; ranking is invalid")
        return self._decompose_slack(e)

    def _decompose_slack(self, e: Expr):
        terms = e.terms if isinstance(e, Add) else (e,)
        res = []
        table: dict[tuple, Expr] = {}
        for t in terms:
            if not contains_slack(t):
                res.append(t)
                continue
            coeff, factors = _term_parts(t)
            plain = []
            slacks = []
            for f in factors:
                if not contains_slack(f):
                    plain.append(f)
                    continue
                b, ex = _base_exp(f)
                if isinstance(b, Slack) and isinstance(ex, Rat) and \
                        ex.q.denominator == 1 and ex.q > 0:
                    slacks.append((b, int(ex.q)))
                else:
                    raise NonlinearInSlack(
                        "slack symbol in a non-polynomial position: "
                        + to_str(f))
            slacks.sort(key=lambda sn: (sn[0].eq, sn[0].midx))
            keep = slacks[-1][0]
            extra = []
            for s, npow in slacks:
                nconv = npow - 1 if s is keep else npow
                if nconv:
                    gexpr = d_multi(self.ctx, self.by_id[s.eq].expr, s.midx)
                    extra.append(pow_(gexpr, rat(nconv)))
            c = mul(rat(coeff), *plain, *extra)
            key = (keep.eq, keep.midx)
            table[key] = add(table.get(key, ZERO), c)
        return add(*res), GOperator(table)

    # -- operator assembly ----------------------------------------------

    def extract_R(self, e: Expr, cfg: ZeroTest | None = None) -> GOperator:
        """The GOperator of an expression that vanishes on solutions."""
        residual, op = self.slack_expand(e)
        if not is_zero(residual, self.ctx.params, cfg or self.cfg):
            raise NotVanishingOnSolutions(
                f"residual {to_str(residual, self.ctx)} is not zero on "
                f"the solution space")
        return op

    def apply_G(self, op: GOperator) -> Expr:
        parts = []
        for (a, m), c in op.items():
            parts.append(mul(c, d_multi(self.ctx, self.by_id[a].expr, m)))
        return add(*parts)

    def adjoint_apply(self, op, w) -> dict[str, Expr]:
        """Adjoint action: out[b] = sum over rows r and keys (b, J) of
        (-D)_J(op_r[b, J] * w_r).

        op may be a single GOperator with w a single Expr, or a mapping
        of row label -> GOperator with w a matching mapping of Exprs.
        """
        if isinstance(op, GOperator):
            rows = {None: op}
            wm = {None: w}
        else:
            rows = dict(op)
            wm = dict(w)
        parts: dict[str, list] = {}
        for r, gop in rows.items():
            h = wm[r]
            for (b, m), c in gop.items():
                parts.setdefault(b, []).append(
                    _signed_d_multi(self.ctx, mul(c, h), m))
        return {b: add(*ps) for b, ps in sorted(parts.items())}

    # -- parameter binding ------------------------------------------------

    def bind_params(self, bindings: Mapping[str, Union[int, Fraction]]) -> "PdeSystem":
        """Substitute rational values for parameters and revalidate."""
        m = {}
        for name, value in bindings.items():
            spec = next((p for p in self.ctx.params if p.name == name), None)
            if spec is None:
                raise DomainError(f"unknown parameter {name!r}")
            q = Fraction(value)
            if not spec.allows(q):
                raise DomainError(
                    f"value {q} is excluded for parameter {name!r}")
            m[par(name)] = rat(q)
        params = tuple(p for p in self.ctx.params if p.name not in bindings)
        ctx = Context(self.ctx.indep, self.ctx.dep, params)
        eqs = [(e.eq_id, subs(e.expr, m), e.lead) for e in self.eqs]
        return PdeSystem(self.name, ctx, eqs, self.ranking, self.cfg)

    def __repr__(self) -> str:
        return f"PdeSystem({self.name}, eqs={[e.eq_id for e in self.eqs]})"


def _jet_str(ctx: Context, w: Jet) -> str:
    return to_str(w, ctx)
