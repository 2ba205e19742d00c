"""Conservation-law verification and construction.

Multiplier tests (determining identity, adjoint-symmetry, Helmholtz),
current verification, extraction of the multiplier of a conserved
current, triviality and equivalence of currents, and reconstruction of
a current from its multiplier through a scaling symmetry.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Optional, Sequence, Union

from .calculus import (
    Context, _signed_d_multi, all_midx_upto, euler, frechet,
    frechet_adjoint, higher_euler, jet_partial, peel_pair, psi_pair,
)
from .errors import (
    EvaluationDomainError, ExprError, NotASymmetry, NotConserved,
    ScalingCritical, UnboundSymbol, WeightIndeterminate,
)
from .expr import (
    Add, Exp, Expr, Jet, Ln, MINUS_ONE, Mul, ONE, Par, Pow, Rat, Slack,
    Var, ZERO, _base_exp, _monomial_key, _term_parts, add, iter_jets, jet,
    midx_order, midx_unit, mul, pow_, rat, to_str, var,
)
from .system import Current, GOperator, Multiplier, PdeSystem, goperator_equal
from .zerotest import ZeroTest, is_zero

__all__ = [
    "multiplier_product", "check_multiplier", "check_adjoint_symmetry",
    "r_of_symmetry", "r_of_multiplier", "helmholtz_expected",
    "check_helmholtz", "verify_current", "extract_multiplier",
    "multiplier_reduced", "multipliers_match", "is_trivial",
    "currents_equivalent", "scaling_characteristic", "weight_of",
    "scaling_reconstruct",
]


def multiplier_product(sys: PdeSystem, q: Multiplier) -> Expr:
    return add(*[mul(q.get(e.eq_id, ZERO), e.expr) for e in sys.eqs])


def check_multiplier(sys: PdeSystem, q: Multiplier,
                     cfg: Optional[ZeroTest] = None) -> bool:
    """The determining identity: every Euler component of sum Q_a G^a
    vanishes identically, off the solution space."""
    cfg = cfg or sys.cfg
    f = multiplier_product(sys, q)
    return all(is_zero(euler(sys.ctx, f, dep), sys.ctx.params, cfg)
               for dep in sys.ctx.dep)


def _adjoint_residual(sys: PdeSystem, q: Multiplier, dep: str) -> Expr:
    return add(*[frechet_adjoint(sys.ctx, e.expr, q.get(e.eq_id, ZERO), dep)
                 for e in sys.eqs])


def check_adjoint_symmetry(sys: PdeSystem, q: Multiplier,
                           cfg: Optional[ZeroTest] = None) -> bool:
    """Adjoint of the symmetry determining equation, on solutions."""
    cfg = cfg or sys.cfg
    for dep in sys.ctx.dep:
        r = sys.reduce_on_solutions(_adjoint_residual(sys, q, dep))
        if not is_zero(r, sys.ctx.params, cfg):
            return False
    return True


def r_of_symmetry(sys: PdeSystem, p: Mapping[str, Expr],
                  cfg: Optional[ZeroTest] = None) -> dict[str, GOperator]:
    """Rows (one per equation) of the operator with frechet(G^a, P) =
    row_a applied to G."""
    return {e.eq_id: sys.extract_R(frechet(sys.ctx, e.expr, p), cfg)
            for e in sys.eqs}


def r_of_multiplier(sys: PdeSystem, q: Multiplier,
                    cfg: Optional[ZeroTest] = None) -> dict[str, GOperator]:
    """Rows (one per dependent variable) of the operator expressing the
    adjoint-symmetry residual of Q as an operator applied to G. Exists
    only when Q is an adjoint symmetry."""
    return {dep: sys.extract_R(_adjoint_residual(sys, q, dep), cfg)
            for dep in sys.ctx.dep}


def helmholtz_expected(sys: PdeSystem, q: Multiplier) -> dict[str, GOperator]:
    """The coefficient maps that r_of_multiplier must equal for a
    multiplier: entry (a, J) of row alpha is the higher Euler expression
    E^(J)_alpha(Q_a) with sign (-1)^(|J|+1)."""
    ctx = sys.ctx
    n = len(ctx.indep)
    out = {}
    for dep in ctx.dep:
        table: dict[tuple, Expr] = {}
        for e in sys.eqs:
            qa = q.get(e.eq_id, ZERO)
            top = 0
            for w in iter_jets(qa):
                if w.dep == dep:
                    top = max(top, midx_order(w.midx))
            for j in all_midx_upto(n, top):
                c = higher_euler(ctx, qa, dep, j)
                if c is ZERO:
                    continue
                if midx_order(j) % 2 == 0:
                    c = mul(MINUS_ONE, c)
                table[(e.eq_id, j)] = add(table.get((e.eq_id, j), ZERO), c)
        out[dep] = GOperator(table)
    return out


def check_helmholtz(sys: PdeSystem, q: Multiplier,
                    cfg: Optional[ZeroTest] = None) -> bool:
    """Helmholtz conditions on the solution space: the extracted
    operator of the adjoint-symmetry residual agrees coefficientwise
    with the signed higher Euler expressions of Q."""
    actual = r_of_multiplier(sys, q, cfg)
    expected = helmholtz_expected(sys, q)
    return all(goperator_equal(sys, actual[dep], expected[dep], cfg)
               for dep in sys.ctx.dep)


def verify_current(sys: PdeSystem, cur: Current,
                   q: Optional[Multiplier] = None,
                   cfg: Optional[ZeroTest] = None) -> bool:
    """With Q: the characteristic identity div(cur) = sum Q_a G^a holds
    off solutions. Without Q: div(cur) vanishes on solutions."""
    cfg = cfg or sys.cfg
    d = cur.divergence(sys.ctx)
    if q is None:
        return is_zero(sys.reduce_on_solutions(d), sys.ctx.params, cfg)
    d = add(d, mul(MINUS_ONE, multiplier_product(sys, q)))
    return is_zero(d, sys.ctx.params, cfg)


def extract_multiplier(sys: PdeSystem, cur: Current,
                       cfg: Optional[ZeroTest] = None):
    """Multiplier of a conserved current, with the corrected current.

    Expands div(cur) off the solution space and integrates each operator
    term by parts: div(cur) = sum Q_a G^a + div(Theta). Returns (Q,
    cur - Theta); the pair satisfies the characteristic identity exactly,
    so verify_current(corrected, Q) passes.
    """
    cfg = cfg or sys.cfg
    ctx = sys.ctx
    d = cur.divergence(ctx)
    red = sys.reduce_on_solutions(d)
    if not is_zero(red, ctx.params, cfg):
        raise NotConserved(
            "divergence does not vanish on solutions: " + to_str(red, ctx))
    _, op = sys.slack_expand(d)
    q = {a: ZERO for a in sys.eq_ids}
    theta = [ZERO] * len(ctx.indep)
    for (a, m), c in op.items():
        q[a] = add(q[a], _signed_d_multi(ctx, c, m))
        part = peel_pair(ctx, c, sys.by_id[a].expr, m)
        theta = [add(x, y) for x, y in zip(theta, part)]
    corrected = Current(tuple(add(comp, mul(MINUS_ONE, th))
                              for comp, th in zip(cur.comps, theta)))
    return q, corrected


def multiplier_reduced(sys: PdeSystem, q: Multiplier) -> dict[str, Expr]:
    return {a: sys.reduce_on_solutions(q.get(a, ZERO)) for a in sys.eq_ids}


def _terms(e: Expr):
    return e.terms if isinstance(e, Add) else (e,)


def multipliers_match(sys: PdeSystem, qa: Multiplier, qb: Multiplier,
                      cfg: Optional[ZeroTest] = None) -> Optional[Fraction]:
    """Rational s with qa = s*qb on solutions, or None. Both sides are
    compared in reduced form."""
    cfg = cfg or sys.cfg
    ra = multiplier_reduced(sys, qa)
    rb = multiplier_reduced(sys, qb)
    zs = [(is_zero(ra[a], sys.ctx.params, cfg),
           is_zero(rb[a], sys.ctx.params, cfg)) for a in sys.eq_ids]
    if all(za and zb for za, zb in zs):
        return Fraction(1)
    if any(za != zb for za, zb in zs):
        return None
    for cand in _scale_candidates(sys, ra, rb, cfg):
        s = rat(cand)
        if all(is_zero(add(ra[a], mul(MINUS_ONE, s, rb[a])),
                       sys.ctx.params, cfg) for a in sys.eq_ids):
            return cand
    return None


def _scale_candidates(sys: PdeSystem, ra, rb, cfg: ZeroTest):
    """Rational candidates for the scale in ra = s*rb, cheapest first:
    matching-monomial coefficient ratios, then ratios of shared numeric
    samples. Each candidate is verified exactly by the caller."""
    seen = {Fraction(1)}
    yield Fraction(1)
    for a in sys.eq_ids:
        for tb in _terms(rb[a]):
            if tb is ZERO:
                continue
            key = _monomial_key(tb)
            for ta in _terms(ra[a]):
                if ta is not ZERO and _monomial_key(ta) == key:
                    cand = _term_parts(ta)[0] / _term_parts(tb)[0]
                    if cand not in seen:
                        seen.add(cand)
                        yield cand
    from .zerotest import sample_pairs
    for a in sys.eq_ids:
        try:
            pairs = sample_pairs(ra[a], rb[a], sys.ctx.params, cfg)
        except (UnboundSymbol, EvaluationDomainError):
            continue
        for va, vb in pairs:
            if abs(vb) < cfg.tol:
                continue
            cand = Fraction(va / vb).limit_denominator(10 ** 6)
            if cand not in seen:
                seen.add(cand)
                yield cand


def is_trivial(sys: PdeSystem, cur: Current,
               cfg: Optional[ZeroTest] = None) -> bool:
    """A conserved current is trivial exactly when its multiplier
    vanishes on solutions."""
    cfg = cfg or sys.cfg
    q, _ = extract_multiplier(sys, cur, cfg)
    return all(is_zero(sys.reduce_on_solutions(e), sys.ctx.params, cfg)
               for e in q.values())


def currents_equivalent(sys: PdeSystem, c1: Current, c2: Current,
                        cfg: Optional[ZeroTest] = None) -> bool:
    return is_trivial(sys, c1 - c2, cfg)


def _as_expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    return rat(Fraction(v))


def scaling_characteristic(ctx: Context, weights: Mapping) -> dict[str, Expr]:
    """Characteristic of the scaling generator with the given weights:
    P^alpha = r_alpha u^alpha - sum_v w_v x^v u^alpha_v."""
    n = len(ctx.indep)
    out = {}
    for dep in ctx.dep:
        parts = [mul(_as_expr(weights[dep]), jet(dep, (0,) * n))]
        for vi, vn in enumerate(ctx.indep):
            parts.append(mul(MINUS_ONE, _as_expr(weights[vn]), var(vn),
                             jet(dep, midx_unit(n, vi))))
        out[dep] = add(*parts)
    return out


def weight_of(ctx: Context, e: Expr, weights: Mapping,
              params: Sequence = (), cfg: Optional[ZeroTest] = None) -> Expr:
    """Scaling weight of a homogeneous expression; raises
    WeightIndeterminate when terms disagree or a factor cannot scale as
    a pure power."""
    from .zerotest import DEFAULT
    cfg = cfg or DEFAULT

    def atom_weight(b: Expr) -> Expr:
        if isinstance(b, Jet):
            w = _as_expr(weights[b.dep])
            for vi, c in enumerate(b.midx):
                if c:
                    w = add(w, mul(rat(-c), _as_expr(weights[ctx.indep[vi]])))
            return w
        if isinstance(b, Var):
            return _as_expr(weights[b.name])
        if isinstance(b, (Par, Rat)):
            return ZERO
        if isinstance(b, Slack):
            raise ExprError("slack node has no scaling weight")
        return go(b)

    def go(x: Expr) -> Expr:
        if isinstance(x, Add):
            ws = [go(t) for t in x.terms]
            for other in ws[1:]:
                if not is_zero(add(ws[0], mul(MINUS_ONE, other)), params, cfg):
                    raise WeightIndeterminate(
                        "terms scale with different weights: " + to_str(x, ctx))
            return ws[0]
        if isinstance(x, (Exp, Ln)):
            if not is_zero(go(x.arg), params, cfg):
                raise WeightIndeterminate(
                    "argument of a transcendental factor is not scale "
                    "invariant: " + to_str(x, ctx))
            return ZERO
        if isinstance(x, Mul):
            parts = []
            for f in x.factors:
                b, ex = _base_exp(f)
                parts.append(mul(ex, atom_weight(b)))
            return add(*parts)
        if isinstance(x, Pow):
            return mul(x.exp, atom_weight(x.base))
        return atom_weight(x)

    return go(e)


def scaling_reconstruct(sys: PdeSystem, q: Multiplier, weights: Mapping,
                        cfg: Optional[ZeroTest] = None):
    """Current of a multiplier through a scaling symmetry.

    weights maps every independent and dependent variable name to its
    scaling weight. Returns (w, current) where w is the weight of the
    conserved quantity; the current is (1/w) times the boundary current
    of the scaling characteristic against Q.
    """
    cfg = cfg or sys.cfg
    ctx = sys.ctx
    for name in ctx.indep + ctx.dep:
        if name not in weights:
            raise ExprError(f"missing scaling weight for {name!r}")
    p = scaling_characteristic(ctx, weights)
    for e in sys.eqs:
        r = sys.reduce_on_solutions(frechet(ctx, e.expr, p))
        if not is_zero(r, ctx.params, cfg):
            raise NotASymmetry(
                "the scaling weights do not define a symmetry of "
                + sys.name)
    psi = [ZERO] * len(ctx.indep)
    for e in sys.eqs:
        part = psi_pair(ctx, e.expr, p, q.get(e.eq_id, ZERO))
        psi = [add(x, y) for x, y in zip(psi, part)]
    if psi[0] is ZERO:
        raise WeightIndeterminate("the reconstructed density is zero")
    k_t = weight_of(ctx, psi[0], weights, ctx.params, cfg)
    w = add(k_t, *[_as_expr(weights[vn]) for vn in ctx.indep[1:]])
    if is_zero(w, ctx.params, cfg):
        raise ScalingCritical(
            "conserved quantity has scaling weight zero; the formula "
            "degenerates")
    inv = pow_(w, MINUS_ONE)
    return w, Current(tuple(mul(inv, c) for c in psi))
