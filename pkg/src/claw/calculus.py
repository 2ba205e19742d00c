"""Jet-space differential operators.

Total derivatives, the linearization (Frechet derivative) of a
differential function and its formal adjoint, Euler and higher Euler
operators, the total-divergence test, and the bilinear boundary currents
that realize the linearization identity exactly.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

from .errors import ExprError
from .expr import (
    Add, Exp, Expr, Jet, Ln, Mul, MINUS_ONE, ONE, Par, Pow, Rat, Slack, Var,
    ZERO, add, iter_jets, jet, midx_add, midx_binom, midx_ge, midx_order,
    midx_sub, midx_unit, mul, pow_, rat, slackv, Param,
)
from .zerotest import ZeroTest, DEFAULT, is_zero

__all__ = [
    "Context", "total_derivative", "d_multi", "jet_partial", "frechet",
    "frechet_adjoint", "frechet_adjoint_all", "euler", "euler_all",
    "higher_euler", "is_total_divergence", "peel_pair", "psi_pair",
    "all_midx_upto",
]


class Context:
    """Names of the independent and dependent variables plus parameters.

    The first independent variable is the time-like one; the rest are
    spatial in declared order. Jet multi-indices align with this order.
    """

    __slots__ = ("indep", "dep", "params")

    def __init__(self, indep: Sequence[str], dep: Sequence[str],
                 params: Sequence[Param] = ()):
        self.indep = tuple(indep)
        self.dep = tuple(dep)
        self.params = tuple(params)
        if len(set(self.indep)) != len(self.indep):
            raise ExprError("duplicate independent variable names")
        if len(set(self.dep)) != len(self.dep):
            raise ExprError("duplicate dependent variable names")

    @property
    def n_indep(self) -> int:
        return len(self.indep)

    def indep_index(self, name: str) -> int:
        try:
            return self.indep.index(name)
        except ValueError:
            raise ExprError(f"unknown independent variable {name!r}") from None

    def zero_midx(self) -> tuple:
        return (0,) * len(self.indep)

    def __repr__(self) -> str:
        return f"Context(indep={self.indep}, dep={self.dep})"


_TD_CACHE: dict[tuple, Expr] = {}


def total_derivative(ctx: Context, e: Expr, v, order: int = 1) -> Expr:
    """Total derivative D_v^order. v is an independent-variable name or index.

    Slack nodes differentiate formally: the derivative bumps their
    multi-index the same way a jet's is bumped.
    """
    vi = v if isinstance(v, int) else ctx.indep_index(v)
    for _ in range(order):
        e = _td(ctx, e, vi)
    return e


def _td(ctx: Context, e: Expr, vi: int) -> Expr:
    key = (e, vi, ctx.indep)
    hit = _TD_CACHE.get(key)
    if hit is not None:
        return hit
    if isinstance(e, (Rat, Par)):
        out = ZERO
    elif isinstance(e, Var):
        out = ONE if e.name == ctx.indep[vi] else ZERO
    elif isinstance(e, Jet):
        out = jet(e.dep, midx_add(e.midx, midx_unit(len(e.midx), vi)))
    elif isinstance(e, Slack):
        out = slackv(e.eq, midx_add(e.midx, midx_unit(len(e.midx), vi)))
    elif isinstance(e, Exp):
        out = mul(_td(ctx, e.arg, vi), e)
    elif isinstance(e, Ln):
        out = mul(_td(ctx, e.arg, vi), pow_(e.arg, MINUS_ONE))
    elif isinstance(e, Pow):
        out = mul(e.exp, pow_(e.base, add(e.exp, MINUS_ONE)), _td(ctx, e.base, vi))
    elif isinstance(e, Mul):
        parts = []
        for i, f in enumerate(e.factors):
            df = _td(ctx, f, vi)
            if df is ZERO:
                continue
            rest = e.factors[:i] + e.factors[i + 1:]
            parts.append(mul(rat(e.coeff), df, *rest))
        out = add(*parts)
    else:
        out = add(*[_td(ctx, t, vi) for t in e.terms])
    _TD_CACHE[key] = out
    return out


def d_multi(ctx: Context, e: Expr, midx: Iterable[int]) -> Expr:
    """Apply the product of total derivatives given by a multi-index."""
    for vi, count in enumerate(midx):
        for _ in range(count):
            e = _td(ctx, e, vi)
    return e


_JP_CACHE: dict[tuple, Expr] = {}


def jet_partial(e: Expr, w: Jet) -> Expr:
    """Partial derivative treating every jet node as an independent
    coordinate."""
    key = (e, w)
    hit = _JP_CACHE.get(key)
    if hit is not None:
        return hit
    if isinstance(e, Jet):
        out = ONE if e is w else ZERO
    elif isinstance(e, (Rat, Par, Var, Slack)):
        out = ZERO
    elif isinstance(e, Exp):
        out = mul(jet_partial(e.arg, w), e)
    elif isinstance(e, Ln):
        out = mul(jet_partial(e.arg, w), pow_(e.arg, MINUS_ONE))
    elif isinstance(e, Pow):
        out = mul(e.exp, pow_(e.base, add(e.exp, MINUS_ONE)), jet_partial(e.base, w))
    elif isinstance(e, Mul):
        parts = []
        for i, f in enumerate(e.factors):
            df = jet_partial(f, w)
            if df is ZERO:
                continue
            rest = e.factors[:i] + e.factors[i + 1:]
            parts.append(mul(rat(e.coeff), df, *rest))
        out = add(*parts)
    else:
        out = add(*[jet_partial(t, w) for t in e.terms])
    _JP_CACHE[key] = out
    return out


def _signed_d_multi(ctx: Context, e: Expr, midx: tuple) -> Expr:
    """(-D)_J e = (-1)^|J| D_J e."""
    out = d_multi(ctx, e, midx)
    if midx_order(midx) % 2:
        out = mul(MINUS_ONE, out)
    return out


def frechet(ctx: Context, f: Expr, g: Mapping[str, Expr]) -> Expr:
    """Linearization of f along the characteristic g."""
    parts = []
    for w in iter_jets(f):
        gw = g.get(w.dep)
        if gw is None:
            continue
        parts.append(mul(jet_partial(f, w), d_multi(ctx, gw, w.midx)))
    return add(*parts)


def frechet_adjoint(ctx: Context, f: Expr, h: Expr, dep: str) -> Expr:
    """Component dep of the adjoint linearization applied to h:
    sum over J of (-D)_J (h * df/d(u^dep_J))."""
    parts = []
    for w in iter_jets(f):
        if w.dep != dep:
            continue
        parts.append(_signed_d_multi(ctx, mul(h, jet_partial(f, w)), w.midx))
    return add(*parts)


def frechet_adjoint_all(ctx: Context, f: Expr, h: Expr) -> dict[str, Expr]:
    return {dep: frechet_adjoint(ctx, f, h, dep) for dep in ctx.dep}


def euler(ctx: Context, f: Expr, dep: str) -> Expr:
    """Variational derivative with respect to dep."""
    parts = []
    for w in iter_jets(f):
        if w.dep != dep:
            continue
        parts.append(_signed_d_multi(ctx, jet_partial(f, w), w.midx))
    return add(*parts)


def euler_all(ctx: Context, f: Expr) -> dict[str, Expr]:
    return {dep: euler(ctx, f, dep) for dep in ctx.dep}


def higher_euler(ctx: Context, f: Expr, dep: str, j: tuple) -> Expr:
    """Higher Euler operator with multi-index j: the multi-index-weighted
    family whose order-zero member is the Euler operator.

    E^(J)(f) = sum over K containing J of binom(K, J) (-D)^(K-J) df/du_K,
    with the multiset binomial coefficient binom(K, J) = prod_v C(K_v, J_v).
    """
    j = tuple(j)
    parts = []
    for w in iter_jets(f):
        if w.dep != dep or not midx_ge(w.midx, j):
            continue
        c = midx_binom(w.midx, j)
        parts.append(
            mul(rat(c), _signed_d_multi(ctx, jet_partial(f, w), midx_sub(w.midx, j)))
        )
    return add(*parts)


def is_total_divergence(ctx: Context, f: Expr, cfg: ZeroTest = DEFAULT) -> bool:
    """True iff every Euler component of f vanishes."""
    return all(is_zero(euler(ctx, f, dep), ctx.params, cfg) for dep in ctx.dep)


def peel_pair(ctx: Context, x0: Expr, g: Expr, midx) -> tuple[Expr, ...]:
    """Boundary terms of one integration by parts:

        x0 * D_J g - ((-D)_J x0) * g = sum_v D_v Psi^v

    exactly, peeling one derivative at a time in time-first order.
    Returns Psi, one component per independent variable.
    """
    psi = [ZERO] * len(ctx.indep)
    order: list[int] = []
    for vi, count in enumerate(midx):
        order.extend([vi] * count)
    m = len(order)
    if m == 0:
        return tuple(psi)
    suffix = [None] * m
    suffix[m - 1] = x0
    for j in range(m - 2, -1, -1):
        suffix[j] = mul(MINUS_ONE, _td(ctx, suffix[j + 1], order[j + 1]))
    prefix = g
    for j in range(m):
        psi[order[j]] = add(psi[order[j]], mul(suffix[j], prefix))
        if j + 1 < m:
            prefix = _td(ctx, prefix, order[j])
    return tuple(psi)


def psi_pair(ctx: Context, f: Expr, g: Mapping[str, Expr], h: Expr) -> tuple[Expr, ...]:
    """Boundary currents of the linearization identity.

    Returns Psi, one component per independent variable, satisfying

        h * frechet(f, g) - sum_dep g^dep * adjoint(f, h)_dep
            = sum_v D_v Psi^v

    exactly, accumulated by peeling every jet of f.
    """
    psi = [ZERO] * len(ctx.indep)
    for w in iter_jets(f):
        gw = g.get(w.dep)
        if gw is None or midx_order(w.midx) == 0:
            continue
        part = peel_pair(ctx, mul(h, jet_partial(f, w)), gw, w.midx)
        psi = [add(a, b) for a, b in zip(psi, part)]
    return tuple(psi)


def all_midx_upto(n: int, max_order: int) -> list[tuple]:
    """All multi-indices on n variables with total order <= max_order,
    in a fixed deterministic order."""
    out = [(0,) * n]
    frontier = [(0,) * n]
    for _ in range(max_order):
        nxt = []
        seen = set()
        for m in frontier:
            for i in range(n):
                m2 = midx_add(m, midx_unit(n, i))
                if m2 not in seen:
                    seen.add(m2)
                    nxt.append(m2)
        nxt.sort()
        out.extend(nxt)
        frontier = nxt
    return out
