"""Exact linear algebra over scalar expressions in the parameters.

Matrix entries are scalar Exprs (no jets). Pivots must be provably
nonzero for every allowed parameter value, not just at sampled points:
a pivot that merely tests nonzero numerically would silently specialize
the solution, so such columns raise CaseSplitRequired instead.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .errors import CaseSplitRequired, InconsistentAssumptions
from .expr import (
    Add, Exp, Expr, MINUS_ONE, Mul, ONE, Par, Param, Pow, Rat, ZERO, add,
    as_fraction, mul, pow_, rat, to_str, _base_exp, _term_parts,
)
from .zerotest import DEFAULT, ZeroTest, is_zero

__all__ = ["decidably_nonzero", "rref", "nullspace", "solve_linear"]


def _param_spec(params: Sequence[Param], name: str):
    for p in params:
        if p.name == name:
            return p
    return None


def _affine_in_one_param(e: Add):
    """If e = c1*p + c0 with rational c0, c1 and a single parameter p,
    return (p name, c1, c0), else None."""
    c0 = None
    c1 = None
    name = None
    for t in e.terms:
        if isinstance(t, Rat):
            if c0 is not None:
                return None
            c0 = t.q
        elif isinstance(t, Par):
            if c1 is not None:
                return None
            name, c1 = t.name, 1
        elif isinstance(t, Mul) and len(t.factors) == 1 and \
                isinstance(t.factors[0], Par):
            if c1 is not None:
                return None
            name, c1 = t.factors[0].name, t.coeff
        else:
            return None
    if name is None or c1 is None:
        return None
    return name, c1, c0 or 0


def _strip_common_monomial(e: Add):
    """Factor e as m*g where m is a monomial common to every term (lowest
    power per base). Returns (factors of m, g), or None when no base is
    shared by all terms."""
    common: dict | None = None
    for t in e.terms:
        _, factors = _term_parts(t)
        cur: dict = {}
        for f in factors:
            b, ex = _base_exp(f)
            if isinstance(ex, Rat):
                cur[b.key] = (b, ex.q)
        if common is None:
            common = cur
        else:
            common = {k: (b, min(q, cur[k][1]))
                      for k, (b, q) in common.items() if k in cur}
        if not common:
            return None
    parts = [pow_(b, rat(q)) for b, q in common.values()]
    inv = [pow_(b, rat(-q)) for b, q in common.values()]
    return parts, add(*[mul(t, *inv) for t in e.terms])


def decidably_nonzero(e: Expr, params: Sequence[Param]) -> bool:
    """True when e is nonzero for every allowed parameter assignment."""
    if isinstance(e, Rat):
        return e.q != 0
    if isinstance(e, Par):
        spec = _param_spec(params, e.name)
        return spec is not None and spec.nonzero
    if isinstance(e, Exp):
        return True
    if isinstance(e, Pow):
        return decidably_nonzero(e.base, params)
    if isinstance(e, Mul):
        return e.coeff != 0 and all(decidably_nonzero(f, params)
                                    for f in e.factors)
    if isinstance(e, Add):
        num, den = as_fraction(e)
        if den is not ONE:
            # nonzero iff the cleared numerator is, given nonzero denominators
            return decidably_nonzero(num, params) and \
                decidably_nonzero(den, params)
        strip = _strip_common_monomial(e)
        if strip is not None:
            # e.g. -p - p^2 = -p*(1 + p): decide each factor on its own
            fs, g = strip
            return all(decidably_nonzero(f, params) for f in fs) and \
                decidably_nonzero(g, params)
        aff = _affine_in_one_param(e)
        if aff is None:
            return False
        name, c1, c0 = aff
        spec = _param_spec(params, name)
        if spec is None:
            return False
        root = -Fraction(c0) / Fraction(c1)
        return root in spec.excluded or (root == 0 and spec.nonzero)
    return False


def rref(mat: Sequence[Sequence[Expr]], params: Sequence[Param] = (),
         cfg: ZeroTest = DEFAULT):
    """Reduced row echelon form. Returns (rows, pivot column list)."""
    rows = [list(r) for r in mat]
    nr = len(rows)
    nc = len(rows[0]) if nr else 0
    pivots: list[int] = []
    r = 0
    for c in range(nc):
        if r >= nr:
            break
        live = [i for i in range(r, nr) if not is_zero(rows[i][c], params, cfg)]
        if not live:
            continue
        pick = next((i for i in live
                     if decidably_nonzero(rows[i][c], params)), None)
        if pick is None:
            raise CaseSplitRequired(
                "pivot " + to_str(rows[live[0]][c]) +
                " cannot be proven nonzero for all parameter values")
        rows[r], rows[pick] = rows[pick], rows[r]
        inv = pow_(rows[r][c], MINUS_ONE)
        rows[r] = [mul(inv, x) for x in rows[r]]
        rows[r][c] = ONE
        for i in range(nr):
            if i == r:
                continue
            f = rows[i][c]
            if f is ZERO:
                continue
            if is_zero(f, params, cfg):
                rows[i][c] = ZERO
                continue
            rows[i] = [add(rows[i][j], mul(MINUS_ONE, f, rows[r][j]))
                       for j in range(nc)]
            rows[i][c] = ZERO
        pivots.append(c)
        r += 1
    return rows, pivots


def nullspace(mat: Sequence[Sequence[Expr]], params: Sequence[Param] = (),
              cfg: ZeroTest = DEFAULT) -> list[list[Expr]]:
    """Basis of the homogeneous solution space, one vector per free
    column, with that free variable set to one."""
    nr = len(mat)
    nc = len(mat[0]) if nr else 0
    if nr == 0 or nc == 0:
        return []
    rows, pivots = rref(mat, params, cfg)
    free = [c for c in range(nc) if c not in pivots]
    basis = []
    for f in free:
        v = [ZERO] * nc
        v[f] = ONE
        for i, pc in enumerate(pivots):
            v[pc] = mul(MINUS_ONE, rows[i][f])
        basis.append(v)
    return basis


def solve_linear(mat: Sequence[Sequence[Expr]], rhs: Sequence[Expr],
                 params: Sequence[Param] = (), cfg: ZeroTest = DEFAULT):
    """Solve mat*x = rhs exactly. Returns (particular, nullspace basis).

    Raises InconsistentAssumptions when the system has no solution under
    the declared parameter assumptions.
    """
    nr = len(mat)
    nc = len(mat[0]) if nr else 0
    aug = [list(row) + [rhs[i]] for i, row in enumerate(mat)]
    rows, pivots = rref(aug, params, cfg)
    if nc in pivots:
        bad = next(rows[i][nc] for i, pc in enumerate(pivots) if pc == nc)
        raise InconsistentAssumptions(
            "no solution: a reduced row reads 0 = " + to_str(bad))
    x = [ZERO] * nc
    for i, pc in enumerate(pivots):
        x[pc] = rows[i][nc]
    hom = nullspace([row[:nc] for row in mat], params, cfg)
    return x, hom
