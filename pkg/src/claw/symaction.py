"""Symmetry actions on conservation laws.

Symmetry verification, the induced action on multipliers and currents,
the invariance/homogeneity decision, bilinear classification systems
over spans of symmetries and multipliers, the induced matrix of a
symmetry action on a multiplier span with its exact eigenstructure, and
a linear-ansatz solver for determining equations.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence, Union

from .calculus import euler, frechet, psi_pair
from .conslaw import (
    multiplier_product, multiplier_reduced, r_of_multiplier, r_of_symmetry,
)
from .errors import ExprError, InconsistentAssumptions, NotClosed
from .expr import (
    Add, Expr, MINUS_ONE, Mul, ONE, Par, Param, Pow, Rat, ZERO, _base_exp,
    _term_parts, add, align_powers_all, clear_fractions_all, is_scalar, mul,
    par, pow_, rat, subs, to_str,
)
from .linalg import decidably_nonzero, nullspace, rref, solve_linear
from .system import Characteristic, Current, Multiplier, PdeSystem
from .zerotest import DEFAULT, ZeroTest, is_zero

__all__ = [
    "Invariance", "BilinearSystem", "AffineSolution", "ActionMatrix",
    "check_symmetry", "action_on_multiplier", "action_on_current",
    "invariance_check", "bilinear_system", "solve_fixed_a",
    "action_matrix", "solve_linear_ansatz",
]


def check_symmetry(sys: PdeSystem, p: Characteristic,
                   cfg: Optional[ZeroTest] = None) -> bool:
    """Linearized determining equation on the solution space."""
    cfg = cfg or sys.cfg
    for e in sys.eqs:
        r = sys.reduce_on_solutions(frechet(sys.ctx, e.expr, p))
        if not is_zero(r, sys.ctx.params, cfg):
            return False
    return True


def action_on_multiplier(sys: PdeSystem, p: Characteristic, q: Multiplier,
                         cfg: Optional[ZeroTest] = None) -> dict[str, Expr]:
    """Multiplier of the symmetry image of the conservation law of Q:
    the adjoint of the symmetry operator applied to Q minus the adjoint
    of the multiplier operator applied to P."""
    cfg = cfg or sys.cfg
    rp = r_of_symmetry(sys, p, cfg)
    rq = r_of_multiplier(sys, q, cfg)
    first = sys.adjoint_apply(rp, {e.eq_id: q.get(e.eq_id, ZERO)
                                   for e in sys.eqs})
    second = sys.adjoint_apply(rq, {d: p.get(d, ZERO) for d in sys.ctx.dep})
    return {a: add(first.get(a, ZERO), mul(MINUS_ONE, second.get(a, ZERO)))
            for a in sys.eq_ids}


def action_on_current(sys: PdeSystem, p: Characteristic, q: Multiplier,
                      cfg: Optional[ZeroTest] = None) -> Current:
    """Conserved current produced by letting the symmetry P act on the
    conservation law with multiplier Q; its multiplier is
    action_on_multiplier(P, Q)."""
    psi = [ZERO] * len(sys.ctx.indep)
    for e in sys.eqs:
        part = psi_pair(sys.ctx, e.expr, p, q.get(e.eq_id, ZERO))
        psi = [add(x, y) for x, y in zip(psi, part)]
    return Current(tuple(psi))


@dataclass(frozen=True)
class Invariance:
    """Outcome of the invariance/homogeneity decision."""

    kind: str                 # "Invariant" | "Homogeneous" | "Neither"
    lam: Optional[Expr] = None
    detail: str = ""

    def __str__(self) -> str:
        if self.kind == "Homogeneous":
            return f"Homogeneous(lambda = {to_str(self.lam)})"
        return self.kind


def _comparable(es: Sequence[Expr]) -> list[Expr]:
    """Shared normalization before term-by-term coefficient extraction:
    joint fraction clearing and power alignment, so that terms which are
    equal in content end on identical monomial cores across the inputs."""
    es = clear_fractions_all(es)
    es = align_powers_all(es)
    return clear_fractions_all(es)


def _split_scalar(term: Expr):
    """(scalar coefficient, key of the non-scalar factor tuple)."""
    c, factors = _term_parts(term)
    scal = [rat(c)]
    core = []
    for f in factors:
        if is_scalar(f):
            scal.append(f)
        else:
            core.append(f.key)
    return mul(*scal), tuple(core)


def _coeff_table(e: Expr) -> dict[tuple, Expr]:
    out: dict[tuple, Expr] = {}
    for t in (e.terms if isinstance(e, Add) else (e,)):
        if t is ZERO:
            continue
        c, core = _split_scalar(t)
        out[core] = add(out.get(core, ZERO), c)
    return out


def invariance_check(sys: PdeSystem, p: Characteristic, q: Multiplier,
                     cfg: Optional[ZeroTest] = None) -> Invariance:
    """Decides whether the conserved quantity of Q is invariant under P
    (action vanishes), homogeneous (action is lambda times Q), or
    neither. lambda may involve the declared parameters."""
    cfg = cfg or sys.cfg
    act = action_on_multiplier(sys, p, q, cfg)
    reda = multiplier_reduced(sys, act)
    redq = multiplier_reduced(sys, q)
    ids = list(sys.eq_ids)
    aligned = _comparable([reda[a] for a in ids]
                          + [redq[a] for a in ids])
    reda = dict(zip(ids, aligned[:len(ids)]))
    redq = dict(zip(ids, aligned[len(ids):]))
    if all(is_zero(e, sys.ctx.params, cfg) for e in reda.values()):
        return Invariance("Invariant", ZERO)
    tables_a = {a: _coeff_table(reda[a]) for a in sys.eq_ids}
    tables_q = {a: _coeff_table(redq[a]) for a in sys.eq_ids}
    pivot = None
    fallback = None
    for a in sys.eq_ids:
        for core in sorted(tables_q[a]):
            cq = tables_q[a][core]
            if is_zero(cq, sys.ctx.params, cfg):
                continue
            if decidably_nonzero(cq, sys.ctx.params):
                pivot = (a, core, cq)
                break
            if fallback is None:
                fallback = (a, core, cq)
        if pivot:
            break
    if pivot is None:
        pivot = fallback
    if pivot is None:
        raise ExprError("the multiplier reduces to zero on solutions")
    a0, core0, cq0 = pivot
    ca0 = tables_a[a0].get(core0, ZERO)
    lam = mul(ca0, pow_(cq0, MINUS_ONE))
    for a in sys.eq_ids:
        d = add(reda[a], mul(MINUS_ONE, lam, redq[a]))
        if not is_zero(d, sys.ctx.params, cfg):
            return Invariance(
                "Neither", None,
                "the action is not a constant multiple of Q; residual on "
                f"{a}: " + to_str(d, sys.ctx))
    if is_zero(lam, sys.ctx.params, cfg):
        return Invariance("Invariant", ZERO)
    return Invariance("Homogeneous", lam)


def _check_reserved(sys: PdeSystem, names: Sequence[str]) -> None:
    taken = {p.name for p in sys.ctx.params}
    clashes = sorted(set(names) & taken)
    if clashes:
        raise ExprError(
            "parameter names reserved for generated constants: "
            + ", ".join(clashes))


def _split_reserved(term: Expr, reserved: frozenset):
    """(monomial in the reserved constants, field coefficient, core key)."""
    c, factors = _term_parts(term)
    res = []
    scal = [rat(c)]
    core = []
    for f in factors:
        b, _e = _base_exp(f)
        if isinstance(b, Par) and b.name in reserved:
            res.append(f)
        elif is_scalar(f):
            scal.append(f)
        else:
            core.append(f.key)
    return mul(*res), mul(*scal), tuple(core)


@dataclass(frozen=True)
class BilinearSystem:
    """Classification equations for spans P = sum c_j P_j and
    Q = sum a_i Q_i: the action of P on Q equals lambda*Q exactly when
    every equation vanishes. Each equation is a polynomial in the a, c
    and lambda constants, at most bilinear, with coefficients in the
    parameter field."""

    a_syms: tuple
    c_syms: tuple
    lambda_sym: Expr
    equations: tuple
    params: tuple = ()
    cfg: Optional[ZeroTest] = None


def bilinear_system(sys: PdeSystem, p_basis: Sequence[Characteristic],
                    q_basis: Sequence[Multiplier],
                    cfg: Optional[ZeroTest] = None) -> BilinearSystem:
    cfg = cfg or sys.cfg
    a_names = [f"a{i + 1}" for i in range(len(q_basis))]
    c_names = [f"c{j + 1}" for j in range(len(p_basis))]
    _check_reserved(sys, a_names + c_names + ["lam"])
    a_syms = tuple(par(n) for n in a_names)
    c_syms = tuple(par(n) for n in c_names)
    lam = par("lam")
    if not q_basis:
        return BilinearSystem(a_syms, c_syms, lam, (), sys.ctx.params, cfg)
    total = {b: ZERO for b in sys.eq_ids}
    for j, p in enumerate(p_basis):
        for i, q in enumerate(q_basis):
            act = multiplier_reduced(sys, action_on_multiplier(sys, p, q, cfg))
            for b in sys.eq_ids:
                total[b] = add(total[b], mul(c_syms[j], a_syms[i], act[b]))
    for i, q in enumerate(q_basis):
        red = multiplier_reduced(sys, q)
        for b in sys.eq_ids:
            total[b] = add(total[b], mul(MINUS_ONE, lam, a_syms[i], red[b]))
    aligned = _comparable([total[b] for b in sys.eq_ids])
    total = dict(zip(sys.eq_ids, aligned))
    reserved = frozenset(a_names + c_names + ["lam"])
    sigs: list[dict] = []
    eqs: list[Expr] = []
    for b in sys.eq_ids:
        table: dict[tuple, dict] = {}
        for t in (total[b].terms if isinstance(total[b], Add)
                  else (total[b],)):
            if t is ZERO:
                continue
            mono, coeff, core = _split_reserved(t, reserved)
            slot = table.setdefault(core, {})
            prev = slot.get(mono.key)
            slot[mono.key] = (mono, add(prev[1], coeff) if prev else coeff)
        for core in sorted(table):
            sig = {k: c for k, (_m, c) in table[core].items()
                   if not is_zero(c, sys.ctx.params, cfg)}
            if not sig:
                continue
            if any(_proportional(sig, s, sys.ctx.params, cfg) for s in sigs):
                continue
            sigs.append(sig)
            eqs.append(add(*[mul(c, m) for _k, (m, c) in
                             sorted(table[core].items()) if _k in sig]))
    return BilinearSystem(a_syms, c_syms, lam, tuple(eqs),
                          sys.ctx.params, cfg)


def _proportional(s1: dict, s2: dict, params, cfg: ZeroTest) -> bool:
    keys = sorted(set(s1) | set(s2))
    k0 = keys[0]
    alpha = s1.get(k0, ZERO)
    beta = s2.get(k0, ZERO)
    return all(is_zero(add(mul(s1.get(k, ZERO), beta),
                           mul(MINUS_ONE, s2.get(k, ZERO), alpha)),
                       params, cfg) for k in keys)


def _equation_signature(e: Expr, reserved: frozenset, params,
                        cfg: ZeroTest) -> dict:
    table: dict[tuple, Expr] = {}
    for t in (e.terms if isinstance(e, Add) else (e,)):
        if t is ZERO:
            continue
        mono, coeff, core = _split_reserved(t, reserved)
        key = (core, mono.key)
        prev = table.get(key)
        table[key] = add(prev, coeff) if prev else coeff
    return {k: c for k, c in table.items()
            if not is_zero(c, params, cfg)}


def equations_match(systm: BilinearSystem, expected: Sequence[Expr],
                    cfg: Optional[ZeroTest] = None) -> bool:
    """True when the expected equations equal systm.equations up to row
    scaling and reordering."""
    cfg = cfg or systm.cfg or DEFAULT
    params = systm.params
    reserved = frozenset(
        s.name for s in systm.a_syms + systm.c_syms) | {"lam"}
    got = [_equation_signature(e, reserved, params, cfg)
           for e in systm.equations]
    if len(expected) != len(got):
        return False
    used: set[int] = set()
    for e in expected:
        sig = _equation_signature(e, reserved, params, cfg)
        if not sig:
            return False
        hit = None
        for i, g in enumerate(got):
            if i not in used and _proportional(sig, g, params, cfg):
                hit = i
                break
        if hit is None:
            return False
        used.add(hit)
    return True


@dataclass(frozen=True)
class AffineSolution:
    """Exact solution set of a linear system: pivot unknowns bound to
    expressions in the free unknowns, everything over the parameter
    field."""

    names: tuple
    bindings: dict
    free: tuple

    def __str__(self) -> str:
        parts = [f"{n} = {to_str(e)}" for n, e in self.bindings.items()]
        if self.free:
            parts.append(", ".join(self.free) + " free")
        return "{" + "; ".join(parts) + "}"


def solve_fixed_a(systm: BilinearSystem, a: Sequence,
                  cfg: Optional[ZeroTest] = None) -> AffineSolution:
    """Substitutes a rational vector for the a-constants; the equations
    become linear homogeneous in (lambda, c) and are solved exactly."""
    cfg = cfg or systm.cfg or ZeroTest()
    if len(a) != len(systm.a_syms):
        raise ExprError(
            f"expected {len(systm.a_syms)} a-values, got {len(a)}")
    vals = [Fraction(v) for v in a]
    if not any(vals):
        raise ExprError("the a-vector must not be zero")
    smap = {s: rat(v) for s, v in zip(systm.a_syms, vals)}
    names = ["lam"] + [c.name for c in systm.c_syms]
    col = {n: i for i, n in enumerate(names)}
    reserved = frozenset(names)
    rows = []
    for eq in systm.equations:
        e = subs(eq, smap)
        if e is ZERO:
            continue
        row = [ZERO] * len(names)
        const = ZERO
        for t in (e.terms if isinstance(e, Add) else (e,)):
            mono, coeff, core = _split_reserved(t, reserved)
            if core:
                raise ExprError("unexpected non-constant factor in a "
                                "classification equation")
            if mono is ONE:
                const = add(const, coeff)
            elif isinstance(mono, Par):
                c = col[mono.name]
                row[c] = add(row[c], coeff)
            else:
                raise ExprError("equation is not linear in (c, lambda) "
                                "after fixing a")
        if not is_zero(const, systm.params, cfg):
            raise InconsistentAssumptions(
                "no solution: constant residual " + to_str(const))
        if any(x is not ZERO for x in row):
            rows.append(row)
    if not rows:
        return AffineSolution(tuple(names), {}, tuple(names))
    red, pivots = rref(rows, systm.params, cfg)
    bindings = {}
    for i, pc in enumerate(pivots):
        val = add(*[mul(MINUS_ONE, red[i][j], par(names[j]))
                    for j in range(len(names))
                    if j != pc and red[i][j] is not ZERO])
        bindings[names[pc]] = val
    free = tuple(n for j, n in enumerate(names) if j not in pivots)
    return AffineSolution(tuple(names), bindings, free)


@dataclass(frozen=True)
class ActionMatrix:
    """Matrix of a symmetry action restricted to a multiplier span:
    action(Q_i) = sum_j m[j][i] Q_j. eigen lists (value, multiplicity,
    eigenvectors); unresolved holds any characteristic-polynomial factor
    whose roots were not found in the parameter field."""

    m: tuple
    eigen: tuple
    unresolved: Optional[Expr] = None

    def __str__(self) -> str:
        lines = ["M = [" + "; ".join(
            ", ".join(to_str(e) for e in row) for row in self.m) + "]"]
        for value, mult, vectors in self.eigen:
            vs = " ".join("(" + ", ".join(to_str(c) for c in v) + ")"
                          for v in vectors)
            lines.append(f"eigenvalue {to_str(value)} "
                         f"(multiplicity {mult}): {vs}")
        if self.unresolved is not None:
            lines.append("unresolved factor: " + to_str(self.unresolved))
        return "\n".join(lines)


def _poly_in(e: Expr, name: str) -> dict[int, Expr]:
    out: dict[int, Expr] = {}
    for t in (e.terms if isinstance(e, Add) else (e,)):
        if t is ZERO:
            continue
        c, factors = _term_parts(t)
        deg = 0
        rest = [rat(c)]
        for f in factors:
            b, ex = _base_exp(f)
            if isinstance(b, Par) and b.name == name:
                if not (isinstance(ex, Rat) and ex.q.denominator == 1
                        and ex.q > 0):
                    raise ExprError("not a polynomial in " + name)
                deg += int(ex.q)
            else:
                rest.append(f)
        out[deg] = add(out.get(deg, ZERO), mul(*rest))
    return out


def _poly_eval(poly: dict[int, Expr], x: Expr) -> Expr:
    n = max(poly) if poly else 0
    acc = ZERO
    for d in range(n, -1, -1):
        acc = add(mul(acc, x), poly.get(d, ZERO))
    return acc


def _poly_deflate(poly: dict[int, Expr], root: Expr) -> dict[int, Expr]:
    """Synthetic division by (x - root); the remainder is known zero."""
    n = max(poly)
    out: dict[int, Expr] = {}
    carry = ZERO
    for d in range(n, 0, -1):
        carry = add(poly.get(d, ZERO), mul(root, carry))
        out[d - 1] = carry
    return out


def _det(mat, n: int) -> Expr:
    if n == 1:
        return mat[0][0]
    total = ZERO
    for i in range(n):
        if mat[i][0] is ZERO:
            continue
        minor = [[mat[r][c] for c in range(1, n)]
                 for r in range(n) if r != i]
        term = mul(mat[i][0], _det(minor, n - 1))
        if i % 2:
            term = mul(MINUS_ONE, term)
        total = add(total, term)
    return total


def action_matrix(sys: PdeSystem, p: Characteristic,
                  q_basis: Sequence[Multiplier],
                  cfg: Optional[ZeroTest] = None) -> ActionMatrix:
    """Exact matrix of the action of the symmetry P on span(q_basis);
    raises NotClosed when some action leaves the span."""
    cfg = cfg or sys.cfg
    _check_reserved(sys, ["lam"])
    n = len(q_basis)
    if n == 0:
        return ActionMatrix((), ())
    redq = [multiplier_reduced(sys, q) for q in q_basis]
    acts = [multiplier_reduced(sys, action_on_multiplier(sys, p, q, cfg))
            for q in q_basis]
    flat = _comparable([r[a] for r in redq + acts for a in sys.eq_ids])
    it = iter(flat)
    for r in redq + acts:
        for a in sys.eq_ids:
            r[a] = next(it)
    tables_q = [{a: _coeff_table(r[a]) for a in sys.eq_ids} for r in redq]
    tables_a = [{a: _coeff_table(r[a]) for a in sys.eq_ids} for r in acts]
    keys = sorted({(a, core)
                   for tabs in tables_q + tables_a
                   for a in sys.eq_ids for core in tabs[a]})
    mat = [[tables_q[j][a].get(core, ZERO) for j in range(n)]
           for (a, core) in keys]
    cols = []
    for i in range(n):
        rhs = [tables_a[i][a].get(core, ZERO) for (a, core) in keys]
        try:
            x, _hom = solve_linear(mat, rhs, sys.ctx.params, cfg)
        except InconsistentAssumptions:
            raise NotClosed(
                f"the action on basis element {i + 1} lies outside the "
                "span") from None
        cols.append(x)
    m = tuple(tuple(cols[i][j] for i in range(n)) for j in range(n))
    lam = par("lam")
    shifted = [[add(m[j][i], mul(MINUS_ONE, lam)) if i == j else m[j][i]
                for i in range(n)] for j in range(n)]
    poly = _poly_in(_det(shifted, n), "lam")
    roots: list[Expr] = []
    candidates = [m[i][i] for i in range(n)]
    candidates += [rat(v) for v in (0, 1, -1, 2, -2, 3, -3)]
    work = {d: c for d, c in poly.items()
            if not is_zero(c, sys.ctx.params, cfg)}
    while work and max(work) >= 1:
        if max(work) == 1:
            lead = work[1]
            root = mul(MINUS_ONE, work.get(0, ZERO), pow_(lead, MINUS_ONE))
            roots.append(root)
            work = {}
            break
        found = None
        for cand in candidates:
            if is_zero(_poly_eval(work, cand), sys.ctx.params, cfg):
                found = cand
                break
        if found is None:
            break
        roots.append(found)
        work = _poly_deflate(work, found)
        work = {d: c for d, c in work.items()
                if not is_zero(c, sys.ctx.params, cfg)}
    unresolved = None
    if work and max(work) >= 1:
        unresolved = add(*[mul(c, pow_(lam, rat(d)))
                           for d, c in sorted(work.items())])
    groups: list[list[Expr]] = []
    for r in roots:
        for g in groups:
            if is_zero(add(r, mul(MINUS_ONE, g[0])), sys.ctx.params, cfg):
                g.append(r)
                break
        else:
            groups.append([r])
    eigen = []
    for g in groups:
        lam0 = g[0]
        shift = [[add(m[j][i], mul(MINUS_ONE, lam0)) if i == j else m[j][i]
                  for i in range(n)] for j in range(n)]
        vecs = nullspace(shift, sys.ctx.params, cfg)
        eigen.append((lam0, len(g), tuple(tuple(v) for v in vecs)))
    return ActionMatrix(m, tuple(eigen), unresolved)


def solve_linear_ansatz(sys: PdeSystem, basis: Sequence, which: str,
                        cfg: Optional[ZeroTest] = None) -> list[dict]:
    """Solves the multiplier or symmetry determining equations over the
    rational span of the given basis; returns a basis of solutions as
    component mappings."""
    cfg = cfg or sys.cfg
    if which == "multiplier":
        keys = sys.eq_ids
    elif which == "symmetry":
        keys = sys.ctx.dep
    else:
        raise ExprError("which must be 'multiplier' or 'symmetry'")
    if not basis:
        return []
    norm = []
    for el in basis:
        if isinstance(el, Expr):
            if len(keys) != 1:
                raise ExprError(
                    "basis elements must be component mappings for a "
                    "multi-component system")
            norm.append({keys[0]: el})
        else:
            norm.append({k: el.get(k, ZERO) for k in keys})
    s_names = [f"s{i + 1}" for i in range(len(norm))]
    _check_reserved(sys, s_names)
    svars = [par(nm) for nm in s_names]
    cand = {k: add(*[mul(svars[i], norm[i][k]) for i in range(len(norm))])
            for k in keys}
    if which == "multiplier":
        f = multiplier_product(sys, cand)
        residuals = [euler(sys.ctx, f, dep) for dep in sys.ctx.dep]
    else:
        residuals = [sys.reduce_on_solutions(frechet(sys.ctx, e.expr, cand))
                     for e in sys.eqs]
    residuals = _comparable(residuals)
    reserved = frozenset(s_names)
    col = {nm: i for i, nm in enumerate(s_names)}
    table: dict[tuple, list] = {}
    for ri, res in enumerate(residuals):
        for t in (res.terms if isinstance(res, Add) else (res,)):
            if t is ZERO:
                continue
            mono, coeff, core = _split_reserved(t, reserved)
            if not isinstance(mono, Par):
                raise ExprError(
                    "determining residual is not linear in the ansatz "
                    "constants")
            row = table.setdefault((ri, core), [ZERO] * len(norm))
            c = col[mono.name]
            row[c] = add(row[c], coeff)
    rows = [table[k] for k in sorted(table)]
    if not rows:
        vecs = [[ONE if j == i else ZERO for j in range(len(norm))]
                for i in range(len(norm))]
    else:
        vecs = nullspace(rows, sys.ctx.params, cfg)
    out = []
    for v in vecs:
        sol = {k: add(*[mul(v[i], norm[i][k]) for i in range(len(norm))])
               for k in keys}
        out.append(sol)
    return out
