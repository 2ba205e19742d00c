"""Canonical expression kernel.

Expressions are immutable, hash-consed trees over exact rational
coefficients, parameter symbols, independent variables, jet variables,
slack variables, and the transcendental atoms exp/ln together with
symbolic powers. Every constructor returns the canonical normal form:

* sums and products are flattened and sorted under a fixed total order,
  with rational coefficients collected per monomial;
* power merging x^a * x^b -> x^(a+b) and (x^a)^b -> x^(a*b);
* exp merging exp(a) * exp(b) -> exp(a+b), exp(a)^s -> exp(s*a),
  exp(0) -> 1, exp(ln x) -> x, ln(exp x) -> x, ln(1) -> 0;
* integer powers of rationals are folded exactly;
* positive integer powers of sums are expanded multinomially;
* sum bases of other powers are content-normalized (the gcd of the
  rational coefficients is pulled out; the sign too, but only under an
  integer exponent).

The atom order is: jets by (dependent name, multi-index), then
parameters by name, then independent variables, then slack variables,
then exp, ln, and power atoms. Products sort factors by base under this
order; sums sort terms by their factor tuple. The order is fixed so that
printed output is stable across runs.

Symbolic (non-integer) powers use the positive real branch; the numeric
evaluator rejects nonpositive bases for them. Exponents may contain only
rationals and parameters.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb
from typing import Iterable, Iterator, Mapping

import mpmath

from .errors import DomainError, ExprError, UnboundSymbol

__all__ = [
    "Expr", "Rat", "Par", "Var", "Jet", "Slack", "Exp", "Ln", "Pow", "Mul", "Add",
    "Param", "rat", "par", "var", "jet", "slackv", "add", "mul", "pow_", "exp_",
    "ln_", "neg", "sub", "div", "subs", "evaluate", "as_fraction",
    "align_powers", "align_powers_all", "clear_fractions_all", "is_scalar",
    "iter_atoms", "iter_jets", "contains_slack", "max_jet_order",
    "midx_add", "midx_sub", "midx_ge", "midx_order", "midx_unit", "midx_binom",
    "ZERO", "ONE", "MINUS_ONE", "to_str",
]

_RAT, _JET, _PAR, _VAR, _SLACK, _EXP, _LN, _POW, _ADD, _MUL = range(10)

_TABLE: dict[tuple, "Expr"] = {}


class Expr:
    __slots__ = ("key", "_hash")

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        return self is other

    def __ne__(self, other) -> bool:
        return self is not other

    def __repr__(self) -> str:
        return to_str(self)


class Rat(Expr):
    __slots__ = ("q",)


class Par(Expr):
    __slots__ = ("name",)


class Var(Expr):
    __slots__ = ("name",)


class Jet(Expr):
    __slots__ = ("dep", "midx")


class Slack(Expr):
    __slots__ = ("eq", "midx")


class Exp(Expr):
    __slots__ = ("arg",)


class Ln(Expr):
    __slots__ = ("arg",)


class Pow(Expr):
    __slots__ = ("base", "exp")


class Mul(Expr):
    __slots__ = ("coeff", "factors")


class Add(Expr):
    __slots__ = ("terms",)


def _intern(cls, key, attrs):
    node = _TABLE.get(key)
    if node is None:
        node = object.__new__(cls)
        node.key = key
        node._hash = hash(key)
        for name, value in attrs:
            setattr(node, name, value)
        _TABLE[key] = node
    return node


def rat(num=0, den=None) -> Expr:
    q = Fraction(num) if den is None else Fraction(num, den)
    return _intern(Rat, (_RAT, q), (("q", q),))


ZERO = rat(0)
ONE = rat(1)
MINUS_ONE = rat(-1)


def par(name: str) -> Expr:
    return _intern(Par, (_PAR, name), (("name", name),))


def var(name: str) -> Expr:
    return _intern(Var, (_VAR, name), (("name", name),))


def jet(dep: str, midx: Iterable[int]) -> Expr:
    m = tuple(int(c) for c in midx)
    if any(c < 0 for c in m):
        raise ExprError("negative derivative count in multi-index")
    return _intern(Jet, (_JET, dep, m), (("dep", dep), ("midx", m)))


def slackv(eq: str, midx: Iterable[int]) -> Expr:
    m = tuple(int(c) for c in midx)
    return _intern(Slack, (_SLACK, eq, m), (("eq", eq), ("midx", m)))


def _mk_exp(arg: Expr) -> Expr:
    return _intern(Exp, (_EXP, arg.key), (("arg", arg),))


def _mk_ln(arg: Expr) -> Expr:
    return _intern(Ln, (_LN, arg.key), (("arg", arg),))


def _mk_pow(base: Expr, exp: Expr) -> Expr:
    return _intern(Pow, (_POW, base.key, exp.key), (("base", base), ("exp", exp)))


def _mk_mul(coeff: Fraction, factors: tuple) -> Expr:
    key = (_MUL, coeff, tuple(f.key for f in factors))
    return _intern(Mul, key, (("coeff", coeff), ("factors", factors)))


def _mk_add(terms: tuple) -> Expr:
    key = (_ADD, tuple(t.key for t in terms))
    return _intern(Add, key, (("terms", terms),))


# ---------------------------------------------------------------------------
# multi-index helpers

def midx_add(a: tuple, b: tuple) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def midx_sub(a: tuple, b: tuple) -> tuple:
    out = tuple(x - y for x, y in zip(a, b))
    if any(c < 0 for c in out):
        raise ExprError("multi-index subtraction went negative")
    return out


def midx_ge(a: tuple, b: tuple) -> bool:
    return all(x >= y for x, y in zip(a, b))


def midx_order(a: tuple) -> int:
    return sum(a)


def midx_unit(n: int, i: int) -> tuple:
    return tuple(1 if k == i else 0 for k in range(n))


def midx_binom(k: tuple, j: tuple) -> int:
    out = 1
    for a, b in zip(k, j):
        out *= comb(a, b)
    return out


# ---------------------------------------------------------------------------
# term surgery

def _term_parts(t: Expr) -> tuple[Fraction, tuple]:
    """Split a non-sum normal form term into (rational coeff, factor tuple)."""
    if isinstance(t, Rat):
        return t.q, ()
    if isinstance(t, Mul):
        return t.coeff, t.factors
    return Fraction(1), (t,)


def _base_exp(f: Expr) -> tuple[Expr, Expr]:
    if isinstance(f, Pow):
        return f.base, f.exp
    return f, ONE


def _factor_sort_key(f: Expr):
    b, e = _base_exp(f)
    return (b.key, e.key)


def _monomial_key(t: Expr) -> tuple:
    if isinstance(t, Rat):
        return ()
    if isinstance(t, Mul):
        return tuple(f.key for f in t.factors)
    return (t.key,)


def _make_term(coeff: Fraction, factors: tuple) -> Expr:
    if coeff == 0:
        return ZERO
    if not factors:
        return rat(coeff)
    if coeff == 1 and len(factors) == 1:
        return factors[0]
    return _mk_mul(coeff, factors)


def add(*xs) -> Expr:
    const = Fraction(0)
    acc: dict[tuple, list] = {}
    for x in xs:
        terms = x.terms if isinstance(x, Add) else (x,)
        for t in terms:
            if isinstance(t, Rat):
                const += t.q
                continue
            coeff, factors = _term_parts(t)
            mk = tuple(f.key for f in factors)
            ent = acc.get(mk)
            if ent is None:
                acc[mk] = [coeff, factors]
            else:
                ent[0] += coeff
    out = []
    for coeff, factors in acc.values():
        if coeff != 0:
            out.append(_make_term(coeff, factors))
    if const != 0:
        out.append(rat(const))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    out.sort(key=_monomial_key)
    return _mk_add(tuple(out))


def _acc_base(bases: dict, b: Expr, e: Expr) -> None:
    ent = bases.get(b.key)
    if ent is None:
        bases[b.key] = [b, e]
    else:
        ent[1] = add(ent[1], e)


def mul(*xs) -> Expr:
    coeff = Fraction(1)
    bases: dict[tuple, list] = {}
    exp_args = []
    pending = list(xs)
    while pending:
        x = pending.pop()
        if isinstance(x, Rat):
            if x.q == 0:
                return ZERO
            coeff *= x.q
        elif isinstance(x, Mul):
            coeff *= x.coeff
            pending.extend(x.factors)
        elif isinstance(x, Pow):
            _acc_base(bases, x.base, x.exp)
        elif isinstance(x, Exp):
            exp_args.append(x.arg)
        else:
            _acc_base(bases, x, ONE)
    if exp_args:
        extra = exp_(add(*exp_args))
        if isinstance(extra, Rat):
            coeff *= extra.q
            if coeff == 0:
                return ZERO
        elif isinstance(extra, Mul):
            coeff *= extra.coeff
            for f in extra.factors:
                b, e = _base_exp(f)
                if isinstance(f, Exp):
                    _acc_base(bases, f, ONE)
                else:
                    _acc_base(bases, b, e)
        elif isinstance(extra, Pow):
            _acc_base(bases, extra.base, extra.exp)
        else:
            _acc_base(bases, extra, ONE)

    factors = []
    expand = []
    for b, e in bases.values():
        if isinstance(e, Rat):
            if e.q == 0:
                continue
            if isinstance(b, Rat):
                if e.q.denominator == 1:
                    coeff *= b.q ** e.q.numerator
                    continue
                factors.append(_mk_pow(b, e))
                continue
            if isinstance(b, Add) and e.q.denominator == 1 and e.q > 0:
                expand.append((b, e.q.numerator))
                continue
        elif isinstance(b, Rat):
            factors.append(_mk_pow(b, e))
            continue
        factors.append(b if e is ONE else _mk_pow(b, e))
    if coeff == 0:
        return ZERO
    factors.sort(key=_factor_sort_key)
    result = _make_term(coeff, tuple(factors))
    for base, n in expand:
        for _ in range(n):
            parts = result.terms if isinstance(result, Add) else (result,)
            pieces = []
            for rt in parts:
                for at in base.terms:
                    pieces.append(mul(rt, at))
            result = add(*pieces)
    return result


def _is_integer(e: Expr) -> bool:
    return isinstance(e, Rat) and e.q.denominator == 1


def _content(terms) -> Fraction:
    num = 0
    den = 1
    from math import gcd, lcm
    for t in terms:
        c, _ = _term_parts(t)
        num = gcd(num, c.numerator)
        den = lcm(den, c.denominator)
    return Fraction(num, den)


def _content_normalize(b: Add, allow_sign: bool) -> tuple[Fraction, Expr]:
    content = _content(b.terms)
    if allow_sign:
        first_coeff, _ = _term_parts(b.terms[0])
        if first_coeff < 0:
            content = -content
    if content == 1:
        return content, b
    inv = rat(Fraction(1) / content)
    core = add(*[mul(inv, t) for t in b.terms])
    return content, core


def pow_(b: Expr, e) -> Expr:
    if not isinstance(e, Expr):
        e = rat(e)
    if not is_scalar(e):
        raise ExprError("exponent must contain only rationals and parameters")
    if isinstance(e, Rat):
        if e.q == 0:
            return ONE
        if e.q == 1:
            return b
    if isinstance(b, Rat):
        if b.q == 0:
            if isinstance(e, Rat) and e.q > 0:
                return ZERO
            raise ExprError("zero base with non-positive or symbolic exponent")
        if _is_integer(e):
            return rat(b.q ** e.q.numerator)
        if b.q < 0:
            raise ExprError("non-integer power of a negative rational")
        if b.q == 1:
            return ONE
        return _mk_pow(b, e)
    if isinstance(b, Mul):
        return mul(pow_(rat(b.coeff), e), *[pow_(f, e) for f in b.factors])
    if isinstance(b, Pow):
        return pow_(b.base, mul(b.exp, e))
    if isinstance(b, Exp):
        return exp_(mul(e, b.arg))
    if isinstance(b, Add):
        if _is_integer(e):
            n = e.q.numerator
            if n > 0:
                return mul(*([b] * n))
            content, core = _content_normalize(b, allow_sign=True)
            return mul(pow_(rat(content), e), _mk_pow(core, e))
        content, core = _content_normalize(b, allow_sign=False)
        return mul(pow_(rat(content), e), _mk_pow(core, e))
    return _mk_pow(b, e)


def exp_(a: Expr) -> Expr:
    if isinstance(a, Rat) and a.q == 0:
        return ONE
    if isinstance(a, Ln):
        return a.arg
    return _mk_exp(a)


def ln_(a: Expr) -> Expr:
    if isinstance(a, Rat):
        if a.q <= 0:
            raise ExprError("ln of a non-positive rational")
        if a.q == 1:
            return ZERO
        return _mk_ln(a)
    if isinstance(a, Exp):
        return a.arg
    return _mk_ln(a)


def neg(x: Expr) -> Expr:
    return mul(MINUS_ONE, x)


def sub(a: Expr, b: Expr) -> Expr:
    return add(a, mul(MINUS_ONE, b))


def div(a: Expr, b: Expr) -> Expr:
    return mul(a, pow_(b, MINUS_ONE))


# ---------------------------------------------------------------------------
# predicates and walkers

_SCALAR_CACHE: dict[Expr, bool] = {}


def is_scalar(e: Expr) -> bool:
    """True when e contains no jet, independent, or slack nodes."""
    cached = _SCALAR_CACHE.get(e)
    if cached is not None:
        return cached
    if isinstance(e, (Rat, Par)):
        out = True
    elif isinstance(e, (Jet, Var, Slack)):
        out = False
    elif isinstance(e, (Exp, Ln)):
        out = is_scalar(e.arg)
    elif isinstance(e, Pow):
        out = is_scalar(e.base) and is_scalar(e.exp)
    elif isinstance(e, Mul):
        out = all(is_scalar(f) for f in e.factors)
    else:
        out = all(is_scalar(t) for t in e.terms)
    _SCALAR_CACHE[e] = out
    return out


def _children(e: Expr) -> tuple:
    if isinstance(e, Add):
        return e.terms
    if isinstance(e, Mul):
        return e.factors
    if isinstance(e, Pow):
        return (e.base, e.exp)
    if isinstance(e, (Exp, Ln)):
        return (e.arg,)
    return ()


def iter_atoms(e: Expr) -> Iterator[Expr]:
    """Yield each distinct Jet/Par/Var/Slack node once."""
    seen = set()
    stack = [e]
    while stack:
        x = stack.pop()
        if x in seen:
            continue
        seen.add(x)
        if isinstance(x, (Jet, Par, Var, Slack)):
            yield x
        else:
            stack.extend(_children(x))


def iter_jets(e: Expr) -> Iterator[Expr]:
    for a in iter_atoms(e):
        if isinstance(a, Jet):
            yield a


def contains_slack(e: Expr) -> bool:
    return any(isinstance(a, Slack) for a in iter_atoms(e))


def max_jet_order(e: Expr) -> int:
    orders = [midx_order(j.midx) for j in iter_jets(e)]
    return max(orders, default=0)


# ---------------------------------------------------------------------------
# substitution

def subs(e: Expr, mapping: Mapping[Expr, Expr]) -> Expr:
    """Replace nodes appearing as keys of mapping, rebuilding canonically."""
    if not mapping:
        return e
    memo: dict[Expr, Expr] = {}

    def go(x: Expr) -> Expr:
        r = memo.get(x)
        if r is not None:
            return r
        r = mapping.get(x)
        if r is None:
            if isinstance(x, Add):
                r = add(*[go(t) for t in x.terms])
            elif isinstance(x, Mul):
                r = mul(rat(x.coeff), *[go(f) for f in x.factors])
            elif isinstance(x, Pow):
                r = pow_(go(x.base), go(x.exp))
            elif isinstance(x, Exp):
                r = exp_(go(x.arg))
            elif isinstance(x, Ln):
                r = ln_(go(x.arg))
            else:
                r = x
        memo[x] = r
        return r

    return go(e)


# ---------------------------------------------------------------------------
# evaluation

def _mpf(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / mpmath.mpf(x.denominator)
    return mpmath.mpf(x)


def evaluate(e: Expr, env: Mapping[Expr, object]):
    """Evaluate at a point. env maps Jet/Par/Var nodes to Fractions or ints.

    Returns an exact Fraction when every exponent is an integer, an mpmath
    float otherwise. Raises UnboundSymbol, DomainError, ZeroDivisionError.
    """
    memo: dict[Expr, object] = {}

    def ev(x: Expr):
        r = memo.get(x)
        if r is not None:
            return r
        if isinstance(x, Rat):
            r = x.q
        elif isinstance(x, (Jet, Par, Var)):
            try:
                r = env[x]
            except KeyError:
                raise UnboundSymbol(f"no value bound for {x!r}") from None
            if isinstance(r, int):
                r = Fraction(r)
        elif isinstance(x, Slack):
            raise UnboundSymbol("slack variables carry no value")
        elif isinstance(x, Add):
            vals = [ev(t) for t in x.terms]
            if all(isinstance(v, Fraction) for v in vals):
                r = sum(vals, Fraction(0))
            else:
                r = mpmath.fsum(_mpf(v) for v in vals)
        elif isinstance(x, Mul):
            r = x.coeff
            for f in x.factors:
                v = ev(f)
                if isinstance(r, Fraction) and not isinstance(v, Fraction):
                    r = _mpf(r)
                r = r * (v if isinstance(r, Fraction) else _mpf(v))
        elif isinstance(x, Pow):
            bv = ev(x.base)
            ev_exp = ev(x.exp)
            if isinstance(ev_exp, Fraction) and ev_exp.denominator == 1:
                n = ev_exp.numerator
                if isinstance(bv, Fraction):
                    if bv == 0 and n <= 0:
                        raise ZeroDivisionError("zero base, non-positive power")
                    r = bv ** n
                else:
                    r = bv ** n
            else:
                bf = _mpf(bv)
                if bf <= 0:
                    raise DomainError("non-integer power of a non-positive value")
                r = mpmath.power(bf, _mpf(ev_exp))
        elif isinstance(x, Exp):
            r = mpmath.exp(_mpf(ev(x.arg)))
        elif isinstance(x, Ln):
            av = _mpf(ev(x.arg))
            if av <= 0:
                raise DomainError("ln of a non-positive value")
            r = mpmath.log(av)
        else:
            raise ExprError(f"cannot evaluate node {type(x).__name__}")
        memo[x] = r
        return r

    return ev(e)


# ---------------------------------------------------------------------------
# fraction clearing

def as_fraction(e: Expr) -> tuple[Expr, Expr]:
    """Clear negative-integer-exponent factors: returns (num, den) with
    e = num / den and den a product of the cleared factors.

    Only integer exponents are cleared; symbolic negative powers stay in
    the numerator. The numerator is rebuilt term by term with exponent
    arithmetic so the cleared factors cancel exactly.
    """
    terms = e.terms if isinstance(e, Add) else (e,)
    den_pows: dict[tuple, list] = {}
    _collect_den_pows(terms, den_pows)
    if not den_pows:
        return e, ONE
    num = add(*_cleared_terms(terms, den_pows))
    den = mul(*[pow_(b, rat(n)) for b, n in den_pows.values()])
    return num, den


def _collect_den_pows(terms, den_pows: dict, skip_scalar: bool = False) -> None:
    for t in terms:
        _, factors = _term_parts(t)
        for f in factors:
            if isinstance(f, Pow) and _is_integer(f.exp) and f.exp.q < 0:
                if skip_scalar and is_scalar(f.base):
                    continue
                n = -f.exp.q.numerator
                ent = den_pows.get(f.base.key)
                if ent is None:
                    den_pows[f.base.key] = [f.base, n]
                elif n > ent[1]:
                    ent[1] = n


def _cleared_terms(terms, den_pows: dict) -> list:
    out = []
    for t in terms:
        coeff, factors = _term_parts(t)
        parts = [rat(coeff)]
        seen: dict[tuple, Expr] = {}
        for f in factors:
            b, ex = _base_exp(f)
            if not isinstance(f, Exp) and b.key in den_pows:
                seen[b.key] = ex
            else:
                parts.append(f)
        for bkey, (b, n) in den_pows.items():
            total = add(seen.get(bkey, ZERO), rat(n))
            parts.append(pow_(b, total))
        out.append(mul(*parts))
    return out


def clear_fractions_all(es) -> list[Expr]:
    """Multiply every expression by one shared product of the non-scalar
    negative-integer-exponent factors found across all of them, so the
    results are denominator-free over those bases and stay mutually
    comparable. Scalar denominators are left in place: they end up in term
    coefficients, never in the monomial cores being compared, and clearing
    them would just rescale everything by parameter-dependent factors. The
    shared factor is nonzero wherever the inputs are defined, so
    simultaneous-vanishing questions are unchanged."""
    den_pows: dict[tuple, list] = {}
    term_lists = []
    for e in es:
        terms = e.terms if isinstance(e, Add) else (e,)
        term_lists.append(terms)
        _collect_den_pows(terms, den_pows, skip_scalar=True)
    if not den_pows:
        return list(es)
    return [add(*_cleared_terms(terms, den_pows)) for terms in term_lists]


def _exp_split(ex: Expr) -> tuple[int, Expr]:
    """Split an exponent as ex = s + k with k an integer, choosing s so
    that exponents an integer apart share the same s."""
    if isinstance(ex, Rat):
        k = ex.q.__floor__()
        return k, rat(ex.q - k)
    if isinstance(ex, Add):
        const = Fraction(0)
        for t in ex.terms:
            if isinstance(t, Rat):
                const = t.q
                break
        k = const.__floor__()
        if k:
            return k, add(ex, rat(-k))
    return 0, ex


def _alignable(f: Expr) -> bool:
    # sums are the only bases that do not merge on their own: powers of a
    # single atom recombine inside mul at construction time
    return (isinstance(f, Pow) and isinstance(f.base, Add)
            and not _is_integer(f.exp))


def align_powers_all(es) -> list[Expr]:
    """Jointly rewrite power factors of one sum base whose non-integer
    exponents differ by integers (for example w^(a-1) against w^(a-3))
    onto the lowest exponent found in any of the expressions, expanding
    the nonnegative-integer quotients so that like terms can recombine.

    The rewrite is pointwise exact wherever the powers are defined.
    Exponent families are shared across the inputs, so matching factors
    from different expressions land on the same representative. Inputs
    that need no rewriting are returned unchanged (identically).
    """
    fams: dict[tuple, list] = {}
    term_lists = []
    for e in es:
        terms = e.terms if isinstance(e, Add) else (e,)
        term_lists.append(terms)
        for t in terms:
            _, factors = _term_parts(t)
            for f in factors:
                if _alignable(f):
                    k, s = _exp_split(f.exp)
                    ent = fams.get((f.base.key, s.key))
                    if ent is None:
                        fams[(f.base.key, s.key)] = [k, k]
                    elif k < ent[0]:
                        ent[0] = k
                    elif k > ent[1]:
                        ent[1] = k
    if not any(lo != hi for lo, hi in fams.values()):
        return list(es)
    out = []
    for e, terms in zip(es, term_lists):
        new_terms = []
        changed = False
        for t in terms:
            coeff, factors = _term_parts(t)
            parts = [rat(coeff)]
            quotients = []
            for f in factors:
                if _alignable(f):
                    k, s = _exp_split(f.exp)
                    lo = fams[(f.base.key, s.key)][0]
                    if k > lo:
                        changed = True
                        quotients.append(pow_(f.base, k - lo))
                        parts.append(pow_(f.base, add(s, rat(lo))))
                        continue
                parts.append(f)
            pieces = [mul(*parts)]
            for q in quotients:
                # distribute by hand: handing mul the whole quotient would
                # recombine it with the fractional power of the same base
                qts = q.terms if isinstance(q, Add) else (q,)
                pieces = [mul(p, qt) for p in pieces for qt in qts]
            new_terms.extend(pieces)
        out.append(add(*new_terms) if changed else e)
    return out


def align_powers(e: Expr) -> Expr:
    return align_powers_all((e,))[0]


# ---------------------------------------------------------------------------
# printing

def _frac_str(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def _pow_str(f: Pow, ctx) -> str:
    b = f.base
    if isinstance(b, (Add, Mul)):
        bs = f"({to_str(b, ctx)})"
    elif isinstance(b, Rat) and not (b.q.denominator == 1 and b.q >= 0):
        bs = f"({_frac_str(b.q)})"
    else:
        bs = _atom_str(b, ctx)
    es = to_str(f.exp, ctx)
    if not (isinstance(f.exp, Rat) and f.exp.q.denominator == 1 and f.exp.q >= 0):
        es = f"({es})"
    return f"{bs}^{es}"


def _atom_str(f: Expr, ctx) -> str:
    if isinstance(f, Rat):
        return _frac_str(f.q)
    if isinstance(f, (Par, Var)):
        return f.name
    if isinstance(f, Jet):
        if midx_order(f.midx) == 0:
            return f.dep
        if ctx is not None:
            letters = "".join(
                name * count for name, count in zip(ctx.indep, f.midx)
            )
            return f"{f.dep}_{letters}"
        return f"{f.dep}_{list(f.midx)}"
    if isinstance(f, Slack):
        return f"<G.{f.eq}.{list(f.midx)}>"
    if isinstance(f, Exp):
        return f"exp({to_str(f.arg, ctx)})"
    if isinstance(f, Ln):
        return f"ln({to_str(f.arg, ctx)})"
    if isinstance(f, Pow):
        return _pow_str(f, ctx)
    return f"({to_str(f, ctx)})"


def _term_str(t: Expr, ctx) -> tuple[str, str]:
    """Return (sign, body) for one term."""
    coeff, factors = _term_parts(t)
    sign = "-" if coeff < 0 else "+"
    c = abs(coeff)
    parts = []
    if c != 1 or not factors:
        parts.append(_frac_str(c))
    parts.extend(_atom_str(f, ctx) for f in factors)
    return sign, "*".join(parts)


def to_str(e: Expr, ctx=None) -> str:
    """Print an expression in the grammar the parser accepts.

    ctx supplies independent-variable names for jet subscripts; without
    it jets print with bracketed multi-indices (debug form).
    """
    terms = e.terms if isinstance(e, Add) else (e,)
    out = []
    for i, t in enumerate(terms):
        sign, body = _term_str(t, ctx)
        if i == 0:
            out.append(body if sign == "+" else f"-{body}")
        else:
            out.append(f" {sign} {body}")
    return "".join(out)


# ---------------------------------------------------------------------------
# parameters

class Param:
    """A named constant with nonvanishing/exclusion assumptions."""

    __slots__ = ("name", "nonzero", "excluded")

    def __init__(self, name: str, nonzero: bool = False,
                 excluded: Iterable[Fraction] = ()):
        self.name = name
        self.nonzero = bool(nonzero)
        self.excluded = tuple(Fraction(x) for x in excluded)

    def allows(self, value: Fraction) -> bool:
        if self.nonzero and value == 0:
            return False
        return value not in self.excluded

    def __repr__(self) -> str:
        tags = []
        if self.nonzero:
            tags.append("nonzero")
        for x in self.excluded:
            tags.append(f"exclude {x}")
        return f"Param({self.name}{', ' + ' '.join(tags) if tags else ''})"
