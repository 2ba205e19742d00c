"""Two-layer zero testing.

Canonical mode decides zero by the kernel normal form, after clearing
integer-exponent denominators. Numeric mode samples jet and independent
values from the open interval (0.5, 1.5) and parameter values from small
integers respecting the declared assumptions, evaluating exactly in
rational arithmetic when possible and at 50 digits otherwise. Sampling is
derived deterministically from the configured seed and the expression,
so repeated runs produce identical reports.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import mpmath

from .errors import (
    DomainError,
    EvaluationDomainError,
    ModeDisagreement,
    UnboundSymbol,
)
from .expr import (
    Expr, Jet, Par, Slack, Var, ZERO, align_powers, as_fraction, evaluate,
    iter_atoms, Param,
)

ZERO_V = "Zero"
NONZERO_V = "NonZero"
INCONCLUSIVE_V = "Inconclusive"

CANONICAL = "canonical"
NUMERIC = "numeric"
BOTH = "both"

# candidate integer values for sampled parameters
_PARAM_POOL = (-3, -2, -1, 1, 2, 3, 4, 5)


@dataclass(frozen=True)
class ZeroTest:
    """Configuration for zero testing."""

    mode: str = CANONICAL
    trials: int = 8
    tol: float = 1e-9
    seed: int = 0

    def with_mode(self, mode: str) -> "ZeroTest":
        return ZeroTest(mode, self.trials, self.tol, self.seed)


DEFAULT = ZeroTest()


def canonical_zero(e: Expr) -> bool:
    if e is ZERO:
        return True
    num, _den = as_fraction(e)
    # power alignment can expose cancellations blocked by integer-offset
    # exponents of one base; clearing afterwards handles any denominators
    # its expansions bring back. Nesting makes this iterate, with a depth
    # cap as a terminating safeguard.
    for _ in range(32):
        if num is ZERO:
            return True
        aligned = align_powers(num)
        if aligned is num:
            return False
        num, _den = as_fraction(aligned)
    return False


def _rng_for(e: Expr, seed: int) -> random.Random:
    digest = hashlib.sha256(
        repr(e.key).encode() + b"|" + str(seed).encode()
    ).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _sample_env(rng: random.Random, atoms, params: dict[str, Param]):
    env = {}
    for a in atoms:
        if isinstance(a, (Jet, Var)):
            env[a] = Fraction(rng.randint(501, 1499), 1000)
        elif isinstance(a, Par):
            spec = params.get(a.name)
            pool = [
                v for v in _PARAM_POOL + (0,)
                if spec is None or spec.allows(Fraction(v))
            ]
            env[a] = Fraction(rng.choice(pool))
    return env


def numeric_zero(e: Expr, params: Iterable[Param] = (), cfg: ZeroTest = DEFAULT) -> bool:
    """Sample-and-evaluate zero test. Raises EvaluationDomainError when no
    valid sample point is found after 10 resamples of a trial."""
    atoms = sorted(iter_atoms(e), key=lambda a: a.key)
    for a in atoms:
        if isinstance(a, Slack):
            raise UnboundSymbol("cannot numerically test an expression with slack nodes")
    pmap = {p.name: p for p in params}
    rng = _rng_for(e, cfg.seed)
    with mpmath.workdps(50):
        for _ in range(cfg.trials):
            value = None
            for _attempt in range(10):
                env = _sample_env(rng, atoms, pmap)
                try:
                    value = evaluate(e, env)
                    break
                except (DomainError, ZeroDivisionError):
                    continue
            if value is None:
                raise EvaluationDomainError(
                    f"no valid sample point for {e!r} after 10 resamples"
                )
            if abs(float(value)) >= cfg.tol:
                return False
    return True


def verdict(e: Expr, params: Iterable[Param] = (), cfg: ZeroTest = DEFAULT) -> str:
    if cfg.mode == CANONICAL:
        return ZERO_V if canonical_zero(e) else NONZERO_V
    if cfg.mode == NUMERIC:
        return ZERO_V if numeric_zero(e, params, cfg) else NONZERO_V
    if cfg.mode == BOTH:
        c = canonical_zero(e)
        n = numeric_zero(e, params, cfg)
        if c != n:
            raise ModeDisagreement(
                f"canonical says {'Zero' if c else 'NonZero'} but numeric says "
                f"{'Zero' if n else 'NonZero'} for {e!r}"
            )
        return ZERO_V if c else NONZERO_V
    raise ValueError(f"unknown zero-test mode {cfg.mode!r}")


def is_zero(e: Expr, params: Iterable[Param] = (), cfg: ZeroTest = DEFAULT) -> bool:
    return verdict(e, params, cfg) == ZERO_V


def sample_pairs(e1: Expr, e2: Expr, params: Iterable[Param] = (),
                 cfg: ZeroTest = DEFAULT):
    """Evaluate two expressions at shared seeded sample points, yielding
    up to cfg.trials float pairs. Points where either side is undefined
    are skipped."""
    probe = e1 if e2 is ZERO else (e2 if e1 is ZERO else None)
    atoms = sorted(set(iter_atoms(e1)) | set(iter_atoms(e2)),
                   key=lambda a: a.key)
    for a in atoms:
        if isinstance(a, Slack):
            raise UnboundSymbol(
                "cannot numerically sample an expression with slack nodes")
    pmap = {p.name: p for p in params}
    rng = _rng_for(probe if probe is not None else e1, cfg.seed)
    out = []
    with mpmath.workdps(50):
        for _ in range(cfg.trials):
            for _attempt in range(10):
                env = _sample_env(rng, atoms, pmap)
                try:
                    v1 = evaluate(e1, env)
                    v2 = evaluate(e2, env)
                except (DomainError, ZeroDivisionError):
                    continue
                out.append((float(v1), float(v2)))
                break
    return out
