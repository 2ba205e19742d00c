"""Exception types shared across the package."""


class ClawError(Exception):
    """Base class for all package errors."""


class ExprError(ClawError):
    """Malformed expression construction (bad exponent, empty domain)."""


class UnboundSymbol(ClawError):
    """Evaluation hit a symbol with no binding."""


class DomainError(ClawError):
    """Evaluation left the real domain (ln of a nonpositive value, or a
    fractional power of a negative value)."""


class EvaluationDomainError(ClawError):
    """Numeric zero test failed to find a valid sample point after the
    allowed number of resamples."""


class ModeDisagreement(ClawError):
    """Canonical and numeric zero tests returned different verdicts."""


class ParseError(ClawError):
    """Document or expression syntax error."""

    def __init__(self, msg: str, line: int | None = None, col: int | None = None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", col {col}" if col is not None else "") + ")"
        super().__init__(msg + loc)
        self.line = line
        self.col = col


class UnknownSymbol(ParseError):
    """Expression references a symbol not declared by the system."""


class RankingViolation(ClawError):
    """Solved form is not normal with respect to the derivative ranking."""


class NonTerminatingReduction(ClawError):
    """Reduction failed to reach a fixpoint (invalid ranking or solved form)."""


class NonlinearInSlack(ClawError):
    """Slack expansion produced a term nonlinear in slack variables."""


class NotVanishingOnSolutions(ClawError):
    """Operator extraction requires an expression that vanishes on the
    solution space."""


class NotConserved(ClawError):
    """Current operations require a conserved current."""


class ScalingCritical(ClawError):
    """Scaling reconstruction weight is zero; the current is not
    recoverable from its multiplier by the scaling formula."""


class WeightIndeterminate(ClawError):
    """Expression is not scaling-homogeneous, so no weight can be assigned."""


class NotASymmetry(ClawError):
    """A characteristic that was required to be a symmetry is not one."""


class NotClosed(ClawError):
    """Symmetry action leaves the given multiplier span."""


class CaseSplitRequired(ClawError):
    """Exact elimination would need to divide by a parameter expression
    that is not decidably nonzero under the declared assumptions."""


class InconsistentAssumptions(ClawError):
    """A solution would force a parameter onto an excluded value."""
