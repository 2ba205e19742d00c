"""Symbolic verification and classification of conservation laws of
normal PDE systems."""

from .calculus import (
    Context, all_midx_upto, d_multi, euler, frechet, frechet_adjoint,
    higher_euler, jet_partial, peel_pair, psi_pair, total_derivative,
)
from .conslaw import (
    check_adjoint_symmetry, check_helmholtz, check_multiplier,
    currents_equivalent, extract_multiplier, helmholtz_expected,
    is_trivial, multiplier_product, multiplier_reduced,
    multipliers_match, r_of_multiplier, r_of_symmetry,
    scaling_characteristic, scaling_reconstruct, verify_current,
    weight_of,
)
from .errors import (
    CaseSplitRequired, ClawError, DomainError, EvaluationDomainError,
    ExprError, InconsistentAssumptions, ModeDisagreement,
    NonTerminatingReduction, NonlinearInSlack, NotASymmetry, NotClosed,
    NotConserved, NotVanishingOnSolutions, ParseError, RankingViolation,
    ScalingCritical, UnboundSymbol, UnknownSymbol, WeightIndeterminate,
)
from .expr import (
    Add, Exp, Expr, Jet, Ln, MINUS_ONE, Mul, ONE, Par, Param, Pow, Rat,
    Slack, Var, ZERO, add, as_fraction, div, evaluate, exp_, is_scalar,
    iter_atoms, iter_jets, jet, ln_, mul, neg, par, pow_, rat, sub,
    subs, to_str, var,
)
from .linalg import decidably_nonzero, nullspace, rref, solve_linear
from .parser import (
    CorpusDocument, parse_document, parse_in_system, print_document,
)
from .symaction import (
    ActionMatrix, AffineSolution, BilinearSystem, Invariance,
    action_matrix, action_on_current, action_on_multiplier,
    bilinear_system, check_symmetry, equations_match, invariance_check,
    solve_fixed_a, solve_linear_ansatz,
)
from .system import (
    Characteristic, Current, Equation, GOperator, Multiplier, PdeSystem,
    RANKINGS, goperator_equal,
)
from .zerotest import ZeroTest, is_zero

__version__ = "0.1.0"
