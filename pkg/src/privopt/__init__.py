"""Optimal differentially private mechanisms for count queries, exactly.

The package builds count-query mechanisms over exact rationals, solves
each user's expected-loss LP with an exact simplex, and machine-checks
that Bayes-remapping the truncated geometric mechanism is simultaneously
optimal for every user, along with the structural facts behind that
claim and the negative result for users with priors over databases.
"""

from .core import (
    CapacityError,
    DPReport,
    LossFunction,
    Mechanism,
    Number,
    PrivacyLevel,
    Rational,
    Remap,
    StochasticityReport,
    StructuralError,
    UserModel,
    check_differential_privacy,
    check_row_stochastic,
    compose,
    default_precision,
    expected_loss,
    format_rational,
    hp_context,
    parse_rational,
    to_decimal,
)
from .mechanisms import (
    geometric_face_value_binary_loss,
    geometric_pmf,
    geometric_tail,
    geometric_two_point_loss,
    laplace_two_point_loss,
    truncated_geometric,
    two_point_loss_ratio,
)
from .remap import (
    Posterior,
    brute_force_optimal_remap,
    optimal_remap,
    posterior,
)
from .optlp import (
    TightSet,
    UserLP,
    VertexSolution,
    build_lp,
    optimal_mechanism_for_user,
    solve_vertex,
    tight_rank,
    tight_set,
)
from .analysis import (
    ConstraintMatrix,
    FactorizationCheck,
    SlackAccounting,
    StructureReport,
    UniquenessReport,
    constraint_matrix,
    derive_remap_from_constraint_matrix,
    random_user,
    render_constraint_matrix,
    slack_accounting,
    validate_vertex_structure,
    verify_factorization,
    verify_uniqueness,
)
from .nonoblivious import (
    DatabaseSpace,
    FullMechanism,
    InfeasibilityCertificate,
    binary_space,
    build_counterexample_lp,
    check_counterexample_infeasibility,
    check_full_differential_privacy,
    check_full_row_stochastic,
    lift,
    obliviate,
    random_dp_full_mechanism,
    worst_case_expected_loss,
)
from .simplex import Constraint, EQ, GE, LE, SimplexResult, solve_lp, verify_farkas

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "Constraint",
    "ConstraintMatrix",
    "DPReport",
    "DatabaseSpace",
    "EQ",
    "FactorizationCheck",
    "FullMechanism",
    "GE",
    "InfeasibilityCertificate",
    "LE",
    "LossFunction",
    "Mechanism",
    "Number",
    "Posterior",
    "PrivacyLevel",
    "Rational",
    "Remap",
    "SimplexResult",
    "SlackAccounting",
    "StochasticityReport",
    "StructuralError",
    "StructureReport",
    "TightSet",
    "UniquenessReport",
    "UserLP",
    "UserModel",
    "VertexSolution",
    "binary_space",
    "brute_force_optimal_remap",
    "build_counterexample_lp",
    "build_lp",
    "check_counterexample_infeasibility",
    "check_differential_privacy",
    "check_full_differential_privacy",
    "check_full_row_stochastic",
    "check_row_stochastic",
    "compose",
    "constraint_matrix",
    "default_precision",
    "derive_remap_from_constraint_matrix",
    "expected_loss",
    "format_rational",
    "geometric_face_value_binary_loss",
    "geometric_pmf",
    "geometric_tail",
    "geometric_two_point_loss",
    "hp_context",
    "laplace_two_point_loss",
    "lift",
    "obliviate",
    "optimal_mechanism_for_user",
    "optimal_remap",
    "parse_rational",
    "posterior",
    "random_dp_full_mechanism",
    "random_user",
    "render_constraint_matrix",
    "slack_accounting",
    "solve_lp",
    "solve_vertex",
    "tight_rank",
    "tight_set",
    "to_decimal",
    "truncated_geometric",
    "two_point_loss_ratio",
    "validate_vertex_structure",
    "verify_factorization",
    "verify_farkas",
    "verify_uniqueness",
    "worst_case_expected_loss",
]
