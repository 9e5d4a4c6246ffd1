"""Constructive inversion of the linearized pullback-metric operator.

Pipeline at the critical target dimension q = m(m+3)/2 - 1:
exact jets -> coefficient matrix -> kernel covector field -> reduced
transport equation marched from a global transversal -> pointwise linear
solve -> independent verification.
"""

from .errors import (
    ArityError,
    DomainError,
    ExpressionSyntaxError,
    GridMismatchError,
    IsosolveError,
    NotAdmissibleError,
    NotFreeError,
    RankDeficientError,
    SignAmbiguousError,
    TransversalityLostError,
    WrongShapeError,
)
from .grid import Grid, n_pairs, n_rows, pair_index, sym_pairs
from .jetcalc import (
    Jet2,
    MapSpec,
    coefficient_matrix,
    eval_jet2,
    expression_field,
    is_free,
    jet_field,
    parse_map_spec,
    pullback_metric,
    pullback_metric_field,
)
from .kernelfield import (
    AdmissibilityReport,
    KernelVector,
    LambdaField,
    admissibility,
    kernel_field,
    kernel_vector,
    lambda_derivatives,
)
from .linsolve import (
    DeltaFField,
    SolverOptions,
    assemble_rhs,
    solve_free,
    solve_linearized,
    solve_pointwise,
)
from .transport import (
    TransportData,
    assemble_covector,
    build_transport,
    solve_transport,
)
from .verify import (
    linearized_pullback,
    newton_step,
    richardson_check,
    verify_solution,
)

__version__ = "0.1.0"

__all__ = [
    "ArityError", "DomainError", "ExpressionSyntaxError", "GridMismatchError",
    "IsosolveError", "NotAdmissibleError", "NotFreeError", "RankDeficientError",
    "SignAmbiguousError", "TransversalityLostError", "WrongShapeError",
    "Grid", "n_pairs", "n_rows", "pair_index", "sym_pairs",
    "Jet2", "MapSpec", "coefficient_matrix", "eval_jet2", "expression_field",
    "is_free", "jet_field", "parse_map_spec", "pullback_metric",
    "pullback_metric_field",
    "AdmissibilityReport", "KernelVector", "LambdaField", "admissibility",
    "kernel_field", "kernel_vector", "lambda_derivatives",
    "DeltaFField", "SolverOptions", "assemble_rhs", "solve_free",
    "solve_linearized", "solve_pointwise",
    "TransportData", "assemble_covector", "build_transport", "solve_transport",
    "linearized_pullback", "newton_step", "richardson_check", "verify_solution",
]
