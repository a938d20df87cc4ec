"""Approximate nonlinear self-adjointness and approximate conservation laws.

Symbolic pipeline on the jet space: perturbed systems, formal Lagrangians and
adjoints, substitution tests, determining systems, conserved vectors from
approximate symmetries, and on-shell verification.
"""

from .conservation import (EXACT_ZERO, FAILED, ConservedVector, VerificationReport, approx_conserved_vector,
                           compare_vectors, conserved_vector, cosmetic, divergence, order_zero_verdict,
                           vector_from_exprs, verify_conservation)
from .dsl import (parse_ansatz, parse_document, parse_expression, parse_generator, parse_system,
                  print_ansatz, print_expression, print_generator, print_system)
from .errors import (JetlawError, CapExceeded, CycleError, UnboundSymbol, TruncationMismatch,
                     InvalidSubstitution, ReductionFailure, ReductionDiverged,
                     NotASymmetryCandidate, TrivialSubstitution, CollectionIncomplete,
                     NonlinearInUnknowns, LiftRejected, PreconditionFailed, InternalInconsistency,
                     Unstable, InconclusiveRefine, DslError)
from .expr import EPS, JetSymbol, MultiIndex, jet, normalize
from .jet import (Generator, OnShell, PdeEquation, PdeSystem, check_approx_symmetry, is_exact_symmetry,
                  on_shell_reduce, total_derivative)
from .selfadjoint import (ANSA_NO, ANSA_YES, INCONCLUSIVE, NsaStatus, SubstitutionAnsatz, check_ansa, check_nsa,
                          determining_system, distinct_term_criterion, equivalent_systems, generic_ansatz,
                          lift_substitution, nsa_status_over_basis, same_family, shortcut_discriminate,
                          solve_finite_ansatz)
from .series import EpsSeries
from .variational import (AdjointVarSet, adjoint_system, euler_operator, formal_lagrangian,
                          higher_euler_operator)

__all__ = [
    "EXACT_ZERO", "FAILED", "ConservedVector", "VerificationReport", "approx_conserved_vector",
    "compare_vectors", "conserved_vector", "cosmetic", "divergence", "order_zero_verdict",
    "vector_from_exprs", "verify_conservation", "parse_ansatz", "parse_document",
    "parse_expression", "parse_generator", "parse_system", "print_ansatz", "print_expression",
    "print_generator", "print_system", "JetlawError", "CapExceeded", "CycleError", "UnboundSymbol",
    "TruncationMismatch", "InvalidSubstitution", "ReductionFailure", "ReductionDiverged",
    "NotASymmetryCandidate", "TrivialSubstitution", "CollectionIncomplete", "NonlinearInUnknowns",
    "LiftRejected", "PreconditionFailed", "InternalInconsistency", "Unstable", "InconclusiveRefine",
    "DslError", "EPS", "JetSymbol", "MultiIndex", "jet", "normalize", "Generator", "OnShell",
    "PdeEquation", "PdeSystem", "check_approx_symmetry", "is_exact_symmetry", "on_shell_reduce",
    "total_derivative", "ANSA_NO", "ANSA_YES", "INCONCLUSIVE", "NsaStatus", "SubstitutionAnsatz",
    "check_ansa", "check_nsa", "determining_system", "distinct_term_criterion",
    "equivalent_systems", "generic_ansatz", "lift_substitution", "nsa_status_over_basis", "same_family",
    "shortcut_discriminate", "solve_finite_ansatz", "EpsSeries", "AdjointVarSet", "adjoint_system",
    "euler_operator", "formal_lagrangian", "higher_euler_operator",
]

__version__ = "0.1.0"
