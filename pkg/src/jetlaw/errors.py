"""Exception hierarchy shared by every jetlaw module."""


class JetlawError(Exception):
    """Base class for all errors raised by jetlaw."""


class CapExceeded(JetlawError):
    """A jet variable would exceed the configured order cap."""


class CycleError(JetlawError):
    """A substitution replacement contains its own target."""


class UnboundSymbol(JetlawError):
    """Numeric evaluation met a symbol or function with no binding."""


class TruncationMismatch(JetlawError):
    """Two eps-series with different truncation orders were combined."""


class InvalidSubstitution(JetlawError):
    """A substitution image is not admissible for the requested operation."""


class ReductionFailure(JetlawError):
    """A leading derivative cannot be solved for."""


class ReductionDiverged(JetlawError):
    """On-shell reduction did not reach a fixpoint within its bound."""


class NotASymmetryCandidate(JetlawError):
    """The grade-0 generator is not an exact symmetry of the unperturbed system."""


class TrivialSubstitution(JetlawError):
    """Every component of a self-adjointness substitution vanishes."""


class CollectionIncomplete(JetlawError):
    """A determining-equation coefficient still depends on positive-order jets."""


class NonlinearInUnknowns(JetlawError):
    """A determining system is not linear in the basis coefficients."""


class LiftRejected(JetlawError):
    """The unperturbed substitution is not nonlinearly self-adjoint."""


class PreconditionFailed(JetlawError):
    """Symmetry or self-adjointness precondition of a conservation formula failed."""


class InternalInconsistency(JetlawError):
    """Symbolic and numeric zero tests disagree."""


class Unstable(JetlawError):
    """The finite-difference time step violates the CFL bound."""


class InconclusiveRefine(JetlawError):
    """Grid refinement could not push discretization error below the drift floor."""


class DslError(JetlawError):
    """Parse or validation error in DSL input, with a source position."""

    def __init__(self, message, line=None, column=None, source=None):
        self.message = message
        self.line = line
        self.column = column
        self.source = source
        if line is not None:
            message = f"{line}:{column}: {message}"
        if source is not None:
            message = f"{source}:{message}" if line is not None else f"{source}: {message}"
        super().__init__(message)
