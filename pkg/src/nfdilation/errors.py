"""Exception hierarchy shared by all modules.

Errors that mark a mathematically meaningful outcome (a trivial residual
part, a non-convergent limit) are usually reported through flags on the
returned objects; the classes below are raised only when a computation
cannot proceed or when a caller asked for a hard failure.
"""


class DilationError(Exception):
    """Base class for all errors raised by this package."""


class ArgumentError(DilationError):
    """Raised when an argument violates a documented precondition."""


class AssumptionError(DilationError):
    """Raised when a mathematical assumption fails numerically."""


class NotContraction(AssumptionError):
    pass


class ZeroMatrix(AssumptionError):
    pass


class NoConvergence(AssumptionError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class TruncationUnsafe(ArgumentError):
    """A requested power exceeds the faithful power bound of a truncation."""


class NotIsometry(AssumptionError):
    pass


class ResidualTrivial(AssumptionError):
    pass


class KernelNotTrivial(AssumptionError):
    pass


class SourceNotUnitary(AssumptionError):
    pass


class NotBetweenUnitaries(AssumptionError):
    pass


class SingularPolar(AssumptionError):
    pass


class DegenerateQ(AssumptionError):
    pass


class OneIsEigenvalue(AssumptionError):
    pass


class ResolventSingular(AssumptionError):
    pass


class NotCNU(AssumptionError):
    pass


class NotCdot1(AssumptionError):
    pass


class SampleInsideSpectrum(ArgumentError):
    pass


class NotEigenpair(ArgumentError):
    pass


class NotInvariant(ArgumentError):
    pass


class OneInSpectrum(AssumptionError):
    pass


class NotSimilar(AssumptionError):
    pass


class InconsistentCriteria(AssumptionError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class WindowTooLarge(ArgumentError):
    pass


class NonpositiveWeight(ArgumentError):
    pass


class ConfigInvalid(ArgumentError):
    pass


class StepFailed(DilationError):
    def __init__(self, index, step, diagnostic):
        super().__init__(f"step {index} ({step}) failed: {diagnostic}")
        self.index = index
        self.step = step
        self.diagnostic = diagnostic
