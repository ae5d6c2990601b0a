"""Exception hierarchy for cylperc.

Exit-code mapping used by the CLI: ConfigError -> 2, any PreconditionError
subclass -> 3, InvariantViolation -> 4.
"""


class CylpercError(Exception):
    """Base class for all cylperc errors."""


class ConfigError(CylpercError):
    """Invalid command-line or config-file parameters."""


class PreconditionError(CylpercError):
    """A documented precondition of an operation was violated."""


class ZeroDirection(PreconditionError):
    """Direction vector has (near-)zero norm."""


class DimensionMismatch(PreconditionError):
    """Operands live in different ambient dimensions."""


class OutOfRange(PreconditionError):
    """Numeric argument outside its documented range."""


class ContainmentViolation(PreconditionError):
    """A sampled line hit the target but not the sampling envelope."""


class SeparationTooSmall(PreconditionError):
    """Point separation must exceed 2 for the covariance identity."""


class IntensityOrder(PreconditionError):
    """Thinning target intensity exceeds the source intensity."""


class NotContained(PreconditionError):
    """Sub-window is not contained in the sample window."""


class VacancyUndefined(PreconditionError):
    """Vacancy query outside the resolved window."""


class ResolutionTooCoarse(PreconditionError):
    """Grid cells larger than the cylinder radius defeat the center test."""


class BudgetExceeded(PreconditionError):
    """Grid cell budget exceeded."""


class WindowTooSmall(PreconditionError):
    """Sample window does not contain the queried configuration."""


class HypothesisViolated(PreconditionError):
    """Experiment parameters violate the underlying lemma hypothesis."""


class InvariantViolation(CylpercError):
    """An internal invariant tripped; indicates a bug, not a fluctuation."""
