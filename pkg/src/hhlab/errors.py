"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: hypothesis violations exit 1, invalid
input exits 2, numerical failures exit 3.
"""


class HHLabError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 3


class InvalidInputError(HHLabError, ValueError):
    exit_code = 2


class InvalidDomainError(InvalidInputError):
    """Unbounded, degenerate or malformed domain."""


class ArgumentError(InvalidInputError):
    """A numeric argument is outside its admissible range."""


class UnsupportedVariantError(InvalidInputError):
    """The operation is not defined for this domain or function variant."""


class SingularityError(InvalidInputError):
    """A function was evaluated or integrated across its singularity."""


class HypothesisViolation(HHLabError):
    """A mathematical hypothesis (e.g. f >= 0 on the boundary) fails."""

    exit_code = 1


class IllPosedRatioError(HypothesisViolation):
    """The boundary integral is too small relative to its error."""


class NumericalError(HHLabError):
    exit_code = 3


class ResolutionError(NumericalError):
    """Grid too coarse for the requested domain."""


class StabilityError(NumericalError):
    """Explicit time step above the stability limit."""


class ConvergenceError(NumericalError):
    """An iterative method failed to converge."""


class SearchError(NumericalError):
    """The extremal search could not find a feasible start."""
