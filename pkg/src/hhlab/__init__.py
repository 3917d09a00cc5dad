"""Numerical toolkit for higher-dimensional Hermite–Hadamard inequalities."""

__version__ = "0.1.0"

from hhlab.errors import (  # noqa: E402
    ArgumentError,
    ConvergenceError,
    HHLabError,
    HypothesisViolation,
    IllPosedRatioError,
    InvalidDomainError,
    InvalidInputError,
    NumericalError,
    ResolutionError,
    SearchError,
    SingularityError,
    StabilityError,
    UnsupportedVariantError,
)

__all__ = [
    "__version__",
    "ArgumentError",
    "ConvergenceError",
    "HHLabError",
    "HypothesisViolation",
    "IllPosedRatioError",
    "InvalidDomainError",
    "InvalidInputError",
    "NumericalError",
    "ResolutionError",
    "SearchError",
    "SingularityError",
    "StabilityError",
    "UnsupportedVariantError",
]
