"""Semantic exception hierarchy.

Every recoverable domain failure raises a :class:`CcwnetError` subclass so
callers (and the CLI, which maps them to exit code 1) can distinguish bad
data from programming errors.
"""


class CcwnetError(Exception):
    """Base class for all domain errors raised by this package."""


class DomainError(CcwnetError):
    """An input is outside the mathematical domain of an operation."""


class StratumUnderflowError(CcwnetError):
    """A label stratum is too small to give every nonzero split part a row."""


class RareClassExhaustionError(CcwnetError):
    """Case-control rejection sampling hit its draw budget before filling a quota."""


class SummaryNonIdentifyingError(CcwnetError):
    """mu1-hat and mu0-hat coincide, so the proportion is not identified."""


class DivergenceError(CcwnetError):
    """Training produced a non-finite loss."""

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch


class DegenerateTruthError(CcwnetError):
    """The reference function is identically zero on the evaluation points."""


class ConstantColumnError(CcwnetError):
    """A continuous column has zero variance and cannot be standardized."""


class SchemaError(CcwnetError):
    """A CSV file does not conform to its declared column schema."""


class ExperimentError(CcwnetError):
    """Every replicate of a Monte Carlo experiment failed."""
