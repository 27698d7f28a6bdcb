"""Exception types shared across the package."""


class InfgradError(Exception):
    """Base class for all package errors."""


class ParseError(InfgradError):
    """Source text could not be parsed; carries line/column info."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class EvaluationError(InfgradError):
    """An expression hit an undefined extended-real operation (e.g. 0 * inf)."""


class CapabilityError(InfgradError):
    """Input is outside what an exact engine supports (dimension, non-affine branch, ...)."""


class DimensionMismatchError(InfgradError):
    """Operands live in different ambient dimensions."""


class EstimateUnavailableError(InfgradError):
    """Every rung of a sampling ladder was invalid; no estimate can be reported."""


class InconclusiveError(InfgradError):
    """Sampling produced too little evidence to report a verdict."""


class InfeasibleSetError(InfgradError):
    """A constraint set is empty where a nonempty one is required."""


class OracleDisagreementError(InfgradError):
    """An exact engine's result was falsified by the definition-based sampler."""
