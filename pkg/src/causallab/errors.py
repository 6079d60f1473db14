"""Exception hierarchy shared across the package."""


class CausalLabError(Exception):
    """Base class for all errors raised by causallab."""


class ValidationError(CausalLabError, ValueError):
    """An input violates a documented invariant."""


class BoundaryEvaluationError(CausalLabError):
    """Density evaluation at a boundary point where the density diverges."""


class DegenerateMarginalError(CausalLabError):
    """A marginal entry is 0 or 1, so the direction classifier is undefined."""


class UndefinedConditionalError(CausalLabError):
    """Conditioning on a state with (numerically) zero probability."""


class DatasetFormatError(CausalLabError):
    """A dataset file cannot be parsed or declares an unsupported schema."""


class ModelFormatError(CausalLabError):
    """A model file cannot be parsed or its parameters do not chain."""


class TrainingDivergedError(CausalLabError):
    """Training loss became non-finite.  Carries the partial report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
