"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A model or configuration parameter is outside its admissible range."""


class InvalidTimeError(ValueError):
    """A transition-density query was made at or before its segment start."""


class BoundaryEvaluationError(ValueError):
    """Evaluation requested on the boundary of a state space that excludes it."""


class IncompatibleModelsError(ValueError):
    """Target and proposal do not share the squared diffusion coefficient."""


class SingularTimeError(ValueError):
    """Ratio-PDE coefficients evaluated at a time where 1/t terms blow up."""


class TrigSingularityError(ValueError):
    """Evaluation or grid placement hits a pole of tan/sec in logit coordinates."""


class DomainError(ValueError):
    """Query point outside the domain of a field or distribution."""


class SolverBreakdownError(RuntimeError):
    """Banded elimination failed even with partial pivoting."""

    def __init__(self, message, row=None, step=None):
        super().__init__(message)
        self.row = row
        self.step = step


class SimulationBlowupError(RuntimeError):
    """A simulated path produced a non-finite state."""

    def __init__(self, message, path_index=None):
        super().__init__(message)
        self.path_index = path_index


class WholePathRejectedError(RuntimeError):
    """Every point of a proposal path was rejected."""


class SamplingFailureError(RuntimeError):
    """All retry attempts exhausted without an acceptable path."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
