"""Exception hierarchy shared by all simulator modules."""


class CondStateError(Exception):
    """Base class for physics and contract failures raised by condstate."""


class DimensionError(CondStateError, ValueError):
    """A Fock index or state dimension is out of range or mismatched."""


class TruncationError(CondStateError):
    """A state does not fit in the configured Fock cutoff.

    ``lost`` is the probability mass that would have been discarded.
    """

    def __init__(self, message: str, lost: float | None = None):
        super().__init__(message)
        self.lost = lost


class DegenerateOutcomeError(CondStateError):
    """Conditioning on an outcome (or window) of vanishing probability."""


class ContractError(CondStateError, ValueError):
    """An argument violates a documented precondition."""


class InsufficientStatisticsError(CondStateError):
    """A Monte Carlo run kept too few samples to estimate moments."""
