# errors.py


class CoherentQECError(Exception):
    """Base class for every error raised by this package."""


class UsageError(CoherentQECError, ValueError):
    """Bad arguments: indices out of range, unsupported weights, malformed lists."""


class MissingSeedError(UsageError):
    """Sampling was requested without a seed or generator."""


class InfeasibleBranchError(CoherentQECError):
    """A post-selected outcome has (numerically) zero probability."""

    def __init__(self, message: str, probability: float = 0.0):
        super().__init__(message)
        self.probability = probability


class CapacityError(CoherentQECError):
    """The requested dense register exceeds the configured qubit cap."""
