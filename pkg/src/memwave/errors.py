"""Failure taxonomy shared by the library and the command line.

Each error class carries the process exit code the batch front-end maps
it to, so library code raises these directly and the CLI only has to
catch the base class.
"""


class MemwaveError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(MemwaveError):
    """Malformed, contradictory, or unknown-key run configuration."""

    exit_code = 2


class ConvergenceError(MemwaveError):
    """A marched or iterative computation left its validity envelope."""

    exit_code = 3

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NotControllableError(MemwaveError):
    """The family's frame certificate failed at the requested horizon.

    Carries the measured lower frame bound so callers can report how far
    from invertible the Gram was instead of a bare failure.
    """

    exit_code = 4

    def __init__(self, message, frame_lower=None, condition=None):
        super().__init__(message)
        self.frame_lower = frame_lower
        self.condition = condition


class InternalConsistencyError(MemwaveError):
    """Two independent routes to one quantity disagree beyond tolerance."""

    exit_code = 5
