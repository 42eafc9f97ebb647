"""Exception hierarchy for the simulation engine."""


class JumpCIRError(Exception):
    """Base class for all errors raised by this package."""


class SamplingFromEmptyMeasure(JumpCIRError):
    """A mark was requested from the ``NoJumps`` measure."""


class NonpositiveStep(JumpCIRError, ValueError):
    """A time increment was zero or negative."""


class DelayBufferUnderflow(JumpCIRError):
    """The delay buffer does not cover the lagged time ``t - tau``."""

    def __init__(self, message, stream_id=None):
        if stream_id is not None:
            message = f"stream {stream_id}: {message}"
        super().__init__(message)
        self.stream_id = stream_id


class OffGridQuery(JumpCIRError, ValueError):
    """A time was queried that is not a point of the simulation grid."""


class UnknownNu(JumpCIRError):
    """The drift forcing has no analytically known long-run average."""


class EmptyPathSet(JumpCIRError, ValueError):
    """An ensemble statistic was requested over zero paths."""


class ConfigError(JumpCIRError, ValueError):
    """A configuration could not be parsed or violates an invariant."""


class ValidationError(JumpCIRError):
    """A model fails its assumptions and the run did not opt out."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class IoError(JumpCIRError, OSError):
    """Reading or writing an artifact failed."""
