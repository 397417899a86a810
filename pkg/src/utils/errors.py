"""Exception hierarchy shared by the library and the command line."""


class InrAudioError(Exception):
    """Base class of every error raised by this package."""


class InvalidAudio(InrAudioError, ValueError):
    pass


class UnsupportedFormat(InrAudioError, ValueError):
    pass


class CorruptHeader(InrAudioError, ValueError):
    pass


class IoError(InrAudioError, OSError):
    pass


class EmptySignal(InrAudioError, ValueError):
    pass


class InvalidRange(InrAudioError, ValueError):
    pass


class NonFiniteParams(InrAudioError, ValueError):
    pass


class TooFewSamples(InrAudioError, ValueError):
    pass


class BadMagic(InrAudioError, ValueError):
    pass


class VersionMismatch(InrAudioError, ValueError):
    pass


class LengthMismatch(InrAudioError, ValueError):
    """Raised for truncated streams and for signal pairs of unequal length."""


class InputTooShort(InrAudioError, ValueError):
    pass


class DimensionMismatch(InrAudioError, ValueError):
    pass


class SilentReference(InrAudioError, ValueError):
    pass


class UnknownPreset(InrAudioError, ValueError):
    pass


class DegenerateSignal(InrAudioError, ValueError):
    pass


class EmptyDataset(InrAudioError, ValueError):
    pass


class UnreadableFile(InrAudioError, OSError):
    pass


class InvalidBreakFrequency(InrAudioError, ValueError):
    pass


class ConfigError(InrAudioError, ValueError):
    pass


class NonFiniteLoss(InrAudioError, ArithmeticError):
    """
    Raised when any part of the training loss is NaN or Inf.

    Attributes:
        step (int): Optimizer step at which the loss diverged.
        parts (dict): The loss parts that were computed for that step.
    """

    def __init__(self, message: str, step: int = -1, parts: dict | None = None):
        super().__init__(message)
        self.step = step
        self.parts = parts or {}


class TrainingDiverged(NonFiniteLoss):
    """
    NonFiniteLoss raised out of the training loop, carrying the last good checkpoint.

    Attributes:
        checkpoint (str | None): Path of the last checkpoint written before the divergence.
    """

    def __init__(self, message: str, step: int, parts: dict, checkpoint: str | None):
        super().__init__(message, step=step, parts=parts)
        self.checkpoint = checkpoint


class CheckpointIoError(InrAudioError, OSError):
    pass
