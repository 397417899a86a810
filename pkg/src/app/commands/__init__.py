import functools
import logging

from src.config.config import Config
from src.utils.constants import ExitCode
from src.utils.errors import InrAudioError, NonFiniteLoss

logger = logging.getLogger(__name__)


def exit_code_for(error: Exception) -> int:
    """
    Maps an exception raised by a command to its process exit code.

    NonFiniteLoss (and TrainingDiverged) -> 3, validation errors (ValueError family) -> 2,
    everything else -> 1.
    """
    if isinstance(error, NonFiniteLoss):
        return ExitCode.DIVERGED
    if isinstance(error, ValueError):
        return ExitCode.USAGE
    return ExitCode.FAILURE


def command(handler):
    """Runs a command handler and turns its exceptions into exit codes."""

    @functools.wraps(handler)
    def wrapper(args) -> int:
        try:
            result = handler(args)
            return ExitCode.OK if result is None else result
        except InrAudioError as error:
            code = exit_code_for(error)
            logger.error("command_failed command=%s exit_code=%d error=%s: %s",
                         args.command, code, type(error).__name__, error)
            return code
        except Exception as error:
            logger.error("command_failed command=%s exit_code=%d", args.command, ExitCode.FAILURE, exc_info=error)
            return ExitCode.FAILURE

    return wrapper


def experiment_of(checkpoint) -> dict:
    """Training settings recorded in a checkpoint, with the defaults of older runs filled in."""
    experiment = dict(checkpoint.experiment or {})
    experiment.setdefault("sample_rate", Config.SAMPLE_RATE)
    return experiment
