import argparse
import logging
import sys

from src.app.commands import diagnostics, encode, evaluate, presets, render, train

LOG_FORMAT = "ts=%(asctime)s level=%(levelname)s logger=%(name)s msg=%(message)s"


def configure_logging(level: str = "INFO", log_file: str | None = None) -> None:
    """
    Sends every record to standard output, and to `log_file` if given, as one key=value line.

    Handlers installed by an earlier call are replaced.
    """
    formatter = logging.Formatter(LOG_FORMAT)
    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stdout)]
    if log_file:
        handlers.append(logging.FileHandler(log_file))

    root = logging.getLogger()
    for handler in root.handlers[:]:
        root.removeHandler(handler)
    for handler in handlers:
        handler.setFormatter(formatter)
        root.addHandler(handler)
    root.setLevel(level)


def create_app(config_class, log_file=None):
    """
    Application factory for the command-line front end.

    This function:
    - Builds the argument parser with the global --threads and --log-file flags
    - Registers every command module (train, encode, render/resample/reconstruct, eval,
      gradcheck/spectrogram, presets)
    - Configures key=value logging to standard output and, optionally, a file

    Any exception during initialization is logged and results in the function returning `None`.

    Args:
        config_class (class): A Config class (e.g., DeskConfig or FullConfig).
        log_file (str | None): Extra log file; defaults to config_class.LOG_FILE.

    Returns:
        argparse.ArgumentParser or None: The configured parser, or `None` if initialization fails.
    """
    try:
        configure_logging(config_class.LOG_LEVEL, log_file or config_class.LOG_FILE)

        parser = argparse.ArgumentParser(prog="inraudio",
                                         description="Hypernetwork for implicit neural representations of audio.")
        parser.add_argument("--threads", type=int, default=config_class.THREADS,
                            help="Cap on torch and worker threads (0: library default).")
        parser.add_argument("--log-file", help="Also write log records to this file.")
        subparsers = parser.add_subparsers(dest="command", required=True)

        train.register(subparsers)
        encode.register(subparsers)
        render.register(subparsers)
        evaluate.register(subparsers)
        diagnostics.register(subparsers)
        presets.register(subparsers)

        return parser

    except Exception as error:
        logging.error("Error while creating app", exc_info=error)
        return None
