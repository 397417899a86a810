import argparse
import logging
import os

import pytest

from src.app import LOG_FORMAT, configure_logging, create_app
from conftest import TestConfig


@pytest.fixture
def app():
    """
    Creates and returns the command-line parser for testing.

    This fixture initializes the front end using the factory method
    `create_app` with the test configuration.

    Returns:
        argparse.ArgumentParser: The configured parser.
    """
    return create_app(config_class=TestConfig)


@pytest.fixture
def test_log_file(tmp_path):
    """
    Provides the absolute path to a temporary log file used during testing.

    This fixture ensures the test uses a dedicated log file to avoid
    interfering with the logs of real runs.

    Returns:
        str: Absolute path to the test log file.
    """
    return os.path.abspath(tmp_path / "test_app.log")


def test_create_app(app):
    """
    Verify that the parser is created correctly.

    This test ensures the factory function `create_app` returns a parser
    named after the program, with the thread default taken from the config.
    """
    assert isinstance(app, argparse.ArgumentParser)
    assert app.prog == "inraudio"
    assert app.parse_args(["presets"]).threads == TestConfig.THREADS


def test_every_command_is_registered(app):
    """
    Every command of the front end parses its minimal argument list.
    """
    minimal = {
        "train": ["--data", "d", "--out", "o"],
        "encode": ["--ckpt", "c", "--in", "i", "--out", "o"],
        "render": ["--inr", "w", "--rate", "8000", "--samples", "10", "--out", "o"],
        "resample": ["--ckpt", "c", "--in", "i", "--rate", "8000", "--out", "o"],
        "reconstruct": ["--ckpt", "c", "--in", "i", "--out", "o"],
        "eval": ["--ckpt", "c", "--data", "d", "--out", "o"],
        "gradcheck": ["--component", "loss"],
        "spectrogram": ["--in", "i", "--fft", "64", "--hop", "16", "--out", "o"],
        "presets": [],
    }
    for name, arguments in minimal.items():
        args = app.parse_args([name, *arguments])
        assert args.command == name
        assert callable(args.handler)


def test_create_app_raises(monkeypatch):
    """
    Simulate an exception during parser initialization.

    Patches `argparse.ArgumentParser.__init__` to raise an Exception, forcing
    `create_app` to handle the error and return None.
    """
    def fake_parser_init(*args, **kwargs):
        raise Exception("Fake error")

    monkeypatch.setattr("argparse.ArgumentParser.__init__", fake_parser_init)

    app = create_app(config_class=TestConfig)
    assert app is None


def test_log_file_creation(monkeypatch, test_log_file):
    """
    Verify error logging when parser initialization fails.

    This test:
    - Passes a dedicated log file to `create_app`.
    - Patches `argparse.ArgumentParser.__init__` to raise an Exception.
    - Calls `create_app` and expects it to return None.
    - Validates the log file contains the error message from the exception.

    Args:
        monkeypatch (pytest.MonkeyPatch): Pytest fixture for patching.
        test_log_file (str): Path to the test log file.
    """
    def fake_parser_init(self, *args, **kwargs):
        raise Exception("Forced error for test")

    monkeypatch.setattr("argparse.ArgumentParser.__init__", fake_parser_init)

    app = create_app(config_class=TestConfig, log_file=test_log_file)
    assert app is None

    for handler in logging.getLogger().handlers:
        handler.flush()
    assert os.path.exists(test_log_file), "Log file was not created"

    with open(test_log_file, "r") as f:
        content = f.read()
        assert "Forced error for test" in content
        assert "msg=Error while creating app" in content


def test_log_records_are_key_value_lines(test_log_file):
    """
    Records written after `configure_logging` follow LOG_FORMAT.
    """
    configure_logging("INFO", test_log_file)
    logging.getLogger("inraudio.test").info("checkpoint_written step=%d", 5)
    for handler in logging.getLogger().handlers:
        handler.flush()

    with open(test_log_file, "r") as f:
        line = f.read().strip().splitlines()[-1]
    assert line.startswith("ts=")
    assert "level=INFO logger=inraudio.test msg=checkpoint_written step=5" in line
    assert LOG_FORMAT.startswith("ts=")
