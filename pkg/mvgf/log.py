#!/usr/bin/env python

# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""
<Program Name>
  log.py

<Purpose>
  A central location for all logging-related configuration.  This module
  should be imported once by the main program.  Library modules do not
  configure handlers; they follow the usual pattern

    logger = logging.getLogger(__name__)

  and, because every module lives under the 'mvgf' package, their records
  propagate to the 'mvgf' logger configured here.

  A NullHandler is installed by default so that importing mvgf from another
  program never prints anything.  The command-line front end adds a console
  handler (stderr) and, on request, a file handler.

  Logging Levels:

    --Level--         --Value--
  logging.CRITICAL        50
  logging.ERROR           40
  logging.WARNING         30
  logging.INFO            20
  logging.DEBUG           10
  logging.NOTSET           0
"""

import logging
import time
from typing import Optional

from securesystemslib import formats as sslib_formats

from mvgf import exceptions, settings

_DEFAULT_LOG_LEVEL = logging.DEBUG
_DEFAULT_CONSOLE_LOG_LEVEL = logging.INFO
_DEFAULT_FILE_LOG_LEVEL = logging.DEBUG

# Example:
# [2026-03-02 15:21:18,068 UTC] [mvgf.flow] [INFO] [run:232@flow.py]
# t=0.125 F=-0.8131 I=3.2e-4
_FORMAT_STRING = (
    "[%(asctime)s UTC] [%(name)s] [%(levelname)s] "
    "[%(funcName)s:%(lineno)s@%(filename)s]\n%(message)s\n"
)

# Log records are stamped in UTC.
logging.Formatter.converter = time.gmtime
formatter = logging.Formatter(_FORMAT_STRING)

console_handler: Optional[logging.Handler] = None
file_handler: Optional[logging.Handler] = None

# The top of the package hierarchy is configured here, so the name is given
# explicitly rather than through __name__.
logger = logging.getLogger("mvgf")
logger.setLevel(_DEFAULT_LOG_LEVEL)
logger.addHandler(logging.NullHandler())

if settings.ENABLE_FILE_LOGGING:
    file_handler = logging.FileHandler(settings.LOG_FILENAME)
    file_handler.setLevel(_DEFAULT_FILE_LOG_LEVEL)
    file_handler.setFormatter(formatter)
    logger.addHandler(file_handler)


class ConsoleFilter(logging.Filter):
    """Replace traceback text with the bare exception class name.

    Meant for the console handler only; the file log keeps full tracebacks.
    """

    def filter(self, record: logging.LogRecord) -> bool:
        if record.exc_info:
            exc_type, _, _ = record.exc_info
            if exc_type is not None:
                record.exc_text = exc_type.__name__

        return True


def set_log_level(log_level: int = _DEFAULT_LOG_LEVEL) -> None:
    """Override the level of the 'mvgf' logger.

    Raises:
        securesystemslib.exceptions.FormatError: 'log_level' is not a
            logging level.
    """
    sslib_formats.LOGLEVEL_SCHEMA.check_match(log_level)
    logger.setLevel(log_level)


def set_filehandler_log_level(log_level: int = _DEFAULT_FILE_LOG_LEVEL) -> None:
    """Override the level of the file handler.

    Raises:
        securesystemslib.exceptions.FormatError: 'log_level' is not a
            logging level.
        mvgf.exceptions.Error: file logging is not enabled.
    """
    sslib_formats.LOGLEVEL_SCHEMA.check_match(log_level)

    if file_handler is None:
        raise exceptions.Error(
            "File handler has not been set.  Enable file logging"
            " before attempting to set its log level"
        )
    file_handler.setLevel(log_level)


def set_console_log_level(log_level: int = _DEFAULT_CONSOLE_LOG_LEVEL) -> None:
    """Override the level of the console handler.

    Raises:
        securesystemslib.exceptions.FormatError: 'log_level' is not a
            logging level.
        mvgf.exceptions.Error: add_console_handler() was not called.
    """
    sslib_formats.LOGLEVEL_SCHEMA.check_match(log_level)

    if console_handler is None:
        raise exceptions.Error(
            "The console handler has not been set with add_console_handler()."
        )
    console_handler.setLevel(log_level)


def add_console_handler(log_level: int = _DEFAULT_CONSOLE_LOG_LEVEL) -> None:
    """Add a stderr handler at 'log_level'. A second call only warns."""
    sslib_formats.LOGLEVEL_SCHEMA.check_match(log_level)

    global console_handler  # pylint: disable=global-statement

    if console_handler is not None:
        logger.warning("We already have a console handler.")
        return

    console_handler = logging.StreamHandler()
    console_handler.setLevel(log_level)
    console_handler.setFormatter(logging.Formatter("%(message)s"))
    console_handler.addFilter(ConsoleFilter())
    logger.addHandler(console_handler)
    logger.debug("Added a console handler.")


def remove_console_handler() -> None:
    """Remove the console handler, if any."""
    global console_handler  # pylint: disable=global-statement

    if console_handler is None:
        logger.warning("We do not have a console handler.")
        return

    logger.removeHandler(console_handler)
    console_handler = None
    logger.debug("Removed a console handler.")


def enable_file_logging(log_filename: str = settings.LOG_FILENAME) -> None:
    """Log to 'log_filename' (append mode).

    Raises:
        securesystemslib.exceptions.FormatError: 'log_filename' is not a
            path string.
        mvgf.exceptions.Error: a file handler is already installed.
    """
    sslib_formats.PATH_SCHEMA.check_match(log_filename)

    global file_handler  # pylint: disable=global-statement

    if file_handler is not None:
        raise exceptions.Error(
            "The file handler has already been set.  A new file handler"
            " can be set by first calling disable_file_logging()"
        )

    file_handler = logging.FileHandler(log_filename)
    file_handler.setLevel(_DEFAULT_FILE_LOG_LEVEL)
    file_handler.setFormatter(formatter)
    logger.addHandler(file_handler)


def disable_file_logging() -> None:
    """Remove and close the file handler. The log file itself is kept."""
    global file_handler  # pylint: disable=global-statement

    if file_handler is None:
        logger.warning("A file handler has not been set.")
        return

    logger.removeHandler(file_handler)
    file_handler.close()
    file_handler = None
    logger.debug("Removed the file handler.")
