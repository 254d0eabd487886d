#!/usr/bin/env python

# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""
<Program Name>
  test_log.py

<Purpose>
  Unit test for 'log.py'.
"""

import logging
import os
import sys
import unittest

from securesystemslib import exceptions as sslib_exceptions
from securesystemslib import util as sslib_util

import mvgf.log
from mvgf import exceptions
from mvgf.unittest_toolbox import Modified_TestCase
from tests import utils

# We explicitly create a logger which is a child of the mvgf hierarchy,
# instead of using the standard getLogger(__name__) pattern, because the
# tests are not part of the mvgf hierarchy and we are testing functionality
# of the mvgf package explicitly enabled on the mvgf hierarchy
logger = logging.getLogger("mvgf.test_log")

log_levels = [
    logging.CRITICAL,
    logging.ERROR,
    logging.WARNING,
    logging.INFO,
    logging.DEBUG,
]


class TestLog(Modified_TestCase):
    def setUp(self):
        Modified_TestCase.setUp(self)
        # store the current log level so it can be restored after the test
        self._initial_level = logging.getLogger("mvgf").level
        self.directory = self.make_temp_directory()

    def tearDown(self):
        if mvgf.log.console_handler is not None:
            mvgf.log.remove_console_handler()
        if mvgf.log.file_handler is not None:
            mvgf.log.disable_file_logging()
        logging.getLogger("mvgf").level = self._initial_level
        Modified_TestCase.tearDown(self)

    def test_set_log_level(self):
        mvgf.log.set_log_level()
        self.assertTrue(logger.isEnabledFor(logging.DEBUG))

        for level in log_levels:
            mvgf.log.set_log_level(level)
            self.assertTrue(logger.isEnabledFor(level))

        self.assertRaises(sslib_exceptions.FormatError, mvgf.log.set_log_level, "123")
        self.assertRaises(sslib_exceptions.FormatError, mvgf.log.set_log_level, 51)

    def test_set_filehandler_log_level(self):
        # A file handler is not set by default.
        self.assertRaises(exceptions.Error, mvgf.log.set_filehandler_log_level)
        mvgf.log.enable_file_logging(os.path.join(self.directory, "mvgf.log"))
        mvgf.log.set_filehandler_log_level()
        for level in log_levels:
            mvgf.log.set_filehandler_log_level(level)
            self.assertEqual(mvgf.log.file_handler.level, level)

        self.assertRaises(
            sslib_exceptions.FormatError, mvgf.log.set_filehandler_log_level, 51
        )

    def test_set_console_log_level(self):
        # Setting a console log level without first adding a handler.
        self.assertRaises(exceptions.Error, mvgf.log.set_console_log_level)

        mvgf.log.add_console_handler()
        mvgf.log.set_console_log_level()
        for level in log_levels:
            mvgf.log.set_console_log_level(level)
            self.assertEqual(mvgf.log.console_handler.level, level)

        self.assertRaises(
            sslib_exceptions.FormatError, mvgf.log.set_console_log_level, "123"
        )

    def test_add_console_handler(self):
        mvgf.log.add_console_handler(logging.CRITICAL)
        handler = mvgf.log.console_handler

        # Adding a console handler when one has already been added only warns.
        mvgf.log.add_console_handler()
        self.assertIs(mvgf.log.console_handler, handler)

        self.assertRaises(
            sslib_exceptions.FormatError, mvgf.log.add_console_handler, 51
        )

    def test_console_filter_hides_traceback(self):
        try:
            raise TypeError("Test exception output in the console.")

        except TypeError:
            record = logger.makeRecord(
                logger.name,
                logging.ERROR,
                __file__,
                0,
                "failure",
                None,
                sys.exc_info(),
            )
        self.assertTrue(mvgf.log.ConsoleFilter().filter(record))
        self.assertEqual(record.exc_text, "TypeError")

    def test_remove_console_handler(self):
        mvgf.log.add_console_handler()
        mvgf.log.remove_console_handler()
        self.assertIsNone(mvgf.log.console_handler)

        # Removing a console handler that has not been added logs a warning.
        mvgf.log.remove_console_handler()

    def test_enable_file_logging(self):
        path = os.path.join(self.directory, "my_log_file.log")
        mvgf.log.enable_file_logging(path)
        logger.debug("testing file logging")
        self.assertTrue(os.path.exists(path))

        # The file logger must first be unset before attempting to re-add it.
        self.assertRaises(exceptions.Error, mvgf.log.enable_file_logging, path)

        mvgf.log.disable_file_logging()
        self.assertRaises(
            sslib_exceptions.FormatError, mvgf.log.enable_file_logging, 1
        )

    def test_disable_file_logging(self):
        mvgf.log.set_log_level(logging.DEBUG)
        path = os.path.join(self.directory, "my.log")
        mvgf.log.enable_file_logging(path)
        logger.debug("debug message")
        _, hashes = sslib_util.get_file_details(path)
        mvgf.log.disable_file_logging()
        logger.debug("new debug message")
        _, hashes2 = sslib_util.get_file_details(path)
        self.assertEqual(hashes, hashes2)


# Run unit test.
if __name__ == "__main__":
    utils.configure_test_logging(sys.argv)
    unittest.main()
