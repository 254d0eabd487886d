#!/usr/bin/env python

# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""
<Program>
  unittest_toolbox.py

<Purpose>
  Temporary files and directories for tests that read or write artifacts.
  Modified_TestCase derives from unittest.TestCase and removes everything
  it created in tearDown().
"""

import os
import shutil
import tempfile
import unittest
from typing import Callable, List, Optional


class Modified_TestCase(unittest.TestCase):  # pylint: disable=invalid-name
    """
    <Purpose>
      Test case with self-cleaning temporary paths.

      Subclasses overriding setUp()/tearDown() call the base methods:

        class TestRunner(Modified_TestCase):
          def setUp(self):
            Modified_TestCase.setUp(self)
            self.out = self.make_temp_directory()

    <Methods>
      make_temp_directory(directory=None):
        Creates and returns the absolute path of a temporary directory.

      make_temp_file(suffix='.txt', directory=None):
        Creates and returns the absolute path of an empty temporary file.

      make_temp_data_file(suffix='', directory=None, data='junk data'):
        Returns the absolute path of a temporary file holding 'data'.

      make_scenario_file(text, directory=None):
        make_temp_data_file() with the '.scn' suffix.
    """

    def setUp(self) -> None:
        self._cleanup: List[Callable[[], None]] = []

    def tearDown(self) -> None:
        # Directories are removed after the files they may contain.
        for cleanup_function in reversed(self._cleanup):
            try:
                cleanup_function()

            except OSError:
                pass

    def make_temp_directory(self, directory: Optional[str] = None) -> str:
        prefix = self.__class__.__name__ + "_"
        temp_directory = tempfile.mkdtemp(prefix=prefix, dir=directory)

        def _destroy_temp_directory() -> None:
            shutil.rmtree(temp_directory)

        self._cleanup.append(_destroy_temp_directory)
        return temp_directory

    def make_temp_file(
        self, suffix: str = ".txt", directory: Optional[str] = None
    ) -> str:
        prefix = "tmp_file_" + self.__class__.__name__ + "_"
        handle, path = tempfile.mkstemp(
            suffix=suffix, prefix=prefix, dir=directory
        )
        os.close(handle)

        def _destroy_temp_file() -> None:
            os.unlink(path)

        self._cleanup.append(_destroy_temp_file)
        return path

    def make_temp_data_file(
        self,
        suffix: str = "",
        directory: Optional[str] = None,
        data: str = "junk data",
    ) -> str:
        path = self.make_temp_file(suffix=suffix, directory=directory)
        with open(path, "w", encoding="utf-8") as temp_file:
            temp_file.write(data)
        return path

    def make_scenario_file(
        self, text: str, directory: Optional[str] = None
    ) -> str:
        return self.make_temp_data_file(
            suffix=".scn", directory=directory, data=text
        )
