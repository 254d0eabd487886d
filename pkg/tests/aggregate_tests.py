#!/usr/bin/env python

# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""
<Program Name>
  aggregate_tests.py

<Purpose>
  Run all the unit tests from every .py file beginning with "test_" in
  'tests'.
"""

import sys
import unittest

if __name__ == "__main__":
    suite = unittest.TestLoader().discover(".")
    all_tests_passed = (
        unittest.TextTestRunner(verbosity=1, buffer=True)
        .run(suite)
        .wasSuccessful()
    )

    if not all_tests_passed:
        sys.exit(1)

    else:
        sys.exit(0)
