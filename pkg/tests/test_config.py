#!/usr/bin/env python

# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""
<Program Name>
  test_config.py

<Purpose>
  Unit test for 'config.py'.
"""

import math
import sys
import unittest

from mvgf import settings
from mvgf.config import (
    FitConfig,
    FlowConfig,
    ParticleConfig,
    SpectrumConfig,
    StationaryConfig,
)
from mvgf.exceptions import InvalidConfigurationError
from tests import utils


class TestConfig(unittest.TestCase):
    def test_defaults(self):
        cfg = FlowConfig()
        self.assertEqual(cfg.adapt_cfl, settings.DEFAULT_ADAPT_CFL)
        self.assertEqual(cfg.blowup_linf, settings.DEFAULT_BLOWUP_LINF)
        self.assertEqual(cfg.snapshot_every, 0)
        self.assertTrue(cfg.dealias)
        self.assertEqual(StationaryConfig().damping, 1.0)
        self.assertEqual(SpectrumConfig().base, "initial")
        self.assertIsNone(ParticleConfig().average_from)
        self.assertEqual(FitConfig().representation, "cells")

    def test_invalid_values(self):
        invalid = [
            (FlowConfig, {"dt": 0.0}),
            (FlowConfig, {"dt": math.nan}),
            (FlowConfig, {"t_end": -1.0}),
            (FlowConfig, {"floor_policy": "reflect"}),
            (FlowConfig, {"blowup_linf": 1.0}),
            (FlowConfig, {"log_every": 0}),
            (FlowConfig, {"snapshot_every": -1}),
            (StationaryConfig, {"damping": 0.0}),
            (StationaryConfig, {"damping": 1.5}),
            (StationaryConfig, {"max_iter": 0}),
            (SpectrumConfig, {"max_mode": 0}),
            (SpectrumConfig, {"base": "gibbs"}),
            (ParticleConfig, {"n_particles": 0}),
            (ParticleConfig, {"temperature": -1.0}),
            (ParticleConfig, {"t_end": 1.0, "average_from": 1.0}),
            (FitConfig, {"f_inf": math.inf}),
            (FitConfig, {"representation": "quantiles"}),
        ]
        for cls, kwargs in invalid:
            with self.subTest(cls=cls.__name__, **kwargs):
                self.assertRaises(InvalidConfigurationError, cls, **kwargs)

    def test_zero_temperature_is_allowed(self):
        self.assertEqual(ParticleConfig(temperature=0.0).temperature, 0.0)


# Run the unit tests.
if __name__ == "__main__":
    utils.configure_test_logging(sys.argv)
    unittest.main()
