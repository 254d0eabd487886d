#!/usr/bin/env python

# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""
<Program Name>
  utils.py

<Purpose>
  Common utilities for mvgf tests: test logging, positive random densities
  and a minimal scenario text.
"""

import argparse
import logging

import numpy as np

import mvgf.log
from mvgf import grid as grid_mod
from mvgf.grid import DensityField, TorusGrid

logger = logging.getLogger(__name__)

# Heat flow on T^1: no confinement, no interaction.  Tests append sections
# or use str.replace() on single lines.
HEAT_SCENARIO = """\
name = heat
seed = 3

[grid]
dim = 1
M = 32

[V]
kind = zero

[W]
kind = zero

[initial]
kind = uniform_plus_modes
modes = [((1,), 0.5)]

[flow]
dt = 1e-3
t_end = 2.0
log_every = 10
snapshot_every = 100
conv_tol = 1e-20

[outputs]
directory = out
"""


def random_density(
    grid: TorusGrid,
    seed: int = 0,
    max_mode: int = 3,
    amplitude: float = 0.05,
) -> DensityField:
    """exp of a smooth random field, normalized to unit mass."""
    rng = np.random.default_rng(seed)
    exponent = grid_mod.smooth_random_field(
        grid, rng, max_mode=max_mode, amplitude=amplitude
    )
    return DensityField(grid, np.exp(exponent.values)).normalized()


def configure_test_logging(argv):
    # parse arguments but only handle '-v': argv may contain
    # other things meant for unittest argument parser
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    args, _ = parser.parse_known_args(argv)

    if args.verbose <= 1:
        # 0 and 1 both mean ERROR: this way '-v' makes unittest print test
        # names without increasing log level
        loglevel = logging.ERROR
    elif args.verbose == 2:
        loglevel = logging.WARNING
    elif args.verbose == 3:
        loglevel = logging.INFO
    else:
        loglevel = logging.DEBUG

    logging.basicConfig(level=loglevel)
    mvgf.log.set_log_level(loglevel)
