#!/usr/bin/env python

# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""
<Program Name>
  settings.py

<Purpose>
  A central location for mvgf configuration settings.  Numerical tolerances
  and run defaults live here so that every module agrees on them.  Callers may
  override most of them per call; the values below are the defaults used when
  nothing else is given.
"""


# The 'log.py' module manages mvgf's logging system.  Users have the option to
# enable/disable logging to a file via 'ENABLE_FILE_LOGGING', or
# mvgf.log.enable_file_logging() and mvgf.log.disable_file_logging().
ENABLE_FILE_LOGGING = False

# If file logging is enabled via 'ENABLE_FILE_LOGGING', mvgf log messages will
# be saved to 'LOG_FILENAME'
LOG_FILENAME = "mvgf.log"

# Smallest grid accepted by create_grid(), per axis.
MIN_POINTS_PER_AXIS = 8

# Densities are evaluated in log() as log(max(rho, POSITIVITY_FLOOR)), and
# negative values left by the time stepper are clipped up to this value.
POSITIVITY_FLOOR = 1e-12

# A density may dip this far below zero before it is treated as invalid.
NEGATIVE_TOLERANCE = 1e-10

# Largest mass change of a single flow step before a warning is logged.
MASS_TOLERANCE = 1e-12

# The time stepper retries with dt/2 when a step leaves values below
# -NEGATIVE_RETRY_FRACTION * rho_max, at most MAX_STEP_RETRIES times.
NEGATIVE_RETRY_FRACTION = 1e-6
MAX_STEP_RETRIES = 5

# Clipped L1 mass per unit time above which a run is aborted as
# under-resolved.
CLIP_BUDGET_PER_UNIT_TIME = 1e-6

# Flow defaults (see mvgf.config.FlowConfig).
DEFAULT_CONVERGENCE_TOLERANCE = 1e-12
DEFAULT_BLOWUP_LINF = 1e4
DEFAULT_ADAPT_CFL = 0.4

# Weighted Poisson solver: relative residual target and iteration cap.
POISSON_RTOL = 1e-12
POISSON_MAX_ITERATIONS = 2000

# Spectrum assembly: kernel eigenvalues are those below
# KERNEL_TOL_FACTOR * spectral radius; larger bases are rejected.
KERNEL_TOL_FACTOR = 1e-7
MAX_SPECTRUM_BASIS = 4096

# Absolute floor under which energy differences are treated as roundoff.
# Scaled by max(1, |F_inf|) where used.
ENERGY_NOISE_FLOOR = 1e-14

# Lojasiewicz fits: minimum number of usable reports, window acceptance and
# the band outside of which a fitted exponent is flagged.
MIN_FIT_REPORTS = 20
MIN_FIT_WINDOW = 5
FIT_R2_THRESHOLD = 0.98
THETA_SANITY_BAND = (0.45, 1.05)

# Above this exponent rate_check uses the algebraic branch.
EXPONENTIAL_REGIME_THETA = 0.55

# Relative slack allowed by trajectory_length() over the length bound.
LENGTH_BOUND_SLACK = 1.05

# Particle initialization aborts when rejection sampling accepts fewer than
# this fraction of proposals.
MIN_REJECTION_EFFICIENCY = 0.01

# Largest dense spectrum evaluated by the pull-back energy oracle, in modes
# times nodes.
MAX_NONUNIFORM_SUM = 2**22
