#!/usr/bin/env python

# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""
<Program Name>
  formats.py

<Purpose>
  A central location for all format-related checking of scenario data.
  'formats.py' depends heavily on securesystemslib's 'schema.py'.

  There are two ways of checking the format of objects.  The first method
  raises a 'securesystemslib.exceptions.FormatError' exception if the match
  fails and the other returns a Boolean result.

  mvgf.formats.<SCHEMA>.check_match(object)
  mvgf.formats.<SCHEMA>.matches(object)

  Example:

  mvgf.formats.POINTS_PER_AXIS_SCHEMA.check_match(64)

  SECTION_FIELDS maps every scenario section to the schema of each of its
  keys; the scenario parser checks the raw values key by key so that a
  mismatch can name its line.  Cross-field constraints that a schema cannot
  express (Yukawa alpha > 0, radial exponents, kernel evenness) are enforced
  by 'mvgf.potentials' and 'mvgf.config'.
"""

import math
from typing import Any, Optional

from securesystemslib import exceptions as sslib_exceptions
from securesystemslib import schema as SCHEMA


class Number(SCHEMA.Schema):
    """
    <Purpose>
      Matches a finite real number (int or float, never bool) within
      optional bounds.  securesystemslib has integer schemas only.

      >>> schema = Number(lo=0.0, strict_lo=True)
      >>> schema.matches(1e-3)
      True
      >>> schema.matches(0)
      False
      >>> schema.matches(True)
      False
      >>> schema.matches(float('nan'))
      False
    """

    def __init__(
        self,
        lo: float = -math.inf,
        hi: float = math.inf,
        strict_lo: bool = False,
    ):
        self._lo = lo
        self._hi = hi
        self._strict_lo = strict_lo

    def check_match(self, object: Any) -> None:  # pylint: disable=redefined-builtin
        if isinstance(object, bool) or not isinstance(object, (int, float)):
            raise sslib_exceptions.FormatError(
                "Got " + repr(object) + " instead of a number."
            )

        if not math.isfinite(object):
            raise sslib_exceptions.FormatError(
                repr(object) + " is not a finite number."
            )

        if self._strict_lo and object <= self._lo:
            raise sslib_exceptions.FormatError(
                repr(object) + " is not greater than " + repr(self._lo) + "."
            )

        if object < self._lo or object > self._hi:
            raise sslib_exceptions.FormatError(
                repr(object) + " is not within the range "
                + repr(self._lo) + " <= x <= " + repr(self._hi) + "."
            )


# Run name, used in output file names and provenance headers.
NAME_SCHEMA = SCHEMA.RegularExpression(r"[A-Za-z0-9_.\-]+")

# Single scenario seed; every random stream derives from it.
SEED_SCHEMA = SCHEMA.Integer(lo=0, hi=2**64 - 1)

DIMENSION_SCHEMA = SCHEMA.Integer(lo=1, hi=2)
POINTS_PER_AXIS_SCHEMA = SCHEMA.Integer(lo=8)

REAL_SCHEMA = Number()
POSITIVE_REAL_SCHEMA = Number(lo=0.0, strict_lo=True)
NONNEGATIVE_REAL_SCHEMA = Number(lo=0.0)
POSITIVE_INTEGER_SCHEMA = SCHEMA.Integer(lo=1)
NONNEGATIVE_INTEGER_SCHEMA = SCHEMA.Integer(lo=0)
BOOLEAN_SCHEMA = SCHEMA.Boolean()
PATH_SCHEMA = SCHEMA.AnyNonemptyString()

# A lattice point (k1,) or (k1, k2).
LATTICE_POINT_SCHEMA = SCHEMA.ListOf(
    SCHEMA.Integer(), min_count=1, max_count=2, list_name="lattice point"
)

# ((k1, k2), amplitude)
MODE_SCHEMA = SCHEMA.Struct(
    [LATTICE_POINT_SCHEMA, REAL_SCHEMA], struct_name="mode"
)
MODES_SCHEMA = SCHEMA.ListOf(MODE_SCHEMA, list_name="modes")

# (L, gamma)
RADIAL_TERM_SCHEMA = SCHEMA.Struct(
    [REAL_SCHEMA, REAL_SCHEMA], struct_name="radial term"
)
RADIAL_TERMS_SCHEMA = SCHEMA.ListOf(
    RADIAL_TERM_SCHEMA, min_count=1, list_name="terms"
)

# (chi, alpha), alpha = 0 selecting the zero-mean Newtonian Green function.
SPECIES_SCHEMA = SCHEMA.Struct(
    [REAL_SCHEMA, REAL_SCHEMA], struct_name="species"
)
SPECIES_LIST_SCHEMA = SCHEMA.ListOf(
    SPECIES_SCHEMA, min_count=1, list_name="species"
)

CONFINEMENT_KIND_SCHEMA = SCHEMA.OneOf(
    [SCHEMA.String("zero"), SCHEMA.String("cosine_sum"), SCHEMA.String("tabulated")]
)

INTERACTION_KIND_SCHEMA = SCHEMA.OneOf(
    [
        SCHEMA.String("zero"),
        SCHEMA.String("fourier_multiplier"),
        SCHEMA.String("newtonian_green"),
        SCHEMA.String("yukawa_green"),
        SCHEMA.String("radial_power"),
        SCHEMA.String("cosine_sum"),
        SCHEMA.String("green_sum"),
    ]
)

INITIAL_KIND_SCHEMA = SCHEMA.OneOf(
    [
        SCHEMA.String("uniform_plus_modes"),
        SCHEMA.String("tabulated"),
        SCHEMA.String("gibbs_of_V"),
    ]
)

FLOOR_POLICY_SCHEMA = SCHEMA.String("clip_renormalize")

SPECTRUM_BASE_SCHEMA = SCHEMA.OneOf(
    [SCHEMA.String("initial"), SCHEMA.String("stationary")]
)

REPRESENTATION_SCHEMA = SCHEMA.OneOf(
    [SCHEMA.String("cells"), SCHEMA.String("atoms")]
)

# Key schemas of the top level (keys outside of any section) and of every
# section.  Scenario errors are reported per key, so these are kept apart
# from the Object schemas built from them below.
TOP_LEVEL_FIELDS = {
    "name": NAME_SCHEMA,
    "seed": SCHEMA.Optional(SEED_SCHEMA),
}

SECTION_FIELDS = {
    "grid": {
        "dim": DIMENSION_SCHEMA,
        "M": POINTS_PER_AXIS_SCHEMA,
    },
    "V": {
        "kind": CONFINEMENT_KIND_SCHEMA,
        "modes": SCHEMA.Optional(MODES_SCHEMA),
        "path": SCHEMA.Optional(PATH_SCHEMA),
    },
    "W": {
        "kind": INTERACTION_KIND_SCHEMA,
        "chi": SCHEMA.Optional(REAL_SCHEMA),
        "alpha": SCHEMA.Optional(REAL_SCHEMA),
        "terms": SCHEMA.Optional(RADIAL_TERMS_SCHEMA),
        "modes": SCHEMA.Optional(MODES_SCHEMA),
        "species": SCHEMA.Optional(SPECIES_LIST_SCHEMA),
    },
    "initial": {
        "kind": INITIAL_KIND_SCHEMA,
        "modes": SCHEMA.Optional(MODES_SCHEMA),
        "path": SCHEMA.Optional(PATH_SCHEMA),
    },
    "flow": {
        "dt": POSITIVE_REAL_SCHEMA,
        "t_end": POSITIVE_REAL_SCHEMA,
        "dealias": SCHEMA.Optional(BOOLEAN_SCHEMA),
        "adapt_cfl": SCHEMA.Optional(POSITIVE_REAL_SCHEMA),
        "floor_policy": SCHEMA.Optional(FLOOR_POLICY_SCHEMA),
        "blowup_linf": SCHEMA.Optional(POSITIVE_REAL_SCHEMA),
        "log_every": SCHEMA.Optional(POSITIVE_INTEGER_SCHEMA),
        "snapshot_every": SCHEMA.Optional(NONNEGATIVE_INTEGER_SCHEMA),
        "conv_tol": SCHEMA.Optional(POSITIVE_REAL_SCHEMA),
    },
    "outputs": {
        "directory": PATH_SCHEMA,
    },
    "stationary": {
        "damping": SCHEMA.Optional(POSITIVE_REAL_SCHEMA),
        "max_iter": SCHEMA.Optional(POSITIVE_INTEGER_SCHEMA),
        "tol": SCHEMA.Optional(POSITIVE_REAL_SCHEMA),
    },
    "spectrum": {
        "max_mode": SCHEMA.Optional(POSITIVE_INTEGER_SCHEMA),
        "base": SCHEMA.Optional(SPECTRUM_BASE_SCHEMA),
        "kernel_tol_factor": SCHEMA.Optional(POSITIVE_REAL_SCHEMA),
    },
    "particles": {
        "n_particles": SCHEMA.Optional(POSITIVE_INTEGER_SCHEMA),
        "dt": SCHEMA.Optional(POSITIVE_REAL_SCHEMA),
        "t_end": SCHEMA.Optional(POSITIVE_REAL_SCHEMA),
        "temperature": SCHEMA.Optional(NONNEGATIVE_REAL_SCHEMA),
        "smoothing_modes": SCHEMA.Optional(POSITIVE_INTEGER_SCHEMA),
        "bandwidth_modes": SCHEMA.Optional(POSITIVE_INTEGER_SCHEMA),
        "log_every": SCHEMA.Optional(POSITIVE_INTEGER_SCHEMA),
        "average_from": SCHEMA.Optional(NONNEGATIVE_REAL_SCHEMA),
    },
    "fit": {
        "f_inf": SCHEMA.Optional(REAL_SCHEMA),
        "representation": SCHEMA.Optional(REPRESENTATION_SCHEMA),
    },
}

# Sections that every scenario must contain.
REQUIRED_SECTIONS = ("grid", "V", "W", "initial", "flow", "outputs")


def is_required(schema: SCHEMA.Schema) -> bool:
    return not isinstance(schema, SCHEMA.Optional)


def first_mismatch(schema: SCHEMA.Schema, obj: Any) -> Optional[str]:
    """Return the FormatError message of 'schema' on 'obj', or None."""
    try:
        schema.check_match(obj)
    except sslib_exceptions.FormatError as e:
        return str(e)
    return None
