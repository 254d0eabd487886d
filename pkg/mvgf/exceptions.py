#!/usr/bin/env python

# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""
<Program Name>
  exceptions.py

<Purpose>
  Define mvgf Exceptions.
  The names chosen for mvgf Exception classes should end in 'Error' except
  where there is a good reason not to, and provide that reason in those cases.

  Configuration problems (FormatError, InvalidConfigurationError,
  ScenarioError, KernelSpecError) and numerical failures (NumericalError and
  its subclasses) are kept in separate branches so that the command-line
  front end can map them to distinct exit statuses.
"""

import logging
from typing import Optional, Tuple

logger = logging.getLogger(__name__)


class Error(Exception):
    """Indicate a generic error."""


class FormatError(Error):
    """Indicate an error while validating an object's format."""


class InvalidConfigurationError(Error):
    """If a configuration object does not match the expected format."""


class ScenarioError(InvalidConfigurationError):
    """Indicate an error in a scenario file, optionally at a given line."""

    def __init__(
        self,
        message: str,
        line_number: Optional[int] = None,
        assumption: Optional[str] = None,
    ):
        super().__init__(message)

        self.message = message
        self.line_number = line_number
        self.assumption = assumption

    def __str__(self) -> str:
        text = self.message
        if self.assumption is not None:
            text += " (violates " + self.assumption + ")"
        if self.line_number is not None:
            text = "line " + str(self.line_number) + ": " + text
        return text

    def __repr__(self) -> str:
        return self.__class__.__name__ + " : " + str(self)


class KernelSpecError(InvalidConfigurationError):
    """Indicate a potential or kernel spec that breaks a standing assumption.

    The assumption is one of 'analytic V', 'even W' (W centrally symmetric)
    or 'Coulomb bound' (at most Coulomb-type singularity), or a parameter
    constraint such as 'alpha > 0'.
    """

    def __init__(self, message: str, assumption: Optional[str] = None):
        super().__init__(message)

        self.message = message
        self.assumption = assumption

    def __str__(self) -> str:
        if self.assumption is None:
            return self.message
        return self.message + " (violates " + self.assumption + ")"

    def __repr__(self) -> str:
        return self.__class__.__name__ + " : " + str(self)


class GridError(Error):
    """Indicate an invalid grid or a field that does not fit its grid."""


class GridMismatchError(GridError):
    """Indicate that two objects live on different grids."""


class ChannelError(GridError):
    """Indicate a scalar field where a vector field is needed, or vice versa."""


class SnapshotError(Error):
    """Indicate a malformed or incompatible MVGF snapshot."""


class NumericalError(Error):
    """Indicate a failure of a numerical procedure."""


class NonFiniteError(NumericalError):
    """Indicate a NaN or infinity, reported with its first location."""

    def __init__(self, what: str, location: Tuple[int, ...]):
        super().__init__()

        self.what = what
        self.location = location

    def __str__(self) -> str:
        return (
            "Non-finite value in " + self.what + " at node "
            + repr(self.location)
        )

    def __repr__(self) -> str:
        return self.__class__.__name__ + " : " + str(self)


class PositivityError(NumericalError):
    """Indicate a density below the positivity floor where one is required."""


class StepFailureError(NumericalError):
    """Indicate that the time stepper could not advance the state."""

    def __init__(self, reason: str, time: float):
        super().__init__()

        self.reason = reason
        self.time = time

    def __str__(self) -> str:
        return "Step failure at t=" + repr(self.time) + ": " + self.reason

    def __repr__(self) -> str:
        return self.__class__.__name__ + " : " + str(self)


class NonConvergenceError(NumericalError):
    """Indicate that an iteration did not reach its tolerance."""

    def __init__(self, what: str, iterations: int, residual: float):
        super().__init__()

        self.what = what
        self.iterations = iterations
        self.residual = residual

    def __str__(self) -> str:
        return (
            self.what + " did not converge after " + repr(self.iterations)
            + " iterations (residual " + repr(self.residual) + ")"
        )

    def __repr__(self) -> str:
        return self.__class__.__name__ + " : " + str(self)


class PoissonSolveError(NonConvergenceError):
    """Indicate stagnation of the weighted Poisson solver."""


class SpectrumSizeError(NumericalError):
    """Indicate a spectrum basis too large to assemble densely."""


class FitError(NumericalError):
    """Indicate that a trajectory cannot support the requested fit."""
