# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""Run options for the time stepper, the stationary solver, spectrum
assembly, particle simulation and trajectory fits.

All classes validate themselves on construction and raise
InvalidConfigurationError on bad values.
"""

import math
from dataclasses import dataclass
from typing import Optional

from mvgf import settings
from mvgf.exceptions import InvalidConfigurationError


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvalidConfigurationError(message)


@dataclass(frozen=True)
class FlowConfig:
    dt: float = 1e-3
    t_end: float = 1.0
    dealias: bool = True
    adapt_cfl: float = settings.DEFAULT_ADAPT_CFL
    floor_policy: str = "clip_renormalize"
    blowup_linf: float = settings.DEFAULT_BLOWUP_LINF
    log_every: int = 1
    snapshot_every: int = 0  # 0: no intermediate snapshots
    conv_tol: float = settings.DEFAULT_CONVERGENCE_TOLERANCE

    def __post_init__(self) -> None:
        _require(math.isfinite(self.dt) and self.dt > 0, "dt must be > 0")
        _require(
            math.isfinite(self.t_end) and self.t_end > 0, "t_end must be > 0"
        )
        _require(self.adapt_cfl > 0, "adapt_cfl must be > 0")
        _require(
            self.floor_policy == "clip_renormalize",
            "unknown floor_policy " + repr(self.floor_policy),
        )
        _require(self.blowup_linf > 1, "blowup_linf must be > 1")
        _require(self.log_every >= 1, "log_every must be >= 1")
        _require(self.snapshot_every >= 0, "snapshot_every must be >= 0")
        _require(self.conv_tol > 0, "conv_tol must be > 0")


@dataclass(frozen=True)
class StationaryConfig:
    damping: float = 1.0
    max_iter: int = 10000
    tol: float = 1e-12

    def __post_init__(self) -> None:
        _require(0 < self.damping <= 1, "damping must lie in (0, 1]")
        _require(self.max_iter >= 1, "max_iter must be >= 1")
        _require(self.tol > 0, "tol must be > 0")


@dataclass(frozen=True)
class SpectrumConfig:
    max_mode: int = 3
    # Base state: the scenario's initial density, or the fixed point that
    # the stationary solver reaches from it.
    base: str = "initial"
    kernel_tol_factor: float = settings.KERNEL_TOL_FACTOR

    def __post_init__(self) -> None:
        _require(self.max_mode >= 1, "max_mode must be >= 1")
        _require(
            self.base in ("initial", "stationary"),
            "unknown spectrum base " + repr(self.base),
        )
        _require(self.kernel_tol_factor > 0, "kernel_tol_factor must be > 0")


@dataclass(frozen=True)
class ParticleConfig:
    n_particles: int = 10000
    dt: float = 1e-3
    t_end: float = 1.0
    temperature: float = 1.0
    # Fourier cutoff of the gridded interaction force.
    smoothing_modes: int = 16
    # Fourier cutoff of the Fejér smoothing of the histogram.
    bandwidth_modes: int = 16
    log_every: int = 100
    # Start of the time average of smoothed densities; None disables it.
    average_from: Optional[float] = None

    def __post_init__(self) -> None:
        _require(self.n_particles >= 1, "n_particles must be >= 1")
        _require(math.isfinite(self.dt) and self.dt > 0, "dt must be > 0")
        _require(self.t_end > 0, "t_end must be > 0")
        _require(self.temperature >= 0, "temperature must be >= 0")
        _require(self.smoothing_modes >= 1, "smoothing_modes must be >= 1")
        _require(self.bandwidth_modes >= 1, "bandwidth_modes must be >= 1")
        _require(self.log_every >= 1, "log_every must be >= 1")
        _require(
            self.average_from is None or 0 <= self.average_from < self.t_end,
            "average_from must lie in [0, t_end)",
        )


@dataclass(frozen=True)
class FitConfig:
    # Overrides the terminal energy as the limit value.
    f_inf: Optional[float] = None
    representation: str = "cells"

    def __post_init__(self) -> None:
        _require(
            self.f_inf is None or math.isfinite(self.f_inf),
            "f_inf must be finite",
        )
        _require(
            self.representation in ("cells", "atoms"),
            "unknown representation " + repr(self.representation),
        )
