# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""Free energy, Wasserstein gradient and dissipation of a density.

    F(rho) = int rho log rho + int V rho + 1/2 int (W * rho) rho
    Y      = -grad(log rho + V + W * rho)
    I(rho) = int |Y|^2 rho

Integrals are uniform-grid Riemann sums, i.e. means over the nodes of the
unit torus.
"""

import logging
from dataclasses import dataclass, replace
from typing import Dict, Optional

import numpy as np

from mvgf import grid as grid_mod
from mvgf import potentials, settings
from mvgf.exceptions import PositivityError
from mvgf.grid import DensityField, RealField
from mvgf.potentials import KernelMultiplier

logger = logging.getLogger(__name__)

# Column order of a report row in trajectory CSV files.
CSV_COLUMNS = (
    "t",
    "F",
    "U_part",
    "V_part",
    "W_part",
    "dissipation",
    "mass",
    "rho_min",
    "rho_max",
)


@dataclass(frozen=True)
class EnergyReport:
    """Diagnostics of one density at time 't'.

    'energy' is exactly u_part + v_part + w_part. 'dissipation' is None when
    only the energy was evaluated.
    """

    t: float
    energy: float
    u_part: float
    v_part: float
    w_part: float
    dissipation: Optional[float]
    mass: float
    rho_min: float
    rho_max: float

    def to_row(self) -> Dict[str, float]:
        return {
            "t": self.t,
            "F": self.energy,
            "U_part": self.u_part,
            "V_part": self.v_part,
            "W_part": self.w_part,
            "dissipation": (
                float("nan") if self.dissipation is None else self.dissipation
            ),
            "mass": self.mass,
            "rho_min": self.rho_min,
            "rho_max": self.rho_max,
        }

    @classmethod
    def from_row(cls, row: Dict[str, str]) -> "EnergyReport":
        values = {name: float(row[name]) for name in CSV_COLUMNS}
        dissipation: Optional[float] = values["dissipation"]
        if dissipation != dissipation:  # nan
            dissipation = None
        return cls(
            t=values["t"],
            energy=values["F"],
            u_part=values["U_part"],
            v_part=values["V_part"],
            w_part=values["W_part"],
            dissipation=dissipation,
            mass=values["mass"],
            rho_min=values["rho_min"],
            rho_max=values["rho_max"],
        )


def safe_log(rho: DensityField) -> np.ndarray:
    """log(max(rho, floor)) of the scalar channel."""
    return np.log(np.maximum(rho.scalar, settings.POSITIVITY_FLOOR))


def free_energy(
    rho: DensityField,
    potential: RealField,
    mult: KernelMultiplier,
    t: float = 0.0,
) -> EnergyReport:
    """Evaluate F and its three parts; the dissipation is left unset.

    Raises:
        NonFiniteError: an input holds NaN or infinity.
        GridMismatchError: inputs live on different grids.
    """
    grid_mod.check_same_grid(rho, potential, mult)
    values = rho.scalar

    # 0 log 0 = 0 through the floor clamp.
    u_part = float(np.mean(values * safe_log(rho)))
    v_part = float(np.mean(potential.scalar * values))
    w_part = 0.5 * float(np.mean(potentials.convolve(mult, rho).scalar * values))

    return EnergyReport(
        t=t,
        energy=u_part + v_part + w_part,
        u_part=u_part,
        v_part=v_part,
        w_part=w_part,
        dissipation=None,
        mass=rho.mass,
        rho_min=float(values.min()),
        rho_max=float(values.max()),
    )


def interaction_energy_spectral(rho: DensityField, mult: KernelMultiplier) -> float:
    """1/2 sum_k w_hat(k) |rho^(k)|^2, the Parseval form of the W part."""
    grid = grid_mod.check_same_grid(rho, mult)
    coeffs = grid_mod.forward_values(grid, rho.values)[0]
    return 0.5 * float(np.sum(mult.w_hat * np.abs(coeffs) ** 2))


def chemical_potential(
    rho: DensityField, potential: RealField, mult: KernelMultiplier
) -> RealField:
    """log rho + V + W * rho, the first variation of F."""
    grid = grid_mod.check_same_grid(rho, potential, mult)
    interaction = potentials.convolve(mult, rho).scalar
    return RealField(grid, safe_log(rho) + potential.scalar + interaction)


def gradient_field(
    rho: DensityField, potential: RealField, mult: KernelMultiplier
) -> RealField:
    """Y = -grad(log rho + V + W * rho), taken spectrally.

    Raises:
        PositivityError: 'rho' drops below the positivity floor.
    """
    lowest = float(rho.scalar.min())
    if lowest < 0.5 * settings.POSITIVITY_FLOOR:
        raise PositivityError(
            "density minimum " + repr(lowest) + " is below the positivity floor"
        )
    gradient = grid_mod.gradient(chemical_potential(rho, potential, mult))
    return RealField(rho.grid, -gradient.values)


def dissipation(rho: DensityField, y: RealField) -> float:
    """I = mean(|Y|^2 rho)."""
    grid_mod.check_same_grid(rho, y)
    return float(np.mean(np.sum(y.values**2, axis=0) * rho.scalar))


def diagnose(
    rho: DensityField,
    potential: RealField,
    mult: KernelMultiplier,
    t: float = 0.0,
) -> EnergyReport:
    """free_energy() with the dissipation filled in."""
    report = free_energy(rho, potential, mult, t)
    y = gradient_field(rho, potential, mult)
    return replace(report, dissipation=dissipation(rho, y))


def energy_lower_bound(potential: RealField, mult: KernelMultiplier) -> float:
    """Lower bound of F over all unit-mass densities on the grid.

    The entropy is nonnegative on the unit torus, |rho^(k)| <= 1 for unit
    mass and rho^(0) = 1, so

        F >= min V + w_hat(0) / 2 + 1/2 sum_{k != 0} min(w_hat(k), 0).
    """
    grid = grid_mod.check_same_grid(potential, mult)
    w_hat = mult.w_hat.copy()
    origin = (0,) * grid.dim
    zero_mode = float(w_hat[origin])
    w_hat[origin] = 0.0
    return (
        float(potential.scalar.min())
        + 0.5 * zero_mode
        + 0.5 * float(np.sum(np.minimum(w_hat, 0.0)))
    )
