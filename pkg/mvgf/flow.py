# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""Time integration of

    d rho / dt = Laplacian rho + div(rho grad(V + W * rho))

on the unit torus, and fixed-point iteration for its stationary states.

The scheme is a second-order integrating-factor Runge-Kutta (Heun) method:
the heat semigroup exp(-4 pi^2 |k|^2 dt) is applied exactly to every mode and
the transport term is evaluated pseudo-spectrally. Mass is conserved exactly
because the transport term is a divergence and has no mode 0.
"""

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from mvgf import energy
from mvgf import grid as grid_mod
from mvgf import potentials, settings
from mvgf.config import FlowConfig, StationaryConfig
from mvgf.energy import EnergyReport
from mvgf.exceptions import FormatError, NonConvergenceError, StepFailureError
from mvgf.grid import DensityField, RealField, TorusGrid
from mvgf.potentials import KernelMultiplier

logger = logging.getLogger(__name__)


class TerminalStatus(str, enum.Enum):
    CONVERGED = "converged"
    T_END_REACHED = "t_end_reached"
    BLOWUP_DETECTED = "blowup_detected"
    STEP_FAILURE = "step_failure"


@dataclass
class TrajectoryLog:
    """Everything a run() produced.

    Attributes:
        reports: Time-ordered energy reports, dissipation included.
        snapshots: (t, density) pairs; the first and last states are always
            present.
        terminal_status: Why the run stopped.
        clipped_mass: Total mass added by the positivity floor.
        failure: The error behind a STEP_FAILURE status.
    """

    reports: List[EnergyReport] = field(default_factory=list)
    snapshots: List[Tuple[float, DensityField]] = field(default_factory=list)
    terminal_status: TerminalStatus = TerminalStatus.T_END_REACHED
    clipped_mass: float = 0.0
    failure: Optional[StepFailureError] = None

    @property
    def final_state(self) -> DensityField:
        return self.snapshots[-1][1]

    @property
    def final_report(self) -> EnergyReport:
        return self.reports[-1]

    def summary(self) -> dict:
        last = self.reports[-1]
        return {
            "status": self.terminal_status.value,
            "t_final": last.t,
            "F_final": last.energy,
            "I_final": last.dissipation,
        }

    def raise_for_status(self) -> None:
        """Raise the stored StepFailureError, if the run failed."""
        if self.failure is not None:
            raise self.failure


class Stepper:
    """One-step integrator for fixed V and W on a grid.

    Attributes:
        last_clipped: Mass added by the positivity floor in the last step.
    """

    def __init__(
        self,
        grad_potential: RealField,
        mult: KernelMultiplier,
        dealias: bool = True,
    ):
        self.grid: TorusGrid = grid_mod.check_same_grid(grad_potential, mult)
        self._grad_potential = grad_potential.values
        self._w_hat = mult.w_hat
        self._mask = (
            self.grid.dealias_mask if dealias else np.ones(self.grid.shape, dtype=bool)
        )
        # grad V restricted to the retained modes.
        self._grad_potential_kept = grid_mod.inverse_values(
            self.grid,
            grid_mod.forward_values(self.grid, self._grad_potential) * self._mask,
        )
        self.last_clipped = 0.0

    def _drift_coeffs(
        self, coeffs: np.ndarray, grad_potential: np.ndarray
    ) -> np.ndarray:
        grid = self.grid
        grad_w = grid_mod.inverse_values(
            grid, grid_mod.gradient_coeffs(grid, self._w_hat * coeffs)
        )
        return grad_w + grad_potential

    def drift(self, rho_values: np.ndarray) -> np.ndarray:
        """grad(V + W * rho) at the nodes, shaped (dim, *shape)."""
        coeffs = grid_mod.forward_values(self.grid, rho_values)
        return self._drift_coeffs(coeffs, self._grad_potential)

    def _transport(self, rho_coeffs: np.ndarray) -> np.ndarray:
        """div(rho grad(V + W * rho)) under the two-thirds rule.

        Both factors of the product are truncated to the retained modes
        before it is formed, and so is the result.
        """
        grid = self.grid
        kept = rho_coeffs * self._mask
        rho_values = grid_mod.inverse_values(grid, kept)
        flux = rho_values * self._drift_coeffs(kept, self._grad_potential_kept)
        flux_coeffs = grid_mod.forward_values(grid, flux)
        return grid_mod.divergence_coeffs(grid, flux_coeffs) * self._mask

    def _heun(self, rho_values: np.ndarray, dt: float) -> np.ndarray:
        grid = self.grid
        factor = np.exp(grid.laplacian_symbol * dt)
        rho_coeffs = grid_mod.forward_values(grid, rho_values)

        n0 = self._transport(rho_coeffs)
        predictor = factor * (rho_coeffs + dt * n0)
        n1 = self._transport(predictor)
        updated = factor * rho_coeffs + 0.5 * dt * (factor * n0 + n1)

        return grid_mod.inverse_values(grid, updated)

    def _advance(
        self, rho_values: np.ndarray, dt: float, t: float, depth: int
    ) -> np.ndarray:
        updated = self._heun(rho_values, dt)
        if not np.all(np.isfinite(updated)):
            raise StepFailureError("non-finite density after step", t)

        rho_max = float(updated.max())
        if float(updated.min()) >= -settings.NEGATIVE_RETRY_FRACTION * rho_max:
            return updated

        if depth >= settings.MAX_STEP_RETRIES:
            raise StepFailureError(
                "negative density " + repr(float(updated.min()))
                + " persists after " + str(depth) + " step halvings",
                t,
            )
        logger.warning("Negative density at t=%.6g, retrying with dt=%.3g", t, dt / 2)
        half = self._advance(rho_values, dt / 2, t, depth + 1)
        return self._advance(half, dt / 2, t + dt / 2, depth + 1)

    def step(self, rho: DensityField, dt: float, t: float = 0.0) -> DensityField:
        """Advance 'rho' by 'dt'.

        Raises:
            StepFailureError: NaN after the step, or negative values that
                survive MAX_STEP_RETRIES halvings of dt.
        """
        mass = rho.mass
        updated = self._advance(rho.values, dt, t, 0)
        drift = abs(float(np.mean(updated)) - mass)
        if drift > settings.MASS_TOLERANCE * max(1.0, mass):
            logger.warning("Mass changed by %.3g in the step at t=%.6g", drift, t)

        self.last_clipped = 0.0
        if float(updated.min()) < settings.POSITIVITY_FLOOR:
            self.last_clipped = float(
                np.mean(np.maximum(settings.POSITIVITY_FLOOR - updated, 0.0))
            )
            updated = np.maximum(updated, settings.POSITIVITY_FLOOR)
            updated *= mass / float(np.mean(updated))

        return DensityField(self.grid, updated)

    def stable_dt(self, rho: DensityField, cfl: float) -> float:
        """Largest dt with dt * max|grad(V + W * rho)| / h <= cfl."""
        speed = float(np.max(np.sqrt(np.sum(self.drift(rho.values) ** 2, axis=0))))
        if speed == 0.0:
            return math.inf
        return cfl * self.grid.spacing / speed


def step(
    rho: DensityField,
    grad_potential: RealField,
    mult: KernelMultiplier,
    dt: float,
    dealias: bool = True,
) -> DensityField:
    """Advance 'rho' by one integrating-factor Heun step of size 'dt'."""
    return Stepper(grad_potential, mult, dealias).step(rho, dt)


def run(
    rho0: DensityField,
    potential: RealField,
    mult: KernelMultiplier,
    cfg: FlowConfig,
) -> TrajectoryLog:
    """Integrate from 'rho0' until t_end, convergence, blow-up or failure.

    A StepFailureError does not propagate; it is stored on the returned
    log together with everything recorded up to the failing time.
    """
    grad_potential = grid_mod.gradient(potential)
    stepper = Stepper(grad_potential, mult, cfg.dealias)
    log = TrajectoryLog()

    rho = rho0
    t = 0.0
    steps = 0
    report = energy.diagnose(rho, potential, mult, t)
    log.reports.append(report)
    log.snapshots.append((t, rho))
    logger.info(
        "Flow on T^%d, M=%d: dt=%g, t_end=%g, F0=%.12g, I0=%.6g",
        rho.grid.dim,
        rho.grid.points_per_axis,
        cfg.dt,
        cfg.t_end,
        report.energy,
        report.dissipation,
    )

    status = TerminalStatus.T_END_REACHED
    while t < cfg.t_end * (1.0 - 1e-12):
        dt = min(cfg.dt, stepper.stable_dt(rho, cfg.adapt_cfl), cfg.t_end - t)
        try:
            candidate = stepper.step(rho, dt, t)
            if log.clipped_mass + stepper.last_clipped > (
                settings.CLIP_BUDGET_PER_UNIT_TIME * max(t + dt, cfg.dt)
            ):
                raise StepFailureError(
                    "positivity clipping exceeds "
                    + repr(settings.CLIP_BUDGET_PER_UNIT_TIME)
                    + " per unit time; the grid is under-resolved",
                    t + dt,
                )
            log.clipped_mass += stepper.last_clipped
            report = energy.diagnose(candidate, potential, mult, t + dt)
        except StepFailureError as e:
            logger.error("Step failure: %s", e)
            log.failure = e
            status = TerminalStatus.STEP_FAILURE
            break

        rho = candidate
        t += dt
        steps += 1

        if report.rho_max > cfg.blowup_linf:
            status = TerminalStatus.BLOWUP_DETECTED
        elif report.dissipation is not None and report.dissipation < cfg.conv_tol:
            status = TerminalStatus.CONVERGED

        finished = status is not TerminalStatus.T_END_REACHED or t >= cfg.t_end * (
            1.0 - 1e-12
        )
        if finished or steps % cfg.log_every == 0:
            log.reports.append(report)
            logger.debug(
                "t=%.6g F=%.15g I=%.6g rho_max=%.6g", t, report.energy,
                report.dissipation, report.rho_max,
            )
        if finished or (cfg.snapshot_every and steps % cfg.snapshot_every == 0):
            log.snapshots.append((t, rho))
        if status is not TerminalStatus.T_END_REACHED:
            break

    if log.snapshots[-1][1] is not rho:
        log.snapshots.append((t, rho))

    log.terminal_status = status
    last = log.reports[-1]
    logger.info(
        "Flow stopped (%s) at t=%.6g after %d steps: F=%.12g, I=%.6g, rho_max=%.6g",
        status.value,
        t,
        steps,
        last.energy,
        last.dissipation,
        last.rho_max,
    )
    return log


def dissipation_defects(
    log: TrajectoryLog, quadrature: str = "trapezoid"
) -> np.ndarray:
    """|dF/dt + I| / (1 + I) between consecutive reports.

    The difference quotient is compared against the trapezoid average of I
    over the interval, or with quadrature="left" against I at its start.
    The left form is first order in the report spacing, the trapezoid form
    second order.

    Raises:
        FormatError: unknown quadrature.
    """
    if quadrature not in ("trapezoid", "left"):
        raise FormatError("unknown quadrature " + repr(quadrature))
    reports = log.reports
    defects = []
    for before, after in zip(reports[:-1], reports[1:]):
        if quadrature == "left":
            i_ref = before.dissipation
        else:
            i_ref = 0.5 * (before.dissipation + after.dissipation)
        rate = (after.energy - before.energy) / (after.t - before.t)
        defects.append(abs(rate + i_ref) / (1.0 + i_ref))
    return np.asarray(defects)


def monotonicity_violations(log: TrajectoryLog, tol_diss: float) -> int:
    """Number of report pairs with F(t2) > F(t1) + tol_diss * (t2 - t1)."""
    count = 0
    for before, after in zip(log.reports[:-1], log.reports[1:]):
        if after.energy > before.energy + tol_diss * (after.t - before.t):
            count += 1
    return count


@dataclass(frozen=True)
class StationaryReport:
    iterations: int
    increment: float
    # sqrt(I(rho)), the L2_rho norm of the Wasserstein gradient.
    residual: float


def gibbs_state(
    potential: RealField, shift: Optional[RealField] = None
) -> DensityField:
    """exp(-V [- shift]) normalized to unit mass."""
    exponent = potential.scalar if shift is None else potential.scalar + shift.scalar
    weights = np.exp(-(exponent - exponent.min()))
    return DensityField(potential.grid, weights / np.mean(weights))


def stationary_fixed_point(
    rho_init: DensityField,
    potential: RealField,
    mult: KernelMultiplier,
    cfg: Optional[StationaryConfig] = None,
) -> Tuple[DensityField, StationaryReport]:
    """Damped Picard iteration rho <- (1 - l) rho + l exp(-V - W * rho) / Z.

    Stops once the sup-norm increment of an update is below cfg.tol, so the
    reported iteration count includes the update that confirms the fixed
    point: a map that is constant after one update reports 2. Stationary
    states are not unique in general; the one found depends on 'rho_init'.

    Raises:
        NonConvergenceError: cfg.max_iter iterations were not enough.
    """
    cfg = cfg or StationaryConfig()
    rho = rho_init
    increment = math.inf

    for iteration in range(1, cfg.max_iter + 1):
        target = gibbs_state(potential, potentials.convolve(mult, rho))
        updated = (1.0 - cfg.damping) * rho.values + cfg.damping * target.values
        increment = float(np.max(np.abs(updated - rho.values)))
        rho = DensityField(rho.grid, updated)
        if iteration % 100 == 0:
            logger.debug(
                "Fixed point iteration %d: increment %.3g", iteration, increment
            )
        if increment < cfg.tol:
            residual = math.sqrt(
                energy.dissipation(rho, energy.gradient_field(rho, potential, mult))
            )
            logger.info(
                "Fixed point reached after %d iterations, residual %.3g",
                iteration,
                residual,
            )
            return rho, StationaryReport(iteration, increment, residual)

    raise NonConvergenceError("stationary fixed point", cfg.max_iter, increment)
