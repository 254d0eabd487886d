# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""Interacting Langevin particles on the unit torus.

Each of the N particles follows

    dX^i = -(grad V(X^i) + 1/N sum_{j != i} grad W(X^i - X^j)) dt
           + sqrt(2 temperature) dB^i,

the N-particle system whose empirical measure approximates the solution of
the mean-field equation. The per-particle drift is the gradient of
H_N = sum_i V(X^i) + 1/(2N) sum_{i != j} W(X^i - X^j) with respect to X^i:
W is even, so every pair appears twice in H_N and the factor 1/2 cancels.

The interaction is evaluated particle-mesh style: particles are deposited
on the grid with cloud-in-cell weights, the deposit is convolved with a
spectrally truncated table of grad W and the result is read back with the
same weights. Using one set of weights for both directions makes the pair
forces exactly antisymmetric, so a particle does not push itself.

Random numbers come from a counter-based Philox stream keyed by the seed;
the counter holds the step index, so step k draws the same numbers however
the run was split or resumed.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from mvgf import energy
from mvgf import grid as grid_mod
from mvgf import potentials, settings
from mvgf.config import ParticleConfig
from mvgf.energy import EnergyReport
from mvgf.exceptions import (
    GridError,
    InvalidConfigurationError,
    NonFiniteError,
    NumericalError,
)
from mvgf.grid import DensityField, RealField, TorusGrid
from mvgf.potentials import KernelMultiplier

logger = logging.getLogger(__name__)

# Third counter word of the Philox stream, one per use of randomness.
_SAMPLING_STREAM = 1
_NOISE_STREAM = 2


def _generator(seed: int, stream: int, step: int) -> np.random.Generator:
    bit_generator = np.random.Philox(key=seed, counter=[0, 0, stream, step])
    return np.random.Generator(bit_generator)


@dataclass(frozen=True)
class ParticleState:
    """Positions in [0, 1)^dim and the position in the random stream.

    Attributes:
        positions: Array (N, dim).
        seed: Key of the Philox stream.
        step_index: Number of steps taken; the counter of the next draw.
    """

    positions: np.ndarray
    seed: int
    step_index: int = 0

    @property
    def n_particles(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]


@dataclass(frozen=True)
class EmpiricalDensity:
    """Histogram of a particle cloud smoothed with a Fejér kernel."""

    base: DensityField
    bandwidth_modes: int
    n_particles: int


def _cell_weights(
    grid: TorusGrid, positions: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Cloud-in-cell stencil of every particle.

    Returns flat node indices and weights, both shaped (N, 2**dim).
    """
    m = grid.points_per_axis
    scaled = positions * m
    lower = np.floor(scaled).astype(np.int64)
    fraction = scaled - lower

    indices = np.zeros((positions.shape[0], 1), dtype=np.int64)
    weights = np.ones((positions.shape[0], 1))
    for axis in range(grid.dim):
        node = lower[:, axis, np.newaxis] % m
        upper = (node + 1) % m
        f = fraction[:, axis, np.newaxis]
        indices = np.concatenate((indices * m + node, indices * m + upper), axis=1)
        weights = np.concatenate((weights * (1.0 - f), weights * f), axis=1)
    return indices, weights


def _interpolate(
    table: RealField, indices: np.ndarray, weights: np.ndarray
) -> np.ndarray:
    """Table values at the particles, shaped (N, channels)."""
    flat = table.values.reshape(table.channels, -1)
    return np.einsum("cnk,nk->nc", flat[:, indices], weights)


def _deposit(grid: TorusGrid, indices: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Cloud-in-cell density of unit total mass, shaped (1, *grid.shape)."""
    n_particles = indices.shape[0]
    mass = np.bincount(indices.ravel(), weights=weights.ravel(), minlength=grid.size)
    return (mass / (n_particles * grid.spacing**grid.dim)).reshape((1,) + grid.shape)


def _check_positions(positions: np.ndarray, step_index: int) -> None:
    if not np.all(np.isfinite(positions)):
        location = tuple(int(i) for i in np.argwhere(~np.isfinite(positions))[0])
        raise NonFiniteError(
            "particle positions after step " + str(step_index), location
        )


def init_particles(
    n_particles: int,
    dim: int,
    seed: int,
    initial: Optional[DensityField] = None,
) -> ParticleState:
    """Draw 'n_particles' i.i.d. positions.

    Without 'initial' the positions are uniform. On T^1 the density is
    sampled by inverting its cumulative distribution, the density being
    constant on the cell around each node; on T^2 by rejection against
    max(rho).

    Raises:
        InvalidConfigurationError: n_particles < 1.
        GridError: 'initial' lives on a torus of another dimension.
        NumericalError: the expected rejection efficiency is below 1%.
    """
    if n_particles < 1:
        raise InvalidConfigurationError(
            "n_particles must be >= 1, got " + repr(n_particles)
        )
    rng = _generator(seed, _SAMPLING_STREAM, 0)

    if initial is None:
        positions = rng.random((n_particles, dim))
    elif initial.grid.dim != dim:
        raise GridError(
            "initial density lives on T^" + str(initial.grid.dim)
            + ", particles on T^" + str(dim)
        )
    elif dim == 1:
        positions = _inverse_cdf_sample(initial, n_particles, rng)
    else:
        positions = _rejection_sample(initial, n_particles, rng)

    logger.info("Initialized %d particles on T^%d (seed %d)", n_particles, dim, seed)
    return ParticleState(positions=positions, seed=seed)


def _inverse_cdf_sample(
    initial: DensityField, n_particles: int, rng: np.random.Generator
) -> np.ndarray:
    grid = initial.grid
    weights = initial.scalar / np.sum(initial.scalar)
    cumulative = np.concatenate(([0.0], np.cumsum(weights)))
    cumulative[-1] = 1.0
    u = rng.random(n_particles)
    cell = np.searchsorted(cumulative, u, side="right") - 1
    cell = np.clip(cell, 0, grid.points_per_axis - 1)
    # Empty cells have zero width in u and are never hit.
    within = (u - cumulative[cell]) / np.maximum(weights[cell], 1e-300)
    x = (cell + np.clip(within, 0.0, 1.0) - 0.5) * grid.spacing
    return np.mod(x, 1.0)[:, np.newaxis]


def _rejection_sample(
    initial: DensityField, n_particles: int, rng: np.random.Generator
) -> np.ndarray:
    grid = initial.grid
    values = initial.scalar
    ceiling = float(values.max())
    efficiency = float(values.mean()) / ceiling
    if efficiency < settings.MIN_REJECTION_EFFICIENCY:
        raise NumericalError(
            "rejection sampling efficiency " + repr(efficiency) + " is below "
            + repr(settings.MIN_REJECTION_EFFICIENCY)
        )

    accepted: List[np.ndarray] = []
    count = 0
    while count < n_particles:
        batch = int((n_particles - count) / efficiency * 1.2) + 16
        proposals = rng.random((batch, grid.dim))
        # Nearest node, i.e. the cell each proposal falls in.
        nodes = np.floor(proposals * grid.points_per_axis + 0.5).astype(np.int64)
        nodes %= grid.points_per_axis
        density = values[tuple(nodes.T)]
        keep = rng.random(batch) * ceiling < density
        accepted.append(proposals[keep])
        count += int(keep.sum())
    return np.concatenate(accepted)[:n_particles]


def interaction_force(
    positions: np.ndarray, grad_w_table: RealField
) -> np.ndarray:
    """Mean-field force (1/N) sum_j grad W(X^i - X^j) on every particle.

    The j = i term is included; with cloud-in-cell weights on both sides it
    contributes sum_{a,b} w_a w_b grad W(x_a - x_b) = 0 since grad W is odd.
    """
    grid = grad_w_table.grid
    indices, weights = _cell_weights(grid, positions)
    density = _deposit(grid, indices, weights)
    table_coeffs = grid_mod.forward_values(grid, grad_w_table.values)
    coeffs = table_coeffs * grid_mod.forward_values(grid, density)
    mesh_force = RealField(grid, grid_mod.inverse_values(grid, coeffs))
    return _interpolate(mesh_force, indices, weights)


def particle_step(
    state: ParticleState,
    grad_v_table: Optional[RealField],
    grad_w_table: Optional[RealField],
    dt: float,
    temperature: float = 1.0,
) -> ParticleState:
    """One Euler-Maruyama step.

    X <- X - (grad V(X) + (grad W * mu_N)(X)) dt + sqrt(2 dt temperature) xi,
    reduced modulo 1. A missing table stands for a vanishing potential.

    Raises:
        InvalidConfigurationError: dt <= 0.
        GridError: the tables live on tori of another dimension.
        NonFiniteError: a position became NaN or infinite.
    """
    if not dt > 0:
        raise InvalidConfigurationError("dt must be > 0, got " + repr(dt))
    positions = state.positions
    drift = np.zeros_like(positions)

    for table in (grad_v_table, grad_w_table):
        if table is not None and table.channels != state.dim:
            raise GridError(
                "force table has " + str(table.channels)
                + " channels, particles live on T^" + str(state.dim)
            )

    if grad_v_table is not None:
        indices, weights = _cell_weights(grad_v_table.grid, positions)
        drift += _interpolate(grad_v_table, indices, weights)
    if grad_w_table is not None:
        drift += interaction_force(positions, grad_w_table)

    moved = positions - drift * dt
    if temperature > 0:
        rng = _generator(state.seed, _NOISE_STREAM, state.step_index)
        moved += np.sqrt(2.0 * dt * temperature) * rng.standard_normal(positions.shape)

    _check_positions(moved, state.step_index + 1)
    return replace(state, positions=np.mod(moved, 1.0), step_index=state.step_index + 1)


def fejer_weights(grid: TorusGrid, bandwidth_modes: int) -> np.ndarray:
    """prod_j max(0, 1 - |k_j| / (B + 1)) over the grid's modes.

    The Nyquist index stands for both k = M/2 and k = -M/2 and carries their
    summed weight, so the sampled kernel is the nonnegative Fejér kernel.
    """
    half = grid.points_per_axis // 2
    k = grid.mode_numbers
    one_axis = np.maximum(0.0, 1.0 - np.abs(k) / (bandwidth_modes + 1.0))
    one_axis = np.where(k == -half, 2.0 * one_axis, one_axis)
    result = np.ones(grid.shape)
    for axis in range(grid.dim):
        shape = [1] * grid.dim
        shape[axis] = grid.points_per_axis
        result = result * one_axis.reshape(shape)
    return result


def _smooth(grid: TorusGrid, counts: np.ndarray, bandwidth_modes: int) -> DensityField:
    """Fejér-smoothed density of a nonnegative count histogram."""
    density = counts / (counts.sum() * grid.spacing**grid.dim)
    coeffs = grid_mod.forward_values(grid, density[np.newaxis])
    weights = fejer_weights(grid, bandwidth_modes)
    values = grid_mod.inverse_values(grid, coeffs * weights)
    # Roundoff only; the kernel is nonnegative.
    values = np.maximum(values, 0.0)
    return DensityField(grid, values / np.mean(values))


def histogram(state: ParticleState, grid: TorusGrid) -> np.ndarray:
    """Particle counts of the cells centred at the nodes."""
    if grid.dim != state.dim:
        raise GridError("grid and particles live on tori of different dimension")
    nodes = np.floor(state.positions * grid.points_per_axis + 0.5).astype(np.int64)
    nodes %= grid.points_per_axis
    flat = np.ravel_multi_index(tuple(nodes.T), grid.shape)
    return np.bincount(flat, minlength=grid.size).reshape(grid.shape).astype(float)


def empirical_density(
    state: ParticleState, grid: TorusGrid, bandwidth_modes: int
) -> EmpiricalDensity:
    """Histogram of 'state' on 'grid' smoothed by the Fejér kernel of
    order 'bandwidth_modes'. The result is nonnegative with unit mass.

    Raises:
        GridError: bandwidth_modes outside [1, M/2].
    """
    if not 1 <= bandwidth_modes <= grid.points_per_axis // 2:
        raise GridError(
            "bandwidth_modes must lie in [1, M/2], got " + repr(bandwidth_modes)
        )
    return EmpiricalDensity(
        _smooth(grid, histogram(state, grid), bandwidth_modes),
        bandwidth_modes,
        state.n_particles,
    )


@dataclass
class ParticleRun:
    """Output of run_particles().

    Attributes:
        state: Final particle state.
        densities: (t, smoothed density) at the logging cadence, first and
            last state included.
        reports: Free energy of every logged smoothed density; the
            dissipation is not evaluated.
        invariant: Smoothed histogram accumulated over t >= average_from,
            or None when averaging is off.
    """

    state: ParticleState
    densities: List[Tuple[float, EmpiricalDensity]] = field(default_factory=list)
    reports: List[EnergyReport] = field(default_factory=list)
    invariant: Optional[EmpiricalDensity] = None


def force_tables(
    potential: RealField, mult: Optional[KernelMultiplier], smoothing_modes: int
) -> Tuple[RealField, Optional[RealField]]:
    """grad V and the truncated grad W table; None for a vanishing W."""
    grad_v = grid_mod.gradient(potential)
    if mult is None or not np.any(mult.w_hat):
        return grad_v, None
    return grad_v, potentials.gradient_table(mult, smoothing_modes)


def run_particles(
    state: ParticleState,
    potential: RealField,
    mult: Optional[KernelMultiplier],
    cfg: ParticleConfig,
) -> ParticleRun:
    """Advance 'state' with fixed steps cfg.dt until cfg.t_end.

    Every cfg.log_every steps the smoothed density and its free energy are
    recorded. With cfg.average_from set, histograms of all later steps are
    summed into the invariant-measure estimate.
    """
    grid = potential.grid
    if mult is not None:
        grid_mod.check_same_grid(potential, mult)
    grad_v, grad_w = force_tables(potential, mult, cfg.smoothing_modes)
    energy_mult = mult
    if energy_mult is None:
        energy_mult = KernelMultiplier(grid, np.zeros(grid.shape))

    run = ParticleRun(state=state)

    def record(t: float, current: ParticleState) -> None:
        smoothed = empirical_density(current, grid, cfg.bandwidth_modes)
        run.densities.append((t, smoothed))
        report = energy.free_energy(smoothed.base, potential, energy_mult, t)
        run.reports.append(report)
        logger.debug("t=%.6g F_smoothed=%.12g", t, report.energy)

    n_steps = int(np.ceil(cfg.t_end / cfg.dt - 1e-9))
    logger.info(
        "Particle run: N=%d, dt=%g, %d steps, temperature=%g",
        state.n_particles,
        cfg.dt,
        n_steps,
        cfg.temperature,
    )
    record(0.0, state)

    accumulated = np.zeros(grid.shape)
    averaged = 0
    for step in range(1, n_steps + 1):
        state = particle_step(state, grad_v, grad_w, cfg.dt, cfg.temperature)
        t = step * cfg.dt
        if cfg.average_from is not None and t >= cfg.average_from:
            accumulated += histogram(state, grid)
            averaged += 1
        if step % cfg.log_every == 0 or step == n_steps:
            record(t, state)

    run.state = state
    if averaged:
        run.invariant = EmpiricalDensity(
            _smooth(grid, accumulated, cfg.bandwidth_modes),
            cfg.bandwidth_modes,
            state.n_particles,
        )
        logger.info("Invariant histogram averaged over %d steps", averaged)
    return run
