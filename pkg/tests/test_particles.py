#!/usr/bin/env python

# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""
<Program Name>
  test_particles.py

<Purpose>
  Unit test for 'particles.py': sampling, the Euler-Maruyama step, the
  gridded interaction force and smoothed empirical densities.
"""

import sys
import unittest

import numpy as np
from scipy import stats

from mvgf import flow
from mvgf import grid as grid_mod
from mvgf import metrics, particles, potentials
from mvgf.config import FlowConfig, ParticleConfig
from mvgf.exceptions import (
    GridError,
    InvalidConfigurationError,
    NonFiniteError,
    NumericalError,
)
from mvgf.grid import DensityField, RealField
from mvgf.particles import ParticleState
from mvgf.potentials import ConfinementSpec, InteractionSpec
from tests import utils


def cosine_confinement(grid, amplitude=1.0):
    modes = [((1,) + (0,) * (grid.dim - 1), amplitude)]
    return potentials.build_confinement(
        ConfinementSpec(kind="cosine_sum", modes=modes), grid
    )


def cosine_kernel(grid, amplitude):
    return potentials.kernel_multiplier(
        InteractionSpec(kind="cosine_sum", modes=[((1,), amplitude)]), grid
    )


def fejer_smoothed(rho, bandwidth_modes):
    grid = rho.grid
    coeffs = grid_mod.forward_values(grid, rho.values)
    weights = particles.fejer_weights(grid, bandwidth_modes)
    return DensityField(grid, grid_mod.inverse_values(grid, coeffs * weights))


class TestSampling(unittest.TestCase):
    def test_reproducible_streams(self):
        first = particles.init_particles(100, 2, seed=7)
        second = particles.init_particles(100, 2, seed=7)
        other = particles.init_particles(100, 2, seed=8)
        np.testing.assert_array_equal(first.positions, second.positions)
        self.assertFalse(np.array_equal(first.positions, other.positions))
        self.assertEqual(first.n_particles, 100)
        self.assertEqual(first.dim, 2)
        self.assertTrue(np.all((first.positions >= 0) & (first.positions < 1)))

    def test_inverse_cdf_matches_cell_masses(self):
        grid = grid_mod.create_grid(1, 16)
        rho = DensityField(grid, 1.0 + 0.5 * np.cos(2 * np.pi * grid.nodes[0]))
        n = 20000
        state = particles.init_particles(n, 1, seed=1, initial=rho)
        counts = particles.histogram(state, grid)
        expected = n * rho.scalar / rho.scalar.sum()
        self.assertGreater(stats.chisquare(counts, expected).pvalue, 0.01)

    def test_rejection_matches_cell_masses(self):
        grid = grid_mod.create_grid(2, 8)
        rho = utils.random_density(grid, seed=4, amplitude=0.5)
        n = 20000
        state = particles.init_particles(n, 2, seed=2, initial=rho)
        self.assertEqual(state.positions.shape, (n, 2))
        counts = particles.histogram(state, grid).ravel()
        expected = n * rho.scalar.ravel() / rho.scalar.sum()
        self.assertGreater(stats.chisquare(counts, expected).pvalue, 0.01)

    def test_sampling_errors(self):
        self.assertRaises(
            InvalidConfigurationError, particles.init_particles, 0, 1, 1
        )
        grid = grid_mod.create_grid(2, 16)
        self.assertRaises(
            GridError,
            particles.init_particles,
            10,
            1,
            1,
            DensityField.uniform(grid),
        )

        spike = np.zeros(grid.shape)
        spike[3, 4] = grid.size
        self.assertRaises(
            NumericalError,
            particles.init_particles,
            10,
            2,
            1,
            DensityField(grid, spike),
        )


class TestStep(unittest.TestCase):
    def test_noise_variance(self):
        n, dt = 20000, 1e-4
        state = ParticleState(positions=np.full((n, 1), 0.5), seed=3)
        moved = particles.particle_step(state, None, None, dt)
        self.assertEqual(moved.step_index, 1)
        variance = float(np.var(moved.positions[:, 0] - 0.5))
        self.assertAlmostEqual(variance / (2 * dt), 1.0, delta=0.05)

    def test_free_particles_move_independently(self):
        # V = W = 0: two particles of one run get uncorrelated increments.
        runs, steps, dt = 2000, 10, 1e-4
        displacements = np.empty((runs, 2))
        for seed in range(runs):
            state = ParticleState(positions=np.full((2, 1), 0.5), seed=seed)
            for _ in range(steps):
                state = particles.particle_step(state, None, None, dt)
            displacements[seed] = state.positions[:, 0] - 0.5

        self.assertAlmostEqual(
            float(np.var(displacements)) / (2 * dt * steps), 1.0, delta=0.1
        )
        correlation = float(np.corrcoef(displacements[:, 0], displacements[:, 1])[0, 1])
        self.assertLess(abs(correlation), 4.0 / np.sqrt(runs))

        again = particles.particle_step(state, None, None, dt)
        np.testing.assert_array_equal(moved.positions, again.positions)

    def test_zero_temperature_descends_confinement(self):
        grid = grid_mod.create_grid(1, 64)
        _, grad_v = cosine_confinement(grid)
        state = ParticleState(positions=np.array([[0.3]]), seed=0)
        for _ in range(2000):
            state = particles.particle_step(state, grad_v, None, 1e-3, 0.0)
        # cos(2 pi x) is minimal at x = 1/2.
        self.assertAlmostEqual(float(state.positions[0, 0]), 0.5, delta=1e-4)

    def test_two_particle_repulsion(self):
        grid = grid_mod.create_grid(1, 64)
        table = potentials.gradient_table(cosine_kernel(grid, 1.0), 8)
        state = ParticleState(positions=np.array([[0.4], [0.6]]), seed=0)
        for _ in range(3000):
            state = particles.particle_step(state, None, table, 1e-3, 0.0)
        separation = abs(float(state.positions[1, 0] - state.positions[0, 0]))
        self.assertAlmostEqual(separation, 0.5, delta=1e-4)

    def test_self_force_vanishes(self):
        grid = grid_mod.create_grid(2, 32)
        mult = potentials.kernel_multiplier(
            InteractionSpec(kind="yukawa_green", chi=5.0, alpha=2.0), grid
        )
        table = potentials.gradient_table(mult, 8)
        for position in ([0.13, 0.77], [0.5, 0.5], [0.031, 0.402]):
            force = particles.interaction_force(np.array([position]), table)
            np.testing.assert_allclose(force, 0.0, atol=1e-12)

    def test_exchangeable(self):
        grid = grid_mod.create_grid(2, 32)
        mult = potentials.kernel_multiplier(
            InteractionSpec(kind="newtonian_green", chi=3.0), grid
        )
        table = potentials.gradient_table(mult, 8)
        positions = particles.init_particles(50, 2, seed=5).positions
        permutation = np.random.default_rng(0).permutation(50)
        np.testing.assert_allclose(
            particles.interaction_force(positions[permutation], table),
            particles.interaction_force(positions, table)[permutation],
            atol=1e-10,
        )

    def test_step_errors(self):
        state = ParticleState(positions=np.full((4, 1), 0.5), seed=0)
        self.assertRaises(
            InvalidConfigurationError, particles.particle_step, state, None, None, 0.0
        )

        _, grad_v = cosine_confinement(grid_mod.create_grid(2, 16))
        self.assertRaises(
            GridError, particles.particle_step, state, grad_v, None, 1e-3
        )

        broken = ParticleState(positions=np.array([[0.5], [np.nan]]), seed=0)
        with self.assertRaises(NonFiniteError) as context:
            particles.particle_step(broken, None, None, 1e-3)
        self.assertEqual(context.exception.location, (1, 0))


class TestEmpiricalDensity(unittest.TestCase):
    def test_smoothed_histogram(self):
        grid = grid_mod.create_grid(2, 16)
        state = particles.init_particles(500, 2, seed=9)
        smoothed = particles.empirical_density(state, grid, 4)
        self.assertAlmostEqual(smoothed.base.mass, 1.0, places=12)
        self.assertGreaterEqual(float(smoothed.base.scalar.min()), 0.0)
        self.assertEqual(smoothed.n_particles, 500)

        self.assertRaises(GridError, particles.empirical_density, state, grid, 0)
        self.assertRaises(GridError, particles.empirical_density, state, grid, 9)

    def test_fejer_kernel_is_nonnegative(self):
        grid = grid_mod.create_grid(1, 32)
        weights = particles.fejer_weights(grid, 16)
        self.assertEqual(weights[0], 1.0)
        kernel = np.real(np.fft.ifft(weights)) * grid.size
        self.assertGreaterEqual(float(kernel.min()), -1e-12)


class TestRunParticles(unittest.TestCase):
    def test_invariant_measure_is_gibbs(self):
        grid = grid_mod.create_grid(1, 64)
        potential, _ = cosine_confinement(grid)
        cfg = ParticleConfig(
            n_particles=20000,
            dt=1e-3,
            t_end=3.0,
            bandwidth_modes=32,
            log_every=1000,
            average_from=0.5,
        )
        state = particles.init_particles(cfg.n_particles, 1, seed=11)
        run = particles.run_particles(state, potential, None, cfg)

        np.testing.assert_allclose(
            [t for t, _ in run.densities], [0.0, 1.0, 2.0, 3.0]
        )
        self.assertEqual(len(run.reports), 4)
        gibbs = fejer_smoothed(flow.gibbs_state(potential), cfg.bandwidth_modes)
        self.assertLess(metrics.l1_distance(run.invariant.base, gibbs), 0.05)

    def test_agrees_with_flow(self):
        grid = grid_mod.create_grid(1, 32)
        potential, _ = cosine_confinement(grid)
        mult = cosine_kernel(grid, -0.5)
        cfg = ParticleConfig(
            n_particles=20000, dt=1e-3, t_end=0.5, bandwidth_modes=16, log_every=100
        )
        state = particles.init_particles(cfg.n_particles, 1, seed=12)
        run = particles.run_particles(state, potential, mult, cfg)
        self.assertIsNone(run.invariant)
        self.assertEqual(run.state.step_index, 500)

        log = flow.run(
            DensityField.uniform(grid),
            potential,
            mult,
            FlowConfig(dt=1e-3, t_end=0.5, log_every=100),
        )
        reference = fejer_smoothed(log.final_state, cfg.bandwidth_modes)
        _, final = run.densities[-1]
        self.assertLess(metrics.l1_distance(final.base, reference), 0.1)

    def test_force_tables(self):
        grid = grid_mod.create_grid(1, 16)
        potential = RealField(grid, np.zeros(16))
        zero = potentials.kernel_multiplier(InteractionSpec(), grid)
        grad_v, grad_w = particles.force_tables(potential, zero, 4)
        self.assertIsNone(grad_w)
        self.assertEqual(grad_v.channels, 1)
        _, grad_w = particles.force_tables(potential, cosine_kernel(grid, 1.0), 4)
        self.assertEqual(grad_w.channels, 1)


# Run the unit tests.
if __name__ == "__main__":
    utils.configure_test_logging(sys.argv)
    unittest.main()
