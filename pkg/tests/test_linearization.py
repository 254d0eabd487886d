#!/usr/bin/env python

# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""
<Program Name>
  test_linearization.py

<Purpose>
  Unit test for 'linearization.py': the weighted Poisson solver, the
  weighted projection onto gradients, the Hessian-type operator and its
  Galerkin spectrum.
"""

import math
import sys
import unittest

import numpy as np

from mvgf import energy, flow
from mvgf import grid as grid_mod
from mvgf import linearization, potentials
from mvgf.config import StationaryConfig
from mvgf.exceptions import (
    FormatError,
    GridError,
    NumericalError,
    SpectrumSizeError,
)
from mvgf.grid import DensityField, RealField
from mvgf.linearization import GradientVectorField, LinearOperatorHandle
from mvgf.potentials import ConfinementSpec, InteractionSpec
from tests import utils

FOUR_PI_SQUARED = 4.0 * math.pi**2


def zero_potential(grid):
    return RealField(grid, np.zeros(grid.shape))


def multiplier(grid, **kwargs):
    return potentials.kernel_multiplier(InteractionSpec(**kwargs), grid)


def random_gradient(grid, seed):
    rng = np.random.default_rng(seed)
    return GradientVectorField(grid_mod.smooth_random_field(grid, rng, max_mode=3))


def gibbs_handle(grid):
    potential, _ = potentials.build_confinement(
        ConfinementSpec(
            kind="cosine_sum",
            modes=[((1,) * grid.dim, 0.8), ((2,) + (0,) * (grid.dim - 1), -0.3)],
        ),
        grid,
    )
    mult = multiplier(grid)
    return LinearOperatorHandle(flow.gibbs_state(potential), potential, mult)


class TestWeightedPoisson(unittest.TestCase):
    def test_constant_coefficient(self):
        grid = grid_mod.create_grid(1, 32)
        x = grid.nodes[0]
        f = RealField(grid, np.cos(2 * np.pi * x))
        phi = linearization.weighted_poisson_solve(DensityField.uniform(grid), f)
        np.testing.assert_allclose(
            phi.scalar, -np.cos(2 * np.pi * x) / FOUR_PI_SQUARED, atol=1e-12
        )

    def test_zero_right_hand_side(self):
        grid = grid_mod.create_grid(2, 16)
        phi = linearization.weighted_poisson_solve(
            utils.random_density(grid), zero_potential(grid)
        )
        np.testing.assert_array_equal(phi.scalar, 0.0)

    def test_variable_coefficient_residual(self):
        grid = grid_mod.create_grid(2, 32)
        rng = np.random.default_rng(8)
        rho0 = DensityField(
            grid, 1.25 + 0.75 * np.tanh(grid_mod.smooth_random_field(grid, rng).scalar)
        )
        f = grid_mod.smooth_random_field(grid, rng, max_mode=5)
        phi = linearization.weighted_poisson_solve(rho0, f)
        residual = linearization.weighted_divergence(rho0, phi.values)[0] - f.scalar
        self.assertLess(
            float(np.max(np.abs(residual))), 1e-9 * float(np.max(np.abs(f.scalar)))
        )
        self.assertAlmostEqual(phi.mean(), 0.0, places=12)

    def test_right_hand_side_must_be_mean_zero(self):
        grid = grid_mod.create_grid(1, 16)
        self.assertRaises(
            FormatError,
            linearization.weighted_poisson_solve,
            DensityField.uniform(grid),
            RealField(grid, np.ones(16)),
        )


class TestProjection(unittest.TestCase):
    def test_gradients_are_kept(self):
        grid = grid_mod.create_grid(2, 16)
        xi = random_gradient(grid, 1)
        uniform = DensityField.uniform(grid)
        projected = linearization.helmholtz_project(uniform, xi.field)
        np.testing.assert_allclose(
            projected.field.values, xi.field.values, atol=1e-10
        )

    def test_rotated_gradient_is_removed(self):
        grid = grid_mod.create_grid(2, 16)
        grad = random_gradient(grid, 2).field.values
        rotated = RealField(grid, np.stack([-grad[1], grad[0]]))
        projected = linearization.helmholtz_project(DensityField.uniform(grid), rotated)
        np.testing.assert_allclose(projected.field.values, 0.0, atol=1e-10)

    def test_idempotent_and_self_adjoint(self):
        grid = grid_mod.create_grid(2, 16)
        rho0 = utils.random_density(grid, seed=6, amplitude=0.1)
        rng = np.random.default_rng(3)
        x = grid_mod.smooth_random_field(grid, rng, channels=2)
        y = grid_mod.smooth_random_field(grid, rng, channels=2)

        px = linearization.helmholtz_project(rho0, x)
        ppx = linearization.helmholtz_project(rho0, px.field)
        np.testing.assert_allclose(ppx.field.values, px.field.values, atol=1e-9)

        py = linearization.helmholtz_project(rho0, y)
        left = linearization.weighted_inner(rho0, px.field.values, y.values)
        right = linearization.weighted_inner(rho0, x.values, py.field.values)
        self.assertAlmostEqual(left, right, delta=1e-9 * max(1.0, abs(left)))


class TestOperator(unittest.TestCase):
    def test_uniform_state_diagonalization(self):
        grid = grid_mod.create_grid(2, 16)
        mult = multiplier(grid, kind="newtonian_green", chi=10.0)
        h = LinearOperatorHandle(DensityField.uniform(grid), zero_potential(grid), mult)
        for k in ((1, 0), (1, 1), (2, -1)):
            xi = linearization.basis_field(grid, k, "sin")
            image = linearization.hessian_apply(h, xi)
            factor = FOUR_PI_SQUARED * sum(c * c for c in k) * (1.0 + mult[k])
            np.testing.assert_allclose(
                image.field.values, factor * xi.field.values, atol=1e-8
            )
            self.assertAlmostEqual(
                linearization.rayleigh_quotient(h, xi), factor, places=8
            )

    def test_symmetry_at_gibbs_state(self):
        grid = grid_mod.create_grid(2, 16)
        h = gibbs_handle(grid)
        self.assertLess(h.stationarity, 1e-20)
        xi1, xi2 = random_gradient(grid, 4), random_gradient(grid, 5)
        a = linearization.hessian_form(h, xi1, xi2)
        b = linearization.hessian_form(h, xi2, xi1)
        self.assertAlmostEqual(a, b, delta=1e-8 * max(1.0, abs(a)))

    def test_translation_is_a_kernel_direction(self):
        # Without confinement W = -3 cos(2 pi z) has a nonuniform stationary
        # state; its translates are stationary too.
        grid = grid_mod.create_grid(1, 64)
        potential = zero_potential(grid)
        mult = multiplier(grid, kind="cosine_sum", modes=[((1,), -3.0)])
        start = DensityField(grid, 1.0 + 0.1 * np.cos(2 * np.pi * grid.nodes[0]))
        rho, _ = flow.stationary_fixed_point(
            start, potential, mult, StationaryConfig(damping=0.5, tol=1e-13)
        )
        self.assertGreater(float(rho.scalar.max() - rho.scalar.min()), 0.5)
        h = LinearOperatorHandle(rho, potential, mult)

        # Velocity field whose transport moves rho by d rho / dx.
        shift = linearization.helmholtz_project(rho, RealField(grid, np.ones(64)))
        self.assertGreater(
            linearization.weighted_inner(
                rho, shift.field.values, shift.field.values
            ),
            1e-3,
        )
        self.assertLess(abs(linearization.rayleigh_quotient(h, shift)), 1e-4)

        other = linearization.basis_field(grid, (2,), "cos")
        self.assertGreater(linearization.rayleigh_quotient(h, other), 1.0)

    def test_grid_mismatch(self):
        h = gibbs_handle(grid_mod.create_grid(1, 16))
        xi = random_gradient(grid_mod.create_grid(1, 32), 0)
        self.assertRaises(GridError, linearization.hessian_apply, h, xi)


class TestSpectrum(unittest.TestCase):
    def test_heat_spectrum(self):
        grid = grid_mod.create_grid(1, 16)
        h = LinearOperatorHandle(
            DensityField.uniform(grid), zero_potential(grid), multiplier(grid)
        )
        report = linearization.assemble_spectrum(h, 2)
        self.assertEqual(report.basis_size, 4)
        np.testing.assert_allclose(
            report.eigenvalues,
            np.array([1.0, 1.0, 4.0, 4.0]) * FOUR_PI_SQUARED,
            rtol=1e-10,
        )
        self.assertEqual(report.kernel_dim, 0)
        self.assertEqual(report.basis[0], ((1,), "cos"))

    def test_keller_segel_uniform_state(self):
        grid = grid_mod.create_grid(2, 16)
        mult = multiplier(grid, kind="newtonian_green", chi=10.0)
        h = LinearOperatorHandle(DensityField.uniform(grid), zero_potential(grid), mult)
        report = linearization.assemble_spectrum(h, 3)
        self.assertEqual(report.basis_size, 48)
        self.assertAlmostEqual(report.eigenvalues[0], FOUR_PI_SQUARED - 10.0, places=8)
        np.testing.assert_allclose(
            report.eigenvalues,
            linearization.uniform_state_eigenvalues(mult, 3),
            rtol=1e-9,
        )

    def test_keller_segel_threshold_has_kernel(self):
        grid = grid_mod.create_grid(2, 16)
        mult = multiplier(grid, kind="newtonian_green", chi=FOUR_PI_SQUARED)
        h = LinearOperatorHandle(DensityField.uniform(grid), zero_potential(grid), mult)
        report = linearization.assemble_spectrum(h, 2)
        self.assertGreaterEqual(report.kernel_dim, 2)
        self.assertEqual(report.kernel_dim, 4)

    def test_matches_second_variation_of_energy(self):
        grid = grid_mod.create_grid(1, 32)
        potential, _ = potentials.build_confinement(
            ConfinementSpec(kind="cosine_sum", modes=[((1,), 0.6)]), grid
        )
        mult = multiplier(grid, kind="cosine_sum", modes=[((1,), 0.4), ((2,), -0.2)])
        rho0, _ = flow.stationary_fixed_point(
            flow.gibbs_state(potential), potential, mult
        )
        h = LinearOperatorHandle(rho0, potential, mult)
        report = linearization.assemble_spectrum(h, 2)

        scale = float(np.max(np.abs(report.raw_matrix)))
        for a, (ka, kind_a) in enumerate(report.basis):
            for b, (kb, kind_b) in enumerate(report.basis):
                estimate = linearization.pullback_second_variation(
                    h,
                    linearization.basis_field(grid, ka, kind_a),
                    linearization.basis_field(grid, kb, kind_b),
                )
                self.assertAlmostEqual(
                    estimate, report.raw_matrix[a, b], delta=1e-4 * scale
                )

    def test_pullback_energy(self):
        grid = grid_mod.create_grid(2, 16)
        handle = gibbs_handle(grid)
        h = LinearOperatorHandle(
            handle.base_state,
            handle.potential,
            multiplier(grid, kind="newtonian_green", chi=2.0),
        )
        still = RealField(grid, np.zeros((2,) + grid.shape))
        report = energy.free_energy(h.base_state, h.potential, h.mult)
        self.assertAlmostEqual(
            linearization.pullback_energy(h, still), report.energy, places=12
        )

        line = grid_mod.create_grid(1, 32)
        h = gibbs_handle(line)
        folding = RealField(line, 0.3 * np.sin(2 * np.pi * line.nodes[0]))
        self.assertRaises(NumericalError, linearization.pullback_energy, h, folding)
        two_channels = RealField(line, np.zeros((2, 32)))
        self.assertRaises(
            GridError, linearization.pullback_energy, h, two_channels
        )

    def test_basis_limits(self):
        grid = grid_mod.create_grid(2, 16)
        h = LinearOperatorHandle(
            DensityField.uniform(grid), zero_potential(grid), multiplier(grid)
        )
        self.assertRaises(SpectrumSizeError, linearization.assemble_spectrum, h, 32)
        self.assertRaises(GridError, linearization.assemble_spectrum, h, 8)
        self.assertEqual(linearization.basis_size(2, 3), 48)


# Run the unit tests.
if __name__ == "__main__":
    utils.configure_test_logging(sys.argv)
    unittest.main()
