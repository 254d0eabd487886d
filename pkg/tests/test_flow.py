#!/usr/bin/env python

# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""
<Program Name>
  test_flow.py

<Purpose>
  Unit test for 'flow.py': the time stepper, whole runs and the stationary
  fixed point iteration.
"""

import math
import sys
import unittest

import numpy as np

from mvgf import energy, flow
from mvgf import grid as grid_mod
from mvgf import potentials
from mvgf.config import FlowConfig, StationaryConfig
from mvgf.exceptions import FormatError, NonConvergenceError, StepFailureError
from mvgf.flow import Stepper, TerminalStatus, TrajectoryLog
from mvgf.grid import DensityField, RealField
from mvgf.potentials import ConfinementSpec, InteractionSpec
from tests import utils


def cosine_density(grid, amplitude, k=(1,)):
    phase = 2 * np.pi * sum(kj * xj for kj, xj in zip(k, grid.nodes))
    return DensityField(grid, 1.0 + amplitude * np.cos(phase))


def confinement(grid, modes=()):
    spec = ConfinementSpec(kind="cosine_sum" if modes else "zero", modes=modes)
    return potentials.build_confinement(spec, grid)


def multiplier(grid, **kwargs):
    return potentials.kernel_multiplier(InteractionSpec(**kwargs), grid)


def random_modes(rng, dim, scale):
    """Up to three cosine modes with |k_j| <= 3 and amplitudes below 'scale'."""
    modes = []
    for _ in range(int(rng.integers(1, 4))):
        k = tuple(int(c) for c in rng.integers(-3, 4, size=dim))
        if any(k):
            modes.append((k, float(rng.uniform(-scale, scale))))
    return modes or [((1,) * dim, scale)]


class TestStep(unittest.TestCase):
    def test_heat_step_is_exact(self):
        grid = grid_mod.create_grid(1, 32)
        rho = cosine_density(grid, 0.3, (3,))
        _, grad_v = confinement(grid)
        dt = 1e-3
        stepped = flow.step(rho, grad_v, multiplier(grid), dt)
        decay = math.exp(-4 * math.pi**2 * 9 * dt)
        expected = 1.0 + 0.3 * decay * np.cos(6 * np.pi * grid.nodes[0])
        np.testing.assert_allclose(stepped.scalar, expected, atol=1e-14)

    def test_uniform_state_is_stationary_without_confinement(self):
        grid = grid_mod.create_grid(2, 16)
        rho = DensityField.uniform(grid)
        _, grad_v = confinement(grid)
        mult = multiplier(grid, kind="yukawa_green", chi=30.0, alpha=2.0)
        stepped = flow.step(rho, grad_v, mult, 1e-2)
        np.testing.assert_allclose(stepped.scalar, 1.0, atol=1e-14)

    def test_modes_above_two_thirds_only_diffuse(self):
        grid = grid_mod.create_grid(1, 32)
        _, grad_v = confinement(grid, [((1,), 1.0)])
        mult = multiplier(grid, kind="cosine_sum", modes=[((1,), -0.5)])
        dt = 1e-3
        base = cosine_density(grid, 0.3)
        high = 0.2 * np.cos(2 * np.pi * 14 * grid.nodes[0])
        rho = DensityField(grid, base.scalar + high)
        decayed = math.exp(-4 * math.pi**2 * 196 * dt) * high

        stepped = flow.step(rho, grad_v, mult, dt)
        reference = flow.step(base, grad_v, mult, dt)
        np.testing.assert_allclose(
            stepped.scalar - reference.scalar, decayed, atol=1e-13
        )

        # Without the mask the high mode couples to grad V.
        stepped = flow.step(rho, grad_v, mult, dt, dealias=False)
        reference = flow.step(base, grad_v, mult, dt, dealias=False)
        coupling = np.max(np.abs(stepped.scalar - reference.scalar - decayed))
        self.assertGreater(float(coupling), 1e-6)

    def test_mass_is_conserved(self):
        grid = grid_mod.create_grid(2, 32)
        rho = utils.random_density(grid, seed=5)
        _, grad_v = confinement(grid, [((1, 0), 1.0), ((1, 1), 0.5)])
        mult = multiplier(grid, kind="newtonian_green", chi=10.0)
        stepper = Stepper(grad_v, mult)
        for _ in range(10):
            rho = stepper.step(rho, 1e-3)
        self.assertAlmostEqual(rho.mass, 1.0, places=14)

    def test_second_order_in_time(self):
        grid = grid_mod.create_grid(1, 16)
        rho0 = DensityField.uniform(grid)
        _, grad_v = confinement(grid, [((1,), 1.0)])
        mult = multiplier(grid, kind="cosine_sum", modes=[((1,), -0.5)])
        stepper = Stepper(grad_v, mult)

        def solve(dt, t_end=0.1):
            rho = rho0
            for _ in range(int(round(t_end / dt))):
                rho = stepper.step(rho, dt)
            return rho.scalar

        reference = solve(1e-4)
        coarse = np.max(np.abs(solve(0.02) - reference))
        fine = np.max(np.abs(solve(0.01) - reference))
        self.assertGreater(coarse / fine, 3.0)
        self.assertLess(coarse / fine, 5.0)


class TestRun(unittest.TestCase):
    def test_heat_flow_converges_to_uniform(self):
        grid = grid_mod.create_grid(1, 32)
        rng = np.random.default_rng(11)
        rho0 = DensityField(grid, 0.2 + rng.random(32)).normalized()
        potential, _ = confinement(grid)
        cfg = FlowConfig(dt=1e-3, t_end=3.0, log_every=5, conv_tol=1e-20)
        log = flow.run(rho0, potential, multiplier(grid), cfg)

        self.assertEqual(log.terminal_status, TerminalStatus.CONVERGED)
        coeffs = grid_mod.forward_transform(log.final_state).coeffs[0]
        self.assertLess(float(np.max(np.abs(coeffs[1:]))), 1e-10)
        self.assertAlmostEqual(log.final_report.energy, 0.0, places=10)
        self.assertEqual(log.snapshots[0][0], 0.0)

        summary = log.summary()
        self.assertEqual(summary["status"], "converged")
        log.raise_for_status()

    def test_energy_dissipation_identity(self):
        grid = grid_mod.create_grid(1, 64)
        rho0 = cosine_density(grid, 0.5)
        potential, _ = confinement(grid, [((1,), 1.0), ((2,), 0.3)])
        mult = multiplier(grid, kind="yukawa_green", chi=5.0, alpha=1.0)
        dt = 1e-3
        cfg = FlowConfig(dt=dt, t_end=0.5, log_every=1)
        log = flow.run(rho0, potential, mult, cfg)

        self.assertLess(float(np.max(flow.dissipation_defects(log))), 10 * dt)
        self.assertEqual(flow.monotonicity_violations(log, 10 * dt), 0)
        for report in log.reports:
            self.assertAlmostEqual(report.mass, 1.0, places=12)

    def test_dissipation_defect_is_first_order(self):
        grid = grid_mod.create_grid(1, 64)
        potential, _ = confinement(grid, [((1,), 1.0)])
        mult = multiplier(grid)
        rho0 = cosine_density(grid, 0.3)

        def worst_defect(dt, quadrature):
            cfg = FlowConfig(
                dt=dt, t_end=0.05, log_every=1, adapt_cfl=10.0, conv_tol=1e-30
            )
            log = flow.run(rho0, potential, mult, cfg)
            return float(np.max(flow.dissipation_defects(log, quadrature)))

        ratio = worst_defect(1e-3, "left") / worst_defect(5e-4, "left")
        self.assertGreater(ratio, 1.6)
        self.assertLess(ratio, 2.4)

        ratio = worst_defect(1e-3, "trapezoid") / worst_defect(5e-4, "trapezoid")
        self.assertGreater(ratio, 3.0)

        self.assertRaises(
            FormatError, flow.dissipation_defects, TrajectoryLog(), "midpoint"
        )

    def test_smooth_interactions_never_blow_up(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            dim = 1 + seed % 2
            grid = grid_mod.create_grid(dim, 32 if dim == 1 else 16)
            potential, _ = confinement(grid, random_modes(rng, dim, 1.0))
            mult = multiplier(
                grid, kind="cosine_sum", modes=random_modes(rng, dim, 2.0)
            )
            rho0 = utils.random_density(grid, seed=seed, amplitude=0.5)
            cfg = FlowConfig(dt=1e-3, t_end=0.5, log_every=10)
            log = flow.run(rho0, potential, mult, cfg)

            self.assertIsNot(
                log.terminal_status, TerminalStatus.BLOWUP_DETECTED, seed
            )
            self.assertIsNot(log.terminal_status, TerminalStatus.STEP_FAILURE, seed)
            for report in log.reports:
                self.assertLess(abs(report.mass - 1.0), 1e-12, seed)

    def test_subcritical_keller_segel_converges_to_uniform(self):
        grid = grid_mod.create_grid(2, 32)
        rho0 = cosine_density(grid, 0.1, (1, 0))
        potential, _ = confinement(grid)
        mult = multiplier(grid, kind="newtonian_green", chi=10.0)
        cfg = FlowConfig(dt=2e-3, t_end=2.0, log_every=10)
        log = flow.run(rho0, potential, mult, cfg)

        self.assertEqual(log.terminal_status, TerminalStatus.CONVERGED)
        np.testing.assert_allclose(log.final_state.scalar, 1.0, atol=1e-5)

    def test_supercritical_keller_segel_aggregates(self):
        grid = grid_mod.create_grid(2, 32)
        rho0 = cosine_density(grid, 0.1, (1, 0))
        potential, _ = confinement(grid)
        mult = multiplier(grid, kind="newtonian_green", chi=80.0)
        cfg = FlowConfig(dt=1e-3, t_end=2.0, log_every=10, blowup_linf=8.0)
        log = flow.run(rho0, potential, mult, cfg)

        self.assertIn(
            log.terminal_status,
            (TerminalStatus.BLOWUP_DETECTED, TerminalStatus.CONVERGED),
        )
        # The uniform state is unstable: the density concentrates either way.
        self.assertGreater(log.final_report.rho_max, 1.5)
        if log.terminal_status is TerminalStatus.BLOWUP_DETECTED:
            self.assertGreater(log.final_report.rho_max, 8.0)
            self.assertLess(log.final_report.t, cfg.t_end)

    def test_snapshot_cadence(self):
        grid = grid_mod.create_grid(1, 16)
        potential, _ = confinement(grid, [((1,), 1.0)])
        cfg = FlowConfig(
            dt=1e-3,
            t_end=0.1,
            log_every=10,
            snapshot_every=25,
            adapt_cfl=10.0,
            conv_tol=1e-30,
        )
        log = flow.run(DensityField.uniform(grid), potential, multiplier(grid), cfg)
        times = [t for t, _ in log.snapshots]
        self.assertEqual(len(times), 5)
        np.testing.assert_allclose(times, [0.0, 0.025, 0.05, 0.075, 0.1])
        self.assertEqual(len(log.reports), 11)

    def test_stored_step_failure(self):
        log = TrajectoryLog()
        log.failure = StepFailureError("negative density", 0.5)
        log.terminal_status = TerminalStatus.STEP_FAILURE
        with self.assertRaises(StepFailureError) as context:
            log.raise_for_status()
        self.assertEqual(context.exception.time, 0.5)


class TestStationary(unittest.TestCase):
    def test_trivial_potentials(self):
        grid = grid_mod.create_grid(1, 16)
        potential, _ = confinement(grid)
        rho, report = flow.stationary_fixed_point(
            cosine_density(grid, 0.4), potential, multiplier(grid)
        )
        # The first update lands on the uniform state; the second one has a
        # zero increment and confirms it.
        self.assertEqual(report.iterations, 2)
        self.assertEqual(report.increment, 0.0)
        np.testing.assert_allclose(rho.scalar, 1.0, atol=1e-15)

    def test_gibbs_state(self):
        grid = grid_mod.create_grid(1, 32)
        potential, _ = confinement(grid, [((1,), 1.0)])
        mult = multiplier(grid)
        rho, _ = flow.stationary_fixed_point(
            DensityField.uniform(grid), potential, mult
        )
        gibbs = flow.gibbs_state(potential)
        np.testing.assert_allclose(rho.scalar, gibbs.scalar, atol=1e-14)
        self.assertLess(energy.diagnose(rho, potential, mult).dissipation, 1e-20)

    def test_subcritical_keller_segel(self):
        grid = grid_mod.create_grid(2, 16)
        potential, _ = confinement(grid)
        mult = multiplier(grid, kind="newtonian_green", chi=10.0)
        rho, _ = flow.stationary_fixed_point(
            cosine_density(grid, 0.2, (1, 1)), potential, mult
        )
        np.testing.assert_allclose(rho.scalar, 1.0, atol=1e-10)

    def test_nonuniform_state(self):
        # W = -3 cos(2 pi z): the uniform state is unstable since
        # 1 + w_hat(1) = -0.5 < 0.
        grid = grid_mod.create_grid(1, 64)
        potential, _ = confinement(grid)
        mult = multiplier(grid, kind="cosine_sum", modes=[((1,), -3.0)])
        cfg = StationaryConfig(damping=0.5, max_iter=5000, tol=1e-13)
        rho, report = flow.stationary_fixed_point(
            cosine_density(grid, 0.1), potential, mult, cfg
        )
        self.assertGreater(float(rho.scalar.max() - rho.scalar.min()), 0.5)
        self.assertLess(report.residual, 1e-8)
        self.assertAlmostEqual(rho.mass, 1.0, places=12)

    def test_non_convergence(self):
        grid = grid_mod.create_grid(1, 64)
        potential, _ = confinement(grid)
        mult = multiplier(grid, kind="cosine_sum", modes=[((1,), -3.0)])
        cfg = StationaryConfig(damping=0.1, max_iter=3)
        with self.assertRaises(NonConvergenceError) as context:
            flow.stationary_fixed_point(
                cosine_density(grid, 0.1), potential, mult, cfg
            )
        self.assertEqual(context.exception.iterations, 3)


# Run the unit tests.
if __name__ == "__main__":
    utils.configure_test_logging(sys.argv)
    unittest.main()
