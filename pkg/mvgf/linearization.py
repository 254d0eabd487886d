# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""Linearization of the gradient flow at a stationary density rho0.

Tangent vectors are gradient fields xi = grad(phi). The ingredients are

* the weighted Poisson operator phi -> div(rho0 grad phi),
* the rho0-weighted projection of vector fields onto gradients,
  P X = grad phi with div(rho0 grad phi) = div(rho0 X),
* the Hessian-type operator

      L xi = P(-div(rho0 grad xi) / rho0 + Hess(V) xi + K[xi]),
      K[xi] = A xi - Hess(W) * (rho0 xi),   A = Hess(W) * rho0,

  symmetric in the inner product <a, b>_rho0 = mean(rho0 a.b).

Second-derivative multipliers (2 pi i k_a)(2 pi i k_b) w_hat(k) are real and
even, so they keep the Nyquist wavenumber; real-space second derivatives of
W are never formed.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg
from scipy.sparse import linalg as sparse_linalg

from mvgf import energy
from mvgf import grid as grid_mod
from mvgf import settings
from mvgf.exceptions import (
    FormatError,
    GridError,
    NumericalError,
    PoissonSolveError,
    SpectrumSizeError,
)
from mvgf.grid import DensityField, RealField, TorusGrid
from mvgf.potentials import KernelMultiplier

logger = logging.getLogger(__name__)

FOUR_PI_SQUARED = 4.0 * np.pi**2


class GradientVectorField:
    """A gradient field grad(phi) together with its mean-zero potential."""

    def __init__(self, potential: RealField):
        if not potential.is_scalar:
            raise GridError("a gradient field needs a scalar potential")
        self.potential = RealField(potential.grid, potential.values - potential.mean())
        self.field = grid_mod.gradient(self.potential)

    @property
    def grid(self) -> TorusGrid:
        return self.potential.grid


def weighted_divergence(rho0: DensityField, phi: np.ndarray) -> np.ndarray:
    """div(rho0 grad phi) for a (1, *shape) array."""
    grid = rho0.grid
    grad = grid_mod.inverse_values(
        grid, grid_mod.gradient_coeffs(grid, grid_mod.forward_values(grid, phi))
    )
    flux = grid_mod.forward_values(grid, rho0.scalar * grad)
    return grid_mod.inverse_values(grid, grid_mod.divergence_coeffs(grid, flux))


def _solvable_modes(grid: TorusGrid) -> np.ndarray:
    """Modes outside the kernel of the spectral weighted Laplacian."""
    return np.sum(grid.derivative_wavenumbers**2, axis=0) > 0


def weighted_poisson_solve(rho0: DensityField, f: RealField) -> RealField:
    """Solve div(rho0 grad phi) = f for mean-zero phi.

    Preconditioned conjugate gradients on -div(rho0 grad .), with the
    constant-coefficient inverse Laplacian scaled by 1 / mean(rho0) as
    preconditioner. Content of 'f' in the null modes of the spectral
    operator (k = 0 and the all-Nyquist corner) is ignored.

    Raises:
        FormatError: 'f' is not mean-zero.
        PoissonSolveError: the iteration stagnated.
    """
    grid = grid_mod.check_same_grid(rho0, f)
    scale = max(1.0, float(np.max(np.abs(f.values))))
    if abs(f.mean()) > 1e-12 * scale:
        raise FormatError("right-hand side has mean " + repr(f.mean()))

    solvable = _solvable_modes(grid)
    symbol = np.where(
        solvable, FOUR_PI_SQUARED * np.sum(grid.derivative_wavenumbers**2, axis=0), 1.0
    )

    def project(values: np.ndarray) -> np.ndarray:
        coeffs = grid_mod.forward_values(grid, values) * solvable
        return grid_mod.inverse_values(grid, coeffs)

    rhs = -project(f.values).ravel()
    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0.0:
        return RealField(grid, np.zeros(grid.shape))

    shape = (1,) + grid.shape
    mean_rho = rho0.mass

    def matvec(x: np.ndarray) -> np.ndarray:
        return -weighted_divergence(rho0, x.reshape(shape)).ravel()

    def precondition(r: np.ndarray) -> np.ndarray:
        coeffs = grid_mod.forward_values(grid, r.reshape(shape)) * solvable
        return grid_mod.inverse_values(grid, coeffs / (symbol * mean_rho)).ravel()

    operator = sparse_linalg.LinearOperator((grid.size, grid.size), matvec=matvec)
    preconditioner = sparse_linalg.LinearOperator(
        (grid.size, grid.size), matvec=precondition
    )

    solution, info = sparse_linalg.cg(
        operator,
        rhs,
        rtol=settings.POISSON_RTOL,
        maxiter=settings.POISSON_MAX_ITERATIONS,
        M=preconditioner,
    )
    phi = project(solution.reshape(shape))
    residual = float(np.linalg.norm(matvec(phi.ravel()) - rhs)) / rhs_norm
    if info != 0:
        raise PoissonSolveError("weighted Poisson solve", max(info, 0), residual)

    logger.debug("Weighted Poisson solve: relative residual %.3g", residual)
    return RealField(grid, phi)


def helmholtz_project(rho0: DensityField, x: RealField) -> GradientVectorField:
    """rho0-weighted projection of the vector field 'x' onto gradients."""
    grid = grid_mod.check_same_grid(rho0, x)
    flux = grid_mod.forward_values(grid, rho0.scalar * x.values)
    rhs = grid_mod.inverse_values(grid, grid_mod.divergence_coeffs(grid, flux))
    return GradientVectorField(weighted_poisson_solve(rho0, RealField(grid, rhs)))


def _hessian_multipliers(grid: TorusGrid) -> np.ndarray:
    """(2 pi i k_a)(2 pi i k_b) on the mode grid, shaped (dim, dim, *shape)."""
    k = grid.wavenumbers
    return -FOUR_PI_SQUARED * k[:, np.newaxis] * k[np.newaxis, :]


def weighted_inner(rho0: DensityField, a: np.ndarray, b: np.ndarray) -> float:
    """<a, b>_rho0 = mean(rho0 a.b) for (dim, *shape) arrays."""
    return float(np.mean(rho0.scalar * np.sum(a * b, axis=0)))


class LinearOperatorHandle:
    """Matrix-free Hessian-type operator at 'base_state'.

    Attributes:
        base_state: The density rho0, normally stationary.
        potential: V sampled on the grid.
        mult: Fourier multiplier of W.
    """

    def __init__(
        self,
        base_state: DensityField,
        potential: RealField,
        mult: KernelMultiplier,
    ):
        grid = grid_mod.check_same_grid(base_state, potential, mult)
        self.base_state = base_state
        self.potential = potential
        self.mult = mult
        self.grid = grid

        symbols = _hessian_multipliers(grid)
        self._w_hessian = symbols * mult.w_hat
        v_coeffs = grid_mod.forward_values(grid, potential.values)[0]
        rho_coeffs = grid_mod.forward_values(grid, base_state.values)[0]
        self._v_hessian = grid_mod.inverse_values(grid, symbols * v_coeffs)
        self._a_matrix = grid_mod.inverse_values(grid, self._w_hessian * rho_coeffs)

        stationarity = energy.diagnose(base_state, potential, mult).dissipation
        logger.debug("Linearizing at a state with I = %.3g", stationarity)
        self.stationarity = stationarity

    def unprojected(self, xi: np.ndarray) -> np.ndarray:
        """-div(rho0 grad xi) / rho0 + Hess(V) xi + K[xi], before projection."""
        grid = self.grid
        rho = self.base_state.scalar

        coeffs = grid_mod.forward_values(grid, xi)
        diffusion = np.empty_like(xi)
        for d in range(grid.dim):
            grad = grid_mod.inverse_values(
                grid, grid_mod.gradient_coeffs(grid, coeffs[d : d + 1])
            )
            flux = grid_mod.forward_values(grid, rho * grad)
            diffusion[d] = grid_mod.inverse_values(
                grid, grid_mod.divergence_coeffs(grid, flux)
            )[0]

        weighted = grid_mod.forward_values(grid, rho * xi)
        convolved = grid_mod.inverse_values(
            grid, np.einsum("ab...,b...->a...", self._w_hessian, weighted)
        )
        local = np.einsum("ab...,b...->a...", self._v_hessian + self._a_matrix, xi)

        return -diffusion / rho + local - convolved

    def apply(self, xi: GradientVectorField) -> GradientVectorField:
        grid_mod.check_same_grid(self.base_state, xi.field)
        z = RealField(self.grid, self.unprojected(xi.field.values))
        return helmholtz_project(self.base_state, z)


def hessian_apply(
    h: LinearOperatorHandle, xi: GradientVectorField
) -> GradientVectorField:
    """L xi."""
    return h.apply(xi)


def hessian_form(
    h: LinearOperatorHandle, xi1: GradientVectorField, xi2: GradientVectorField
) -> float:
    """<L xi1, xi2>_rho0."""
    return weighted_inner(h.base_state, h.apply(xi1).field.values, xi2.field.values)


def half_lattice(dim: int, max_mode: int) -> List[Tuple[int, ...]]:
    """Modes 0 < |k|_inf <= max_mode with first nonzero component > 0.

    Sorted by |k|^2, then lexicographically.
    """
    span = range(-max_mode, max_mode + 1)
    if dim == 1:
        points = [(k,) for k in span]
    else:
        points = [(k1, k2) for k1 in span for k2 in span]
    half = [k for k in points if any(k) and next(c for c in k if c) > 0]
    return sorted(half, key=lambda k: (sum(c * c for c in k), k))


def _basis_potentials(
    grid: TorusGrid, max_mode: int
) -> Tuple[List[Tuple[Tuple[int, ...], str]], np.ndarray]:
    labels = []
    potentials = []
    for k in half_lattice(grid.dim, max_mode):
        phase = 2.0 * np.pi * sum(kj * xj for kj, xj in zip(k, grid.nodes))
        labels.append((k, "cos"))
        potentials.append(np.cos(phase))
        labels.append((k, "sin"))
        potentials.append(np.sin(phase))
    return labels, np.asarray(potentials)


@dataclass(frozen=True)
class SpectrumReport:
    """Eigenvalues of L on gradients of Fourier potentials up to max_mode.

    Attributes:
        basis_size: Number D of basis potentials.
        eigenvalues: Ascending eigenvalues.
        kernel_dim: Count of eigenvalues with |lambda| < kernel_tol.
        kernel_tol: Threshold relative to the spectral radius.
        basis: (k, 'cos' | 'sin') label of every basis potential.
        raw_matrix: Entries <L xi_a, xi_b>_rho0 in the raw basis.
        gram_matrix: Entries <xi_a, xi_b>_rho0.
    """

    basis_size: int
    eigenvalues: Tuple[float, ...]
    kernel_dim: int
    kernel_tol: float
    basis: Tuple[Tuple[Tuple[int, ...], str], ...] = ()
    raw_matrix: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    gram_matrix: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    @property
    def spectral_radius(self) -> float:
        return max(abs(v) for v in self.eigenvalues)


def basis_size(dim: int, max_mode: int) -> int:
    return (2 * max_mode + 1) ** dim - 1


def assemble_spectrum(
    h: LinearOperatorHandle,
    max_mode: int,
    kernel_tol_factor: float = settings.KERNEL_TOL_FACTOR,
) -> SpectrumReport:
    """Dense Galerkin matrix of L and its eigenvalues.

    The basis xi_a = grad(phi_a) with phi_a the real Fourier potentials
    cos(2 pi k.x), sin(2 pi k.x) for k in a half lattice is orthonormalized
    in the rho0-weighted inner product by a Cholesky factor of its Gram
    matrix before the symmetric eigensolve.

    Raises:
        SpectrumSizeError: the basis has more than MAX_SPECTRUM_BASIS
            elements.
        GridError: max_mode reaches the Nyquist wavenumber.
    """
    grid = h.grid
    size = basis_size(grid.dim, max_mode)
    if size > settings.MAX_SPECTRUM_BASIS:
        raise SpectrumSizeError(
            "basis of " + str(size) + " potentials exceeds "
            + str(settings.MAX_SPECTRUM_BASIS)
        )
    if max_mode >= grid.points_per_axis // 2:
        raise GridError(
            "max_mode " + str(max_mode) + " needs more than "
            + str(grid.points_per_axis) + " points per axis"
        )

    labels, potentials = _basis_potentials(grid, max_mode)
    xis = np.stack(
        [grid_mod.gradient(RealField(grid, phi)).values for phi in potentials]
    )
    images = np.stack([h.unprojected(xi) for xi in xis])

    rho = h.base_state.scalar
    flat_xis = (xis * np.sqrt(rho)).reshape(size, -1)
    flat_images = (images * np.sqrt(rho)).reshape(size, -1)
    raw = flat_images @ flat_xis.T / grid.size
    gram = flat_xis @ flat_xis.T / grid.size

    asymmetry = float(np.max(np.abs(raw - raw.T)))
    logger.debug("Spectrum basis D=%d, raw asymmetry %.3g", size, asymmetry)
    raw = 0.5 * (raw + raw.T)

    factor = linalg.cholesky(gram, lower=True)
    left = linalg.solve_triangular(factor, raw, lower=True)
    orthonormal = linalg.solve_triangular(factor, left.T, lower=True).T
    orthonormal = 0.5 * (orthonormal + orthonormal.T)
    eigenvalues = np.sort(linalg.eigh(orthonormal, eigvals_only=True))

    radius = float(np.max(np.abs(eigenvalues)))
    kernel_tol = kernel_tol_factor * radius
    kernel_dim = int(np.sum(np.abs(eigenvalues) < kernel_tol))
    logger.info(
        "Spectrum: D=%d, min eigenvalue %.10g, kernel dimension %d (tol %.3g)",
        size,
        float(eigenvalues[0]),
        kernel_dim,
        kernel_tol,
    )
    return SpectrumReport(
        basis_size=size,
        eigenvalues=tuple(float(v) for v in eigenvalues),
        kernel_dim=kernel_dim,
        kernel_tol=kernel_tol,
        basis=tuple(labels),
        raw_matrix=raw,
        gram_matrix=gram,
    )


def uniform_state_eigenvalues(mult: KernelMultiplier, max_mode: int) -> np.ndarray:
    """4 pi^2 |k|^2 (1 + w_hat(k)) over the assemble_spectrum basis, sorted.

    These are the exact eigenvalues of L at rho0 = 1 with V = 0.
    """
    values = []
    for k in half_lattice(mult.grid.dim, max_mode):
        value = FOUR_PI_SQUARED * sum(c * c for c in k) * (1.0 + mult[k])
        values.extend([value, value])
    return np.sort(np.asarray(values))


def basis_field(
    grid: TorusGrid, k: Tuple[int, ...], kind: str = "cos"
) -> GradientVectorField:
    """grad of cos(2 pi k.x) or sin(2 pi k.x)."""
    phase = 2.0 * np.pi * sum(kj * xj for kj, xj in zip(k, grid.nodes))
    values = np.cos(phase) if kind == "cos" else np.sin(phase)
    return GradientVectorField(RealField(grid, values))


def _nonuniform_phases(grid: TorusGrid, points: np.ndarray) -> np.ndarray:
    """exp(2 pi i k.y) for every grid mode k and every point y."""
    modes = grid.wavenumbers.reshape(grid.dim, -1)
    count = modes.shape[1] * points.shape[1]
    if count > settings.MAX_NONUNIFORM_SUM:
        raise NumericalError(
            "non-uniform Fourier sum of " + str(count) + " terms is too large"
        )
    return np.exp(2j * np.pi * (modes.T @ points))


def pullback_energy(h: LinearOperatorHandle, x: RealField) -> float:
    """F((id + X)_# rho0) for a small displacement field X.

    The pushed density is never formed: the entropy uses the Jacobian
    determinant of id + X, and the V and W parts evaluate the
    trigonometric interpolants of V and W at the displaced nodes.

    Raises:
        NumericalError: id + X is not orientation preserving.
    """
    grid = grid_mod.check_same_grid(h.base_state, x)
    if x.channels != grid.dim:
        raise GridError("displacement needs " + str(grid.dim) + " channels")
    rho = h.base_state.scalar

    jacobian = np.stack(
        [
            grid_mod.gradient(RealField(grid, x.values[a])).values
            for a in range(grid.dim)
        ]
    )  # jacobian[a, b] = d_b X_a
    if grid.dim == 1:
        determinant = 1.0 + jacobian[0, 0]
    else:
        determinant = (1.0 + jacobian[0, 0]) * (1.0 + jacobian[1, 1]) - (
            jacobian[0, 1] * jacobian[1, 0]
        )
    if float(determinant.min()) <= 0.0:
        raise NumericalError("displacement folds the torus")

    u_part = float(np.mean(rho * energy.safe_log(h.base_state))) - float(
        np.mean(rho * np.log(determinant))
    )

    moved = (grid.nodes + x.values).reshape(grid.dim, -1)
    phases = _nonuniform_phases(grid, moved)
    weights = rho.ravel() / grid.size

    v_coeffs = grid_mod.forward_values(grid, h.potential.values)[0].ravel()
    v_part = 0.0
    if np.any(v_coeffs):
        v_at_moved = (v_coeffs @ phases).real
        v_part = float(np.dot(weights, v_at_moved))

    w_hat = h.mult.w_hat.ravel()
    moments = phases @ weights
    w_part = 0.5 * float(np.sum(w_hat * np.abs(moments) ** 2))

    return u_part + v_part + w_part


def pullback_second_variation(
    h: LinearOperatorHandle,
    xi1: GradientVectorField,
    xi2: GradientVectorField,
    step: float = 1e-3,
) -> float:
    """Central-difference d^2/ds dt of pullback_energy(s xi1 + t xi2) at 0."""
    a = xi1.field.values
    b = xi2.field.values

    def energy_at(s: float, t: float) -> float:
        return pullback_energy(h, RealField(h.grid, s * a + t * b))

    return (
        energy_at(step, step)
        - energy_at(step, -step)
        - energy_at(-step, step)
        + energy_at(-step, -step)
    ) / (4.0 * step * step)


def rayleigh_quotient(h: LinearOperatorHandle, xi: GradientVectorField) -> float:
    """<L xi, xi>_rho0 / <xi, xi>_rho0."""
    norm = weighted_inner(h.base_state, xi.field.values, xi.field.values)
    if norm == 0.0:
        return math.nan
    return hessian_form(h, xi, xi) / norm
