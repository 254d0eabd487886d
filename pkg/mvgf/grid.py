# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""Periodic grids on the unit torus and spectral differential operators.

Conventions:

* Node i sits at x_i = i * h with h = 1 / M along each axis.
* A field f has Fourier coefficients c(k) with f(x) = sum_k c(k) e^{2 pi i k.x},
  computed as fftn(f) / M**dim. Modes are stored in FFT order; the mode
  number of index j is fftfreq(M, 1/M)[j], i.e. the set {-M/2, ..., M/2-1}.
* Field values are arrays shaped (channels, *grid.shape).

The Nyquist wavenumber -M/2 is dropped from first-derivative symbols, which
keeps derivatives of real fields real. Even-order symbols keep it.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple

import numpy as np
from scipy import fft

from mvgf import settings
from mvgf.exceptions import (
    ChannelError,
    GridError,
    GridMismatchError,
    NonFiniteError,
    PositivityError,
)

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid with 'points_per_axis' nodes per axis on T^dim.

    Attributes:
        dim: Dimension of the torus, 1 or 2.
        points_per_axis: Number of nodes M along each axis.
    """

    dim: int
    points_per_axis: int

    @property
    def spacing(self) -> float:
        return 1.0 / self.points_per_axis

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @property
    def size(self) -> int:
        return self.points_per_axis**self.dim

    @property
    def axes(self) -> Tuple[int, ...]:
        """The trailing spatial axes of a (..., *shape) array."""
        return tuple(range(-self.dim, 0))

    @cached_property
    def mode_numbers(self) -> np.ndarray:
        """Integer wavenumbers along one axis, in FFT order."""
        m = self.points_per_axis
        return np.rint(fft.fftfreq(m, 1.0 / m)).astype(int)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Array (dim, *shape) with k_j of every mode."""
        return np.stack(
            np.meshgrid(*([self.mode_numbers.astype(float)] * self.dim), indexing="ij")
        )

    @cached_property
    def derivative_wavenumbers(self) -> np.ndarray:
        """Like 'wavenumbers' with the Nyquist value replaced by 0."""
        k = self.wavenumbers.copy()
        k[k == -(self.points_per_axis // 2)] = 0.0
        return k

    @cached_property
    def k_squared(self) -> np.ndarray:
        """|k|^2 on the mode grid, Nyquist included."""
        return np.sum(self.wavenumbers**2, axis=0)

    @cached_property
    def laplacian_symbol(self) -> np.ndarray:
        return -(TWO_PI**2) * self.k_squared

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Two-thirds rule: keep modes with |k_j| <= M/3 on every axis."""
        cutoff = self.points_per_axis // 3
        return np.all(np.abs(self.wavenumbers) <= cutoff, axis=0)

    @cached_property
    def nodes(self) -> np.ndarray:
        """Array (dim, *shape) of node coordinates in [0, 1)."""
        x = np.arange(self.points_per_axis) * self.spacing
        return np.stack(np.meshgrid(*([x] * self.dim), indexing="ij"))

    def mode_index(self, k: Tuple[int, ...]) -> Tuple[int, ...]:
        """Array index of lattice point 'k' (taken modulo M)."""
        if len(k) != self.dim:
            raise GridError(
                "mode " + repr(tuple(k)) + " does not have " + str(self.dim)
                + " components"
            )
        return tuple(int(kj) % self.points_per_axis for kj in k)

    def cutoff_mask(self, max_mode: int) -> np.ndarray:
        """Modes with |k|_inf <= max_mode."""
        return np.all(np.abs(self.wavenumbers) <= max_mode, axis=0)

    def reflect(self, values: np.ndarray) -> np.ndarray:
        """Return a(-k) for a mode array 'a' whose last dim axes are modes."""
        axes = tuple(range(values.ndim - self.dim, values.ndim))
        return np.roll(np.flip(values, axis=axes), 1, axis=axes)


def create_grid(dim: int, points_per_axis: int) -> TorusGrid:
    """Create a grid on the unit torus.

    Raises:
        GridError: unsupported dimension, odd M, or M below the minimum.
    """
    if dim not in (1, 2):
        raise GridError("unsupported dimension " + repr(dim))
    if points_per_axis < settings.MIN_POINTS_PER_AXIS:
        raise GridError(
            "need at least " + str(settings.MIN_POINTS_PER_AXIS)
            + " points per axis, got " + repr(points_per_axis)
        )
    if points_per_axis % 2:
        raise GridError("points per axis must be even, got " + repr(points_per_axis))
    if points_per_axis & (points_per_axis - 1):
        logger.debug("%d points per axis is not a power of two", points_per_axis)

    return TorusGrid(dim, points_per_axis)


def _check_finite(values: np.ndarray, what: str) -> None:
    finite = np.isfinite(values)
    if not finite.all():
        location = np.unravel_index(int(np.argmin(finite)), values.shape)
        raise NonFiniteError(what, tuple(int(i) for i in location))


class RealField:
    """Real samples of a scalar or vector field on a grid.

    Attributes:
        grid: The grid the field lives on.
        values: Array shaped (channels, *grid.shape).
    """

    def __init__(self, grid: TorusGrid, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.shape == grid.shape:
            values = values[np.newaxis]
        if values.ndim != grid.dim + 1 or values.shape[1:] != grid.shape:
            raise GridError(
                "values of shape " + repr(values.shape)
                + " do not fit a grid of shape " + repr(grid.shape)
            )
        if values.shape[0] not in (1, grid.dim):
            raise ChannelError(
                repr(values.shape[0]) + " channels on a "
                + str(grid.dim) + "-D grid"
            )
        _check_finite(values, type(self).__name__)

        self.grid = grid
        self.values = values

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def is_scalar(self) -> bool:
        return self.channels == 1

    @property
    def scalar(self) -> np.ndarray:
        """The single channel of a scalar field, shaped like the grid."""
        if not self.is_scalar:
            raise ChannelError("expected a scalar field")
        return self.values[0]

    def mean(self) -> float:
        return float(np.mean(self.values))

    def __repr__(self) -> str:
        return (
            type(self).__name__ + "(dim=" + str(self.grid.dim) + ", M="
            + str(self.grid.points_per_axis) + ", channels="
            + str(self.channels) + ")"
        )


class DensityField(RealField):
    """A scalar field with nonnegative values (up to a small tolerance).

    The mass is the discrete mean of the values, i.e. the Riemann sum of the
    density over the unit torus.
    """

    def __init__(self, grid: TorusGrid, values: np.ndarray):
        super().__init__(grid, values)
        if not self.is_scalar:
            raise ChannelError("a density must be a scalar field")

        lowest = float(self.values.min())
        if lowest < -settings.NEGATIVE_TOLERANCE:
            raise PositivityError(
                "density value " + repr(lowest) + " below -"
                + repr(settings.NEGATIVE_TOLERANCE)
            )

    @property
    def mass(self) -> float:
        return self.mean()

    def normalized(self) -> "DensityField":
        return DensityField(self.grid, self.values / self.mass)

    @classmethod
    def uniform(cls, grid: TorusGrid) -> "DensityField":
        return cls(grid, np.ones(grid.shape))


class SpectralField:
    """Fourier coefficients of a field, shaped (channels, *grid.shape)."""

    def __init__(self, grid: TorusGrid, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape == grid.shape:
            coeffs = coeffs[np.newaxis]
        if coeffs.shape[1:] != grid.shape:
            raise GridError(
                "coefficients of shape " + repr(coeffs.shape)
                + " do not fit a grid of shape " + repr(grid.shape)
            )
        self.grid = grid
        self.coeffs = coeffs

    @property
    def channels(self) -> int:
        return self.coeffs.shape[0]

    def coeff(self, k: Tuple[int, ...], channel: int = 0) -> complex:
        return complex(self.coeffs[(channel,) + self.grid.mode_index(k)])

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return bool(
            np.allclose(self.coeffs, np.conj(self.grid.reflect(self.coeffs)), atol=atol)
        )


def check_same_grid(*fields) -> TorusGrid:
    """Return the common grid of 'fields'.

    Raises:
        GridMismatchError: fields live on different grids.
    """
    grid = fields[0].grid
    for other in fields[1:]:
        if other.grid != grid:
            raise GridMismatchError(
                "grid " + repr(other.grid) + " does not match " + repr(grid)
            )
    return grid


def forward_values(grid: TorusGrid, values: np.ndarray) -> np.ndarray:
    """Fourier coefficients of a (channels, *shape) array."""
    return fft.fftn(values, axes=grid.axes) / grid.size


def inverse_values(grid: TorusGrid, coeffs: np.ndarray) -> np.ndarray:
    """Real part of the field with coefficients 'coeffs'."""
    return fft.ifftn(coeffs * grid.size, axes=grid.axes).real


def forward_transform(f: RealField) -> SpectralField:
    """Fourier coefficients of 'f' under the e^{2 pi i k.x} convention."""
    return SpectralField(f.grid, forward_values(f.grid, f.values))


def inverse_transform(c: SpectralField) -> RealField:
    """Inverse of forward_transform. The imaginary part is discarded."""
    return RealField(c.grid, inverse_values(c.grid, c.coeffs))


def gradient_coeffs(grid: TorusGrid, coeffs: np.ndarray) -> np.ndarray:
    """Gradient of scalar coefficients (1, *shape) -> (dim, *shape)."""
    return (2j * np.pi) * grid.derivative_wavenumbers * coeffs


def divergence_coeffs(grid: TorusGrid, coeffs: np.ndarray) -> np.ndarray:
    """Divergence of vector coefficients (dim, *shape) -> (1, *shape)."""
    symbols = (2j * np.pi) * grid.derivative_wavenumbers
    return np.sum(symbols * coeffs, axis=0, keepdims=True)


def spectral_gradient(f: SpectralField) -> SpectralField:
    """Component j has coefficients 2 pi i k_j c(k).

    Raises:
        ChannelError: 'f' is not a scalar field.
    """
    if f.channels != 1:
        raise ChannelError("gradient of a " + str(f.channels) + "-channel field")
    return SpectralField(f.grid, gradient_coeffs(f.grid, f.coeffs))


def spectral_divergence(v: SpectralField) -> SpectralField:
    """Sum over j of 2 pi i k_j c_j(k).

    Raises:
        ChannelError: the channel count differs from the grid dimension.
    """
    if v.channels != v.grid.dim:
        raise ChannelError(
            "divergence of a " + str(v.channels) + "-channel field on a "
            + str(v.grid.dim) + "-D grid"
        )
    return SpectralField(v.grid, divergence_coeffs(v.grid, v.coeffs))


def gradient(f: RealField) -> RealField:
    """Real-space convenience wrapper around spectral_gradient."""
    return inverse_transform(spectral_gradient(forward_transform(f)))


def divergence(v: RealField) -> RealField:
    """Real-space convenience wrapper around spectral_divergence."""
    return inverse_transform(spectral_divergence(forward_transform(v)))


def laplacian(f: RealField) -> RealField:
    """Spectral Laplacian with symbol -4 pi^2 |k|^2."""
    coeffs = forward_values(f.grid, f.values)
    return RealField(f.grid, inverse_values(f.grid, f.grid.laplacian_symbol * coeffs))


def curl(v: RealField) -> RealField:
    """Scalar curl d1 v2 - d2 v1 of a 2-D vector field."""
    if v.grid.dim != 2 or v.channels != 2:
        raise ChannelError("curl needs a 2-channel field on a 2-D grid")
    grid = v.grid
    coeffs = forward_values(grid, v.values)
    k = grid.derivative_wavenumbers
    c = (2j * np.pi) * (k[0] * coeffs[1] - k[1] * coeffs[0])
    return RealField(grid, inverse_values(grid, c[np.newaxis]))


def inner(
    f: RealField, g: RealField, weight: Optional[RealField] = None
) -> float:
    """Discrete L2 inner product mean(f . g [* weight]) over the torus."""
    check_same_grid(f, g)
    product = np.sum(f.values * g.values, axis=0)
    if weight is not None:
        product = product * weight.scalar
    return float(np.mean(product))


def spectral_inner(f: RealField, g: RealField) -> float:
    """Parseval form sum_k f^(k) conj(g^(k)) of inner(f, g)."""
    check_same_grid(f, g)
    fc = forward_values(f.grid, f.values)
    gc = forward_values(g.grid, g.values)
    return float(np.sum(fc * np.conj(gc)).real)


def smooth_random_field(
    grid: TorusGrid,
    rng: np.random.Generator,
    max_mode: int = 4,
    channels: int = 1,
    amplitude: float = 1.0,
) -> RealField:
    """Random real trigonometric polynomial with modes |k|_inf <= max_mode.

    Mode 0 is left out, so every channel has mean zero.
    """
    shape = (channels,) + grid.shape
    noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    mask = grid.cutoff_mask(min(max_mode, grid.points_per_axis // 2 - 1))
    coeffs = noise * mask
    coeffs = 0.5 * (coeffs + np.conj(grid.reflect(coeffs)))
    coeffs[(slice(None),) + (0,) * grid.dim] = 0.0
    return RealField(grid, amplitude * inverse_values(grid, coeffs))
