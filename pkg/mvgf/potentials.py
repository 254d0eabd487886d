# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""Confinement potentials V and interaction kernels W.

A kernel enters the flow only through convolution, so every interaction is
represented by its Fourier multiplier w_hat: the coefficients of W itself
under the grid convention, with (W * rho)^(k) = w_hat(k) rho^(k).

Sign convention: Keller-Segel attraction is W = chi G with chi > 0 and G
the zero-mean Green function of the Laplacian (or of Laplacian - alpha), so
w_hat(k) = -chi / (4 pi^2 |k|^2 [+ alpha]) < 0. For a single mode,
rho = 1 + eps cos(2 pi k.x) gives W * rho = eps w_hat(k) cos(2 pi k.x), a well
where rho is large, and the transport term div(rho grad(W * rho)) moves
mass into it: the drift +chi rho grad c with -Laplacian c = rho - 1.

The standing assumptions are checked on construction and named in errors:

* "analytic V": V is analytic (all builtin confinements are trigonometric).
* "even W": W is centrally symmetric, so w_hat is real and even.
* "Coulomb bound": W has at most a Coulomb-type singularity; for radial
  powers d(0, z)^gamma this means gamma >= 2 - n.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from numpy.polynomial import legendre

from mvgf import grid as grid_mod
from mvgf.exceptions import GridError, GridMismatchError, KernelSpecError
from mvgf.grid import RealField, TorusGrid

logger = logging.getLogger(__name__)

Mode = Tuple[Tuple[int, ...], float]

CONFINEMENT_KINDS = ("zero", "cosine_sum", "tabulated")
INTERACTION_KINDS = (
    "zero",
    "fourier_multiplier",
    "newtonian_green",
    "yukawa_green",
    "radial_power",
    "cosine_sum",
    "green_sum",
)


def _normalize_modes(modes) -> Tuple[Mode, ...]:
    return tuple(
        (tuple(int(kj) for kj in k), float(amplitude)) for k, amplitude in modes
    )


@dataclass(frozen=True)
class ConfinementSpec:
    """Declarative description of V.

    Attributes:
        kind: 'zero', 'cosine_sum' or 'tabulated'.
        modes: ((k, a_k), ...) for V = sum a_k cos(2 pi k.x).
        path: Snapshot file holding V for 'tabulated'.
        table: Sampled V for 'tabulated', loaded from 'path' or given
            directly.
    """

    kind: str = "zero"
    modes: Tuple[Mode, ...] = ()
    path: Optional[str] = None
    table: Optional[RealField] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in CONFINEMENT_KINDS:
            raise KernelSpecError("unknown confinement kind " + repr(self.kind))
        object.__setattr__(self, "modes", _normalize_modes(self.modes))
        if any(not math.isfinite(a) for _, a in self.modes):
            raise KernelSpecError("non-finite amplitude", "analytic V")
        if self.kind == "tabulated" and self.table is None and self.path is None:
            raise KernelSpecError("tabulated confinement without a table or path")


@dataclass(frozen=True)
class InteractionSpec:
    """Declarative description of W.

    Attributes:
        kind: One of INTERACTION_KINDS.
        chi: Strength of the Green-function kernels.
        alpha: Yukawa screening parameter, > 0.
        terms: ((L_i, gamma_i), ...) for W = sum L_i d(0, z)^gamma_i.
        modes: ((k, a_k), ...): W = sum a_k cos(2 pi k.z) for 'cosine_sum',
            explicit w_hat(k) = w_hat(-k) = a_k for 'fourier_multiplier'.
        species: ((chi_i, alpha_i), ...) for 'green_sum', one Green
            function per chemical; alpha_i = 0 is the zero-mean Newtonian
            one.
    """

    kind: str = "zero"
    chi: float = 0.0
    alpha: float = 0.0
    terms: Tuple[Tuple[float, float], ...] = ()
    modes: Tuple[Mode, ...] = ()
    species: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in INTERACTION_KINDS:
            raise KernelSpecError("unknown interaction kind " + repr(self.kind))
        object.__setattr__(self, "modes", _normalize_modes(self.modes))
        object.__setattr__(
            self, "terms", tuple((float(a), float(b)) for a, b in self.terms)
        )
        object.__setattr__(
            self, "species", tuple((float(a), float(b)) for a, b in self.species)
        )

        numbers = [self.chi, self.alpha] + [v for t in self.terms for v in t]
        numbers += [v for s in self.species for v in s]
        numbers += [a for _, a in self.modes]
        if not all(math.isfinite(v) for v in numbers):
            raise KernelSpecError("non-finite kernel parameter")

        if self.kind == "yukawa_green" and self.alpha <= 0:
            raise KernelSpecError(
                "yukawa_green needs alpha > 0, got " + repr(self.alpha),
                "alpha > 0",
            )
        if self.kind == "green_sum":
            if not self.species:
                raise KernelSpecError("green_sum needs at least one species")
            for _, alpha in self.species:
                if alpha < 0:
                    raise KernelSpecError(
                        "green_sum species need alpha >= 0, got " + repr(alpha),
                        "alpha >= 0",
                    )
        if self.kind == "radial_power" and not self.terms:
            raise KernelSpecError("radial_power needs at least one term")

    def check_dimension(self, dim: int) -> None:
        """Raise KernelSpecError if a radial exponent is below 2 - dim."""
        if self.kind != "radial_power":
            return
        for _, gamma in self.terms:
            if gamma < 2 - dim:
                raise KernelSpecError(
                    "radial exponent " + repr(gamma) + " below 2 - n = "
                    + str(2 - dim) + " on T^" + str(dim),
                    "Coulomb bound",
                )


class KernelMultiplier:
    """Real, even Fourier multiplier of an interaction kernel on a grid."""

    def __init__(self, grid: TorusGrid, w_hat: np.ndarray):
        w_hat = np.asarray(w_hat, dtype=float)
        if w_hat.shape != grid.shape:
            raise GridError(
                "multiplier of shape " + repr(w_hat.shape)
                + " does not fit a grid of shape " + repr(grid.shape)
            )
        if not np.all(np.isfinite(w_hat)):
            raise KernelSpecError("non-finite multiplier")
        if np.max(np.abs(w_hat - grid.reflect(w_hat)), initial=0.0) != 0.0:
            raise KernelSpecError("multiplier is not even in k", "even W")

        self.grid = grid
        self.w_hat = w_hat

    def __getitem__(self, k: Tuple[int, ...]) -> float:
        return float(self.w_hat[self.grid.mode_index(k)])

    def scaled(self, factor: float) -> "KernelMultiplier":
        return KernelMultiplier(self.grid, factor * self.w_hat)

    def kernel_values(self) -> RealField:
        """W sampled at the nodes (its trigonometric interpolant)."""
        return RealField(
            self.grid, grid_mod.inverse_values(self.grid, self.w_hat[np.newaxis])
        )


def _sample_cosines(grid: TorusGrid, modes: Tuple[Mode, ...]) -> np.ndarray:
    values = np.zeros(grid.shape)
    for k, amplitude in modes:
        if len(k) != grid.dim:
            raise KernelSpecError(
                "mode " + repr(k) + " does not match a " + str(grid.dim) + "-D grid"
            )
        phase = sum(kj * xj for kj, xj in zip(k, grid.nodes))
        values += amplitude * np.cos(2.0 * np.pi * phase)
    return values


def build_confinement(
    spec: ConfinementSpec, grid: TorusGrid
) -> Tuple[RealField, RealField]:
    """Sample V and its spectral gradient on 'grid'.

    Raises:
        KernelSpecError: a tabulated V has not been loaded.
        GridMismatchError: a tabulated V lives on another grid.
    """
    if spec.kind == "zero":
        values = np.zeros(grid.shape)
    elif spec.kind == "cosine_sum":
        values = _sample_cosines(grid, spec.modes)
    else:
        if spec.table is None:
            raise KernelSpecError(
                "tabulated confinement " + repr(spec.path) + " is not loaded"
            )
        if spec.table.grid != grid:
            raise GridMismatchError(
                "tabulated V on " + repr(spec.table.grid) + ", expected "
                + repr(grid)
            )
        values = spec.table.scalar

    potential = RealField(grid, values)
    return potential, grid_mod.gradient(potential)


def _newtonian(grid: TorusGrid, chi: float) -> np.ndarray:
    k2 = grid.k_squared
    w_hat = np.zeros(grid.shape)
    nonzero = k2 > 0
    w_hat[nonzero] = -chi / (4.0 * np.pi**2 * k2[nonzero])
    return w_hat


def _yukawa(grid: TorusGrid, chi: float, alpha: float) -> np.ndarray:
    return -chi / (4.0 * np.pi**2 * grid.k_squared + alpha)


def _explicit(grid: TorusGrid, modes: Tuple[Mode, ...]) -> np.ndarray:
    w_hat = np.zeros(grid.shape)
    given: Dict[Tuple[int, ...], float] = {}
    for k, value in modes:
        index = grid.mode_index(k)
        mirror = grid.mode_index(tuple(-kj for kj in k))
        for idx in (index, mirror):
            if idx in given and given[idx] != value:
                raise KernelSpecError(
                    "w_hat" + repr(k) + " differs from w_hat at -k", "even W"
                )
            given[idx] = value
            w_hat[idx] = value
    return w_hat


def _cosine_multiplier(grid: TorusGrid, modes: Tuple[Mode, ...]) -> np.ndarray:
    w_hat = np.zeros(grid.shape)
    for k, amplitude in modes:
        if len(k) != grid.dim:
            raise KernelSpecError(
                "mode " + repr(k) + " does not match a " + str(grid.dim) + "-D grid"
            )
        if not any(k):
            w_hat[(0,) * grid.dim] += amplitude
            continue
        w_hat[grid.mode_index(k)] += 0.5 * amplitude
        w_hat[grid.mode_index(tuple(-kj for kj in k))] += 0.5 * amplitude
    return w_hat


def _origin_cell_average(dim: int, half_width: float, gamma: float) -> float:
    """Mean of |z|^gamma over the cell [-a, a]^dim around the origin."""
    if dim == 1:
        return half_width**gamma / (gamma + 1.0)

    # Eight triangles 0 <= y <= x <= a in polar coordinates.
    points, weights = legendre.leggauss(24)
    theta = 0.125 * np.pi * (points + 1.0)
    integral = 0.125 * np.pi * np.sum(weights / np.cos(theta) ** (gamma + 2.0))
    return 2.0 * half_width**gamma / (gamma + 2.0) * float(integral)


def torus_distance(grid: TorusGrid) -> np.ndarray:
    """Geodesic distance d(0, x_i) of every node to the origin."""
    per_axis = np.minimum(grid.nodes, 1.0 - grid.nodes)
    return np.sqrt(np.sum(per_axis**2, axis=0))


def _radial(grid: TorusGrid, terms: Tuple[Tuple[float, float], ...]) -> np.ndarray:
    distance = torus_distance(grid)
    origin = (0,) * grid.dim
    samples = np.zeros(grid.shape)
    for strength, gamma in terms:
        term = distance**gamma
        if not (gamma >= 0 and float(gamma).is_integer() and int(gamma) % 2 == 0):
            # Not smooth at the origin; use the average over its cell.
            term[origin] = _origin_cell_average(grid.dim, 0.5 * grid.spacing, gamma)
        samples += strength * term

    w_hat = grid_mod.forward_values(grid, samples[np.newaxis])[0].real
    return 0.5 * (w_hat + grid.reflect(w_hat))


def kernel_multiplier(spec: InteractionSpec, grid: TorusGrid) -> KernelMultiplier:
    """Fourier multiplier of W on 'grid'.

    Raises:
        KernelSpecError: a radial exponent violates the singularity bound,
            or explicit coefficients are not even in k.
    """
    spec.check_dimension(grid.dim)

    if spec.kind == "zero":
        w_hat = np.zeros(grid.shape)
    elif spec.kind == "newtonian_green":
        w_hat = _newtonian(grid, spec.chi)
    elif spec.kind == "yukawa_green":
        w_hat = _yukawa(grid, spec.chi, spec.alpha)
    elif spec.kind == "green_sum":
        w_hat = np.zeros(grid.shape)
        for chi, alpha in spec.species:
            w_hat += _newtonian(grid, chi) if alpha == 0 else _yukawa(grid, chi, alpha)
    elif spec.kind == "radial_power":
        w_hat = _radial(grid, spec.terms)
    elif spec.kind == "cosine_sum":
        w_hat = _cosine_multiplier(grid, spec.modes)
    else:
        w_hat = _explicit(grid, spec.modes)

    logger.debug(
        "%s multiplier on T^%d, M=%d: min %.6g, max %.6g",
        spec.kind,
        grid.dim,
        grid.points_per_axis,
        float(w_hat.min()),
        float(w_hat.max()),
    )
    return KernelMultiplier(grid, w_hat)


def convolve(mult: KernelMultiplier, rho: RealField) -> RealField:
    """W * rho, computed as w_hat(k) rho^(k).

    Raises:
        GridMismatchError: 'rho' lives on another grid.
    """
    grid = grid_mod.check_same_grid(mult, rho)
    coeffs = grid_mod.forward_values(grid, rho.values)
    return RealField(grid, grid_mod.inverse_values(grid, mult.w_hat * coeffs))


def gradient_table(mult: KernelMultiplier, smoothing_modes: int) -> RealField:
    """grad W sampled at the nodes, keeping modes with |k|_inf <= cutoff."""
    grid = mult.grid
    if not 1 <= smoothing_modes <= grid.points_per_axis // 2:
        raise GridError(
            "smoothing_modes must lie in [1, M/2], got " + repr(smoothing_modes)
        )
    truncated = mult.w_hat * grid.cutoff_mask(smoothing_modes)
    coeffs = grid_mod.gradient_coeffs(grid, truncated[np.newaxis])
    return RealField(grid, grid_mod.inverse_values(grid, coeffs))


def gridded_grad_kernel(
    spec: InteractionSpec, grid: TorusGrid, smoothing_modes: int
) -> RealField:
    """Real-space table of grad W with modes above 'smoothing_modes' removed.

    Consumers interpolate the table; the truncation regularizes kernels with
    a Coulomb-type singularity.
    """
    return gradient_table(kernel_multiplier(spec, grid), smoothing_modes)


def instability_threshold(spec: InteractionSpec, grid: TorusGrid) -> float:
    """Smallest s > 0 for which W = s * W_spec destabilizes the uniform state.

    The uniform density is linearly unstable in mode k exactly when
    1 + s w_hat(k) < 0, so the threshold is the minimum of -1 / w_hat(k)
    over modes with w_hat(k) < 0 (infinity if there are none). For the
    Newtonian kernel with chi = 1 this is 4 pi^2 on every torus.
    """
    w_hat = kernel_multiplier(spec, grid).w_hat.copy()
    w_hat[(0,) * grid.dim] = 0.0
    negative = w_hat < 0
    if not negative.any():
        return math.inf
    return float(np.min(-1.0 / w_hat[negative]))
