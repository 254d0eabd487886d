# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""Distances between densities and convergence diagnostics of trajectories.

Distances:

* wasserstein2_circle: exact quadratic Wasserstein distance on T^1,
      d2^2 = min_theta int_0^1 (Q_mu(q) - Q_nu(q + theta))^2 dq,
  with quantile functions lifted by Q(q + 1) = Q(q) + 1. The objective is
  convex in theta.
* tv_d2_bound: diam(T^n) sqrt(TV), an upper bound of d2 on any torus.

Diagnostics fit the gradient inequality sqrt(I) >= c (F - F_inf)^theta as
log I = 2 log c + 2 theta log(F - F_inf), compare the decay of the distance
to the limit with the rate it predicts (exponential for theta = 1/2,
t^(-(1 - theta) / (2 theta - 1)) above), and bound the trajectory length.
"""

import enum
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, optimize, stats

from mvgf import grid as grid_mod
from mvgf import settings
from mvgf.energy import EnergyReport
from mvgf.exceptions import FitError, FormatError, GridError, NumericalError
from mvgf.flow import TerminalStatus, TrajectoryLog
from mvgf.grid import DensityField

logger = logging.getLogger(__name__)

MASS_MISMATCH_TOLERANCE = 1e-10
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

# Distances below this are treated as zero by rate_check().
DISTANCE_NOISE_FLOOR = 1e-12


class _CircleMeasure:
    """Lifted quantile function of a density on the T^1 grid.

    'atoms' puts the mass of node i at x_i; 'cells' spreads it uniformly
    over [x_i - h/2, x_i + h/2], which gives a quantile that is linear on
    every occupied cell and jumps across empty ones.
    """

    def __init__(self, weights: np.ndarray, spacing: float, representation: str):
        cumulative = np.concatenate(([0.0], np.cumsum(weights)))
        cumulative /= cumulative[-1]
        occupied = np.flatnonzero(weights > 0)
        self.representation = representation
        self.spacing = spacing
        # Occupied cell i carries the levels [starts[i], starts[i] + masses[i]).
        self.starts = cumulative[occupied]
        self.masses = cumulative[occupied + 1] - cumulative[occupied]
        self.nodes = occupied * spacing

    def locate(self, q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Occupied cell and lift of every level in 'q'."""
        shift = np.floor(q)
        index = np.searchsorted(self.starts, q - shift, side="right") - 1
        return index, shift

    def evaluate(
        self, q: np.ndarray, index: np.ndarray, shift: np.ndarray
    ) -> np.ndarray:
        """Q(q) continued linearly from the cell found by locate()."""
        if self.representation == "atoms":
            return self.nodes[index] + shift
        offset = (q - shift - self.starts[index]) / self.masses[index]
        return self.nodes[index] + self.spacing * (offset - 0.5) + shift

    def quantile(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        return self.evaluate(q, *self.locate(q))

    def breakpoints(self) -> np.ndarray:
        return np.append(self.starts, 1.0)


def _cost(mu: _CircleMeasure, nu: _CircleMeasure, theta: float) -> float:
    """int_0^1 (Q_mu(q) - Q_nu(q + theta))^2 dq, exact for both layouts."""
    shifted = nu.breakpoints()[:, np.newaxis] + np.array([-1.0, 0.0, 1.0]) - theta
    knots = np.concatenate(([0.0, 1.0], mu.breakpoints(), shifted.ravel()))
    knots = np.unique(knots[(knots >= 0.0) & (knots <= 1.0)])
    lo, hi = knots[:-1], knots[1:]
    mid = 0.5 * (lo + hi)
    width = hi - lo

    # Both quantiles are constant (atoms) or linear (cells) on each piece;
    # the cell found at the midpoint is used at the endpoints too.
    at_mu = mu.locate(mid)
    at_nu = nu.locate(mid + theta)

    def difference(q: np.ndarray) -> np.ndarray:
        return mu.evaluate(q, *at_mu) - nu.evaluate(q + theta, *at_nu)

    centre = difference(mid)
    if mu.representation == "atoms":
        return float(np.sum(width * centre**2))
    left, right = difference(lo), difference(hi)
    # Simpson's rule, exact for the quadratic integrand.
    return float(np.sum(width * (left**2 + 4.0 * centre**2 + right**2) / 6.0))


def _weights(rho: DensityField) -> np.ndarray:
    return rho.scalar * rho.grid.spacing**rho.grid.dim


def _golden_index(values, count: int) -> int:
    """Index of the minimum of a unimodal sequence given by values(i)."""
    lo, hi = 0, count - 1
    cache = {}

    def at(i: int) -> float:
        if i not in cache:
            cache[i] = values(i)
        return cache[i]

    while hi - lo > 3:
        a = hi - int(round(GOLDEN * (hi - lo)))
        b = lo + int(round(GOLDEN * (hi - lo)))
        if a >= b:
            a, b = (lo + hi) // 2, (lo + hi) // 2 + 1
        if at(a) <= at(b):
            hi = b
        else:
            lo = a
    return min(range(lo, hi + 1), key=at)


def wasserstein2_circle(
    mu: DensityField, nu: DensityField, representation: str = "cells"
) -> float:
    """Quadratic Wasserstein distance between two densities on T^1.

    The minimization over the cut parameter theta runs a golden-section
    search over the sorted breakpoints C_nu[j] + k - C_mu[i], a local scan
    around the best one and, for the 'cells' layout, a bounded scalar
    minimization inside the neighbouring intervals.

    Raises:
        GridError: the densities are not on the same 1-D grid.
        NumericalError: the masses differ by more than 1e-10.
    """
    grid = grid_mod.check_same_grid(mu, nu)
    if grid.dim != 1:
        raise GridError("wasserstein2_circle needs a 1-D grid")
    if representation not in ("cells", "atoms"):
        raise FormatError("unknown representation " + repr(representation))

    w_mu, w_nu = _weights(mu), _weights(nu)
    if abs(w_mu.sum() - w_nu.sum()) > MASS_MISMATCH_TOLERANCE:
        raise NumericalError(
            "mass mismatch " + repr(float(w_mu.sum() - w_nu.sum()))
        )
    if np.array_equal(w_mu, w_nu):
        return 0.0

    first = _CircleMeasure(w_mu, grid.spacing, representation)
    second = _CircleMeasure(w_nu, grid.spacing, representation)

    candidates = (
        second.breakpoints()[np.newaxis, :, np.newaxis]
        + np.array([-1.0, 0.0, 1.0])
        - first.breakpoints()[:, np.newaxis, np.newaxis]
    ).ravel()
    candidates = np.unique(np.clip(candidates, -1.0, 1.0))

    def cost_at(i: int) -> float:
        return _cost(first, second, float(candidates[i]))

    best = _golden_index(cost_at, candidates.size)
    window = range(max(best - 3, 0), min(best + 4, candidates.size))
    best = min(window, key=cost_at)
    value = cost_at(best)

    if representation == "cells":
        for lo, hi in (
            (candidates[max(best - 1, 0)], candidates[best]),
            (candidates[best], candidates[min(best + 1, candidates.size - 1)]),
        ):
            if hi <= lo:
                continue
            result = optimize.minimize_scalar(
                lambda theta: _cost(first, second, theta),
                bounds=(float(lo), float(hi)),
                method="bounded",
                options={"xatol": 1e-13},
            )
            value = min(value, float(result.fun))

    return math.sqrt(max(value, 0.0))


def total_variation(mu: DensityField, nu: DensityField) -> float:
    """sum_i |w_mu - w_nu| with node masses w = rho h^n."""
    grid_mod.check_same_grid(mu, nu)
    return float(np.sum(np.abs(_weights(mu) - _weights(nu))))


def tv_d2_bound(mu: DensityField, nu: DensityField) -> float:
    """diam(T^n) sqrt(TV(mu, nu)) with diam(T^n) = sqrt(n) / 2.

    Follows from d2^2 <= diam^2 TV on a compact manifold.
    """
    grid = grid_mod.check_same_grid(mu, nu)
    return 0.5 * math.sqrt(grid.dim) * math.sqrt(total_variation(mu, nu))


def l1_distance(mu: DensityField, nu: DensityField) -> float:
    grid_mod.check_same_grid(mu, nu)
    return float(np.mean(np.abs(mu.scalar - nu.scalar)))


def l2_distance(mu: DensityField, nu: DensityField) -> float:
    grid_mod.check_same_grid(mu, nu)
    return math.sqrt(float(np.mean((mu.scalar - nu.scalar) ** 2)))


def linf_distance(mu: DensityField, nu: DensityField) -> float:
    grid_mod.check_same_grid(mu, nu)
    return float(np.max(np.abs(mu.scalar - nu.scalar)))


def distance_series(
    log: TrajectoryLog, representation: str = "cells"
) -> Tuple[np.ndarray, np.ndarray]:
    """Distance of every logged snapshot to the terminal one.

    Exact d2 on T^1, the TV bound on T^2.
    """
    terminal = log.final_state
    times, distances = [], []
    for t, state in log.snapshots:
        if terminal.grid.dim == 1:
            distance = wasserstein2_circle(state, terminal, representation)
        else:
            distance = tv_d2_bound(state, terminal)
        times.append(t)
        distances.append(distance)
    return np.asarray(times), np.asarray(distances)


class Regime(str, enum.Enum):
    EXPONENTIAL = "exponential"
    ALGEBRAIC = "algebraic"


@dataclass(frozen=True)
class LojaFit:
    """Fitted gradient-inequality exponent and constant.

    Attributes:
        theta: Raw fitted exponent (never clamped).
        c: Fitted constant.
        window: (t_lo, t_hi) of the fitted reports.
        f_inf: Limit energy used.
        r2: Coefficient of determination of the fit.
        n_points: Number of reports in the window.
        flagged: theta lies outside THETA_SANITY_BAND.
        slope: Raw slope of log I against log(F - F_inf).
        intercept: Raw intercept of the same line.
    """

    theta: float
    c: float
    window: Tuple[float, float]
    f_inf: float
    r2: float
    n_points: int
    flagged: bool
    slope: float
    intercept: float

    @property
    def regime(self) -> Regime:
        if self.theta <= settings.EXPONENTIAL_REGIME_THETA:
            return Regime.EXPONENTIAL
        return Regime.ALGEBRAIC


@dataclass(frozen=True)
class RateCheck:
    """Observed and predicted decay of the distance to the limit.

    Rates are positive: the exponential rate lambda of exp(-lambda t) or
    the exponent p of t^(-p).
    """

    regime: Regime
    fitted_rate: float
    predicted_rate: float
    relative_gap: float


@dataclass(frozen=True)
class TrajectoryLength:
    """int sqrt(I) dt over the fit window against its a-priori bound."""

    length: float
    bound: float
    satisfied: bool


def _noise_floor(f_inf: float) -> float:
    return settings.ENERGY_NOISE_FLOOR * max(1.0, abs(f_inf))


def _reports_of(log) -> List[EnergyReport]:
    return list(log.reports) if isinstance(log, TrajectoryLog) else list(log)


def lojasiewicz_fit(
    log,
    f_inf: Optional[float] = None,
    conv_tol: float = settings.DEFAULT_CONVERGENCE_TOLERANCE,
) -> LojaFit:
    """Least-squares fit of log I against log(F - F_inf).

    F_inf is the terminal energy of a converged trajectory unless 'f_inf'
    overrides it (for instance with the energy of a separately computed
    stationary state); with an override the trajectory need not be
    converged. Only reports with F - F_inf above ten times the energy noise
    floor are used. The window is the longest suffix of those reports with
    r^2 >= FIT_R2_THRESHOLD.

    Args:
        log: A TrajectoryLog or a time-ordered sequence of EnergyReports.
        f_inf: Optional limit energy.
        conv_tol: Dissipation below which the last report counts as
            converged.

    Raises:
        FitError: non-converged trajectory, too few points, or no window
            meets the r^2 threshold.
    """
    reports = _reports_of(log)
    if not reports:
        raise FitError("empty trajectory")

    if f_inf is None:
        last = reports[-1]
        converged = last.dissipation is not None and last.dissipation < conv_tol
        if isinstance(log, TrajectoryLog):
            converged = converged or log.terminal_status is TerminalStatus.CONVERGED
        if not converged:
            raise FitError("trajectory did not converge; pass f_inf to fit anyway")
        f_inf = last.energy

    threshold = 10.0 * _noise_floor(f_inf)
    usable = [
        r
        for r in reports
        if r.energy - f_inf > threshold
        and r.dissipation is not None
        and r.dissipation > 0
    ]
    if len(usable) < settings.MIN_FIT_REPORTS:
        raise FitError(
            "too few points above the noise floor: " + str(len(usable))
            + " < " + str(settings.MIN_FIT_REPORTS)
        )

    x = np.log(np.array([r.energy - f_inf for r in usable]))
    y = np.log(np.array([r.dissipation for r in usable]))

    for start in range(0, len(usable) - settings.MIN_FIT_WINDOW + 1):
        fit = stats.linregress(x[start:], y[start:])
        r2 = float(fit.rvalue) ** 2
        if r2 >= settings.FIT_R2_THRESHOLD:
            break
    else:
        raise FitError("no window reaches r^2 >= " + repr(settings.FIT_R2_THRESHOLD))

    theta = 0.5 * float(fit.slope)
    lo, hi = settings.THETA_SANITY_BAND
    result = LojaFit(
        theta=theta,
        c=math.exp(0.5 * float(fit.intercept)),
        window=(usable[start].t, usable[-1].t),
        f_inf=f_inf,
        r2=r2,
        n_points=len(usable) - start,
        flagged=not lo <= theta <= hi,
        slope=float(fit.slope),
        intercept=float(fit.intercept),
    )
    if result.flagged:
        logger.warning("Fitted theta %.4f lies outside [%g, %g]", theta, lo, hi)
    logger.info(
        "Fit: theta=%.6f c=%.6g r2=%.5f on t in [%.6g, %.6g] (%d points)",
        result.theta,
        result.c,
        result.r2,
        result.window[0],
        result.window[1],
        result.n_points,
    )
    return result


def predicted_rate(fit: LojaFit) -> float:
    """c^2 / 2 in the exponential regime, (1 - theta) / (2 theta - 1) above."""
    if fit.regime is Regime.EXPONENTIAL:
        return 0.5 * fit.c**2
    return (1.0 - fit.theta) / (2.0 * fit.theta - 1.0)


def rate_check(
    log: Optional[TrajectoryLog],
    fit: LojaFit,
    series: Optional[Tuple[Sequence[float], Sequence[float]]] = None,
    representation: str = "cells",
) -> RateCheck:
    """Compare the decay of the distance to the limit inside the fit window
    with the rate the fit predicts.

    Args:
        log: Trajectory whose snapshots give the distance series; unused
            when 'series' is passed.
        fit: Result of lojasiewicz_fit().
        series: Optional (times, distances) measured against the limit.
        representation: Passed to distance_series().

    Raises:
        FitError: fewer than MIN_FIT_WINDOW distances above the noise floor
            inside the window.
    """
    if series is None:
        series = distance_series(log, representation)
    t = np.asarray(series[0], dtype=float)
    d = np.asarray(series[1], dtype=float)
    lo, hi = fit.window
    keep = (t >= lo) & (t <= hi) & (d > DISTANCE_NOISE_FLOOR) & (t > 0)
    if int(keep.sum()) < settings.MIN_FIT_WINDOW:
        raise FitError("distance series below the noise floor inside the fit window")

    regime = fit.regime
    abscissa = t[keep] if regime is Regime.EXPONENTIAL else np.log(t[keep])
    slope = float(stats.linregress(abscissa, np.log(d[keep])).slope)

    fitted = -slope
    predicted = predicted_rate(fit)
    gap = abs(fitted - predicted) / abs(predicted)
    logger.info(
        "Rate check (%s): fitted %.6g, predicted %.6g, gap %.3g",
        regime.value,
        fitted,
        predicted,
        gap,
    )
    return RateCheck(regime, fitted, predicted, gap)


def trajectory_length(log, fit: Optional[LojaFit] = None) -> TrajectoryLength:
    """int sqrt(I) dt against (F(t_lo) - F_inf)^(1 - theta) / (c (1 - theta)).

    Without a fit the whole trajectory is measured; this is only possible
    for a stationary trajectory, whose length and bound are both 0.

    Raises:
        FitError: no fit is given and the energy still decreases.
    """
    reports = _reports_of(log)
    if fit is None:
        f_inf = reports[-1].energy
        if reports[0].energy - f_inf > 10.0 * _noise_floor(f_inf):
            raise FitError("a fit is needed for a non-stationary trajectory")
        window = reports
        bound = 0.0
    else:
        lo, hi = fit.window
        window = [r for r in reports if lo <= r.t <= hi]
        excess = max(window[0].energy - fit.f_inf, 0.0)
        bound = excess ** (1.0 - fit.theta) / (fit.c * (1.0 - fit.theta))

    times = np.array([r.t for r in window])
    speeds = np.sqrt(np.maximum([r.dissipation or 0.0 for r in window], 0.0))
    length = float(integrate.trapezoid(speeds, times)) if len(window) > 1 else 0.0

    satisfied = length <= settings.LENGTH_BOUND_SLACK * bound or length == 0.0
    if not satisfied:
        logger.warning("Trajectory length %.6g exceeds bound %.6g", length, bound)
    return TrajectoryLength(length, bound, satisfied)


def log_sobolev_constant(log, fit: LojaFit) -> float:
    """min over the fit window of I / (2 (F - F_inf))."""
    lo, hi = fit.window
    threshold = 10.0 * _noise_floor(fit.f_inf)
    ratios = [
        r.dissipation / (2.0 * (r.energy - fit.f_inf))
        for r in _reports_of(log)
        if lo <= r.t <= hi and r.energy - fit.f_inf > threshold and r.dissipation
    ]
    if not ratios:
        raise FitError("no reports above the noise floor in the fit window")
    return float(min(ratios))
