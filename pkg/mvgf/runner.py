# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""Run scenarios and read and write their artifacts.

Every subcommand writes into one output directory:

    run, particles   trajectory.csv, snapshots.csv, snapshots/NNNNNN.mvgf
    stationary       stationary.csv, stationary.mvgf
    spectrum         spectrum.csv
    fit              trajectory.csv, snapshots..., fit.csv
    compare          pde/ and particles/ as above, compare.csv

Text files start with a provenance header: the package version, the
sha256 digest of the serialized scenario and the scenario itself, all on
'#' lines.  The last line of a trajectory or record file is a
'# summary: {...}' JSON record.
"""

import csv
import io
import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from securesystemslib import hash as sslib_hash
from securesystemslib.storage import FilesystemBackend
from securesystemslib.util import persist_temp_file

import mvgf
from mvgf import energy, flow, linearization, metrics, particles
from mvgf import grid as grid_mod
from mvgf import potentials
from mvgf.api.snapshot import Snapshot
from mvgf.energy import CSV_COLUMNS, EnergyReport
from mvgf.exceptions import (
    FitError,
    InvalidConfigurationError,
    PositivityError,
    SnapshotError,
)
from mvgf.grid import DensityField, RealField, TorusGrid
from mvgf.potentials import KernelMultiplier
from mvgf.scenario import Scenario, serialize

logger = logging.getLogger(__name__)

SUBCOMMANDS = ("run", "stationary", "spectrum", "fit", "particles", "compare")

TRAJECTORY_FILE = "trajectory.csv"
SNAPSHOT_INDEX_FILE = "snapshots.csv"
SNAPSHOT_DIRECTORY = "snapshots"
TRAJECTORY_COLUMNS = CSV_COLUMNS + ("source",)
SNAPSHOT_INDEX_COLUMNS = ("index", "t", "file")
SPECTRUM_COLUMNS = ("index", "eigenvalue")
FIT_COLUMNS = (
    "theta",
    "c",
    "window_lo",
    "window_hi",
    "r2",
    "regime",
    "fitted_rate",
    "predicted_rate",
    "relative_gap",
    "n_points",
    "flagged",
    "f_inf",
    "length",
    "length_bound",
    "log_sobolev",
)
COMPARE_COLUMNS = ("t_a", "t_b", "l1", "linf", "l2", "tv_bound", "d2")
SUMMARY_PREFIX = "# summary: "


@dataclass
class Problem:
    """A scenario sampled on its grid."""

    grid: TorusGrid
    potential: RealField
    mult: KernelMultiplier
    rho0: DensityField


@dataclass
class Outcome:
    """Result of run_scenario().

    Attributes:
        status: 'ok', or the terminal status of a flow.
        summary: The JSON summary record written with the artifacts.
        directory: Output directory.
    """

    status: str
    summary: Dict[str, Any] = field(default_factory=dict)
    directory: str = ""


@dataclass
class CompareReport:
    """Distances between the snapshots of two runs paired by time."""

    pairs: List[Dict[str, float]]

    @property
    def terminal(self) -> Dict[str, float]:
        return self.pairs[-1]

    def extreme(self, name: str) -> float:
        values = [p[name] for p in self.pairs if not math.isnan(p[name])]
        return max(values) if values else float("nan")

    def summary(self) -> Dict[str, Any]:
        return {
            "pairs": len(self.pairs),
            "max_l1": self.extreme("l1"),
            "max_linf": self.extreme("linf"),
            "max_tv_bound": self.extreme("tv_bound"),
            "max_d2": self.extreme("d2"),
            "terminal_l1": self.terminal["l1"],
        }


# Provenance and file plumbing.


def scenario_digest(text: str) -> str:
    digest_object = sslib_hash.digest("sha256")
    digest_object.update(text.encode("utf-8"))
    return digest_object.hexdigest()


def provenance_header(scenario: Scenario) -> str:
    text = serialize(scenario)
    lines = [
        "mvgf " + mvgf.__version__,
        "scenario sha256: " + scenario_digest(text),
        "scenario:",
    ] + text.splitlines()
    return "".join("# " + line + "\n" for line in lines)


def _persist(path: str, data: bytes) -> None:
    with tempfile.TemporaryFile() as temp_file:
        temp_file.write(data)
        persist_temp_file(temp_file, path)


def _format_cell(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_table(
    path: str,
    scenario: Scenario,
    columns: Sequence[str],
    rows: Sequence[Dict[str, Any]],
    summary: Optional[Dict[str, Any]] = None,
) -> None:
    """Write a CSV table with provenance header and optional summary line."""
    buffer = io.StringIO()
    buffer.write(provenance_header(scenario))
    writer = csv.DictWriter(buffer, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: _format_cell(row[key]) for key in columns})
    if summary is not None:
        buffer.write(SUMMARY_PREFIX + json.dumps(summary, sort_keys=True) + "\n")
    _persist(path, buffer.getvalue().encode("utf-8"))
    logger.debug("Wrote %s (%d rows)", path, len(rows))


def read_table(path: str) -> Tuple[List[Dict[str, str]], Optional[Dict[str, Any]]]:
    """Rows and summary record of a table written by write_table()."""
    with open(path, "r", encoding="utf-8") as file_obj:
        lines = file_obj.read().splitlines()
    summary = None
    for line in lines:
        if line.startswith(SUMMARY_PREFIX):
            summary = json.loads(line[len(SUMMARY_PREFIX) :])
    body = [line for line in lines if line and not line.startswith("#")]
    return list(csv.DictReader(body)), summary


def _resolve(base_dir: str, path: str) -> str:
    return path if os.path.isabs(path) else os.path.join(base_dir, path)


def load_density(path: str, grid: TorusGrid) -> DensityField:
    """Read a density snapshot and check that it lives on 'grid'.

    Raises:
        SnapshotError: the snapshot lives on another grid, is not scalar or
            holds negative values.
    """
    snapshot = Snapshot.from_file(path)
    if snapshot.grid != grid:
        raise SnapshotError(
            path + " holds a field on " + repr(snapshot.grid) + ", expected "
            + repr(grid)
        )
    try:
        return snapshot.density()
    except PositivityError as e:
        raise SnapshotError(path + " is not a density: " + str(e)) from e


def build_problem(scenario: Scenario, base_dir: str = ".") -> Problem:
    """Sample V, W and the initial density of 'scenario'.

    Relative paths are resolved against 'base_dir'.

    Raises:
        InvalidConfigurationError: the initial density is negative.
        SnapshotError: a tabulated field does not fit the scenario grid.
    """
    grid = grid_mod.create_grid(scenario.dim, scenario.points_per_axis)

    confinement = scenario.confinement
    if confinement.kind == "tabulated" and confinement.table is None:
        snapshot = Snapshot.from_file(_resolve(base_dir, confinement.path))
        if snapshot.grid != grid or not snapshot.field.is_scalar:
            raise SnapshotError("tabulated V does not fit the scenario grid")
        confinement = replace(confinement, table=snapshot.field)
    potential, _ = potentials.build_confinement(confinement, grid)

    scenario.interaction.check_dimension(grid.dim)
    mult = potentials.kernel_multiplier(scenario.interaction, grid)

    initial = scenario.initial
    if initial.kind == "tabulated":
        rho0 = load_density(_resolve(base_dir, initial.path), grid)
    elif initial.kind == "gibbs_of_V":
        rho0 = flow.gibbs_state(potential)
    else:
        values = np.ones(grid.shape)
        for k, amplitude in initial.modes:
            phase = sum(kj * xj for kj, xj in zip(k, grid.nodes))
            values = values + amplitude * np.cos(2.0 * np.pi * phase)
        try:
            rho0 = DensityField(grid, values)
        except PositivityError as e:
            raise InvalidConfigurationError(
                "initial modes make the density negative"
            ) from e

    return Problem(grid, potential, mult, rho0.normalized())


# Trajectories.


def _report_rows(reports: Sequence[EnergyReport], source: str) -> List[Dict[str, Any]]:
    rows = []
    for report in reports:
        row = report.to_row()
        row["source"] = source
        rows.append(row)
    return rows


def write_trajectory(
    directory: str,
    scenario: Scenario,
    reports: Sequence[EnergyReport],
    snapshots: Sequence[Tuple[float, DensityField]],
    summary: Dict[str, Any],
    source: str,
) -> None:
    """Write trajectory.csv, the snapshot index and the snapshots."""
    backend = FilesystemBackend()
    backend.create_folder(os.path.join(directory, SNAPSHOT_DIRECTORY))

    index_rows = []
    for index, (t, rho) in enumerate(snapshots):
        name = os.path.join(SNAPSHOT_DIRECTORY, "%06d.mvgf" % index)
        Snapshot(rho).to_file(os.path.join(directory, name), storage_backend=backend)
        index_rows.append({"index": index, "t": t, "file": name})

    write_table(
        os.path.join(directory, TRAJECTORY_FILE),
        scenario,
        TRAJECTORY_COLUMNS,
        _report_rows(reports, source),
        summary,
    )
    write_table(
        os.path.join(directory, SNAPSHOT_INDEX_FILE),
        scenario,
        SNAPSHOT_INDEX_COLUMNS,
        index_rows,
    )


def read_reports(directory: str) -> List[EnergyReport]:
    rows, _ = read_table(os.path.join(directory, TRAJECTORY_FILE))
    return [EnergyReport.from_row(row) for row in rows]


def read_snapshots(directory: str) -> List[Tuple[float, DensityField]]:
    rows, _ = read_table(os.path.join(directory, SNAPSHOT_INDEX_FILE))
    return [
        (
            float(row["t"]),
            Snapshot.from_file(os.path.join(directory, row["file"])).density(),
        )
        for row in rows
    ]


# Subcommands.


def _run(scenario: Scenario, problem: Problem, directory: str) -> Outcome:
    log = flow.run(problem.rho0, problem.potential, problem.mult, scenario.flow)
    summary = log.summary()
    write_trajectory(directory, scenario, log.reports, log.snapshots, summary, "pde")
    log.raise_for_status()
    return Outcome(log.terminal_status.value, summary, directory)


def _stationary(
    scenario: Scenario,
    problem: Problem,
    directory: str,
    damping: Optional[float],
) -> Outcome:
    cfg = scenario.stationary
    if damping is not None:
        cfg = replace(cfg, damping=damping)
    rho, report = flow.stationary_fixed_point(
        problem.rho0, problem.potential, problem.mult, cfg
    )
    final = energy.diagnose(rho, problem.potential, problem.mult)
    record = {
        "iterations": report.iterations,
        "increment": report.increment,
        "residual": report.residual,
        "F": final.energy,
        "rho_min": final.rho_min,
        "rho_max": final.rho_max,
    }
    Snapshot(rho).to_file(os.path.join(directory, "stationary.mvgf"))
    write_table(
        os.path.join(directory, "stationary.csv"),
        scenario,
        tuple(record),
        [record],
        record,
    )
    return Outcome("ok", record, directory)


def _spectrum(scenario: Scenario, problem: Problem, directory: str) -> Outcome:
    cfg = scenario.spectrum
    base = problem.rho0
    if cfg.base == "stationary":
        base, _ = flow.stationary_fixed_point(
            problem.rho0, problem.potential, problem.mult, scenario.stationary
        )
    handle = linearization.LinearOperatorHandle(base, problem.potential, problem.mult)
    report = linearization.assemble_spectrum(
        handle, cfg.max_mode, cfg.kernel_tol_factor
    )
    summary = {
        "basis_size": report.basis_size,
        "kernel_dim": report.kernel_dim,
        "kernel_tol": report.kernel_tol,
        "min_eigenvalue": report.eigenvalues[0],
        "spectral_radius": report.spectral_radius,
        "base_dissipation": handle.stationarity,
    }
    rows = [
        {"index": i, "eigenvalue": value} for i, value in enumerate(report.eigenvalues)
    ]
    write_table(
        os.path.join(directory, "spectrum.csv"),
        scenario,
        SPECTRUM_COLUMNS,
        rows,
        summary,
    )
    return Outcome("ok", summary, directory)


def _fit(scenario: Scenario, problem: Problem, directory: str) -> Outcome:
    cfg = scenario.flow
    if cfg.snapshot_every == 0:
        # The rate check needs intermediate states.
        cfg = replace(cfg, snapshot_every=cfg.log_every)
    log = flow.run(problem.rho0, problem.potential, problem.mult, cfg)
    write_trajectory(
        directory, scenario, log.reports, log.snapshots, log.summary(), "pde"
    )
    log.raise_for_status()

    fit = metrics.lojasiewicz_fit(log, scenario.fit.f_inf, cfg.conv_tol)
    rate = metrics.rate_check(log, fit, representation=scenario.fit.representation)
    length = metrics.trajectory_length(log, fit)
    try:
        log_sobolev = metrics.log_sobolev_constant(log, fit)
    except FitError:
        log_sobolev = float("nan")

    record = {
        "theta": fit.theta,
        "c": fit.c,
        "window_lo": fit.window[0],
        "window_hi": fit.window[1],
        "r2": fit.r2,
        "regime": rate.regime.value,
        "fitted_rate": rate.fitted_rate,
        "predicted_rate": rate.predicted_rate,
        "relative_gap": rate.relative_gap,
        "n_points": fit.n_points,
        "flagged": fit.flagged,
        "f_inf": fit.f_inf,
        "length": length.length,
        "length_bound": length.bound,
        "log_sobolev": log_sobolev,
    }
    write_table(
        os.path.join(directory, "fit.csv"), scenario, FIT_COLUMNS, [record], record
    )
    return Outcome("ok", record, directory)


def _particles(scenario: Scenario, problem: Problem, directory: str) -> Outcome:
    cfg = scenario.particles
    state = particles.init_particles(
        cfg.n_particles, problem.grid.dim, scenario.seed, problem.rho0
    )
    result = particles.run_particles(state, problem.potential, problem.mult, cfg)
    snapshots = [(t, density.base) for t, density in result.densities]
    last = result.reports[-1]
    summary = {
        "status": "ok",
        "t_final": last.t,
        "F_final": last.energy,
        "n_particles": cfg.n_particles,
        "seed": scenario.seed,
    }
    if result.invariant is not None:
        invariant = result.invariant.base
        Snapshot(invariant).to_file(os.path.join(directory, "invariant.mvgf"))
        gibbs = flow.gibbs_state(problem.potential)
        summary["invariant_l1_to_gibbs"] = metrics.l1_distance(invariant, gibbs)
    write_trajectory(
        directory, scenario, result.reports, snapshots, summary, "particles"
    )
    return Outcome("ok", summary, directory)


def _pair_by_time(
    times_a: Sequence[float], times_b: Sequence[float], tolerance: float
) -> List[Tuple[int, int]]:
    """Nearest-time pairs (i, j) with |t_a[i] - t_b[j]| <= tolerance."""
    if not len(times_b):
        return []
    pairs = []
    b = np.asarray(times_b)
    for i, t in enumerate(times_a):
        j = int(np.argmin(np.abs(b - t)))
        if abs(b[j] - t) <= tolerance:
            pairs.append((i, j))
    return pairs


def compare_snapshots(
    run_a: Sequence[Tuple[float, DensityField]],
    run_b: Sequence[Tuple[float, DensityField]],
    time_tolerance: float,
    representation: str = "cells",
) -> CompareReport:
    """L1, Linf, L2, TV-bound and (on T^1) d2 distances of time-paired
    snapshots.

    Raises:
        GridMismatchError: the runs live on different grids.
        FitError: no snapshot times can be paired.
    """
    pairs = _pair_by_time([t for t, _ in run_a], [t for t, _ in run_b], time_tolerance)
    if not pairs:
        raise FitError("no snapshot times match within " + repr(time_tolerance))

    rows = []
    for i, j in pairs:
        (t_a, mu), (t_b, nu) = run_a[i], run_b[j]
        grid = grid_mod.check_same_grid(mu, nu)
        d2 = float("nan")
        if grid.dim == 1:
            d2 = metrics.wasserstein2_circle(
                mu.normalized(), nu.normalized(), representation
            )
        rows.append(
            {
                "t_a": t_a,
                "t_b": t_b,
                "l1": metrics.l1_distance(mu, nu),
                "linf": metrics.linf_distance(mu, nu),
                "l2": metrics.l2_distance(mu, nu),
                "tv_bound": metrics.tv_d2_bound(mu, nu),
                "d2": d2,
            }
        )
    return CompareReport(rows)


def compare(
    directory_a: str,
    directory_b: str,
    time_tolerance: float,
    representation: str = "cells",
) -> CompareReport:
    """compare_snapshots() on two output directories of 'run' or
    'particles'."""
    return compare_snapshots(
        read_snapshots(directory_a),
        read_snapshots(directory_b),
        time_tolerance,
        representation,
    )


def _compare(
    scenario: Scenario,
    problem: Problem,
    directory: str,
    runs: Optional[Tuple[str, str]],
) -> Outcome:
    if runs is None:
        backend = FilesystemBackend()
        runs = (os.path.join(directory, "pde"), os.path.join(directory, "particles"))
        for path in runs:
            backend.create_folder(path)
        _run(scenario, problem, runs[0])
        _particles(scenario, problem, runs[1])
    tolerance = max(scenario.flow.dt, scenario.particles.dt)
    report = compare(runs[0], runs[1], tolerance, scenario.fit.representation)
    summary = report.summary()
    write_table(
        os.path.join(directory, "compare.csv"),
        scenario,
        COMPARE_COLUMNS,
        report.pairs,
        summary,
    )
    logger.info(
        "Compared %d snapshot pairs; terminal L1 %.4g",
        len(report.pairs),
        summary["terminal_l1"],
    )
    return Outcome("ok", summary, directory)


def run_scenario(
    scenario: Scenario,
    subcommand: str,
    out_dir: Optional[str] = None,
    base_dir: str = ".",
    damping: Optional[float] = None,
    runs: Optional[Tuple[str, str]] = None,
) -> Outcome:
    """Execute one subcommand of 'scenario' and write its artifacts.

    Arguments:
        scenario: Parsed scenario.
        subcommand: One of SUBCOMMANDS.
        out_dir: Output directory; defaults to the scenario's, resolved
            against 'base_dir'.
        base_dir: Directory that relative scenario paths refer to.
        damping: Overrides the stationary solver damping.
        runs: Two existing output directories for 'compare'; without them
            the scenario is run as a PDE and as particles first.

    Raises:
        mvgf.exceptions.Error: configuration, input or numerical failures.
            A blow-up is not an error; it is reported in the status.
    """
    if subcommand not in SUBCOMMANDS:
        raise InvalidConfigurationError("unknown subcommand " + repr(subcommand))

    directory = out_dir if out_dir is not None else _resolve(base_dir, scenario.outputs)
    FilesystemBackend().create_folder(directory)
    problem = build_problem(scenario, base_dir)
    logger.info(
        "Scenario %s: %s on T^%d, M=%d -> %s",
        scenario.name,
        subcommand,
        problem.grid.dim,
        problem.grid.points_per_axis,
        directory,
    )

    if subcommand == "run":
        return _run(scenario, problem, directory)
    if subcommand == "stationary":
        return _stationary(scenario, problem, directory, damping)
    if subcommand == "spectrum":
        return _spectrum(scenario, problem, directory)
    if subcommand == "fit":
        return _fit(scenario, problem, directory)
    if subcommand == "particles":
        return _particles(scenario, problem, directory)
    return _compare(scenario, problem, directory, runs)
