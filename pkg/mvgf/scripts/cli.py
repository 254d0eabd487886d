#!/usr/bin/env python

# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""
<Program Name>
  cli.py

<Purpose>
  Command-line front end of mvgf.  Each subcommand reads a scenario file,
  runs one kind of computation and writes its artifacts (CSV tables with a
  provenance header, MVGF binary snapshots) into the scenario's output
  directory or the one given with '--out'.

<Usage>
  $ mvgf run --config ks.scn
  $ mvgf stationary --config ks.scn --damping 0.2 --verbose 1
  $ mvgf particles --config ks.scn --seed 7 --out runs/seed7
  $ mvgf compare --config ks.scn runs/pde runs/particles

<Exit status>
  0  success, including a run that detected blow-up
  2  invalid scenario, input file or snapshot
  3  numerical failure

  On failure a one-line JSON record {"status": "error", "kind": ...,
  "message": ...} is written to stderr.
"""

import argparse
import dataclasses
import json
import logging
import os
import sys
from typing import List, Optional

from securesystemslib import exceptions as sslib_exceptions

from mvgf import exceptions, log, runner
from mvgf.api.serialization import DeserializationError, SerializationError
from mvgf.scenario import load_scenario

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIGURATION = 2
EXIT_NUMERICAL = 3

_CONFIGURATION_ERRORS = (
    exceptions.InvalidConfigurationError,
    exceptions.FormatError,
    exceptions.GridError,
    exceptions.SnapshotError,
    SerializationError,
    DeserializationError,
    sslib_exceptions.FormatError,
    sslib_exceptions.StorageError,
)

_LOG_LEVELS = {
    5: logging.CRITICAL,
    4: logging.ERROR,
    3: logging.WARNING,
    2: logging.INFO,
    1: logging.DEBUG,
    0: logging.NOTSET,
}


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse the command line and set the console log level from
    '--verbose'."""
    parser = argparse.ArgumentParser(
        prog="mvgf",
        description="Simulate and analyse McKean-Vlasov gradient flows on"
        " the flat torus.",
    )
    parser.add_argument("subcommand", choices=runner.SUBCOMMANDS)
    parser.add_argument(
        "runs",
        nargs="*",
        metavar="<dir>",
        help="compare only: two existing output directories of 'run' or"
        " 'particles'.",
    )
    parser.add_argument(
        "-c",
        "--config",
        required=True,
        metavar="<path>",
        help="Scenario file.",
    )
    parser.add_argument(
        "-o", "--out", metavar="<dir>", help="Output directory override."
    )
    parser.add_argument(
        "--seed", type=int, help="Override the scenario seed (u64)."
    )
    parser.add_argument(
        "--damping",
        type=float,
        help="stationary only: damping of the fixed point iteration.",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        type=int,
        default=2,
        choices=range(0, 6),
        help="Set the verbosity level of logging messages. The lower the"
        " setting, the greater the verbosity. Supported logging levels:"
        " 0=UNSET, 1=DEBUG, 2=INFO, 3=WARNING, 4=ERROR, 5=CRITICAL",
    )
    parser.add_argument(
        "--log-file", metavar="<path>", help="Also log to this file."
    )

    arguments = parser.parse_args(argv)

    if arguments.runs and (
        arguments.subcommand != "compare" or len(arguments.runs) != 2
    ):
        parser.error("exactly two run directories are accepted, by compare")
    if arguments.seed is not None and not 0 <= arguments.seed < 2**64:
        parser.error("--seed must be an unsigned 64-bit integer")

    level = _LOG_LEVELS[arguments.verbose]
    log.set_log_level(level)
    if log.console_handler is None:
        log.add_console_handler(level)
    else:
        log.set_console_log_level(level)

    return arguments


def execute(arguments: argparse.Namespace) -> runner.Outcome:
    scenario = load_scenario(arguments.config)
    if arguments.seed is not None:
        scenario = dataclasses.replace(scenario, seed=arguments.seed)

    base_dir = os.path.dirname(os.path.abspath(arguments.config))
    runs = tuple(arguments.runs) if arguments.runs else None
    return runner.run_scenario(
        scenario,
        arguments.subcommand,
        out_dir=arguments.out,
        base_dir=base_dir,
        damping=arguments.damping,
        runs=runs,
    )


def _error_record(error: Exception) -> str:
    return json.dumps(
        {"status": "error", "kind": type(error).__name__, "message": str(error)}
    )


def main(argv: Optional[List[str]] = None) -> int:
    arguments = parse_arguments(argv)
    if arguments.log_file:
        log.enable_file_logging(arguments.log_file)

    try:
        outcome = execute(arguments)

    except _CONFIGURATION_ERRORS as e:
        sys.stderr.write(_error_record(e) + "\n")
        return EXIT_CONFIGURATION

    except exceptions.NumericalError as e:
        sys.stderr.write(_error_record(e) + "\n")
        return EXIT_NUMERICAL

    finally:
        if arguments.log_file:
            log.disable_file_logging()

    if outcome.status == "blowup_detected":
        logger.warning("Blow-up detected at t = %s", outcome.summary["t_final"])
    print(json.dumps(dict(outcome.summary, directory=outcome.directory)))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
