# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""Scenario files: the text form of one experiment.

Grammar, one statement per line:

    # full-line comment
    name = ks_chi10              top-level key
    [grid]                       section header
    M = 64                       key of the current section
    W.chi = 10                   key of another section, from anywhere

Values are Python literals (numbers, strings, lists and tuples) parsed with
ast.literal_eval; 'true' and 'false' are booleans and any other bare token
without spaces (a kind name, a path) is a string.  Sections [grid], [V],
[W], [initial], [flow] and [outputs] are required; [stationary],
[spectrum], [particles] and [fit] are optional.  Unknown sections or keys,
repeated keys and values that fail their schema are errors reported with
their line number.

serialize() writes every field explicitly, so that
parse_scenario(serialize(s)) == s.
"""

import ast
import logging
import re
from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Optional, Tuple

from mvgf import formats
from mvgf.config import (
    FitConfig,
    FlowConfig,
    ParticleConfig,
    SpectrumConfig,
    StationaryConfig,
)
from mvgf.exceptions import (
    InvalidConfigurationError,
    KernelSpecError,
    ScenarioError,
)
from mvgf.potentials import ConfinementSpec, InteractionSpec, Mode

logger = logging.getLogger(__name__)

_SECTION = re.compile(r"\[\s*([A-Za-z_]+)\s*\]$")
_ASSIGNMENT = re.compile(
    r"([A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)?)\s*=\s*(.*)$"
)
_BARE_TOKEN = re.compile(r"[^\s'\"\[\]\(\),=#]+$")
_IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z0-9_./\-]*$")
# Bare tokens that literal_eval() or the boolean rule would not read back.
_RESERVED = ("None", "True", "False", "true", "false")

SECTION_ORDER = (
    "grid",
    "V",
    "W",
    "initial",
    "flow",
    "outputs",
    "stationary",
    "spectrum",
    "particles",
    "fit",
)


@dataclass(frozen=True)
class InitialSpec:
    """Initial density.

    Attributes:
        kind: 'uniform_plus_modes' (1 + sum a_k cos(2 pi k.x)), 'tabulated'
            (a snapshot file) or 'gibbs_of_V' (exp(-V) / Z).
        modes: ((k, a_k), ...) for 'uniform_plus_modes'.
        path: Snapshot file for 'tabulated'.
    """

    kind: str = "uniform_plus_modes"
    modes: Tuple[Mode, ...] = ()
    path: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "modes",
            tuple(
                (tuple(int(kj) for kj in k), float(a)) for k, a in self.modes
            ),
        )
        if self.kind == "tabulated" and self.path is None:
            raise InvalidConfigurationError(
                "tabulated initial density without a path"
            )


@dataclass(frozen=True)
class Scenario:
    """A parsed and validated scenario.

    Paths are kept as written; they are resolved when the scenario runs.
    """

    name: str
    dim: int
    points_per_axis: int
    confinement: ConfinementSpec
    interaction: InteractionSpec
    initial: InitialSpec
    flow: FlowConfig
    outputs: str
    seed: int = 0
    stationary: StationaryConfig = field(default_factory=StationaryConfig)
    spectrum: SpectrumConfig = field(default_factory=SpectrumConfig)
    particles: ParticleConfig = field(default_factory=ParticleConfig)
    fit: FitConfig = field(default_factory=FitConfig)


class _Entry:
    """A parsed value and the line it came from."""

    __slots__ = ("value", "line")

    def __init__(self, value: Any, line: int):
        self.value = value
        self.line = line


def _parse_value(text: str, line: int) -> Any:
    text = text.strip()
    if not text:
        raise ScenarioError("missing value", line)
    if text in ("true", "false"):
        return text == "true"
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        if _BARE_TOKEN.match(text):
            return text
        raise ScenarioError("cannot parse value " + repr(text), line) from None


_Entries = Dict[str, _Entry]


def _tokenize(text: str) -> Tuple[_Entries, Dict[str, _Entries], Dict[str, int]]:
    """Split 'text' into top-level entries and section entries.

    Also returns the first line that mentions every section.
    """
    top: _Entries = {}
    sections: Dict[str, _Entries] = {}
    headers: Dict[str, int] = {}
    declared = set()
    current: Optional[str] = None

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue

        header = _SECTION.match(line)
        if header:
            current = header.group(1)
            if current not in formats.SECTION_FIELDS:
                raise ScenarioError("unknown section [" + current + "]", number)
            if current in declared:
                raise ScenarioError("repeated section [" + current + "]", number)
            declared.add(current)
            headers.setdefault(current, number)
            sections.setdefault(current, {})
            continue

        assignment = _ASSIGNMENT.match(line)
        if not assignment:
            raise ScenarioError(
                "expected 'key = value' or '[section]'", number
            )
        key, value_text = assignment.groups()

        if "." in key:
            section, key = key.split(".", 1)
            if section not in formats.SECTION_FIELDS:
                raise ScenarioError("unknown section " + repr(section), number)
            headers.setdefault(section, number)
            target = sections.setdefault(section, {})
            known = formats.SECTION_FIELDS[section]
            where = "[" + section + "]"
        elif current is None:
            target = top
            known = formats.TOP_LEVEL_FIELDS
            where = "the top level"
        else:
            target = sections[current]
            known = formats.SECTION_FIELDS[current]
            where = "[" + current + "]"

        if key not in known:
            raise ScenarioError(
                "unknown key " + repr(key) + " in " + where, number
            )
        if key in target:
            raise ScenarioError(
                "repeated key " + repr(key) + " (first on line "
                + str(target[key].line) + ")",
                number,
            )
        target[key] = _Entry(_parse_value(value_text, number), number)

    return top, sections, headers


def _check(
    entries: Dict[str, _Entry],
    known: Dict[str, Any],
    where: str,
    line: int,
) -> Dict[str, Any]:
    """Schema-check 'entries' key by key and return the raw values."""
    for key, schema in known.items():
        if key not in entries:
            if formats.is_required(schema):
                raise ScenarioError(
                    "missing key " + repr(key) + " in " + where, line
                )
            continue
        problem = formats.first_mismatch(schema, entries[key].value)
        if problem is not None:
            raise ScenarioError(
                where + " " + key + ": " + problem, entries[key].line
            )
    return {key: entry.value for key, entry in entries.items()}


def _kernel_error(e: KernelSpecError, line: int) -> ScenarioError:
    return ScenarioError(e.message, line, e.assumption)


def _build(cls, values: Dict[str, Any], line: int, where: str):
    """cls(**values), with construction errors turned into ScenarioErrors."""
    try:
        return cls(**values)
    except KernelSpecError as e:
        raise _kernel_error(e, line) from e
    except InvalidConfigurationError as e:
        raise ScenarioError(where + ": " + str(e), line) from e


def parse_scenario(text: str) -> Scenario:
    """Parse and validate the scenario in 'text'.

    Raises:
        ScenarioError: grammar errors, unknown or missing keys, values
            failing their schema, and constraint violations, with the line
            number and, for kernel constraints, the violated assumption.
    """
    top, sections, headers = _tokenize(text)

    top_values = _check(top, formats.TOP_LEVEL_FIELDS, "the top level", 1)
    for name in formats.REQUIRED_SECTIONS:
        if name not in sections:
            raise ScenarioError("missing section [" + name + "]")

    raw = {
        name: _check(
            sections.get(name, {}),
            formats.SECTION_FIELDS[name],
            "[" + name + "]",
            headers.get(name, 1),
        )
        for name in SECTION_ORDER
    }

    def line_of(section: str, key: str) -> int:
        entry = sections.get(section, {}).get(key)
        return entry.line if entry is not None else headers.get(section, 1)

    dim = raw["grid"]["dim"]
    confinement = _build(ConfinementSpec, raw["V"], line_of("V", "kind"), "[V]")
    interaction = _build(InteractionSpec, raw["W"], line_of("W", "kind"), "[W]")
    try:
        interaction.check_dimension(dim)
    except KernelSpecError as e:
        raise _kernel_error(e, line_of("W", "terms")) from e

    for section in ("V", "W", "initial"):
        for k, _ in raw[section].get("modes", ()):
            if len(k) != dim:
                raise ScenarioError(
                    "mode " + repr(tuple(k)) + " does not have " + str(dim)
                    + " components",
                    line_of(section, "modes"),
                )

    def optional(cls, section: str):
        where = "[" + section + "]"
        return _build(cls, raw[section], headers.get(section, 1), where)

    scenario = Scenario(
        name=top_values["name"],
        seed=top_values.get("seed", 0),
        dim=dim,
        points_per_axis=raw["grid"]["M"],
        confinement=confinement,
        interaction=interaction,
        initial=_build(
            InitialSpec, raw["initial"], line_of("initial", "kind"), "[initial]"
        ),
        flow=_build(FlowConfig, raw["flow"], headers["flow"], "[flow]"),
        outputs=raw["outputs"]["directory"],
        stationary=optional(StationaryConfig, "stationary"),
        spectrum=optional(SpectrumConfig, "spectrum"),
        particles=optional(ParticleConfig, "particles"),
        fit=optional(FitConfig, "fit"),
    )

    for key in ("bandwidth_modes", "smoothing_modes"):
        if getattr(scenario.particles, key) > scenario.points_per_axis // 2:
            raise ScenarioError(
                "[particles] " + key + " exceeds M/2", line_of("particles", key)
            )
    logger.debug("Parsed scenario %s", scenario.name)
    return scenario


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        if _IDENTIFIER.match(value) and value not in _RESERVED:
            return value
        return repr(value)
    if isinstance(value, tuple) and value and isinstance(value[0], tuple):
        # Sequences of modes, terms or species are written as lists.
        return repr(list(value))
    return repr(value)


def _config_values(config) -> Dict[str, Any]:
    return {f.name: getattr(config, f.name) for f in fields(config)}


def _section_values(scenario: Scenario) -> List[Tuple[str, Dict[str, Any]]]:
    v = scenario.confinement
    w = scenario.interaction
    initial = scenario.initial
    return [
        ("grid", {"dim": scenario.dim, "M": scenario.points_per_axis}),
        ("V", {"kind": v.kind, "modes": v.modes, "path": v.path}),
        (
            "W",
            {
                "kind": w.kind,
                "chi": w.chi,
                "alpha": w.alpha,
                "terms": w.terms,
                "modes": w.modes,
                "species": w.species,
            },
        ),
        (
            "initial",
            {"kind": initial.kind, "modes": initial.modes, "path": initial.path},
        ),
        ("flow", _config_values(scenario.flow)),
        ("outputs", {"directory": scenario.outputs}),
        ("stationary", _config_values(scenario.stationary)),
        ("spectrum", _config_values(scenario.spectrum)),
        ("particles", _config_values(scenario.particles)),
        ("fit", _config_values(scenario.fit)),
    ]


def serialize(scenario: Scenario) -> str:
    """Deterministic text form of 'scenario'.

    Unset optional values (None, empty mode lists) are left out.
    """
    lines = [
        "name = " + _format_value(scenario.name),
        "seed = " + str(scenario.seed),
    ]
    for section, values in _section_values(scenario):
        lines.append("")
        lines.append("[" + section + "]")
        for key, value in values.items():
            if value is None or value == ():
                continue
            lines.append(key + " = " + _format_value(value))
    return "\n".join(lines) + "\n"


def load_scenario(path: str) -> Scenario:
    """Read and parse a scenario file.

    Raises:
        ScenarioError: as parse_scenario(), or the file cannot be read.
    """
    try:
        with open(path, "r", encoding="utf-8") as file_obj:
            text = file_obj.read()
    except OSError as e:
        raise ScenarioError(
            "cannot read scenario " + repr(path) + ": " + str(e)
        ) from e
    return parse_scenario(text)
