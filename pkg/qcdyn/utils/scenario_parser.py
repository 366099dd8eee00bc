"""Line-oriented scenario files.

Grammar::

    # comment
    [section]
    key = value          # trailing comment
    path = runs/#3/psi.npz
    list_key = 1.0, 2.0

A ``#`` opens a comment only at the start of a line or after whitespace.
Section and key names are fixed by the scenario schema; anything else is an
error that names ``section.key``. ``dump_scenario`` writes every field with
its materialized default in schema order, so parse(dump(s)) == s.
"""
import logging
import re
from enum import Enum
from pathlib import Path
from typing import Dict, Tuple, Union

from pydantic import ValidationError

from qcdyn.core.config import settings
from qcdyn.core.exceptions import ScenarioParseError, ScenarioValidationError
from qcdyn.schemas.scenario import SECTION_ORDER, Scenario
from qcdyn.utils.grids import SpatialGrid

logger = logging.getLogger(__name__)

_SECTION = re.compile(r"^\[\s*([A-Za-z_][A-Za-z0-9_]*)\s*\]$")
_ENTRY = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")
_COMMENT = re.compile(r"(?:^|\s)#.*$")


def _tokenize(text: str) -> Tuple[Dict[str, Dict[str, str]], Dict[str, int]]:
    sections: Dict[str, Dict[str, str]] = {}
    lines: Dict[str, int] = {}
    current = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = _COMMENT.sub("", raw).strip()
        if not line:
            continue
        header = _SECTION.match(line)
        if header:
            current = header.group(1)
            if current in sections:
                raise ScenarioParseError(f"section [{current}] appears twice", number)
            sections[current] = {}
            lines[current] = number
            continue
        entry = _ENTRY.match(line)
        if not entry:
            raise ScenarioParseError(f"expected 'key = value' or '[section]', got {raw.strip()!r}", number)
        if current is None:
            raise ScenarioParseError(f"key '{entry.group(1)}' appears before any [section]", number)
        key, value = entry.group(1), entry.group(2).strip()
        if not value:
            raise ScenarioParseError(f"key '{current}.{key}' has no value", number)
        if key in sections[current]:
            raise ScenarioParseError(f"key '{current}.{key}' is set twice", number)
        sections[current][key] = value
        lines[f"{current}.{key}"] = number
    return sections, lines


def _validation_error(exc: ValidationError, lines: Dict[str, int]) -> ScenarioValidationError:
    error = exc.errors()[0]
    loc = [str(part) for part in error["loc"] if not isinstance(part, int)]
    key = ".".join(loc[:2]) if loc else "scenario"
    message = error["msg"]
    if error["type"] == "extra_forbidden":
        message = "unknown key"
    elif error["type"] == "missing":
        message = "required key is missing"
    if key in lines:
        message = f"{message} (line {lines[key]})"
    return ScenarioValidationError(key, message)


def parse_scenario(text: str) -> Scenario:
    sections, lines = _tokenize(text)
    for name, entries in sections.items():
        if name not in SECTION_ORDER:
            key = f"{name}.{next(iter(entries))}" if entries else name
            raise ScenarioValidationError(key, f"unknown key (line {lines.get(key, lines[name])})")
    try:
        scenario = Scenario.model_validate(sections)
    except ValidationError as exc:
        raise _validation_error(exc, lines) from exc
    scenario = _materialize_defaults(scenario)
    problems = scenario.constraint_violations()
    if problems:
        key, constraint = problems[0]
        raise ScenarioValidationError(key, constraint)
    logger.debug(f"Parsed scenario: method={scenario.method.name.value}, sections={list(sections)}")
    return scenario


def _materialize_defaults(scenario: Scenario) -> Scenario:
    """Fill grid-dependent defaults (the classical smearing widths) so the dump is explicit."""
    initial = scenario.initial
    if initial.sigma_q is not None and initial.sigma_p is not None:
        return scenario
    g = scenario.grid
    dq = SpatialGrid(g.q_min, g.q_max, g.n_q, g.q_boundary).dx
    dp = SpatialGrid(g.p_min, g.p_max, g.n_p, g.p_boundary).dx
    update = {
        "sigma_q": initial.sigma_q if initial.sigma_q is not None else settings.SMEARING_CELLS * dq,
        "sigma_p": initial.sigma_p if initial.sigma_p is not None else settings.SMEARING_CELLS * dp,
    }
    return scenario.model_copy(update={"initial": initial.model_copy(update=update)})


def load_scenario(path: Union[str, Path]) -> Scenario:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(_format(item) for item in value)
    return str(value)


def dump_scenario(scenario: Scenario) -> str:
    out = []
    for name in SECTION_ORDER:
        section = getattr(scenario, name)
        out.append(f"[{name}]")
        for key in type(section).model_fields:
            value = getattr(section, key)
            if value is None:
                continue
            out.append(f"{key} = {_format(value)}")
        out.append("")
    return "\n".join(out)
