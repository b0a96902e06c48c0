"""
Scenario config files.

    # comment
    name = wide-cap
    n = 2
    box = [-pi, pi], [-0.75, 0.75]
    [kappa]
    operator = 0
    [g0]
    [1][1] = (1 - xn)^2

Inside a section every key is prefixed by the section name ("kappa.operator",
"g0[1][1]"). Scalar values are constant expressions.
"""

import logging
import re
from typing import Dict, List, Tuple

from pydantic import ValidationError

from app.core.exceptions import ConfigParseError, ExpressionSyntaxError
from app.parsers.expression import Node, parse_expression
from app.schemas.scenario import ScenarioDocument

logger = logging.getLogger(__name__)

_SECTION = re.compile(r"\[\s*([A-Za-z_]\w*)\s*\]$")
_ENTRY = re.compile(r"(g0|g1)\[\s*(\d+)\s*\]\[\s*(\d+)\s*\]$")
_INTERVAL = re.compile(r"\[([^\[\]]*)\]")
SCALAR_KEYS = ("name", "n", "width", "box", "L_spectrum", "smooth")


class ScenarioConfigParser:
    def parse(self, text: str, source: str = "config") -> ScenarioDocument:
        fields: Dict[str, object] = {"kappa": {}, "g0": {}, "g1": {}, "source": source}
        lines: Dict[str, int] = {}
        section = ""
        for number, raw in enumerate(text.splitlines(), start=1):
            content = raw.split("#", 1)[0].rstrip()
            if not content.strip():
                continue
            if "=" not in content:
                match = _SECTION.match(content.strip())
                if match is None:
                    raise ConfigParseError("expected 'key = value' or '[section]'", number, 1)
                section = match.group(1)
                continue

            eq = content.index("=")
            key = content[:eq].strip()
            if section:
                key = section + key if key.startswith("[") else f"{section}.{key}"
            value = content[eq + 1 :]
            column = eq + 2 + (len(value) - len(value.lstrip()))
            self._assign(fields, key, value.strip(), number, column)
            lines.setdefault(re.split(r"[.\[]", key, maxsplit=1)[0], number)

        missing = [k for k in ("name", "n", "box") if k not in fields]
        if missing:
            raise ConfigParseError(f"missing required keys {missing}", 1, 1)
        try:
            document = ScenarioDocument(**fields)
        except ValidationError as exc:
            error = exc.errors()[0]
            key = str(error["loc"][0]) if error["loc"] else ""
            raise ConfigParseError(error["msg"], lines.get(key, 1), 1) from exc
        logger.debug("Parsed scenario config %s from %s", document.name, source)
        return document

    def _assign(self, fields: Dict, key: str, value: str, line: int, column: int) -> None:
        entry = _ENTRY.match(key)
        if entry is not None:
            side, i, j = entry.group(1), int(entry.group(2)), int(entry.group(3))
            fields[side][(min(i, j), max(i, j))] = parse_expression(value, line, column)
            return
        if key.startswith("kappa."):
            fields["kappa"][key[len("kappa."):]] = self._constant(value, line, column)
            return
        if key not in SCALAR_KEYS:
            raise ConfigParseError(f"unknown key {key!r}", line, 1)
        if key == "name":
            fields["name"] = value
        elif key == "n":
            if not value.isdigit():
                raise ConfigParseError(f"n must be a positive integer, got {value!r}", line, column)
            fields["n"] = int(value)
        elif key == "width":
            fields["width"] = self._constant(value, line, column)
        elif key == "box":
            fields["box"] = self._intervals(value, line, column)
        elif key == "L_spectrum":
            fields["L_spectrum"] = [
                self._constant(part, line, column + offset) for part, offset in _split(value, ",")
            ]
        elif key == "smooth":
            if value.lower() not in ("true", "false"):
                raise ConfigParseError(f"smooth must be true or false, got {value!r}", line, column)
            fields["smooth"] = value.lower() == "true"

    def _constant(self, text: str, line: int, column: int) -> float:
        node: Node = parse_expression(text, line, column)
        if node.coordinates():
            raise ConfigParseError("expected a constant expression", line, column)
        return float(node.evaluate(()))

    def _intervals(self, text: str, line: int, column: int) -> List[Tuple[float, float]]:
        intervals = []
        leftover = _INTERVAL.sub("", text).replace(",", "").strip()
        if leftover:
            raise ConfigParseError(f"box must be a list of [lo, hi] intervals, found {leftover!r}", line, column)
        for match in _INTERVAL.finditer(text):
            parts = _split(match.group(1), ",")
            if len(parts) != 2:
                raise ConfigParseError("an interval needs exactly two bounds", line, column + match.start())
            lo, hi = (
                self._constant(part, line, column + match.start(1) + offset) for part, offset in parts
            )
            intervals.append((lo, hi))
        return intervals


def _split(text: str, separator: str) -> List[Tuple[str, int]]:
    """Split keeping the column offset of each piece."""
    pieces, offset = [], 0
    for piece in text.split(separator):
        pieces.append((piece, offset))
        offset += len(piece) + len(separator)
    return pieces


def parse_scenario_config(text: str, source: str = "config") -> ScenarioDocument:
    try:
        return ScenarioConfigParser().parse(text, source)
    except ConfigParseError:
        raise
    except ExpressionSyntaxError as exc:
        raise ConfigParseError(exc.reason, exc.line, exc.column) from exc
