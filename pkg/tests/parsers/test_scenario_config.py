import math
from pathlib import Path

import pytest

from app.core.exceptions import ConfigParseError
from app.parsers.scenario_config import parse_scenario_config

CONFIG_DIR = Path(__file__).resolve().parents[2] / "config" / "scenarios"

MINIMAL = """\
name = minimal
n = 2
box = [0, 1], [-0.5, 0.5]
"""


def test_parse_shipped_disk_config():
    document = parse_scenario_config((CONFIG_DIR / "flat-disk.cfg").read_text(encoding="utf-8"), "flat-disk.cfg")

    assert document.name == "config-disk-2d"
    assert document.n == 2
    assert document.width == 0.5
    assert document.box[0] == pytest.approx((-math.pi, math.pi))
    assert document.kappa == {"operator": 0.0, "ricci": 0.0, "scalar": 0.0, "isotropic2": 0.0}
    assert document.L_spectrum == [2.0]
    assert document.smooth is False
    assert set(document.g0) == {(1, 1)}
    assert document.source == "flat-disk.cfg"


def test_defaults_and_symmetric_entries():
    document = parse_scenario_config(MINIMAL + "[g1]\n[2][1] = 0.1 * x1  # off-diagonal\n")
    assert document.width == 0.5
    assert document.kappa == {}
    assert list(document.g1) == [(1, 2)]


@pytest.mark.parametrize(
    "extra, line",
    [
        ("colour = blue\n", 4),
        ("n = two\n", 4),
        ("smooth = maybe\n", 4),
        ("[kappa]\noperator = x1\n", 5),
        ("[kappa]\nholonomy = 1\n", 5),
        ("just words\n", 4),
    ],
)
def test_bad_lines_report_their_line(extra, line):
    with pytest.raises(ConfigParseError) as exc:
        parse_scenario_config(MINIMAL + extra)
    assert exc.value.line == line


def test_expression_error_column_points_into_value():
    with pytest.raises(ConfigParseError) as exc:
        parse_scenario_config(MINIMAL + "[g0]\n[1][1] = (1 - xn\n")
    assert exc.value.line == 5
    assert exc.value.column == 17


def test_missing_required_keys():
    with pytest.raises(ConfigParseError, match="missing required keys"):
        parse_scenario_config("name = lonely\n")


@pytest.mark.parametrize(
    "box",
    ["[0, 1]", "[0, 1], [1, 0]", "[0, 1, 2], [0, 1]", "[0, 1], [0, 1] extra"],
)
def test_malformed_box(box):
    with pytest.raises(ConfigParseError):
        parse_scenario_config(f"name = b\nn = 2\nbox = {box}\n")


def test_entry_outside_metric():
    with pytest.raises(ConfigParseError):
        parse_scenario_config(MINIMAL + "[g0]\n[1][3] = 1\n")
