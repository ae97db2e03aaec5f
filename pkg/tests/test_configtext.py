"""Flat dotted-key configuration text format."""

import pytest

from flagmult.configtext import format_value, parse_config_text, parse_value
from flagmult.errors import ConfigError


def test_scalars():
    assert parse_value("3") == 3
    assert parse_value("3.5") == 3.5
    assert parse_value("-1e-3") == pytest.approx(-1e-3)
    assert parse_value("true") is True
    assert parse_value("false") is False
    assert parse_value('"hello world"') == "hello world"
    assert parse_value("bare_word") == "bare_word"


def test_collections():
    assert parse_value("[1, 2, 3]") == [1, 2, 3]
    assert parse_value("{ a = 1, b = [2, 3] }") == {"a": 1, "b": [2, 3]}
    assert parse_value("[]") == []


def test_config_basic():
    text = """
# a comment
grid.n1 = 64
grid.l1 = 2.0
plan.kind = Separable
"""
    cfg = parse_config_text(text)
    assert cfg == {"grid.n1": 64, "grid.l1": 2.0, "plan.kind": "Separable"}


def test_multiline_value():
    text = "coeffs = [1, 2,\n  3,\n  4]\n"
    cfg = parse_config_text(text)
    assert cfg["coeffs"] == [1, 2, 3, 4]


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError) as err:
        parse_config_text("a = 1\na = 2\n")
    assert err.value.line == 2


def test_missing_equals():
    with pytest.raises(ConfigError):
        parse_config_text("just a line\n")


def test_format_round_trip():
    value = {"builder": "rank_one",
             "params": {"windows": ["psi", "phi", "one"], "scales": [1, -2, 0],
                        "flag": True, "weight": 0.5}}
    assert parse_value(format_value(value)) == value
