import pytest

from gompertz_opt.config import format_config, load_config, parse_config, resolved_items
from gompertz_opt.errors import ConfigError
from gompertz_opt.model import CALIBRATED_EFFICACY, CALIBRATED_PARAMS

CALIBRATED_TEXT = """\
# calibrated household
r = 0.01
delta = 0.01
beta = 0.077
gamma = 0.67
zeta = 0.5
m0 = 0.00019
efficacy = isoelastic
a = 0.1
q = 0.46
"""


def test_parse_calibrated():
    params, eff = parse_config(CALIBRATED_TEXT)
    assert params == CALIBRATED_PARAMS
    assert eff == CALIBRATED_EFFICACY


def test_format_roundtrip():
    text = format_config(CALIBRATED_PARAMS, CALIBRATED_EFFICACY)
    assert parse_config(text) == (CALIBRATED_PARAMS, CALIBRATED_EFFICACY)


def test_default_efficacy_is_zero():
    params, eff = parse_config("r=0.01\ndelta=0.01\nbeta=0.077\ngamma=0.67\nzeta=0.5\n")
    assert eff.is_zero


@pytest.mark.parametrize("text, line", [
    ("r = 0.01\nbogus = 3\n", 2),
    ("r = 0.01\nr = 0.02\n", 2),
    ("r = 0.01\ndelta = abc\n", 2),
    ("r 0.01\n", 1),
    ("efficacy = quadratic\n", 1),
])
def test_errors_carry_line(text, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}:")


def test_missing_keys():
    with pytest.raises(ConfigError, match="missing required keys"):
        parse_config("r = 0.01\n")


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")


def test_resolved_items_order_independent():
    a = resolved_items(CALIBRATED_PARAMS, CALIBRATED_EFFICACY)
    assert set(a) >= {"r", "delta", "beta", "gamma", "zeta", "efficacy", "a", "q"}
