from pathlib import Path

import numpy as np
import pytest

from vectorplet.config import KEYS, PRESETS, SCENARIOS, Config, default_table, load_config, parse_config
from vectorplet.errors import ConfigError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_defaults_cover_every_key():
    names = [row[0] for row in default_table()]
    assert sorted(names) == sorted(KEYS)
    spec_keys = {"scenario", "nx", "dx", "dt", "steps", "m", "q", "M", "kappa", "epsilon",
                 "fd_order", "k0", "sigma", "omega_eps"}
    assert spec_keys <= set(KEYS)
    assert Config().kappa == 8 * np.pi


def test_sections_and_comments():
    cfg = parse_config("""
# comment
; another
[scenario]
scenario = vacuum
[grid]
nx = 32
dt = 0.05
[params]
m = 0.25
""")
    assert cfg.scenario == "vacuum" and cfg.nx == 32 and cfg.dt == 0.05 and cfg.m == 0.25
    assert cfg.steps == PRESETS["vacuum"]["steps"]


def test_keys_before_any_header_allowed():
    cfg = parse_config("nx = 16\nsteps = 3\n")
    assert cfg.nx == 16 and cfg.steps == 3 and cfg.scenario == "flat_dirac_packet"


@pytest.mark.parametrize("text, line, fragment", [
    ("nx = 16\nnxx = 3\n", 2, "unknown key"),
    ("[grid]\nm = 0.5\n", 2, "belongs in [params]"),
    ("nx = 16\nnx = 32\n", 2, "duplicate"),
    ("nx = sixteen\n", 1, "expects int"),
    ("[grid\n", 1, "malformed"),
    ("[physics]\n", 1, "unknown section"),
    ("just words\n", 1, "key = value"),
    ("dt =\n", 1, "empty value"),
])
def test_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line
    assert fragment in str(info.value) and f"line {line}" in str(info.value)


@pytest.mark.parametrize("text", ["scenario = warp\n", "nx = 4\n", "fd_order = 6\n", "dt = -1\n", "M = 0\n"])
def test_invalid_values_rejected(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")


def test_shipped_configs_parse():
    for name in SCENARIOS:
        assert load_config(CONFIGS / f"{name}.cfg").scenario == name
