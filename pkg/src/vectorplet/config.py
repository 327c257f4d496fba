"""Run configuration: a flat ``key = value`` text format with optional ``[section]`` headers.

Lines starting with ``#`` or ``;`` are comments.  Each key belongs to one
section; it may appear under that header or before any header.  Unknown keys,
misplaced keys, duplicates and malformed values are errors that carry the
line number.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError

SCENARIOS = ("vacuum", "flat_dirac_packet", "weakfield_packet", "boost_degeneracy",
             "higgs_relax", "einstein_residual")

# key -> (section, type)
KEYS = {
    "scenario": ("scenario", str),
    "nx": ("grid", int),
    "dx": ("grid", float),
    "dt": ("grid", float),
    "steps": ("grid", int),
    "fd_order": ("grid", int),
    "m": ("params", float),
    "q": ("params", float),
    "M": ("params", float),
    "kappa": ("params", float),
    "epsilon": ("params", float),
    "k0": ("params", float),
    "sigma": ("params", float),
    "omega_eps": ("params", float),
    "snapshot_every": ("outputs", int),
}
SECTIONS = ("scenario", "grid", "params", "outputs")


@dataclass(frozen=True)
class Config:
    scenario: str = "flat_dirac_packet"
    nx: int = 256
    dx: float = 1.0
    dt: float = 0.08
    steps: int = 1000
    fd_order: int = 4
    m: float = 0.5
    q: float = 0.0
    M: float = 1000.0
    kappa: float = 8.0 * np.pi
    epsilon: float = 1e-3
    k0: float = 0.3
    sigma: float = 8.0
    omega_eps: float = 0.01
    snapshot_every: int = 0

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; expected one of {', '.join(SCENARIOS)}")
        if self.nx < 8:
            raise ConfigError("nx must be at least 8")
        if self.dx <= 0 or self.dt <= 0:
            raise ConfigError("dx and dt must be positive")
        if self.steps < 0 or self.snapshot_every < 0:
            raise ConfigError("steps and snapshot_every must be non-negative")
        if self.fd_order not in (2, 4):
            raise ConfigError("fd_order must be 2 or 4")
        if self.M <= 0 or self.kappa <= 0:
            raise ConfigError("M and kappa must be positive")
        return self


# Scenario presets fill keys the file leaves unset.
PRESETS = {
    "vacuum": {"nx": 64, "steps": 100, "dt": 0.1},
    "flat_dirac_packet": {},
    "weakfield_packet": {"nx": 512, "dt": 0.15, "steps": 2000, "m": 2.5, "sigma": 16.0},
    "boost_degeneracy": {"steps": 0},
    "higgs_relax": {"nx": 16, "steps": 0, "omega_eps": 0.2},
    "einstein_residual": {"nx": 128, "steps": 0, "omega_eps": 0.05},
}


def _convert(key, raw, line):
    kind = KEYS[key][1]
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key} expects {kind.__name__}, got {raw!r}", line) from None
    return raw


def parse_config(text):
    """Parse config text into a validated :class:`Config`."""
    section = None
    given = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", lineno)
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        home = KEYS[key][0]
        if section is not None and section != home:
            raise ConfigError(f"key {key!r} belongs in [{home}], found in [{section}]", lineno)
        if key in given:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        if not value:
            raise ConfigError(f"empty value for {key!r}", lineno)
        given[key] = _convert(key, value, lineno)
    scenario = given.get("scenario", Config.scenario)
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; expected one of {', '.join(SCENARIOS)}")
    values = {**PRESETS[scenario], **given}
    return replace(Config(), **values).validate()


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)


def default_table():
    """``(key, section, default)`` rows for documentation."""
    base = Config()
    return [(f.name, KEYS[f.name][0], getattr(base, f.name)) for f in fields(Config)]
