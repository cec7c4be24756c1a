"""Experiment configuration read from TOML files."""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .automorphisms import Automorphism
from .errors import DomainError


class ConfigError(DomainError):
    code = "invalid-config"


_BUDGETS = ("word_radius", "alpha_len", "event_cap", "samples", "ball_cap")
_CONSTANTS = ("eta", "m_breve", "L0", "lambda", "M")


@dataclass
class ExperimentConfig:
    inputs: Dict[str, str] = field(default_factory=dict)
    budgets: Dict[str, int] = field(default_factory=dict)
    seed: Optional[int] = None
    outputs: Dict[str, str] = field(default_factory=dict)
    constants: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for k, v in self.budgets.items():
            if k not in _BUDGETS:
                raise ConfigError(f"unknown budget {k!r}")
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"budget {k} must be a positive integer, got {v!r}")
        for k in self.constants:
            if k not in _CONSTANTS:
                raise ConfigError(f"unknown constant override {k!r}")
        self.constants = {k: str(v) for k, v in self.constants.items()}
        if self.seed is not None and (isinstance(self.seed, bool) or not isinstance(self.seed, int)):
            raise ConfigError("seed must be an integer")

    def budget(self, name, fallback=None):
        return self.budgets.get(name, fallback)

    def to_dict(self):
        return asdict(self)


def load_config(path) -> ExperimentConfig:
    data = _read_toml(path)
    known = {"inputs", "budgets", "seed", "outputs", "constants", "generators", "rank"}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown config sections: {sorted(extra)}")
    return ExperimentConfig(dict(data.get("inputs", {})), dict(data.get("budgets", {})),
                            data.get("seed"), dict(data.get("outputs", {})),
                            dict(data.get("constants", {})))


def _read_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _aut_text(value) -> str:
    if isinstance(value, list):
        return "\n".join(value)
    return "\n".join(part.strip() for part in str(value).replace(";", "\n").splitlines())


def load_group(path):
    """Named generators from the [generators] table of a TOML file.

    Each value is an automorphism in the text format, as one string (lines or
    ';'-separated) or a list of lines.
    """
    data = _read_toml(path)
    gens = data.get("generators")
    if not gens:
        raise ConfigError(f"{path}: no [generators] table")
    names: List[str] = []
    auts: List[Automorphism] = []
    for name, value in gens.items():
        names.append(name)
        auts.append(Automorphism.from_text(_aut_text(value)))
    rank = data.get("rank")
    if rank is not None and any(a.rank != rank for a in auts):
        raise ConfigError(f"{path}: generators do not have rank {rank}")
    return names, auts
