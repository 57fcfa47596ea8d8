"""Run configuration: TOML file plus command-line overrides, unknown keys rejected."""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .core import MicrogridError


class ConfigError(MicrogridError, ValueError):
    pass


@dataclass
class ScenarioSection:
    source: str = "toy"            # "toy", "synth" or a scenario directory
    preset: str = "default"        # "default", "rye", "lac_megantic", "mesa"
    steps: int = 48
    start_epoch: int = 1_704_067_200
    weather: str = "synthetic"     # "synthetic" or a CSV with temperature and irradiance
    price: str = "tariff"          # "tariff" or "flat"
    flat_price: float = 0.1
    tier1_limit_kwh_per_day: float = 40.0
    tier1_rate: float = 0.06905
    tier2_rate: float = 0.10652


@dataclass
class SynthSection:
    n_buildings: int = 30
    scale: float = 1.5
    mult_sigma: float = 0.2
    add_sigma: float = 0.1
    panel_area_m2: float = 3500.0
    efficiency: float = 0.2


@dataclass
class EnvSection:
    kind: str = "discrete"
    layout: str = "auto"
    episode_steps: int = 0         # 0 = whole horizon
    random_start: bool = False


@dataclass
class BaselineSection:
    kind: str = "rule"             # "rule" or "milp"
    variant: str = "simple"
    window_steps: int = 0          # 0 = whole horizon
    mode: str = "corrected"
    objective_mode: str = "cost_only"
    exclusivity: str = "pairwise"
    time_limit_s: float = 0.0      # 0 = no limit
    backend: str = "embedded"


@dataclass
class TrainSection:
    total_steps: int = 20_000
    eval_episodes: int = 1


@dataclass
class RunConfig:
    seed: int = 0
    out: str = "runs"
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    microgrid: dict = field(default_factory=dict)
    synth: SynthSection = field(default_factory=SynthSection)
    env: EnvSection = field(default_factory=EnvSection)
    reward: dict = field(default_factory=dict)
    ppo: dict = field(default_factory=dict)
    baseline: BaselineSection = field(default_factory=BaselineSection)
    train: TrainSection = field(default_factory=TrainSection)

    def as_dict(self) -> dict:
        return asdict(self)

    def digest(self, *sections: str) -> str:
        """SHA-256 of the named sections (all when none given)."""
        d = self.as_dict()
        if sections:
            d = {k: d[k] for k in sections}
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    def write_snapshot(self, directory) -> Path:
        p = Path(directory) / "resolved_config.json"
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n")
        return p


_FREE_SECTIONS = {"microgrid", "reward", "ppo"}  # validated by their target classes


def _coerce(cls, data: Mapping[str, Any], where: str):
    if not isinstance(data, Mapping):
        raise ConfigError(f"{where or 'config'} must be a table")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where or 'top level'}: {', '.join(unknown)}")
    kwargs = {}
    defaults = cls()
    for name, value in data.items():
        current = getattr(defaults, name)
        key = f"{where}.{name}" if where else name
        if is_dataclass(current):
            kwargs[name] = _coerce(type(current), value, key)
        elif name in _FREE_SECTIONS:
            if not isinstance(value, Mapping):
                raise ConfigError(f"{key} must be a table")
            kwargs[name] = dict(value)
        else:
            kwargs[name] = _scalar(current, value, key)
    return cls(**kwargs)


def _scalar(default, value, key):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key} must be a boolean")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number")
        return float(value)
    if isinstance(default, str) and not isinstance(value, str):
        raise ConfigError(f"{key} must be a string")
    return value


def load_config(path=None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Read ``path`` (TOML) and apply dotted-key ``overrides``; overrides win."""
    data: dict = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            data = tomllib.loads(p.read_text())
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{p}: {exc}") from exc
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        node = data
        *parents, leaf = dotted.split(".")
        for part in parents:
            node = node.setdefault(part, {})
        node[leaf] = value
    return _coerce(RunConfig, data, "")
