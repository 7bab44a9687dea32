"""Run configuration: TOML file loading with strict key validation.

A config file groups options by component::

    [encoder]
    alpha = 0.6
    beta = 1.2
    mode = "bidir"

    [decoder]
    gamma = 3.0
    epsilon = 0.9063

    [eval]
    iou_thresholds = [0.5, 0.6, 0.7, 0.8, 0.9]
    tr = 0.7
    tp = 0.6

    [losses]
    lambda1 = 0.5
    lambda2 = 0.1
    ohem_ratio = 3.0

Unknown sections or keys are rejected before any work starts.  Command line
flags override file values.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .decoder import DecoderConfig
from .encoder import EncoderConfig
from .errors import ConfigError, ParameterError
from .evaluation import EvalConfig
from .losses import LossWeights

_SECTIONS = {
    "encoder": EncoderConfig,
    "decoder": DecoderConfig,
    "eval": EvalConfig,
    "losses": LossWeights,
}


@dataclass
class RunConfig:
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    decoder: DecoderConfig = field(default_factory=DecoderConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    losses: LossWeights = field(default_factory=LossWeights)

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            data = tomllib.loads(path.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(data, source=str(path))

    @classmethod
    def from_dict(cls, data: dict, source: str = "<config>") -> "RunConfig":
        unknown = set(data) - set(_SECTIONS)
        if unknown:
            raise ConfigError(f"{source}: unknown section(s) {sorted(unknown)}")
        kwargs = {}
        for section, config_cls in _SECTIONS.items():
            values = data.get(section, {})
            if not isinstance(values, dict):
                raise ConfigError(f"{source}: [{section}] must be a table")
            names = {f.name for f in dataclasses.fields(config_cls)}
            bad = set(values) - names
            if bad:
                raise ConfigError(f"{source}: unknown key(s) {sorted(bad)} in [{section}]")
            if "iou_thresholds" in values:
                values = dict(values, iou_thresholds=tuple(values["iou_thresholds"]))
            try:
                kwargs[section] = config_cls(**values)
            except ParameterError as exc:
                raise ConfigError(f"{source}: [{section}] {exc}") from exc
        return cls(**kwargs)

    def override(self, section: str, **updates) -> "RunConfig":
        """New RunConfig with non-None updates applied to one section."""
        updates = {k: v for k, v in updates.items() if v is not None}
        if not updates:
            return self
        current = getattr(self, section)
        try:
            replaced = dataclasses.replace(current, **updates)
        except ParameterError as exc:
            raise ConfigError(f"[{section}] {exc}") from exc
        return dataclasses.replace(self, **{section: replaced})


def load_or_default(path=None) -> RunConfig:
    return RunConfig.load(path) if path else RunConfig()
