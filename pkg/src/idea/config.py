"""INI run configuration with [synth], [features], [train] and [eval] sections."""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

from .autoenc import HyperParams
from .errors import ConfigError
from .evaluation import ExperimentConfig, experiment_configs
from .features import FeatureSpec
from .synthgen import SynthConfig

SECTIONS = ("synth", "features", "train", "eval")


@dataclass(frozen=True)
class RunConfig:
    sections: dict

    def has(self, name: str) -> bool:
        return name in self.sections

    def require(self, name: str) -> dict:
        if name not in self.sections:
            raise ConfigError(f"config is missing the [{name}] section")
        return self.sections[name]

    def synth(self) -> SynthConfig:
        return SynthConfig.from_mapping(self.require("synth"))

    def features(self) -> FeatureSpec:
        return FeatureSpec.from_mapping(self.sections.get("features", {}))

    def hyperparams(self) -> HyperParams:
        return HyperParams.from_mapping(self.sections.get("train", {}))

    def experiments(self) -> list[ExperimentConfig]:
        return experiment_configs(self.sections.get("eval", {}))


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    unknown = [s for s in cp.sections() if s not in SECTIONS]
    if unknown:
        raise ConfigError(f"{source}: unknown section(s) {unknown}; expected {list(SECTIONS)}")
    return RunConfig({s: dict(cp.items(s)) for s in cp.sections()})


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, str(path))
