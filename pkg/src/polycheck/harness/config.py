"""Experiment configuration (YAML) and validation."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from ..adversary import STRATEGY_KINDS
from ..field import is_prime
from ..multiparty import POLICIES

MODES = ("eval", "attack", "adaptive", "multiparty", "multivar", "bench")
FORMATS = ("table", "records")


class ConfigError(ValueError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid config:\n" + "\n".join(f"  - {v}" for v in self.violations))


@dataclass
class MultipartyParams:
    n: int = 4
    malicious: list[int] = field(default_factory=list)
    strategy: str = "fixed-offset"
    policy: str = "recompute"
    rs_t: int | None = None


@dataclass
class MultivarParams:
    m: int = 2
    n_deg: int = 3


@dataclass
class ExperimentConfig:
    mode: str
    q: int = 17
    k: int = 4
    c: int = 1
    rounds: int = 1
    trials: int = 1000
    adversary: str = "fixed-offset"
    feedback: bool = True
    seed: int = 0
    confidence: float = 0.99
    ks: list[int] = field(default_factory=lambda: [10_000, 40_000, 160_000])
    multiparty: MultipartyParams = field(default_factory=MultipartyParams)
    multivar: MultivarParams = field(default_factory=MultivarParams)
    output: str | None = None
    format: str = "records"
    threads: int = 1

    def validate(self) -> None:
        v: list[str] = []
        if self.mode not in MODES:
            v.append(f"mode must be one of {MODES}, got {self.mode!r}")
        if not isinstance(self.q, int) or self.q >= 1 << 63 or not is_prime(self.q):
            v.append(f"q={self.q!r} must be a prime below 2^63")
        if self.k < 1:
            v.append("k must be >= 1")
        if self.c < 1:
            v.append("c must be >= 1")
        if self.rounds < 1:
            v.append("rounds must be >= 1")
        if self.trials < 0:
            v.append("trials must be >= 0")
        if self.adversary not in STRATEGY_KINDS:
            v.append(f"adversary must be one of {STRATEGY_KINDS}")
        if self.mode in ("attack", "adaptive") and self.adversary == "honest":
            v.append(f"{self.mode} mode needs a dishonest adversary")
        if not 0 < self.confidence < 1:
            v.append("confidence must lie in (0, 1)")
        if not 0 <= self.seed < 1 << 64:
            v.append("seed must be an unsigned 64-bit integer")
        if self.format not in FORMATS:
            v.append(f"format must be one of {FORMATS}")
        if self.threads < 1:
            v.append("threads must be >= 1")
        if self.mode == "bench" and (not self.ks or any(k < 1 for k in self.ks)):
            v.append("bench needs a non-empty list of positive ks")
        mp = self.multiparty
        if self.mode == "multiparty":
            if mp.n < 2:
                v.append("multiparty.n must be >= 2")
            if any(not 0 <= j < mp.n for j in mp.malicious):
                v.append("multiparty.malicious indices must lie in [0, n)")
            if len(set(mp.malicious)) >= mp.n:
                v.append("at least one node must be honest")
            if mp.strategy not in STRATEGY_KINDS:
                v.append(f"multiparty.strategy must be one of {STRATEGY_KINDS}")
            if mp.policy not in POLICIES:
                v.append(f"multiparty.policy must be one of {POLICIES}")
            if mp.policy == "rs-decode" and mp.rs_t is None:
                v.append("rs-decode policy needs multiparty.rs_t")
            if mp.rs_t is not None:
                if not 1 <= mp.rs_t <= mp.n:
                    v.append("multiparty.rs_t must satisfy 1 <= t <= n")
                if isinstance(self.q, int) and self.q <= mp.n:
                    v.append("RS coding needs q > n")
        mv = self.multivar
        if self.mode == "multivar" and (mv.m < 1 or mv.n_deg < 1):
            v.append("multivar.m and multivar.n_deg must be >= 1")
        if v:
            raise ConfigError(v)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


def _build(cls, data: dict[str, Any], prefix: str, problems: list[str]):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    problems.extend(f"unknown key {prefix}{u}" for u in unknown)
    return {k: val for k, val in data.items() if k in names}


def config_from_dict(data: dict[str, Any]) -> ExperimentConfig:
    problems: list[str] = []
    if not isinstance(data, dict):
        raise ConfigError(["config must be a mapping"])
    if "mode" not in data:
        problems.append("missing required key 'mode'")
    top = _build(ExperimentConfig, data, "", problems)
    if isinstance(top.get("multiparty"), dict):
        top["multiparty"] = MultipartyParams(**_build(MultipartyParams, top["multiparty"], "multiparty.", problems))
    if isinstance(top.get("multivar"), dict):
        top["multivar"] = MultivarParams(**_build(MultivarParams, top["multivar"], "multivar.", problems))
    if problems:
        raise ConfigError(problems)
    try:
        cfg = ExperimentConfig(**top)
    except TypeError as exc:
        raise ConfigError([str(exc)]) from None
    cfg.validate()
    return cfg


def load_config(path: str | Path, **overrides: Any) -> ExperimentConfig:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from None
    data = data or {}
    if isinstance(data, dict):
        data.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_dict(data)
