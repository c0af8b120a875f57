"""Experiment configuration with field-level validation."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

FULL_POLICIES = ("lfu", "wlfu", "lfulite", "lru")
PARTIAL_POLICIES = ("mps", "si", "silite", "fps")
POLICY_NAMES = FULL_POLICIES + PARTIAL_POLICIES + ("genie",)
WORKLOADS = ("zipf", "change", "trace")
SWEEPABLE = ("L", "C", "beta", "T", "replications", "w", "halve_every", "max_components",
             "prior", "si_prefix", "change_period", "top_k", "shift")
META_ONLY = ("build_id", "wall_time_s", "timestamp")


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class ExperimentConfig:
    policy: str = "lfu"
    mode: Optional[str] = None
    workload: str = "zipf"
    L: int = 100
    C: int = 10
    beta: float = 1.0
    T: int = 10000
    replications: int = 10
    seed: int = 0
    w: Optional[int] = None
    halve_every: Optional[int] = None
    max_components: int = 1024
    prior: float = 1.0
    si_source: Optional[str] = None
    si_prefix: float = 0.1
    mu_C: Optional[float] = None
    delta: Optional[float] = None
    count_silent: bool = True
    initial_cache: str = "ids"
    change_period: int = 10000
    top_k: int = 20
    shift: int = 5
    trace: Optional[str] = None
    header: bool = False
    remap: bool = False
    checkpoints: int = 200
    workers: int = 1
    out: Optional[str] = None

    def __post_init__(self):
        self.validate()

    @property
    def resolved_mode(self) -> str:
        if self.mode is not None:
            return self.mode
        return "partial" if self.policy in PARTIAL_POLICIES else "full"

    @property
    def resolved_si_source(self) -> str:
        if self.si_source is not None:
            return self.si_source
        if self.mu_C is not None:
            return "given"
        return "prefix" if self.workload == "trace" else "profile"

    def validate(self) -> None:
        def need(cond, name, msg):
            if not cond:
                raise ConfigError(name, msg)

        need(self.policy in POLICY_NAMES, "policy",
             f"unknown policy {self.policy!r}; choose from {', '.join(POLICY_NAMES)}")
        need(self.mode in (None, "full", "partial"), "mode", "must be 'full' or 'partial'")
        need(self.workload in WORKLOADS, "workload",
             f"unknown workload {self.workload!r}; choose from {', '.join(WORKLOADS)}")
        need(self.replications >= 1, "replications", "must be >= 1")
        need(self.T >= 1, "T", "must be >= 1")
        need(self.workers >= 1, "workers", "must be >= 1")
        need(self.checkpoints >= 2, "checkpoints", "must be >= 2")
        need(self.initial_cache in ("ids", "random"), "initial_cache", "must be 'ids' or 'random'")
        if self.workload == "trace":
            need(self.trace is not None, "trace", "a trace path is required for workload 'trace'")
        else:
            need(self.L >= 1, "L", "must be >= 1")
            need(1 <= self.C <= self.L, "C", f"must be in 1..L={self.L}")
            need(self.beta >= 0, "beta", "must be >= 0")
        if self.workload == "change":
            need(self.change_period >= 1, "change_period", "must be >= 1")
            need(0 < self.shift <= self.top_k <= self.L, "shift", "need 0 < shift <= top_k <= L")
        if self.w is not None:
            need(self.policy in ("wlfu", "lfulite", "silite"), "w",
                 f"window length does not apply to policy {self.policy!r}")
            need(self.w >= 1, "w", "must be >= 1")
        if self.halve_every is not None:
            need(self.policy in ("lfu", "lfulite", "mps", "si", "silite"), "halve_every",
                 f"halving does not apply to policy {self.policy!r}")
            need(self.halve_every >= 1, "halve_every", "must be >= 1")
        need(self.max_components >= 1, "max_components", "must be >= 1")
        need(self.prior > 0, "prior", "must be > 0")
        need(self.si_source in (None, "profile", "prefix", "given"), "si_source",
             "must be 'profile', 'prefix' or 'given'")
        need(0 < self.si_prefix <= 1, "si_prefix", "must be in (0, 1]")
        if self.policy in ("si", "silite"):
            src = self.resolved_si_source
            if src == "given":
                need(self.mu_C is not None and self.delta is not None, "mu_C",
                     "si_source 'given' needs both mu_C and delta")
            need(not (src == "profile" and self.workload == "trace"), "si_source",
                 "a trace has no true profile; use 'prefix' or 'given'")

    # --------------------------------------------------------------- I/O

    def items(self) -> list[tuple[str, object]]:
        return [(f.name, getattr(self, f.name)) for f in dataclasses.fields(self)]

    @classmethod
    def from_strings(cls, values: dict[str, str]) -> "ExperimentConfig":
        """Build from ``key=value`` text (the metadata sidecar format)."""
        return cls(**{k: parse_value(k, v) for k, v in values.items() if k not in META_ONLY})

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


_INT = {"L", "C", "T", "replications", "seed", "w", "halve_every", "max_components", "change_period",
        "top_k", "shift", "checkpoints", "workers"}
_FLOAT = {"beta", "prior", "si_prefix", "mu_C", "delta"}
_BOOL = {"count_silent", "header", "remap"}
_FIELDS = {f.name for f in dataclasses.fields(ExperimentConfig)}


def parse_value(name: str, text: str):
    if name not in _FIELDS:
        raise ConfigError(name, "unknown configuration key")
    if text in ("None", ""):
        return None
    try:
        if name in _INT:
            return int(float(text)) if "e" in text.lower() else int(text)
        if name in _FLOAT:
            return float(text)
    except ValueError:
        raise ConfigError(name, f"cannot parse {text!r}") from None
    if name in _BOOL:
        if text not in ("True", "False", "true", "false", "1", "0"):
            raise ConfigError(name, f"expected a boolean, got {text!r}")
        return text in ("True", "true", "1")
    return text


def read_meta(path) -> dict[str, str]:
    out = {}
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {n}", f"expected key=value, got {line!r}")
        out[key.strip()] = value.strip()
    return out


def load_config(path) -> ExperimentConfig:
    return ExperimentConfig.from_strings(read_meta(path))
