"""Experiment orchestration: build workloads and policies from a config,
run replications, and aggregate into a results table."""
from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from .. import analysis
from ..core import Mode, StaticPolicy
from ..policies_full import LFU, LRU, WLFU, LFULite, default_window
from ..policies_partial import CBFPS, CBMPS, CBSI, CBSILite, StructuralInfo
from ..workloads import (ChangeSchedule, PopularityProfile, RequestTrace, change_trace,
                         load_trace, zipf_profile)
from .config import PARTIAL_POLICIES, SWEEPABLE, ConfigError, ExperimentConfig
from .output import ResultsTable, build_id

log = logging.getLogger(__name__)


@dataclass
class ChangeWorkload:
    """Picklable ``f(T, seed) -> RequestTrace`` for the rotating change trace."""

    base: PopularityProfile
    schedule: ChangeSchedule

    def __call__(self, T: int, seed: int) -> RequestTrace:
        return change_trace(self.base, self.schedule, T, seed)


@dataclass
class Instance:
    """Everything a run needs besides the seeds."""

    workload: object
    L: int
    profile: Optional[PopularityProfile]
    trace: Optional[RequestTrace] = None


def build_instance(cfg: ExperimentConfig) -> Instance:
    if cfg.workload == "trace":
        try:
            trace = load_trace(cfg.trace, header=cfg.header, remap=cfg.remap)
        except FileNotFoundError:
            raise ConfigError("trace", f"no such file: {cfg.trace}") from None
        if cfg.C > trace.library_size:
            raise ConfigError("C", f"cache size exceeds the trace library size {trace.library_size}")
        return Instance(trace, trace.library_size, None, trace)
    base = zipf_profile(cfg.L, cfg.beta)
    if cfg.workload == "change":
        return Instance(ChangeWorkload(base, ChangeSchedule(cfg.change_period, cfg.top_k, cfg.shift)),
                        cfg.L, base)
    return Instance(base, cfg.L, base)


def structural_info(cfg: ExperimentConfig, inst: Instance) -> StructuralInfo:
    src = cfg.resolved_si_source
    if src == "given":
        return StructuralInfo(cfg.mu_C, cfg.delta)
    if src == "profile":
        return StructuralInfo.from_profile(inst.profile.probs, cfg.C)
    trace = inst.trace
    n = max(1, int(round(cfg.si_prefix * len(trace))))
    freq = np.bincount(trace.items[:n] - 1, minlength=inst.L) / n
    freq = np.sort(freq)[::-1]
    mu_C, mu_C1 = freq[cfg.C - 1], (freq[cfg.C] if cfg.C < inst.L else 0.0)
    if not mu_C > mu_C1:
        raise ConfigError("si_prefix", "the training prefix gives a zero popularity gap")
    return StructuralInfo(float(mu_C), float(mu_C - mu_C1))


def genie_items(cfg: ExperimentConfig, inst: Instance):
    if inst.profile is not None:
        return analysis.genie_set(inst.profile, cfg.C)
    return analysis.empirical_genie(inst.trace, cfg.C)


@dataclass
class PolicyFactory:
    """Picklable ``seed -> Policy`` built from a config."""

    cfg: ExperimentConfig
    L: int
    info: Optional[StructuralInfo] = None
    genie: Optional[frozenset] = None

    def __call__(self, seed=None):
        c, L, C = self.cfg, self.L, self.cfg.C
        p = c.policy
        if p == "lfu":
            return LFU(L, C, seed, halve_every=c.halve_every, initial_cache=c.initial_cache)
        if p == "wlfu":
            return WLFU(L, C, w=c.w, seed=seed, initial_cache=c.initial_cache)
        if p == "lfulite":
            return LFULite(L, C, w=c.w, seed=seed, halve_every=c.halve_every,
                           initial_cache=c.initial_cache)
        if p == "lru":
            return LRU(L, C, seed, initial_cache=c.initial_cache)
        if p == "mps":
            return CBMPS(L, C, seed, halve_every=c.halve_every, initial_cache=c.initial_cache)
        if p in ("si", "silite"):
            cls = CBSI if p == "si" else CBSILite
            kw = {"w": c.w} if p == "silite" else {}
            return cls(L, C, seed=seed, info=self.info, halve_every=c.halve_every,
                       count_silent=c.count_silent, initial_cache=c.initial_cache, **kw)
        if p == "fps":
            return CBFPS(L, C, seed, prior=c.prior, max_components=c.max_components,
                         initial_cache=c.initial_cache)
        if p == "genie":
            return StaticPolicy(L, C, self.genie, seed)
        raise ConfigError("policy", f"unknown policy {p!r}")


def policy_factory(cfg: ExperimentConfig, inst: Instance) -> PolicyFactory:
    info = structural_info(cfg, inst) if cfg.policy in ("si", "silite") else None
    genie = genie_items(cfg, inst) if cfg.policy == "genie" else None
    return PolicyFactory(cfg, inst.L, info, genie)


def simulate(cfg: ExperimentConfig, checkpoints=None) -> analysis.MonteCarloResult:
    inst = build_instance(cfg)
    factory = policy_factory(cfg, inst)
    if cfg.mode is not None and cfg.mode != native_mode(cfg.policy):
        factory = _ModeOverride(factory, cfg.mode)
    T = min(cfg.T, len(inst.trace)) if inst.trace is not None else cfg.T
    cps = analysis.checkpoint_grid(T, cfg.checkpoints) if checkpoints is None else checkpoints
    return analysis.mc_regret(factory, inst.workload, T, cfg.replications, cfg.seed, cps, cfg.workers)


def native_mode(policy: str) -> str:
    return "partial" if policy in PARTIAL_POLICIES else "full"


@dataclass
class _ModeOverride:
    factory: PolicyFactory
    mode: str

    def __call__(self, seed=None):
        pol = self.factory(seed=seed)
        pol.observation = Mode(self.mode)
        return pol


def run(cfg: ExperimentConfig, write: bool = True) -> ResultsTable:
    """Run every replication of ``cfg`` and return (and optionally write) the table."""
    started = time.perf_counter()
    res = simulate(cfg)
    lo, hi = res.regret_ci()
    meta = {k: v for k, v in cfg.items()}
    meta["build_id"] = build_id()
    meta["wall_time_s"] = f"{time.perf_counter() - started:.3f}"
    meta["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    table = ResultsTable(res.checkpoints, res.mean_regret(), lo, hi, res.mean_hit_rate(),
                         res.mean_bank_size(), meta)
    if write and cfg.out is not None:
        table.write(cfg.out)
        log.info("wrote %s (%d rows)", cfg.out, len(table))
    return table


def tagged_path(out, axis: str, value) -> Optional[str]:
    if out is None:
        return None
    p = Path(out)
    return str(p.with_name(f"{p.stem}_{axis}{value}{p.suffix}"))


def sweep(cfg: ExperimentConfig, axis: str, values, write: bool = True) -> dict:
    """One run per value of ``axis``, all with the base config's master seed."""
    if axis not in SWEEPABLE:
        raise ConfigError(axis, f"not sweepable; choose from {', '.join(SWEEPABLE)}")
    values = list(values)
    if not values:
        warnings.warn("sweep over an empty value list: nothing to run", RuntimeWarning, stacklevel=2)
        return {}
    tables = {}
    for v in values:
        sub = cfg.replace(**{axis: v, "out": tagged_path(cfg.out, axis, v)})
        tables[v] = run(sub, write=write)
    return tables


APPLICABLE = {
    "lfu": "lfu", "wlfu": "wlfu_lower", "lfulite": "lfulite", "mps": "mps_envelope",
    "si": "si", "silite": "si",
}


def bound_report(cfg: ExperimentConfig) -> analysis.BoundReport:
    inst = build_instance(cfg)
    if inst.profile is not None:
        profile = inst.profile.probs
    else:
        counts = np.bincount(inst.trace.items - 1, minlength=inst.L).astype(np.float64)
        profile = counts / counts.sum()
    T = min(cfg.T, len(inst.trace)) if inst.trace is not None else cfg.T
    w = cfg.w
    if w is None and cfg.policy in ("wlfu", "lfulite", "silite"):
        w = default_window(inst.L, cfg.C)
    if cfg.C >= inst.L:
        raise ConfigError("C", "bounds need C < L")
    report = analysis.BoundReport.for_profile(profile, cfg.C, T, w)
    if report.delta_min <= 0:
        warnings.warn("zero popularity gap at the cache boundary; gap bounds are infinite",
                      RuntimeWarning, stacklevel=2)
    return report
