"""Genie baseline, regret accounting, closed-form bounds, and Monte Carlo
estimation of expected regret."""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Union

import numpy as np
from scipy import stats

from .core import CacheSet, Policy
from .workloads import PopularityProfile, RequestTrace, sample_irm

MASK64 = (1 << 64) - 1
POLICY_SALT = 0x5DEECE66D


# --------------------------------------------------------------------------
# genie and regret

def genie_set(profile: PopularityProfile, C: int) -> CacheSet:
    """The C most popular items (ties to the lower ID, with a warning)."""
    p = np.asarray(getattr(profile, "probs", profile), dtype=np.float64)
    if not 1 <= C <= p.size:
        raise ValueError(f"cache size must be in 1..{p.size}, got {C}")
    order = np.argsort(-p, kind="stable")
    if C < p.size and p[order[C - 1]] == p[order[C]]:
        warnings.warn("mu_C == mu_{C+1}: the genie set is not unique", RuntimeWarning, stacklevel=2)
    return CacheSet(int(i) + 1 for i in order[:C])


def regret_increment(x: int, genie, cache) -> int:
    return int(x in genie) - int(x in cache)


@dataclass
class RegretLedger:
    """Per-step regret increments for one run and their running sum."""

    increments: np.ndarray
    policy_hits: int
    genie_hits: int

    @classmethod
    def from_hits(cls, hits: np.ndarray, genie_hits: np.ndarray) -> "RegretLedger":
        hits = np.asarray(hits, dtype=np.int8)
        genie_hits = np.asarray(genie_hits, dtype=np.int8)
        return cls(genie_hits - hits, int(hits.sum()), int(genie_hits.sum()))

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.increments, dtype=np.int64)

    @property
    def total(self) -> int:
        return self.genie_hits - self.policy_hits


def genie_hits(trace: RequestTrace, C: int) -> np.ndarray:
    """Per-step indicator that the genie would have hit.

    With known profiles the genie follows each segment's top C; otherwise it
    is the top C by whole-trace request count.
    """
    items0 = trace.items - 1
    out = np.zeros(items0.size, dtype=np.bool_)
    if trace.profiles:
        bounds = list(trace.segment_starts) + [items0.size]
        for k, prof in enumerate(trace.profiles):
            mask = np.zeros(trace.library_size, dtype=np.bool_)
            mask[np.array(sorted(genie_set(prof, C))) - 1] = True
            lo, hi = bounds[k], bounds[k + 1]
            out[lo:hi] = mask[items0[lo:hi]]
        return out
    mask = np.zeros(trace.library_size, dtype=np.bool_)
    mask[np.array(sorted(empirical_genie(trace, C))) - 1] = True
    return mask[items0]


def empirical_genie(trace: RequestTrace, C: int) -> CacheSet:
    counts = np.bincount(trace.items - 1, minlength=trace.library_size)
    order = np.argsort(-counts, kind="stable")
    return CacheSet(int(i) + 1 for i in order[:C])


# --------------------------------------------------------------------------
# gaps and closed-form bounds

@dataclass(frozen=True)
class GapStructure:
    """Popularity gaps of a profile around the cache-size boundary."""

    probs: np.ndarray
    C: int

    def __post_init__(self):
        p = np.sort(np.asarray(getattr(self.probs, "probs", self.probs), dtype=np.float64))[::-1]
        if not 1 <= self.C < p.size:
            raise ValueError(f"gap structure needs 1 <= C < L, got C={self.C}, L={p.size}")
        object.__setattr__(self, "probs", p)

    @property
    def L(self) -> int:
        return self.probs.size

    @property
    def mu_C(self) -> float:
        return float(self.probs[self.C - 1])

    @property
    def mu_C1(self) -> float:
        return float(self.probs[self.C])

    @property
    def delta_min(self) -> float:
        return self.mu_C - self.mu_C1

    def pairwise(self) -> np.ndarray:
        """``[j, k] = mu_j - mu_k`` for j in the top C and k outside it."""
        return self.probs[: self.C, None] - self.probs[None, self.C:]

    def gaps_to_C(self) -> np.ndarray:
        """``mu_C - mu_j`` for every j outside the top C."""
        return self.mu_C - self.probs[self.C:]


def _delta(gaps) -> float:
    return gaps.delta_min if isinstance(gaps, GapStructure) else float(gaps)


def bound_lfu(gaps, L: int, C: int) -> float:
    """``min(16 / d**2, 4 C (L - C) / d)`` with ``d = mu_C - mu_{C+1}``."""
    d = _delta(gaps)
    if d <= 0:
        warnings.warn("zero popularity gap: the LFU bound is infinite", RuntimeWarning, stacklevel=2)
        return math.inf
    return min(16.0 / (d * d), 4.0 * C * (L - C) / d)


def bound_wlfu_lower(mu_C: float, mu_C1: float, w: int, T: float) -> float:
    """Linear lower bound ``(mu_C - mu_{C+1}) * mu_{C+1}**w * T`` on WLFU regret."""
    if w < 1:
        raise ValueError(f"window length must be >= 1, got {w}")
    return (mu_C - mu_C1) * mu_C1 ** w * T


def entry_threshold(mu_C1: float, w: int) -> int:
    """Smallest window count that exceeds ``mu_{C+1} * w``: ``floor(mu_{C+1} w) + 1``."""
    return math.floor(Fraction(mu_C1) * w) + 1


def window_entry_probability(mu_i, mu_C1: float, w: int):
    """``P(Binomial(w, mu_i) > mu_{C+1} w)``, vectorized over ``mu_i``."""
    k = entry_threshold(mu_C1, w)
    if k > w:
        warnings.warn("empty summation range: entry probability is 0", RuntimeWarning, stacklevel=2)
        return np.zeros_like(np.asarray(mu_i, dtype=np.float64)) if np.ndim(mu_i) else 0.0
    out = stats.binom.sf(k - 1, w, mu_i)
    return float(out) if np.ndim(out) == 0 else out


def p_min(mu_C: float, mu_C1: float, w: int) -> float:
    """Probability that the C-th item clears the entry threshold in one window."""
    if not 0 <= mu_C1 < mu_C <= 1:
        raise ValueError(f"need 0 <= mu_C1 < mu_C <= 1, got {mu_C}, {mu_C1}")
    if w < 1:
        raise ValueError(f"window length must be >= 1, got {w}")
    return window_entry_probability(mu_C, mu_C1, w)


def bound_lfulite(gaps, L: int, C: int, w: int, pmin: float) -> float:
    """``C (L - C) w / p_min + 4 C (L - C) / d``."""
    d = _delta(gaps)
    if d <= 0 or pmin <= 0:
        warnings.warn("zero gap or p_min: the LFU-Lite bound is infinite", RuntimeWarning, stacklevel=2)
        return math.inf
    return C * (L - C) * w / pmin + 4.0 * C * (L - C) / d


def bound_mps(L: int, C: int, T):
    """Growth envelope ``(L - C) C ln T`` (unit constant; shape only)."""
    return (L - C) * C * np.log(T)


def bound_si(delta: float, L: int, C: int) -> float:
    """``C (L - C) [2/d**2 + 4/d**2 (4 + 32/d**2 exp(-d**2/8))]``."""
    d = float(delta)
    if d <= 0:
        warnings.warn("zero gap: the CB-SI bound is infinite", RuntimeWarning, stacklevel=2)
        return math.inf
    d2 = d * d
    per_item = 2.0 / d2 + 4.0 / d2 * (4.0 + 32.0 / d2 * math.exp(-d2 / 8.0))
    return C * (L - C) * per_item


def dkw_envelope(t, eps):
    """``2 exp(-t eps**2 / 2)`` bounding ``P(max_i |mu_hat_i(t) - mu_i| > eps)``."""
    return 2.0 * np.exp(-np.asarray(t, dtype=np.float64) * np.asarray(eps, dtype=np.float64) ** 2 / 2.0) \
        if np.ndim(t) or np.ndim(eps) else 2.0 * math.exp(-t * eps * eps / 2.0)


def expected_bank_size(profile, C: int, w: int, t):
    """Approximate expected LFU-Lite bank size after ``t`` steps.

    Item i joins in a given window with probability ``p_i``, the binomial
    chance that its window count exceeds ``mu_{C+1} w``, so
    ``E[B(t)] = sum_i 1 - (1 - p_i)**ceil(t / w)``.  The true admission event
    (being in the window's top C) is replaced by this threshold event, so
    the value is an approximation.  As a function of the number of elapsed
    windows the curve is concave.
    """
    p = np.sort(np.asarray(getattr(profile, "probs", profile), dtype=np.float64))[::-1]
    if not 1 <= C < p.size:
        raise ValueError("expected bank size needs 1 <= C < L")
    k = entry_threshold(float(p[C]), w)
    windows = np.ceil(np.asarray(t, dtype=np.float64) / w)
    if k > w:
        return np.zeros_like(windows) if windows.ndim else 0.0
    enter = stats.binom.sf(k - 1, w, p)
    stay = stats.binom.cdf(k - 1, w, p)
    with np.errstate(divide="ignore"):
        log_stay = np.where(enter < 0.5, np.log1p(-enter), np.log(stay))
    terms = -np.expm1(np.multiply.outer(windows, log_stay))
    out = terms.sum(axis=-1)
    return float(out) if out.ndim == 0 else out


@dataclass
class BoundReport:
    """Bound values for one instance; ``None`` where a bound does not apply."""

    L: int
    C: int
    T: int
    delta_min: float
    mu_C: float
    mu_C1: float
    w: Optional[int] = None
    lfu: Optional[float] = None
    wlfu_lower: Optional[float] = None
    p_min: Optional[float] = None
    lfulite: Optional[float] = None
    mps_envelope: Optional[float] = None
    si: Optional[float] = None
    expected_bank: Optional[float] = None

    @classmethod
    def for_profile(cls, profile, C: int, T: int, w: Optional[int] = None) -> "BoundReport":
        g = GapStructure(profile, C)
        r = cls(g.L, C, int(T), g.delta_min, g.mu_C, g.mu_C1, w)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            r.lfu = bound_lfu(g, g.L, C)
            r.mps_envelope = float(bound_mps(g.L, C, T))
            r.si = bound_si(g.delta_min, g.L, C)
            if w is not None:
                r.wlfu_lower = bound_wlfu_lower(g.mu_C, g.mu_C1, w, T)
                if g.delta_min > 0:
                    r.p_min = p_min(g.mu_C, g.mu_C1, w)
                    r.lfulite = bound_lfulite(g, g.L, C, w, r.p_min)
                r.expected_bank = expected_bank_size(g.probs, C, w, T)
        return r


# --------------------------------------------------------------------------
# Monte Carlo

def mix64(z: int) -> int:
    """SplitMix64 finalizer."""
    z = (z + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def replication_seeds(master: int, k: int) -> tuple[int, int]:
    """``(workload_seed, policy_seed)`` for replication ``k``.

    ``workload_seed = mix64(master ^ k)``; the policy stream is split off
    from it so the two never share state.
    """
    ws = mix64((int(master) & MASK64) ^ int(k))
    return ws, mix64(ws ^ POLICY_SALT)


def checkpoint_grid(T: int, n: int = 200) -> np.ndarray:
    """About ``n`` geometrically spaced integer steps in ``1..T``, ending at T."""
    if T < 1:
        raise ValueError("horizon must be >= 1")
    grid = np.unique(np.rint(np.geomspace(1, T, num=n)).astype(np.int64))
    if grid[-1] != T:
        grid = np.append(grid, T)
    return grid


Workload = Union[PopularityProfile, RequestTrace, Callable[[int, int], RequestTrace]]


def _make_trace(workload: Workload, T: int, seed: int) -> RequestTrace:
    if isinstance(workload, PopularityProfile):
        return sample_irm(workload, T, seed)
    if isinstance(workload, RequestTrace):
        return workload
    return workload(T, seed)


def _one_replication(args):
    make_policy, workload, T, master, k, checkpoints = args
    wseed, pseed = replication_seeds(master, k)
    trace = _make_trace(workload, T, wseed)
    policy: Policy = make_policy(seed=pseed)
    hits, counters = policy.run(trace.items[:T])
    g = genie_hits(trace, policy.C)[:T]
    idx = checkpoints - 1
    regret = np.cumsum(g.astype(np.int64) - hits)[idx]
    cum_hits = np.cumsum(hits, dtype=np.int64)[idx]
    return regret, cum_hits, counters[idx]


@dataclass
class MonteCarloResult:
    """Per-replication values at the checkpoints (rows = replications)."""

    checkpoints: np.ndarray
    regret: np.ndarray
    hits: np.ndarray
    counters: np.ndarray
    seed: int = 0
    z: float = field(default=float(stats.norm.ppf(0.975)))

    @property
    def replications(self) -> int:
        return self.regret.shape[0]

    def mean_regret(self) -> np.ndarray:
        return self.regret.mean(axis=0)

    def regret_ci(self) -> tuple[np.ndarray, np.ndarray]:
        """Normal-approximation 95% band on mean cumulative regret."""
        m = self.mean_regret()
        if self.replications < 2:
            return m.copy(), m.copy()
        half = self.z * self.regret.std(axis=0, ddof=1) / math.sqrt(self.replications)
        return m - half, m + half

    def hit_rate(self) -> np.ndarray:
        """Cumulative hit rate per replication."""
        return self.hits / self.checkpoints

    def mean_hit_rate(self) -> np.ndarray:
        return self.hit_rate().mean(axis=0)

    def mean_bank_size(self) -> np.ndarray:
        return self.counters.mean(axis=0)

    def at(self, t: int) -> int:
        """Column index of checkpoint ``t``."""
        hit = np.flatnonzero(self.checkpoints == t)
        if hit.size == 0:
            raise KeyError(f"step {t} is not a checkpoint")
        return int(hit[0])


def mc_regret(make_policy: Callable[[int], Policy], workload: Workload, T: int,
              replications: int, seed: int, checkpoints=None, workers: int = 1) -> MonteCarloResult:
    """Estimate the regret curve by independent seeded replications.

    ``make_policy(seed=policy_seed)`` builds a fresh policy; ``workload`` is a
    profile (IRM draws), a fixed trace, or ``f(T, seed) -> RequestTrace``.
    Replication k uses :func:`replication_seeds`\\ ``(seed, k)``; results are
    assembled in replication order, so any ``workers`` value gives the same
    output.
    """
    if replications < 1:
        raise ValueError(f"replications must be >= 1, got {replications}")
    T = int(T)
    if isinstance(workload, RequestTrace):
        T = min(T, len(workload))
    cps = checkpoint_grid(T) if checkpoints is None else np.unique(np.asarray(checkpoints, dtype=np.int64))
    if cps[0] < 1 or cps[-1] > T:
        raise ValueError(f"checkpoints must lie in 1..{T}")
    jobs = [(make_policy, workload, T, seed, k, cps) for k in range(replications)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_one_replication, jobs))
    else:
        rows = [_one_replication(j) for j in jobs]
    regret, hits, counters = (np.array(col) for col in zip(*rows))
    return MonteCarloResult(cps, regret, hits, counters, seed)
