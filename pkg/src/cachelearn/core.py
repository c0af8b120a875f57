"""Domain types and the policy contract shared by every caching policy.

Item IDs are 1-based at every public boundary (``1..L``).  Kernels work on
0-based indices internally; the conversion happens in :class:`Policy`.

Within one step the order is fixed: the cache is placed, the request
arrives, the hit is recorded, the observation is delivered, and the policy
updates its state (which also fixes the cache for the next step).
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

import numpy as np


class Mode(str, Enum):
    FULL = "full"
    PARTIAL = "partial"


class InvariantViolation(RuntimeError):
    """Raised when a policy reaches a state its algorithm rules out."""


@dataclass(frozen=True)
class Request:
    item: int
    time: int = 1

    def validate(self, library_size: Optional[int] = None) -> None:
        if self.item < 1 or (library_size is not None and self.item > library_size):
            raise ValueError(f"item {self.item} outside library 1..{library_size}")
        if self.time < 1:
            raise ValueError(f"time must be >= 1, got {self.time}")


@dataclass(frozen=True)
class Observation:
    """What the cache sees at one step; ``item is None`` encodes a silent miss."""

    item: Optional[int]
    time: int = 1

    @property
    def seen(self) -> bool:
        return self.item is not None

    @property
    def silent(self) -> bool:
        return self.item is None

    def __repr__(self) -> str:
        kind = f"Seen({self.item})" if self.seen else "Silent"
        return f"Observation({kind}, t={self.time})"


class CacheSet(frozenset):
    """An immutable set of exactly ``C`` distinct item IDs."""

    @classmethod
    def of(cls, items: Iterable[int], C: Optional[int] = None,
           L: Optional[int] = None) -> "CacheSet":
        items = [int(i) for i in items]
        cs = cls(items)
        if len(cs) != len(items):
            raise ValueError(f"duplicate items in cache: {sorted(items)}")
        if C is not None and len(cs) != C:
            raise ValueError(f"cache holds {len(cs)} items, expected {C}")
        if L is not None and any(i < 1 or i > L for i in cs):
            raise ValueError(f"cache items {sorted(cs)} outside library 1..{L}")
        return cs

    def __repr__(self) -> str:
        return f"CacheSet({sorted(self)})"


def observe_signal(request: Request, cache: Iterable[int], mode: Mode | str,
                   library_size: Optional[int] = None) -> Observation:
    """Return the observation the cache receives for ``request``.

    Full observation always sees the request; partial observation sees it
    only on a hit and is silent otherwise.
    """
    request.validate(library_size)
    mode = Mode(mode)
    if mode is Mode.FULL or request.item in cache:
        return Observation(request.item, request.time)
    return Observation(None, request.time)


class Policy:
    """Base class for all caching policies.

    Subclasses implement :meth:`_update` (consume one 0-based observation,
    ``-1`` for silent, then set ``self._cache`` for the next step) and may
    override :meth:`_run` with a compiled loop that must reproduce repeated
    :meth:`update` calls exactly.
    """

    name = "policy"
    observation = Mode.FULL
    randomized = False

    def __init__(self, L: int, C: int, seed=None, initial_cache: str = "ids"):
        if L < 1:
            raise ValueError(f"library size must be >= 1, got {L}")
        if not 1 <= C <= L:
            raise ValueError(f"cache size must be in 1..{L}, got {C}")
        self.L = int(L)
        self.C = int(C)
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.t = 0
        if initial_cache == "ids":
            self._cache = np.arange(self.C, dtype=np.int64)
        elif initial_cache == "random":
            self._cache = np.sort(self.rng.choice(self.L, size=self.C, replace=False)).astype(np.int64)
        else:
            raise ValueError(f"initial_cache must be 'ids' or 'random', got {initial_cache!r}")

    @property
    def cache(self) -> CacheSet:
        return CacheSet(int(i) + 1 for i in self._cache)

    @property
    def counters(self) -> int:
        """Number of per-item counters the policy currently holds."""
        return 0

    def update(self, obs: Observation) -> None:
        if obs.item is not None and not 1 <= obs.item <= self.L:
            raise ValueError(f"observed item {obs.item} outside library 1..{self.L}")
        x0 = -1 if obs.item is None else obs.item - 1
        self.t += 1
        self._update(x0)

    def _update(self, x0: int) -> None:
        raise NotImplementedError

    def run(self, items: np.ndarray, mode: Mode | str | None = None):
        """Drive the policy through a whole 1-based request sequence.

        Returns ``(hits, counters)``: per-step hit indicators (bool) and the
        counter count after each step's update (int).
        """
        mode = Mode(mode or self.observation)
        items0 = np.ascontiguousarray(items, dtype=np.int64) - 1
        if items0.size and (items0.min() < 0 or items0.max() >= self.L):
            raise ValueError(f"request outside library 1..{self.L}")
        hits = np.zeros(items0.size, dtype=np.bool_)
        counters = np.zeros(items0.size, dtype=np.int64)
        self._run(items0, mode is Mode.FULL, hits, counters)
        return hits, counters

    def _run(self, items0, full, hits, counters) -> None:
        for k in range(items0.size):
            x = int(items0[k])
            hit = bool(np.any(self._cache == x))
            hits[k] = hit
            self.t += 1
            self._update(x if (full or hit) else -1)
            counters[k] = self.counters

    def halve(self) -> None:
        raise TypeError(f"{self.name} keeps no counts to halve")

    def __repr__(self) -> str:
        return f"{type(self).__name__}(L={self.L}, C={self.C}, t={self.t})"


class StaticPolicy(Policy):
    """Always caches the same set; with the genie set this is the genie."""

    name = "static"

    def __init__(self, L: int, C: int, items: Iterable[int], seed=None):
        super().__init__(L, C, seed)
        cs = CacheSet.of(items, C, L)
        self._cache = np.array(sorted(i - 1 for i in cs), dtype=np.int64)

    def _update(self, x0: int) -> None:
        pass


def step(policy: Policy, request: Request, mode: Mode | str | None = None):
    """Advance ``policy`` by one request.

    Returns ``(cache, hit, policy)`` where ``cache`` is the set placed before
    the request arrived.  The policy is updated in place.
    """
    mode = Mode(mode or policy.observation)
    cache = policy.cache
    obs = observe_signal(request, cache, mode, policy.L)
    hit = request.item in cache
    policy.update(obs)
    return cache, hit, policy
