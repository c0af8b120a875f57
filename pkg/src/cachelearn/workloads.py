"""Request workloads: Zipf IRM streams, the rotating-popularity change trace,
profile sequences, and plain-text trace files."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np


class TraceParseError(ValueError):
    def __init__(self, path, lineno: int, line: str):
        super().__init__(f"{path}:{lineno}: expected a non-negative integer item id, got {line!r}")
        self.lineno = lineno


@dataclass(frozen=True)
class PopularityProfile:
    """Request distribution over items ``1..L``; ``probs[i - 1]`` is item i's."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probs must be a non-empty vector")
        if not np.all(p > 0):
            raise ValueError("all popularities must be strictly positive")
        if abs(math.fsum(p) - 1.0) > 1e-12:
            raise ValueError(f"popularities sum to {math.fsum(p)!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def L(self) -> int:
        return self.probs.size

    def __len__(self) -> int:
        return self.probs.size

    def is_canonical(self) -> bool:
        return bool(np.all(np.diff(self.probs) <= 0))

    def canonical(self) -> "PopularityProfile":
        return PopularityProfile(np.sort(self.probs)[::-1].copy())

    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.probs)
        c[-1] = 1.0
        return c


@dataclass
class RequestTrace:
    """A realized request sequence (1-based IDs).

    ``profiles`` and ``segment_starts`` describe the ground truth when it is
    known: segment k uses ``profiles[k]`` from step ``segment_starts[k] + 1``
    on.  Loaded traces carry no profiles.  ``original_ids[new - 1]`` maps
    remapped IDs back to the file's IDs.  ``mutations`` counts popularity
    changes applied while generating it.
    """

    items: np.ndarray
    library_size: int
    profiles: list = field(default_factory=list)
    segment_starts: Optional[np.ndarray] = None
    original_ids: Optional[np.ndarray] = None
    mutations: int = 0

    def __post_init__(self):
        self.items = np.asarray(self.items, dtype=np.int64)
        if self.items.ndim != 1 or self.items.size < 1:
            raise ValueError("a trace holds at least one request")
        if self.items.min() < 1 or self.items.max() > self.library_size:
            raise ValueError(f"trace items outside 1..{self.library_size}")
        if self.profiles and self.segment_starts is None:
            self.segment_starts = np.zeros(1, dtype=np.int64)

    def __len__(self) -> int:
        return self.items.size


@dataclass(frozen=True)
class ChangeSchedule:
    period: int
    top_k: int
    shift: int

    def validate(self, L: int) -> None:
        if self.period < 1:
            raise ValueError(f"period must be >= 1, got {self.period}")
        if not 0 < self.shift <= self.top_k <= L:
            raise ValueError(
                f"need 0 < shift <= top_k <= L, got shift={self.shift}, top_k={self.top_k}, L={L}")


def zipf_profile(L: int, beta: float) -> PopularityProfile:
    """Zipf popularities ``i**-beta`` normalized over ``1..L``."""
    if L < 1:
        raise ValueError(f"library size must be >= 1, got {L}")
    if beta < 0:
        raise ValueError(f"Zipf exponent must be >= 0, got {beta}")
    w = np.arange(1, L + 1, dtype=np.float64) ** (-float(beta))
    return PopularityProfile(w / math.fsum(w))


def _draw(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(cdf, u, side="right")
    np.minimum(idx, cdf.size - 1, out=idx)
    return idx + 1


def sample_irm(profile: PopularityProfile, T: int, seed=None) -> RequestTrace:
    """``T`` i.i.d. requests from ``profile`` by inverse-CDF lookup."""
    if T < 1:
        raise ValueError(f"horizon must be >= 1, got {T}")
    rng = np.random.default_rng(seed)
    items = _draw(profile.cdf(), rng.random(int(T)))
    return RequestTrace(items, profile.L, [profile], np.zeros(1, dtype=np.int64))


def rotate_top(profile: PopularityProfile, top_k: int, shift: int) -> PopularityProfile:
    """The item at rank r takes the value formerly at rank ((r-1+shift) mod top_k)+1."""
    p = profile.probs.copy()
    p[:top_k] = np.roll(profile.probs[:top_k], -shift)
    return PopularityProfile(p)


def change_trace(base: PopularityProfile, schedule: ChangeSchedule, T: int,
                 seed=None) -> RequestTrace:
    """IRM sampling whose top ranks rotate at the start of every period.

    A rotation is applied before the first draw of each period, the first
    one included, so ``T = n * period`` yields exactly ``n`` mutations.  The
    uniforms are drawn exactly as :func:`sample_irm` draws them, so a
    full-cycle shift reproduces the plain IRM trace.
    """
    schedule.validate(base.L)
    if T < 1:
        raise ValueError(f"horizon must be >= 1, got {T}")
    rng = np.random.default_rng(seed)
    u = rng.random(int(T))
    items = np.empty(int(T), dtype=np.int64)
    profiles, starts = [], []
    current = base
    for start in range(0, int(T), schedule.period):
        current = rotate_top(current, schedule.top_k, schedule.shift)
        stop = min(start + schedule.period, int(T))
        items[start:stop] = _draw(current.cdf(), u[start:stop])
        profiles.append(current)
        starts.append(start)
    return RequestTrace(items, base.L, profiles, np.array(starts, dtype=np.int64),
                        mutations=len(profiles))


def profile_sequence_trace(profiles: Sequence[PopularityProfile], samples_per_profile: int,
                           seed=None) -> RequestTrace:
    """Concatenate ``samples_per_profile`` IRM draws from each profile in turn
    (the week-by-week construction used for the video trace)."""
    if not profiles:
        raise ValueError("need at least one profile")
    L = profiles[0].L
    if any(p.L != L for p in profiles):
        raise ValueError("all profiles must share one library size")
    if samples_per_profile < 1:
        raise ValueError("samples_per_profile must be >= 1")
    rng = np.random.default_rng(seed)
    n = int(samples_per_profile)
    items = np.concatenate([_draw(p.cdf(), rng.random(n)) for p in profiles])
    starts = np.arange(len(profiles), dtype=np.int64) * n
    return RequestTrace(items, L, list(profiles), starts)


def load_trace(path, header: bool = False, remap: bool = False,
               library_size: Optional[int] = None) -> RequestTrace:
    """Read a trace file: one non-negative integer item id per line.

    With ``header`` the first line must be ``item_id`` and is skipped.  With
    ``remap`` IDs are renumbered densely ``1..L`` in order of first
    appearance and the file IDs are kept in ``original_ids``.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    first = 1
    if header:
        if not lines or lines[0].strip() != "item_id":
            raise TraceParseError(path, 1, lines[0] if lines else "")
        lines = lines[1:]
        first = 2
    if not lines:
        raise ValueError(f"{path}: trace holds no requests")
    ids = np.empty(len(lines), dtype=np.int64)
    for k, line in enumerate(lines):
        s = line.strip()
        if not s.isdigit():
            raise TraceParseError(path, k + first, line)
        ids[k] = int(s)
    if remap:
        uniq, first_pos, inverse = np.unique(ids, return_index=True, return_inverse=True)
        order = np.argsort(first_pos, kind="stable")
        rank = np.empty_like(order)
        rank[order] = np.arange(order.size)
        items = rank[inverse] + 1
        return RequestTrace(items, int(uniq.size), original_ids=uniq[order])
    if ids.min() < 1:
        raise ValueError(f"{path}: item id 0 needs remap=True (library IDs start at 1)")
    L = int(ids.max()) if library_size is None else int(library_size)
    return RequestTrace(ids, L, original_ids=None)


def save_trace(trace: RequestTrace, path, header: bool = False) -> None:
    ids = trace.items if trace.original_ids is None else trace.original_ids[trace.items - 1]
    body = "\n".join(map(str, ids.tolist())) + "\n"
    if header:
        body = "item_id\n" + body
    Path(path).write_bytes(body.encode("utf-8"))
