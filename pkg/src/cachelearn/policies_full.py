"""Full-observation policies: LFU, window LFU, LFU-Lite, and an LRU baseline.

Every policy here sees each request.  Counting policies accept
``halve_every=P``: after every P-th step all learned counts are floor-halved
before the next placement is chosen.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from ._select import fill_lowest_absent, in_cache, top_c
from .core import Policy


def default_window(L: int, C: int) -> int:
    """Window length ``ceil(C**2 * ln L)``, at least 1."""
    return max(1, math.ceil(C * C * math.log(L))) if L > 1 else 1


def _check_period(halve_every):
    if halve_every is None:
        return 0
    if int(halve_every) < 1:
        raise ValueError(f"halving period must be >= 1, got {halve_every}")
    return int(halve_every)


# --------------------------------------------------------------------------
# LFU

@njit(cache=True)
def _lfu_halve(counts, meta):
    total = 0
    nseen = 0
    for i in range(counts.shape[0]):
        counts[i] //= 2
        total += counts[i]
        if counts[i] > 0:
            nseen += 1
    meta[0] = total
    meta[1] = nseen


@njit(cache=True)
def _lfu_update(counts, meta, scores, cache, x, t, P):
    # meta: [total, counters in use]
    if x >= 0:
        if counts[x] == 0:
            meta[1] += 1
        counts[x] += 1
        meta[0] += 1
    if P > 0 and t % P == 0:
        _lfu_halve(counts, meta)
    for i in range(counts.shape[0]):
        scores[i] = counts[i]
    top_c(scores, cache.shape[0], cache)


@njit(cache=True)
def _lfu_run(counts, meta, scores, cache, items, full, t0, P, hits, counters):
    for k in range(items.shape[0]):
        x = items[k]
        hit = in_cache(cache, x)
        hits[k] = hit
        _lfu_update(counts, meta, scores, cache, x if (full or hit) else -1, t0 + k + 1, P)
        counters[k] = meta[1]


class LFU(Policy):
    """Cache the C items with the largest empirical request frequency."""

    name = "lfu"

    def __init__(self, L, C, seed=None, halve_every=None, initial_cache="ids"):
        super().__init__(L, C, seed, initial_cache)
        self.halve_every = _check_period(halve_every)
        self.counts = np.zeros(self.L, dtype=np.int64)
        self._meta = np.zeros(2, dtype=np.int64)
        self._scores = np.zeros(self.L)

    @property
    def total(self) -> int:
        return int(self._meta[0])

    @property
    def counters(self) -> int:
        return int(self._meta[1])

    def estimates(self) -> np.ndarray:
        """Empirical popularity ``counts / total`` (zeros before any request)."""
        return self.counts / self.total if self.total else np.zeros(self.L)

    def _update(self, x0):
        _lfu_update(self.counts, self._meta, self._scores, self._cache, x0, self.t, self.halve_every)

    def _run(self, items0, full, hits, counters):
        _lfu_run(self.counts, self._meta, self._scores, self._cache, items0, full, self.t,
                 self.halve_every, hits, counters)
        self.t += items0.size

    def halve(self):
        _lfu_halve(self.counts, self._meta)


# --------------------------------------------------------------------------
# sliding window shared by WLFU and LFU-Lite

@njit(cache=True)
def _window_push(buf, wcounts, wmeta, x):
    # wmeta: [next write position, fill, distinct items in window]
    w = buf.shape[0]
    pos = wmeta[0]
    if wmeta[1] == w:
        y = buf[pos]
        wcounts[y] -= 1
        if wcounts[y] == 0:
            wmeta[2] -= 1
    else:
        wmeta[1] += 1
    buf[pos] = x
    wmeta[0] = (pos + 1) % w
    if wcounts[x] == 0:
        wmeta[2] += 1
    wcounts[x] += 1


class _Window:
    def __init__(self, L, w):
        if int(w) < 1:
            raise ValueError(f"window length must be >= 1, got {w}")
        self.w = int(w)
        self.buf = np.zeros(self.w, dtype=np.int64)
        self.counts = np.zeros(L, dtype=np.int64)
        self.meta = np.zeros(3, dtype=np.int64)

    def contents(self) -> list[int]:
        """Window requests oldest first, 1-based."""
        pos, fill = int(self.meta[0]), int(self.meta[1])
        if fill < self.w:
            seq = self.buf[:fill]
        else:
            seq = np.concatenate([self.buf[pos:], self.buf[:pos]])
        return (seq + 1).tolist()


# --------------------------------------------------------------------------
# WLFU

@njit(cache=True)
def _wlfu_update(buf, wcounts, wmeta, scores, cache, x):
    if x >= 0:
        _window_push(buf, wcounts, wmeta, x)
    for i in range(wcounts.shape[0]):
        scores[i] = wcounts[i]
    top_c(scores, cache.shape[0], cache)


@njit(cache=True)
def _wlfu_run(buf, wcounts, wmeta, scores, cache, items, full, hits, counters):
    for k in range(items.shape[0]):
        x = items[k]
        hit = in_cache(cache, x)
        hits[k] = hit
        _wlfu_update(buf, wcounts, wmeta, scores, cache, x if (full or hit) else -1)
        counters[k] = wmeta[2]


class WLFU(Policy):
    """Cache the C items requested most often among the last ``w`` requests."""

    name = "wlfu"

    def __init__(self, L, C, w=None, seed=None, initial_cache="ids"):
        super().__init__(L, C, seed, initial_cache)
        self.window = _Window(self.L, default_window(self.L, self.C) if w is None else w)
        self._scores = np.zeros(self.L)

    @property
    def w(self) -> int:
        return self.window.w

    @property
    def counters(self) -> int:
        return int(self.window.meta[2])

    def _update(self, x0):
        win = self.window
        _wlfu_update(win.buf, win.counts, win.meta, self._scores, self._cache, x0)

    def _run(self, items0, full, hits, counters):
        win = self.window
        _wlfu_run(win.buf, win.counts, win.meta, self._scores, self._cache, items0, full,
                  hits, counters)
        self.t += items0.size


# --------------------------------------------------------------------------
# LFU-Lite

@njit(cache=True)
def _bank_halve(bank_list, bmeta, bcount, age):
    for k in range(bmeta[0]):
        i = bank_list[k]
        bcount[i] //= 2
        if age[i] > 0:
            age[i] = max(1, age[i] // 2)


@njit(cache=True)
def _lite_update(buf, wcounts, wmeta, banked, entry, bcount, age, bank_list, bmeta,
                 scores, window_top, cache, x, t, P):
    # bmeta: [bank size]
    C = cache.shape[0]
    L = wcounts.shape[0]
    if x >= 0:
        _window_push(buf, wcounts, wmeta, x)
    for k in range(bmeta[0]):
        age[bank_list[k]] += 1
    if x >= 0 and banked[x]:
        bcount[x] += 1
    for i in range(L):
        scores[i] = wcounts[i] if wcounts[i] > 0 else -np.inf
    na = top_c(scores, C, window_top)
    for k in range(na):
        j = window_top[k]
        if not banked[j]:
            banked[j] = True
            entry[j] = t
            bcount[j] = 0
            age[j] = 0
            bank_list[bmeta[0]] = j
            bmeta[0] += 1
    if P > 0 and t % P == 0:
        _bank_halve(bank_list, bmeta, bcount, age)
    for i in range(L):
        if banked[i]:
            scores[i] = bcount[i] / age[i] if age[i] > 0 else 0.0
        else:
            scores[i] = -np.inf
    n = top_c(scores, C, cache)
    fill_lowest_absent(cache, n, banked)


@njit(cache=True)
def _lite_run(buf, wcounts, wmeta, banked, entry, bcount, age, bank_list, bmeta,
              scores, window_top, cache, items, full, t0, P, hits, counters):
    for k in range(items.shape[0]):
        x = items[k]
        hit = in_cache(cache, x)
        hits[k] = hit
        _lite_update(buf, wcounts, wmeta, banked, entry, bcount, age, bank_list, bmeta,
                     scores, window_top, cache, x if (full or hit) else -1, t0 + k + 1, P)
        counters[k] = bmeta[0]


class LFULite(Policy):
    """LFU over a grow-only counter bank gated by a sliding window.

    An item enters the bank the first time it is among the C most frequent
    items of the window; from then on it is counted exactly.  Its estimate
    is ``count / age`` where ``age`` is the number of steps since entry.
    """

    name = "lfulite"

    def __init__(self, L, C, w=None, seed=None, halve_every=None, initial_cache="ids"):
        super().__init__(L, C, seed, initial_cache)
        self.window = _Window(self.L, default_window(self.L, self.C) if w is None else w)
        self.halve_every = _check_period(halve_every)
        self.banked = np.zeros(self.L, dtype=np.bool_)
        self.entry = np.zeros(self.L, dtype=np.int64)
        self.bcount = np.zeros(self.L, dtype=np.int64)
        self.age = np.zeros(self.L, dtype=np.int64)
        self._bank_list = np.zeros(self.L, dtype=np.int64)
        self._bmeta = np.zeros(1, dtype=np.int64)
        self._scores = np.zeros(self.L)
        self._window_top = np.zeros(self.C, dtype=np.int64)

    @property
    def w(self) -> int:
        return self.window.w

    @property
    def counters(self) -> int:
        return int(self._bmeta[0])

    @property
    def bank(self) -> dict[int, tuple[int, int]]:
        """Banked items (1-based) mapped to ``(entry_time, count since entry)``."""
        return {int(i) + 1: (int(self.entry[i]), int(self.bcount[i]))
                for i in self._bank_list[: self._bmeta[0]]}

    def estimates(self) -> dict[int, float]:
        return {int(i) + 1: (self.bcount[i] / self.age[i] if self.age[i] > 0 else 0.0)
                for i in self._bank_list[: self._bmeta[0]]}

    def _state(self):
        win = self.window
        return (win.buf, win.counts, win.meta, self.banked, self.entry, self.bcount, self.age,
                self._bank_list, self._bmeta, self._scores, self._window_top, self._cache)

    def _update(self, x0):
        _lite_update(*self._state(), x0, self.t, self.halve_every)

    def _run(self, items0, full, hits, counters):
        _lite_run(*self._state(), items0, full, self.t, self.halve_every, hits, counters)
        self.t += items0.size

    def halve(self):
        _bank_halve(self._bank_list, self._bmeta, self.bcount, self.age)


# --------------------------------------------------------------------------
# LRU baseline

@njit(cache=True)
def _lru_update(order, x):
    if x < 0:
        return
    C = order.shape[0]
    pos = C - 1
    for k in range(C):
        if order[k] == x:
            pos = k
            break
    for k in range(pos, 0, -1):
        order[k] = order[k - 1]
    order[0] = x


@njit(cache=True)
def _lru_run(order, items, full, hits):
    for k in range(items.shape[0]):
        x = items[k]
        hit = in_cache(order, x)
        hits[k] = hit
        _lru_update(order, x if (full or hit) else -1)


class LRU(Policy):
    """Move-to-front list; a miss evicts the least recently requested item."""

    name = "lru"

    @property
    def counters(self) -> int:
        return self.C

    def _update(self, x0):
        _lru_update(self._cache, x0)

    def _run(self, items0, full, hits, counters):
        _lru_run(self._cache, items0, full, hits)
        counters[:] = self.C
        self.t += items0.size
