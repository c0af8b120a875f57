"""Partial-observation ("caching bandit") policies.

These policies see a request only when it hits the cache.  A miss arrives
as a silent step: the policy knows a request happened, not which item.

* :class:`CBMPS`: independent Beta posterior per item, Thompson placement.
* :class:`CBSI`: known ``mu_C`` and gap; threshold exploitation plus
  inverse-squared-gap exploration.
* :class:`CBSILite`: CB-SI with estimates kept only for a window-gated bank.
* :class:`CBFPS`: sampling from the Dirichlet-mixture posterior.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ._select import in_cache, top_c, weighted_draws
from .core import InvariantViolation, Mode, Policy
from .policies_full import _check_period, _window_push, default_window


@dataclass(frozen=True)
class StructuralInfo:
    """Popularity of the C-th item and the gap to the (C+1)-th."""

    mu_C: float
    delta: float

    def __post_init__(self):
        if not 0 < self.delta <= self.mu_C <= 1:
            raise ValueError(f"need 0 < delta <= mu_C <= 1, got mu_C={self.mu_C}, delta={self.delta}")

    @classmethod
    def from_profile(cls, probs, C: int) -> "StructuralInfo":
        p = np.sort(np.asarray(getattr(probs, "probs", probs), dtype=np.float64))[::-1]
        if C >= p.size:
            raise ValueError("structural information needs C < L")
        return cls(float(p[C - 1]), float(p[C - 1] - p[C]))

    @property
    def threshold(self) -> float:
        return self.mu_C - self.delta / 2


# --------------------------------------------------------------------------
# CB-MPS

@njit(cache=True)
def _mps_halve(alpha, beta, meta):
    touched = 0
    for i in range(alpha.shape[0]):
        alpha[i] = 1.0 + np.floor((alpha[i] - 1.0) / 2.0)
        beta[i] = 1.0 + np.floor((beta[i] - 1.0) / 2.0)
        if alpha[i] + beta[i] > 2.0:
            touched += 1
    meta[0] = touched


@njit(cache=True)
def _mps_update(rng, alpha, beta, meta, samples, cache, x, t, P):
    # meta: [items with a posterior update]
    C = cache.shape[0]
    if x >= 0 and in_cache(cache, x):
        for k in range(C):
            i = cache[k]
            if alpha[i] + beta[i] == 2.0:
                meta[0] += 1
            if i == x:
                alpha[i] += 1.0
            else:
                beta[i] += 1.0
    if P > 0 and t % P == 0:
        _mps_halve(alpha, beta, meta)
    for i in range(alpha.shape[0]):
        samples[i] = rng.beta(alpha[i], beta[i])
    top_c(samples, C, cache)


@njit(cache=True)
def _mps_run(rng, alpha, beta, meta, samples, cache, items, full, t0, P, hits, counters):
    for k in range(items.shape[0]):
        x = items[k]
        hit = in_cache(cache, x)
        hits[k] = hit
        _mps_update(rng, alpha, beta, meta, samples, cache, x if (full or hit) else -1,
                    t0 + k + 1, P)
        counters[k] = meta[0]


class CBMPS(Policy):
    """Thompson sampling on independent Beta(alpha_i, beta_i) marginals.

    On a hit the requested item's alpha and every other cached item's beta
    are incremented; silent steps leave the posterior untouched.
    """

    name = "mps"
    observation = Mode.PARTIAL
    randomized = True

    def __init__(self, L, C, seed=None, halve_every=None, initial_cache="ids"):
        super().__init__(L, C, seed, initial_cache)
        self.halve_every = _check_period(halve_every)
        self.alpha = np.ones(self.L)
        self.beta = np.ones(self.L)
        self._meta = np.zeros(1, dtype=np.int64)
        self._samples = np.zeros(self.L)

    @property
    def counters(self) -> int:
        return int(self._meta[0])

    def _update(self, x0):
        _mps_update(self.rng, self.alpha, self.beta, self._meta, self._samples, self._cache,
                    x0, self.t, self.halve_every)

    def _run(self, items0, full, hits, counters):
        _mps_run(self.rng, self.alpha, self.beta, self._meta, self._samples, self._cache,
                 items0, full, self.t, self.halve_every, hits, counters)
        self.t += items0.size

    def halve(self):
        _mps_halve(self.alpha, self.beta, self._meta)


# --------------------------------------------------------------------------
# CB-SI and CB-SILite

@njit(cache=True)
def _si_decide(rng, muhat, banked, scores, weights, cache, branch, mu_C, delta, prior_mu):
    C = cache.shape[0]
    L = muhat.shape[0]
    thr = mu_C - delta / 2.0
    na = 0
    for i in range(L):
        if banked[i] and muhat[i] >= thr:
            scores[i] = muhat[i]
            na += 1
        else:
            scores[i] = -np.inf
    top_c(scores, C, cache)
    if na >= C:
        branch[0] = 1
        return
    for i in range(L):
        if scores[i] != -np.inf:
            weights[i] = 0.0
        elif banked[i]:
            gap = mu_C - muhat[i]
            if not gap > 0.0:
                raise ValueError("exploration candidate at or above mu_C")
            weights[i] = 1.0 / (gap * gap)
        else:
            gap = max(mu_C - prior_mu, delta / 2.0)
            weights[i] = 1.0 / (gap * gap)
    weighted_draws(rng, weights, C - na, cache, na)
    branch[0] = 2


@njit(cache=True)
def _si_halve(alpha, beta, muhat, banked, meta, prior_mu):
    touched = 0
    for i in range(alpha.shape[0]):
        alpha[i] = np.floor(alpha[i] / 2.0)
        beta[i] = np.floor(beta[i] / 2.0)
        n = alpha[i] + beta[i]
        if n > 0.0:
            muhat[i] = alpha[i] / n
            touched += 1
        elif banked[i]:
            muhat[i] = prior_mu
    meta[1] = touched


@njit(cache=True)
def _si_update(rng, alpha, beta, muhat, banked, bank_list, meta, buf, wcounts, wmeta,
               scores, weights, window_top, cache, branch, x, t, P,
               mu_C, delta, prior_mu, count_silent, lite):
    # meta: [bank size, items with n_i > 0]
    C = cache.shape[0]
    hit = x >= 0 and in_cache(cache, x)
    if hit or count_silent:
        for k in range(C):
            i = cache[k]
            if not banked[i]:
                continue
            if alpha[i] + beta[i] == 0.0:
                meta[1] += 1
            if hit and i == x:
                alpha[i] += 1.0
            else:
                beta[i] += 1.0
            muhat[i] = alpha[i] / (alpha[i] + beta[i])
    if lite and hit:
        _window_push(buf, wcounts, wmeta, x)
        for i in range(wcounts.shape[0]):
            scores[i] = wcounts[i] if wcounts[i] > 0 else -np.inf
        na = top_c(scores, C, window_top)
        for k in range(na):
            j = window_top[k]
            if not banked[j]:
                banked[j] = True
                bank_list[meta[0]] = j
                meta[0] += 1
    if P > 0 and t % P == 0:
        _si_halve(alpha, beta, muhat, banked, meta, prior_mu)
    _si_decide(rng, muhat, banked, scores, weights, cache, branch, mu_C, delta, prior_mu)


@njit(cache=True)
def _si_run(rng, alpha, beta, muhat, banked, bank_list, meta, buf, wcounts, wmeta,
            scores, weights, window_top, cache, branch, items, full, t0, P,
            mu_C, delta, prior_mu, count_silent, lite, hits, counters):
    slot = 0 if lite else 1
    for k in range(items.shape[0]):
        x = items[k]
        hit = in_cache(cache, x)
        hits[k] = hit
        _si_update(rng, alpha, beta, muhat, banked, bank_list, meta, buf, wcounts, wmeta,
                   scores, weights, window_top, cache, branch, x if (full or hit) else -1,
                   t0 + k + 1, P, mu_C, delta, prior_mu, count_silent, lite)
        counters[k] = meta[slot]


class CBSI(Policy):
    """Caching bandit with structural information ``(mu_C, delta)``.

    Items whose estimate clears ``mu_C - delta/2`` form the exploit set.  If
    it holds at least C items the best C are cached; otherwise the rest of
    the cache is filled by weighted draws without replacement with weight
    ``1 / (mu_C - estimate)**2``.  Estimates start at ``1/L``.

    ``count_silent=True`` (default) also charges a silent step to every
    cached item, so ``alpha_i / (alpha_i + beta_i)`` is item i's request
    frequency over the steps it was cached.  ``count_silent=False`` updates
    on hits only, like CB-MPS.
    """

    name = "si"
    observation = Mode.PARTIAL
    randomized = True
    _lite = False

    def __init__(self, L, C, mu_C=None, delta=None, seed=None, info=None, halve_every=None,
                 count_silent=True, initial_cache="ids", w=None):
        super().__init__(L, C, seed, initial_cache)
        if info is None:
            if mu_C is None or delta is None:
                raise ValueError("CB-SI needs mu_C and delta (or info=StructuralInfo)")
            info = StructuralInfo(float(mu_C), float(delta))
        self.info = info
        self.halve_every = _check_period(halve_every)
        self.count_silent = bool(count_silent)
        self.prior_mu = 1.0 / self.L
        self.alpha = np.zeros(self.L)
        self.beta = np.zeros(self.L)
        self.muhat = np.full(self.L, self.prior_mu)
        self.banked = np.full(self.L, not self._lite, dtype=np.bool_)
        self._bank_list = np.zeros(self.L, dtype=np.int64)
        self._meta = np.zeros(2, dtype=np.int64)
        w = (default_window(self.L, self.C) if w is None else int(w)) if self._lite else 1
        if w < 1:
            raise ValueError(f"window length must be >= 1, got {w}")
        self.w = w
        self._buf = np.zeros(w, dtype=np.int64)
        self._wcounts = np.zeros(self.L, dtype=np.int64)
        self._wmeta = np.zeros(3, dtype=np.int64)
        self._scores = np.zeros(self.L)
        self._weights = np.zeros(self.L)
        self._window_top = np.zeros(self.C, dtype=np.int64)
        self._branch = np.zeros(1, dtype=np.int64)

    @property
    def last_branch(self) -> int:
        """1 when the last placement exploited, 2 when it explored, 0 before any."""
        return int(self._branch[0])

    @property
    def counters(self) -> int:
        return int(self._meta[1])

    def exploration_weights(self) -> np.ndarray:
        """Normalized draw probabilities over items outside the exploit set
        for the current state (zeros for exploit-set members)."""
        thr = self.info.threshold
        est = np.where(self.banked, self.muhat, self.prior_mu)
        in_a = self.banked & (self.muhat >= thr)
        gap = self.info.mu_C - est
        gap = np.where(self.banked, gap, np.maximum(gap, self.info.delta / 2))
        w = np.where(in_a, 0.0, 1.0 / np.where(in_a, 1.0, gap) ** 2)
        return w / w.sum()

    def place(self):
        """Recompute the placement from the current estimates; returns the cache."""
        try:
            _si_decide(self.rng, self.muhat, self.banked, self._scores, self._weights, self._cache,
                       self._branch, self.info.mu_C, self.info.delta, self.prior_mu)
        except ValueError as exc:
            raise InvariantViolation(str(exc)) from exc
        return self.cache

    def _state(self):
        return (self.rng, self.alpha, self.beta, self.muhat, self.banked, self._bank_list,
                self._meta, self._buf, self._wcounts, self._wmeta, self._scores, self._weights,
                self._window_top, self._cache, self._branch)

    def _params(self):
        return (self.info.mu_C, self.info.delta, self.prior_mu, self.count_silent, self._lite)

    def _update(self, x0):
        try:
            _si_update(*self._state(), x0, self.t, self.halve_every, *self._params())
        except ValueError as exc:
            raise InvariantViolation(str(exc)) from exc

    def _run(self, items0, full, hits, counters):
        try:
            _si_run(*self._state(), items0, full, self.t, self.halve_every, *self._params(),
                    hits, counters)
        except ValueError as exc:
            raise InvariantViolation(str(exc)) from exc
        self.t += items0.size

    def halve(self):
        _si_halve(self.alpha, self.beta, self.muhat, self.banked, self._meta, self.prior_mu)


class CBSILite(CBSI):
    """CB-SI whose estimates exist only for items in a counter bank.

    A window holds the last ``w`` observed (hit) requests; after each hit the
    C most frequent window items join the bank if absent.  Unbanked items
    can still be cached through exploration, with their estimate held at
    ``1/L``, but their hits are not counted until they are banked.
    """

    name = "silite"
    _lite = True

    @property
    def counters(self) -> int:
        return int(self._meta[0])

    @property
    def bank(self) -> set[int]:
        return {int(i) + 1 for i in self._bank_list[: self._meta[0]]}


# --------------------------------------------------------------------------
# CB-FPS

class CBFPS(Policy):
    """Posterior sampling with a Dirichlet-mixture posterior over the whole
    popularity vector.

    A seen request multiplies each component's weight by its predictive
    probability for that item and adds one to the item's coordinate.  A
    silent step splits each component over the uncached items ``j`` with
    weight proportional to ``w * alpha_j / sum(alpha)``.  Components with
    identical parameters are merged; above ``max_components`` the mixture
    is resampled down in proportion to weight.
    """

    name = "fps"
    observation = Mode.PARTIAL
    randomized = True

    def __init__(self, L, C, seed=None, prior=1.0, max_components=1024, initial_cache="ids"):
        super().__init__(L, C, seed, initial_cache)
        if prior <= 0:
            raise ValueError(f"Dirichlet prior must be positive, got {prior}")
        if int(max_components) < 1:
            raise ValueError(f"max_components must be >= 1, got {max_components}")
        self.prior = float(prior)
        self.max_components = int(max_components)
        self.alphas = np.full((1, self.L), self.prior)
        self.weights = np.ones(1)
        self.prunes = 0
        self.first_prune = None
        self.peak_components = 1
        self.max_weight_error = 0.0

    @property
    def n_components(self) -> int:
        return self.weights.size

    @property
    def counters(self) -> int:
        return self.L

    def miss_probability(self, cache=None) -> float:
        """Posterior predictive probability that the next request misses."""
        idx = self._cache if cache is None else np.array([i - 1 for i in cache])
        out = np.setdiff1d(np.arange(self.L), idx)
        pm = self.alphas[:, out].sum(1) / self.alphas.sum(1)
        return float(np.dot(self.weights, pm))

    def components(self) -> list[tuple[float, np.ndarray]]:
        return [(float(w), a.copy()) for w, a in zip(self.weights, self.alphas)]

    def _merge(self, alphas, weights):
        inc = np.rint(alphas - self.prior).astype(np.int64)
        radix = int(inc.max()) + 1
        if radix ** self.L < 2 ** 62:
            keys = inc @ (radix ** np.arange(self.L, dtype=np.int64))
            _, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
        else:
            _, first, inverse = np.unique(inc, axis=0, return_index=True, return_inverse=True)
        inverse = inverse.ravel()
        return alphas[first], np.bincount(inverse, weights=weights, minlength=first.size)

    def _update(self, x0):
        alphas, weights = self.alphas, self.weights
        # every component has gained one count per step, so all rows share one sum
        total = alphas[0].sum()
        if x0 >= 0:
            weights = weights * (alphas[:, x0] / total)
            alphas = alphas.copy()
            alphas[:, x0] += 1.0
        else:
            out = np.setdiff1d(np.arange(self.L), self._cache)
            if out.size == 0:
                raise InvariantViolation("silent step although the cache holds the whole library")
            K, M = alphas.shape[0], out.size
            lik = alphas[:, out] / total
            weights = (weights[:, None] * lik).ravel()
            alphas = np.repeat(alphas, M, axis=0)
            alphas[np.arange(K * M), np.tile(out, K)] += 1.0
            alphas, weights = self._merge(alphas, weights)
        keep = weights > 0
        alphas, weights = alphas[keep], weights[keep]
        weights = weights / weights.sum()
        self.peak_components = max(self.peak_components, weights.size)
        if weights.size > self.max_components:
            picks = self.rng.choice(weights.size, size=self.max_components, p=weights)
            counts = np.bincount(picks, minlength=weights.size)
            keep = counts > 0
            alphas, weights = alphas[keep], counts[keep] / self.max_components
            self.prunes += 1
            if self.first_prune is None:
                self.first_prune = self.t
        self.max_weight_error = max(self.max_weight_error, abs(weights.sum() - 1.0))
        self.alphas, self.weights = alphas, weights
        self._decide()

    def _decide(self):
        cum = np.cumsum(self.weights)
        k = min(int(np.searchsorted(cum, self.rng.random() * cum[-1], side="right")),
                self.weights.size - 1)
        mu = self.rng.dirichlet(self.alphas[k])
        self._cache = np.sort(np.argsort(-mu, kind="stable")[: self.C]).astype(np.int64)
