"""Arbitrary-precision and brute-force reference computations.

Nothing here imports the fast code paths it is used to check; sums are
taken term by term in ``mpmath`` at 50 digits or in exact rationals.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

import mpmath as mp

mp.mp.dps = 50


def harmonic(L: int, beta=1) -> mp.mpf:
    return mp.fsum(mp.power(i, -mp.mpf(beta)) for i in range(1, L + 1))


def zipf_probs(L: int, beta) -> list:
    h = harmonic(L, beta)
    return [mp.power(i, -mp.mpf(beta)) / h for i in range(1, L + 1)]


def binomial_tail(mu, w: int, k_min: int) -> mp.mpf:
    """``sum_{n=k_min..w} binom(w, n) mu**n (1 - mu)**(w - n)``, term by term."""
    mu = mp.mpf(mu)
    return mp.fsum(mp.binomial(w, n) * mu ** n * (1 - mu) ** (w - n)
                   for n in range(max(k_min, 0), w + 1))


def entry_count(mu_C1, w: int) -> int:
    # first count strictly above mu_C1 * w, from the exact rational value of the float
    num, den = Fraction(mu_C1).as_integer_ratio()
    return (num * w) // den + 1


def p_min(mu_C, mu_C1, w: int) -> mp.mpf:
    return binomial_tail(mu_C, w, entry_count(mu_C1, w))


def bound_lfu(delta, L: int, C: int) -> mp.mpf:
    d = mp.mpf(delta)
    return min(16 / d ** 2, 4 * C * (L - C) / d)


def bound_wlfu_lower(mu_C, mu_C1, w: int, T) -> mp.mpf:
    return (mp.mpf(mu_C) - mp.mpf(mu_C1)) * mp.mpf(mu_C1) ** w * mp.mpf(T)


def bound_lfulite(delta, L: int, C: int, w: int, pmin) -> mp.mpf:
    return C * (L - C) * w / mp.mpf(pmin) + 4 * C * (L - C) / mp.mpf(delta)


def bound_si(delta, L: int, C: int) -> mp.mpf:
    d = mp.mpf(delta)
    per_item = 2 / d ** 2 + (4 / d ** 2) * (4 + (32 / d ** 2) * mp.exp(-d ** 2 / 8))
    return mp.fsum(C * per_item for _ in range(C + 1, L + 1))


def dkw_envelope(t, eps) -> mp.mpf:
    return 2 * mp.exp(-mp.mpf(t) * mp.mpf(eps) ** 2 / 2)


def expected_bank_size(probs, C: int, w: int, t: int) -> mp.mpf:
    p = sorted(probs, reverse=True)
    k = entry_count(p[C], w)
    windows = -(-t // w)
    return mp.fsum(1 - (1 - binomial_tail(mu, w, k)) ** windows for mu in p)


def markov_wlfu_w1_regret(mu) -> Fraction:
    """Stationary per-step regret of window-1 LFU with C = 1 on two items.

    The cache is the last request, so P(hit) = sum mu_i**2.
    """
    mu = [Fraction(m) for m in mu]
    return max(mu) - sum(m * m for m in mu)


def wlfu_stationary_regret(mu, C: int, w: int) -> Fraction:
    """Exact stationary per-step WLFU regret by enumerating every window.

    Under IRM the window is ``w`` i.i.d. draws and the next request is
    independent of it, so the hit probability is the average over windows
    of the cached mass.
    """
    mu = [Fraction(m) for m in mu]
    L = len(mu)
    genie = sum(sorted(mu, reverse=True)[:C])
    hit = Fraction(0)
    for window in itertools.product(range(L), repeat=w):
        prob = Fraction(1)
        counts = [0] * L
        for x in window:
            prob *= mu[x]
            counts[x] += 1
        ranked = sorted(range(L), key=lambda i: (-counts[i], i))[:C]
        hit += prob * sum(mu[i] for i in ranked)
    return genie - hit


def fixed_cache_regret(mu, genie, cache) -> Fraction:
    """Exact expected per-step regret of an unchanging cache (1-based IDs)."""
    mu = [Fraction(m) for m in mu]
    return sum(mu[i - 1] for i in genie) - sum(mu[i - 1] for i in cache)
