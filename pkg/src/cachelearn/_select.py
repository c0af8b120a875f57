"""Compiled selection primitives shared by the policy kernels."""
import numpy as np
from numba import njit


@njit(cache=True)
def top_c(scores, C, out):
    """Write into ``out`` the indices of the ``C`` largest finite scores.

    Entries equal to ``-inf`` are skipped.  Ties go to the lower index and
    ``out`` ends up in descending score order.  Returns the number written,
    which is below ``C`` when fewer entries qualify.
    """
    n = 0
    for i in range(scores.shape[0]):
        s = scores[i]
        if s == -np.inf:
            continue
        if n < C:
            j = n
            n += 1
        elif s > scores[out[C - 1]]:
            j = C - 1
        else:
            continue
        while j > 0 and scores[out[j - 1]] < s:
            out[j] = out[j - 1]
            j -= 1
        out[j] = i
    return n


@njit(cache=True)
def weighted_draws(rng, weights, k, out, offset):
    """Draw ``k`` distinct indices in turn, each with probability proportional to
    ``weights`` among the ones not yet drawn.

    ``weights`` is consumed (drawn entries are zeroed).  Results go to
    ``out[offset:offset + k]``.
    """
    for d in range(k):
        total = 0.0
        for i in range(weights.shape[0]):
            total += weights[i]
        if not total > 0.0:
            raise ValueError("no positive weight left to draw from")
        u = rng.random() * total
        acc = 0.0
        chosen = -1
        for i in range(weights.shape[0]):
            wi = weights[i]
            if wi > 0.0:
                acc += wi
                chosen = i
                if u < acc:
                    break
        out[offset + d] = chosen
        weights[chosen] = 0.0


@njit(cache=True)
def in_cache(cache, x):
    for k in range(cache.shape[0]):
        if cache[k] == x:
            return True
    return False


@njit(cache=True)
def fill_lowest_absent(cache, n, excluded):
    """Pad ``cache[n:]`` with the lowest indices whose ``excluded`` flag is off
    and that are not already among ``cache[:n]``."""
    i = 0
    while n < cache.shape[0]:
        if not excluded[i]:
            taken = False
            for k in range(n):
                if cache[k] == i:
                    taken = True
                    break
            if not taken:
                cache[n] = i
                n += 1
        i += 1
