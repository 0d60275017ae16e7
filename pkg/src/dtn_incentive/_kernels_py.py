"""Pure numpy implementations of the subset kernels.

Masks index subsets of relays: bit ``u`` of a mask is set when relay ``u`` is in the subset.
"""
import numpy as np


def _subset_products(x: np.ndarray) -> np.ndarray:
    """``out[mask] = prod(x[u] for u in mask)`` for every mask over ``len(x)`` bits."""
    out = np.ones(1, dtype=float)
    for xu in x:
        out = np.concatenate((out, out * xu))
    return out


def _popcounts(nbits: int) -> np.ndarray:
    out = np.zeros(1, dtype=np.int64)
    for _ in range(nbits):
        out = np.concatenate((out, out + 1))
    return out


def race_table(lam, mu, cand):
    """Probability that relay ``cand`` delivers first, for every set of current holders.

    ``out[A]`` (for masks A containing ``cand``) is the probability that ``cand`` is the
    first to meet the destination when the relays in A hold the message and have not yet
    delivered, and every relay outside A has yet to meet the source. Holders deliver at
    rate ``mu``, outsiders join at rate ``lam``; all clocks are exponential. Entries for
    masks without ``cand`` are 0.
    """
    lam = np.ascontiguousarray(lam, dtype=float)
    mu = np.ascontiguousarray(mu, dtype=float)
    n = len(lam)
    size = 1 << n
    masks = np.arange(size, dtype=np.int64)
    held_mu = np.zeros(size)
    held_lam = np.zeros(size)
    for u in range(n):
        has = (masks >> u) & 1
        held_mu += has * mu[u]
        held_lam += has * lam[u]
    rate = (lam.sum() - held_lam) + held_mu
    pop = _popcounts(n)
    win = np.zeros(size)
    with_cand = ((masks >> cand) & 1).astype(bool)
    for k in range(n, 0, -1):
        layer = masks[(pop == k) & with_cand]
        num = np.full(len(layer), mu[cand])
        for u in range(n):
            bit = 1 << u
            free = (layer & bit) == 0
            num[free] += lam[u] * win[layer[free] | bit]
        win[layer] = num / rate[layer]
    return win


def subset_sum(x, y, vals, size):
    """Sum over subsets B of ``prod_{u in B} x[u] * prod_{u not in B} y[u] * vals[B]``.

    Only subsets with exactly ``size`` members contribute when ``size >= 0``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    vals = np.asarray(vals, dtype=float)
    px = _subset_products(x)
    py_comp = _subset_products(y)[::-1]
    terms = px * py_comp * vals
    if size >= 0:
        terms = terms[_popcounts(len(x)) == size]
    return float(terms.sum())
