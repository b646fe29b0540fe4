"""Skip-gram negative-sampling update kernels (numba).

The generator is the 48-bit linear congruential generator used by the
original word2vec tool: ``x <- (x * 25214903917 + 11) mod 2**48``. Draws are
taken in a fixed order so single-worker training is bit-reproducible.
"""

from __future__ import annotations

import numpy as np
from numba import config as numba_config
from numba import njit, prange

# the system TBB is often too old for numba; prefer OpenMP or the built-in pool
numba_config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

MAX_EXP = 6.0

_MUL = np.uint64(25214903917)
_ADD = np.uint64(11)
_MASK = np.uint64((1 << 48) - 1)
_SHIFT = np.uint64(16)


@njit(cache=True, inline="always")
def _next(state):
    return (state * _MUL + _ADD) & _MASK


@njit(cache=True)
def _sigmoid(x):
    if x > MAX_EXP:
        x = MAX_EXP
    elif x < -MAX_EXP:
        x = -MAX_EXP
    return 1.0 / (1.0 + np.exp(-x))


@njit(cache=True)
def train_range(tokens, bounds, s_from, s_to, syn0, syn1, cum_table, window, negative,
                alpha_hi, alpha_lo, state):
    """Run one pass over sentences ``s_from..s_to``; returns the RNG state.

    ``alpha`` decays linearly from ``alpha_hi`` to ``alpha_lo`` across the
    tokens of the range.
    """
    dims = syn0.shape[1]
    n_tokens = bounds[s_to] - bounds[s_from]
    total = cum_table[cum_table.shape[0] - 1]
    work = np.empty(dims, dtype=syn0.dtype)
    seen = 0
    for s in range(s_from, s_to):
        lo = bounds[s]
        hi = bounds[s + 1]
        for pos in range(lo, hi):
            alpha = alpha_hi - (alpha_hi - alpha_lo) * (seen / max(n_tokens, 1))
            seen += 1
            state = _next(state)
            reduced = np.int64(state % np.uint64(window))
            span = window - reduced
            center = tokens[pos]
            start = max(lo, pos - span)
            stop = min(hi, pos + span + 1)
            for cpos in range(start, stop):
                if cpos == pos:
                    continue
                context = tokens[cpos]
                for k in range(dims):
                    work[k] = 0.0
                for d in range(negative + 1):
                    if d == 0:
                        target = context
                        label = 1.0
                    else:
                        state = _next(state)
                        r = np.int64((state >> _SHIFT) % np.uint64(total))
                        target = np.searchsorted(cum_table, r, side="right")
                        if target == context:
                            continue
                        label = 0.0
                    f = 0.0
                    for k in range(dims):
                        f += syn0[center, k] * syn1[target, k]
                    g = (label - _sigmoid(f)) * alpha
                    for k in range(dims):
                        work[k] += g * syn1[target, k]
                        syn1[target, k] += g * syn0[center, k]
                for k in range(dims):
                    syn0[center, k] += work[k]
    return state


@njit(cache=True, parallel=True)
def train_parallel(tokens, bounds, chunk_edges, syn0, syn1, cum_table, window, negative,
                   alpha_hi, alpha_lo, seeds):
    """Lock-free updates over sentence chunks. Not reproducible."""
    n_chunks = chunk_edges.shape[0] - 1
    for c in prange(n_chunks):
        train_range(tokens, bounds, chunk_edges[c], chunk_edges[c + 1], syn0, syn1,
                    cum_table, window, negative, alpha_hi, alpha_lo, seeds[c])
