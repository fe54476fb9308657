"""Classical importance-sampling baselines (Vose's alias method)."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .core import as_weights, make_rng, tv_distance
from .errors import InvalidIndexError, InvalidInputError


@dataclass(frozen=True)
class AliasTable:
    """One column per index: keep it with ``keep_prob`` or jump to ``alias``.

    ``alias`` holds 1-based indices; a column that never jumps aliases itself.
    """

    keep_prob: np.ndarray
    alias: np.ndarray
    build_cost: int

    @property
    def N(self) -> int:
        return self.keep_prob.size

    def distribution(self) -> np.ndarray:
        """Exact output law reconstructed from the columns."""
        N = self.N
        probs = self.keep_prob / N
        probs = probs + np.bincount(self.alias - 1, weights=(1.0 - self.keep_prob) / N, minlength=N)
        return probs


def alias_build(w) -> AliasTable:
    """Vose's construction with FIFO worklists.

    Scaled weights exactly equal to 1 count as large.  The head of the large
    list keeps absorbing small columns until it drops below 1.
    """
    w = as_weights(w)
    N = w.N
    scaled = [float(x) for x in w.entries * (N / w.W)]
    small, large = deque(), deque()
    cost = 0
    for i, p in enumerate(scaled):
        (small if p < 1.0 else large).append(i)
        cost += 1
    keep = [1.0] * N
    alias = list(range(N))
    while small and large:
        lo = small.popleft()
        hi = large[0]
        keep[lo] = scaled[lo]
        alias[lo] = hi
        scaled[hi] = (scaled[hi] + scaled[lo]) - 1.0
        cost += 1
        if scaled[hi] < 1.0:
            large.popleft()
            small.append(hi)
            cost += 1
    # leftovers are 1 up to rounding
    for i in list(small) + list(large):
        keep[i] = 1.0
        alias[i] = i
        cost += 1
    return AliasTable(np.array(keep), np.array(alias, dtype=np.int64) + 1, cost)


def alias_sample(table: AliasTable, rng) -> int:
    """One draw: a uniform column, then a biased coin.  Returns a 1-based index."""
    rng = make_rng(rng)
    col = int(rng.integers(table.N))
    if rng.random() < table.keep_prob[col]:
        return col + 1
    return int(table.alias[col])


def alias_sample_many(table: AliasTable, rng, size: int) -> np.ndarray:
    """Vectorised draws, consuming the generator in the same two-stream pattern."""
    rng = make_rng(rng)
    cols = rng.integers(table.N, size=size)
    coins = rng.random(size)
    return np.where(coins < table.keep_prob[cols], cols + 1, table.alias[cols])


def empirical_frequencies(samples, N: int) -> np.ndarray:
    samples = np.asarray(samples, dtype=np.int64)
    if samples.size == 0:
        raise InvalidInputError("no samples")
    if samples.min() < 1 or samples.max() > N:
        raise InvalidIndexError(f"sample outside [1, {N}]")
    return np.bincount(samples - 1, minlength=N) / samples.size


def empirical_tv(samples, w) -> float:
    w = as_weights(w)
    return tv_distance(empirical_frequencies(samples, w.N), w.probabilities)
