"""Simulated quantum top-K maximum finding with exact query accounting.

Keys are compared as ``(w_i, -i)``: larger weight wins, and among equal
weights the smaller index wins.  That makes the order total, so the set of
indices "above a threshold key" is always well defined.

The inner Grover searches are simulated exactly in the two-dimensional
subspace spanned by the uniform superpositions over marked and unmarked
indices: after ``j`` iterations from the uniform state, a measurement lands
in the marked set with probability ``sin^2((2j + 1) theta)``, where
``sin^2 theta = |marked| / N``, and is uniform within it.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .amplify import DEFAULT_SCHEDULE, Schedule
from .core import QueryCounter, as_weights, make_rng, oracle_query
from .errors import InvalidIndexError, InvalidParameterError

QUERIES_PER_GROVER_ITERATION = 2
QUERIES_PER_ATTEMPT = 2


@dataclass
class TopKResult:
    H: frozenset
    queries_used: int
    succeeded: bool


def _marked_mask(values: np.ndarray, threshold_value: float, threshold_pos: int) -> np.ndarray:
    """Positions whose key (value, -position) is strictly above the threshold key."""
    positions = np.arange(values.size)
    return (values > threshold_value) | ((values == threshold_value) & (positions < threshold_pos))


def marked_probability(n_marked: int, N: int, iterations: int) -> float:
    """Chance that j Grover iterations from the uniform state end in the marked set."""
    theta = math.asin(math.sqrt(n_marked / N))
    return math.sin((2 * iterations + 1) * theta) ** 2


def _search(
    marked: np.ndarray,
    rng: np.random.Generator,
    counter: QueryCounter,
    schedule: Schedule = DEFAULT_SCHEDULE,
) -> int | None:
    """Exponential Grover search over a boolean mask; returns a 0-based position or None.

    Gives up after ceil(log2 N) consecutive failed attempts at the cap ceil(sqrt N).
    """
    N = marked.size
    cap = math.isqrt(N - 1) + 1 if N > 1 else 1
    give_up_after = max(1, math.ceil(math.log2(N))) if N > 1 else 1
    hits = np.flatnonzero(marked)
    m = min(schedule.initial, cap)
    failures_at_cap = 0
    while True:
        j = int(rng.integers(m))
        counter.charge(QUERIES_PER_ATTEMPT + QUERIES_PER_GROVER_ITERATION * j)
        if hits.size and rng.random() < marked_probability(hits.size, N, j):
            return int(hits[rng.integers(hits.size)])
        if m == cap:
            failures_at_cap += 1
            if failures_at_cap >= give_up_after:
                return None
        m = schedule.next_bound(m, cap)


def grover_search_above(
    w,
    threshold_key: tuple[float, int],
    rng,
    counter: QueryCounter,
    schedule: Schedule = DEFAULT_SCHEDULE,
) -> int | None:
    """Find a random index whose key beats ``threshold_key = (value, index)``.

    Returns a 1-based index, or None once the search certifies the marked set
    is empty.
    """
    w = as_weights(w)
    value, index = threshold_key
    if not 1 <= index <= w.N:
        raise InvalidIndexError(f"threshold index {index} outside [1, {w.N}]")
    marked = _marked_mask(w.entries, float(value), index - 1)
    found = _search(marked, make_rng(rng), counter, schedule)
    return None if found is None else found + 1


def _single_run(w, K: int, rng, counter: QueryCounter, schedule: Schedule) -> tuple[list[int], float]:
    N = w.N
    values = w.entries
    start = rng.choice(N, size=K, replace=False)
    # min-heap of keys: the root is the current K-th best
    heap = [(oracle_query(w, int(p) + 1, counter), -int(p)) for p in start]
    heapq.heapify(heap)
    in_set = np.zeros(N, dtype=bool)
    in_set[start] = True
    while True:
        worst_value, neg_pos = heap[0]
        marked = _marked_mask(values, worst_value, -neg_pos) & ~in_set
        found = _search(marked, rng, counter, schedule)
        if found is None:
            break
        # the value is read by the attempt's verification query
        heapq.heapreplace(heap, (float(values[found]), -found))
        in_set[-neg_pos] = False
        in_set[found] = True
    chosen = sorted(-p for _, p in heap)
    return chosen, math.fsum(v for v, _ in heap)


def repetitions_for(delta: float) -> int:
    return max(1, math.ceil(math.log2(1.0 / delta)))


def top_k_positions(
    w,
    K: int,
    delta: float,
    rng,
    counter: QueryCounter | None = None,
    schedule: Schedule = DEFAULT_SCHEDULE,
) -> TopKResult:
    """Positions (1-based) of K largest entries, correct with probability >= 1 - delta.

    Runs ceil(log2(1/delta)) independent threshold-raising searches and keeps
    the candidate set with the largest total weight.
    """
    w = as_weights(w)
    if not 1 <= K <= w.N:
        raise InvalidParameterError(f"need 1 <= K <= N, got K={K}, N={w.N}")
    if not 0 < delta < 1:
        raise InvalidParameterError(f"delta must lie in (0, 1), got {delta!r}")
    rng = make_rng(rng)
    local = QueryCounter()
    if K == w.N:
        H = frozenset(range(1, w.N + 1))
    else:
        best, best_mass = None, -1.0
        for _ in range(repetitions_for(delta)):
            chosen, mass = _single_run(w, K, rng, local, schedule)
            if mass > best_mass:
                best, best_mass = chosen, mass
        H = frozenset(p + 1 for p in best)
    if counter is not None:
        counter.charge(local.count)
    return TopKResult(H, local.count, is_valid_top_k(w, H))


def is_valid_top_k(w, H: Iterable[int]) -> bool:
    """True iff every weight in H is at least every weight outside it.  Uncharged."""
    w = as_weights(w)
    H = set(H)
    if any(not 1 <= i <= w.N for i in H):
        raise InvalidIndexError(f"H has indices outside [1, {w.N}]")
    inside = np.zeros(w.N, dtype=bool)
    inside[[i - 1 for i in H]] = True
    if inside.all() or not inside.any():
        return True
    return bool(w.entries[inside].min() >= w.entries[~inside].max())
