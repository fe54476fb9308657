"""Single-copy rejection-sampling preparation and its K-fold repetition."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .amplify import DEFAULT_SCHEDULE, Schedule, amplify_flag_zero, flag_layout
from .core import (
    QuantumState,
    QueryCounter,
    as_weights,
    make_rng,
    oracle_gate,
    out_register,
    rot_coeffs_array,
)
from .errors import InvalidParameterError


@dataclass
class BaselineResult:
    state: QuantumState
    queries_used: int
    aa_iterations: int


def _check_bound(w, gamma_bound: float) -> None:
    if not gamma_bound > 0:
        raise InvalidParameterError(f"gamma_bound must be positive, got {gamma_bound!r}")
    if gamma_bound < float(w.entries.max()):
        raise InvalidParameterError(
            f"gamma_bound {gamma_bound!r} is below the largest weight {float(w.entries.max())!r}"
        )


def build_U_state(w, gamma_bound: float, counter: QueryCounter) -> QuantumState:
    """Uniform superposition over indices, with the flag rotated by sqrt(w_i / gamma_bound).

    Costs two queries: one to load w_i, one to uncompute it.
    """
    w = as_weights(w)
    _check_bound(w, gamma_bound)
    values = oracle_gate(w, counter)
    keep, flip = rot_coeffs_array(values, gamma_bound)
    oracle_gate(w, counter)
    amps = np.stack([keep, flip], axis=1) / math.sqrt(w.N)
    return QuantumState(flag_layout(out_register(w.N)), amps)


def prepare_single_baseline(
    w,
    gamma_bound: float,
    rng,
    counter: QueryCounter | None = None,
    schedule: Schedule = DEFAULT_SCHEDULE,
) -> BaselineResult:
    """Amplify the flag-0 branch of :func:`build_U_state` until it is measured.

    The success probability W / (N gamma_bound) has no known lower bound, so
    the iteration bound is left uncapped.
    """
    w = as_weights(w)
    _check_bound(w, gamma_bound)
    rng = make_rng(rng)
    local = QueryCounter()
    outcome = amplify_flag_zero(lambda c: build_U_state(w, gamma_bound, c), rng, local, cap=None, schedule=schedule)
    if counter is not None:
        counter.charge(local.count)
    return BaselineResult(outcome.state, local.count, outcome.iterations)


def naive_k_copies(
    w,
    K: int,
    gamma_bound: float,
    rng,
    schedule: Schedule = DEFAULT_SCHEDULE,
) -> tuple[list[QuantumState], int]:
    if K < 1:
        raise InvalidParameterError(f"K must be at least 1, got {K}")
    rng = make_rng(rng)
    results = [prepare_single_baseline(w, gamma_bound, rng, schedule=schedule) for _ in range(K)]
    return [r.state for r in results], sum(r.queries_used for r in results)


def naive_k_copies_detailed(w, K: int, gamma_bound: float, rng, schedule: Schedule = DEFAULT_SCHEDULE) -> list[BaselineResult]:
    """Like :func:`naive_k_copies` but keeps every per-copy result."""
    if K < 1:
        raise InvalidParameterError(f"K must be at least 1, got {K}")
    rng = make_rng(rng)
    return [prepare_single_baseline(w, gamma_bound, rng, schedule=schedule) for _ in range(K)]
