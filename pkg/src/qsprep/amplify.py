"""Amplitude amplification with an unknown success probability.

The circuit being amplified prepares a state over ``out (x) rot`` and the
target is the rot = 0 branch.  Each attempt rebuilds the circuit output, runs
a uniformly random number of Grover iterations below the current bound, and
measures the flag; the bound grows geometrically (6/5 by default) up to an
optional cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .core import QuantumState, QueryCounter, flag_register, measure

QUERIES_PER_ITERATION = 4  # one C-dagger and one C, two queries each


@dataclass(frozen=True)
class Schedule:
    growth: Fraction = Fraction(6, 5)
    initial: int = 1

    def __post_init__(self):
        object.__setattr__(self, "growth", Fraction(self.growth).limit_denominator(10**6))
        if self.growth <= 1:
            raise ValueError("schedule growth must exceed 1")
        if self.initial < 1:
            raise ValueError("initial iteration bound must be at least 1")

    def next_bound(self, m: int, cap: int | None) -> int:
        nxt = math.ceil(self.growth * m)
        return nxt if cap is None else min(nxt, cap)


DEFAULT_SCHEDULE = Schedule()


@dataclass
class AmplifyOutcome:
    state: QuantumState  # collapsed onto rot = 0, out register only
    attempts: int
    iterations: int


def grover_iterate(psi: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Reflect about the flag-0 subspace, then about ``psi`` (both shaped (n, 2))."""
    v[:, 0] *= -1.0
    overlap = float(np.dot(psi.ravel(), v.ravel()))
    return 2.0 * overlap * psi - v


def amplify_flag_zero(
    build: Callable[[QueryCounter], QuantumState],
    rng: np.random.Generator,
    counter: QueryCounter,
    cap: int | None = None,
    schedule: Schedule = DEFAULT_SCHEDULE,
) -> AmplifyOutcome:
    """Run attempts until the flag reads 0.

    ``build`` must return the circuit output with layout ``(out, rot)`` and
    charge its own queries to the counter it receives.  ``cap=None`` lets the
    iteration bound grow without limit.
    """
    m = schedule.initial if cap is None else min(schedule.initial, cap)
    attempts = 0
    total_iterations = 0
    while True:
        attempts += 1
        prepared = build(counter)
        out_reg, rot_reg = prepared.layout
        psi = prepared.tensor
        j = int(rng.integers(m))
        v = psi.copy()
        for _ in range(j):
            v = grover_iterate(psi, v)
        counter.charge(QUERIES_PER_ITERATION * j)
        total_iterations += j
        current = QuantumState(prepared.layout, v / math.sqrt(float(np.dot(v.ravel(), v.ravel()))))
        flag, collapsed = measure(current, rot_reg.name, rng)
        if flag == 0:
            good = collapsed.tensor[:, 0]
            # a global sign of -1 is unobservable; report the canonical phase
            if good[np.argmax(np.abs(good))] < 0:
                good = -good
            return AmplifyOutcome(QuantumState((out_reg,), good), attempts, total_iterations)
        m = schedule.next_bound(m, cap)


def flag_layout(out_reg):
    return (out_reg, flag_register("rot"))
