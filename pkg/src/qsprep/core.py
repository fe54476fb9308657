"""Exact state-vector primitives: weights, registers, the oracle gates, measurement.

Amplitudes are real float64 throughout; a state is a flat vector over the
row-major product of its registers.  Basis labels of the ``out`` register are
1-based (``1..N``); flag registers are labelled ``0`` and ``1``.  Anything
that takes or returns an index at the public surface uses those labels, and
array positions are 0-based internally.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    InvalidIndexError,
    InvalidInputError,
    InvalidParameterError,
    RenormalizationError,
    WeightsFormatError,
)

NORM_TOL = 1e-10
BRANCH_UNDERFLOW = 1e-14


# ---------------------------------------------------------------------------
# Input vector and bookkeeping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightVector:
    """Non-negative, non-zero input vector w with its L1 norm ``W``."""

    entries: np.ndarray
    N: int = field(init=False)
    W: float = field(init=False)

    def __post_init__(self):
        values = np.array(self.entries, dtype=np.float64).ravel()
        if values.size == 0:
            raise InvalidInputError("weight vector is empty")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("weights must be finite")
        if np.any(values < 0):
            raise InvalidInputError("weights must be non-negative")
        total = math.fsum(values.tolist())
        if not total > 0:
            raise InvalidInputError("weight vector is all zero")
        values.setflags(write=False)
        object.__setattr__(self, "entries", values)
        object.__setattr__(self, "N", int(values.size))
        object.__setattr__(self, "W", total)

    def __len__(self) -> int:
        return self.N

    @property
    def probabilities(self) -> np.ndarray:
        return self.entries / self.W

    def __eq__(self, other):
        if not isinstance(other, WeightVector):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())


def as_weights(w) -> WeightVector:
    return w if isinstance(w, WeightVector) else WeightVector(w)


@dataclass
class QueryCounter:
    """Running tally of oracle-gate uses.  Only ever grows."""

    count: int = 0

    def charge(self, n: int = 1) -> None:
        if n < 0:
            raise ValueError("query counter cannot decrease")
        self.count += int(n)


def make_rng(seed: int | np.random.Generator | None = None) -> np.random.Generator:
    """Return a PCG64 generator for ``seed``; an existing generator passes through."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


# ---------------------------------------------------------------------------
# Registers and states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Register:
    name: str
    labels: tuple

    @property
    def dim(self) -> int:
        return len(self.labels)

    def position(self, label) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise InvalidIndexError(f"{label!r} is not a basis label of register {self.name!r}") from None


def out_register(N: int, name: str = "out") -> Register:
    return Register(name, tuple(range(1, N + 1)))


def flag_register(name: str) -> Register:
    return Register(name, (0, 1))


@dataclass(frozen=True)
class QuantumState:
    """Unit-norm real amplitude vector over an ordered register layout."""

    layout: tuple
    amplitudes: np.ndarray

    def __post_init__(self):
        layout = tuple(self.layout)
        names = [r.name for r in layout]
        if len(set(names)) != len(names):
            raise InvalidInputError(f"duplicate register names in {names}")
        amps = np.array(self.amplitudes, dtype=np.float64).ravel()
        expected = math.prod(r.dim for r in layout)
        if amps.size != expected:
            raise InvalidInputError(f"{amps.size} amplitudes for a layout of size {expected}")
        norm2 = float(np.dot(amps, amps))
        if abs(norm2 - 1.0) > NORM_TOL:
            raise InvalidInputError(f"state is not normalized (|psi|^2 = {norm2!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def shape(self) -> tuple:
        return tuple(r.dim for r in self.layout)

    @property
    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.shape)

    def axis(self, name: str) -> int:
        for k, reg in enumerate(self.layout):
            if reg.name == name:
                return k
        raise InvalidInputError(f"no register named {name!r} in layout")

    def register(self, name: str) -> Register:
        return self.layout[self.axis(name)]

    def marginal(self, name: str) -> np.ndarray:
        """Probability of each basis label of register ``name``."""
        ax = self.axis(name)
        other = tuple(k for k in range(len(self.layout)) if k != ax)
        return np.sum(np.square(self.tensor), axis=other)

    def amplitude(self, *labels) -> float:
        idx = tuple(reg.position(lab) for reg, lab in zip(self.layout, labels, strict=True))
        return float(self.tensor[idx])


def basis_state(register: Register, label) -> QuantumState:
    amps = np.zeros(register.dim)
    amps[register.position(label)] = 1.0
    return QuantumState((register,), amps)


def state_from_weights(w) -> QuantumState:
    """|w> = sum_i sqrt(w_i / W) |i> over a 1-based ``out`` register."""
    w = as_weights(w)
    return QuantumState((out_register(w.N),), np.sqrt(w.entries / w.W))


# ---------------------------------------------------------------------------
# The three gates
# ---------------------------------------------------------------------------


def rot_coeffs(v: float, gamma: float) -> tuple[float, float]:
    """Amplitudes (kept, flipped) the rotation gate puts on |b> and |1-b>.

    ``(sqrt(v/gamma), sqrt(1 - v/gamma))`` for ``0 <= v <= gamma``, so a zero
    value flips the flag completely; above ``gamma`` the gate is the identity.
    """
    if not gamma > 0:
        raise InvalidParameterError(f"rotation bound must be positive, got {gamma!r}")
    if not (math.isfinite(v) and v >= 0):
        raise InvalidParameterError(f"rotation input must be finite and non-negative, got {v!r}")
    if v > gamma:
        return 1.0, 0.0
    ratio = v / gamma
    return math.sqrt(ratio), math.sqrt(1.0 - ratio)


def rot_coeffs_array(v: np.ndarray, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`rot_coeffs`."""
    if not gamma > 0:
        raise InvalidParameterError(f"rotation bound must be positive, got {gamma!r}")
    v = np.asarray(v, dtype=np.float64)
    active = v <= gamma
    ratio = np.where(active, v / gamma, 1.0)
    return np.sqrt(ratio), np.sqrt(1.0 - ratio)


def indicator(H: Iterable[int], i: int, N: int | None = None) -> int:
    """Bit the indicator gate XORs into its target: 1 iff ``i`` is outside ``H``."""
    if i < 1 or (N is not None and i > N):
        raise InvalidIndexError(f"index {i} outside [1, {N}]")
    return 0 if i in set(H) else 1


def oracle_query(w: WeightVector, i: int, counter: QueryCounter) -> float:
    """One classical use of the query gate on basis index ``i`` (1-based)."""
    if not 1 <= i <= w.N:
        raise InvalidIndexError(f"index {i} outside [1, {w.N}]")
    counter.charge(1)
    return float(w.entries[i - 1])


def oracle_gate(w: WeightVector, counter: QueryCounter) -> np.ndarray:
    """One use of the query gate on a superposition over every index.

    Returns the whole value table, which is what the gate writes branch-wise.
    """
    counter.charge(1)
    return w.entries


# ---------------------------------------------------------------------------
# Measurement and metrics
# ---------------------------------------------------------------------------


def _inverse_cdf(probs: np.ndarray, u: float) -> int:
    cdf = np.cumsum(probs)
    k = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    if k >= probs.size:
        k = int(np.flatnonzero(probs)[-1])
    return k


def measure(state: QuantumState, register: str, rng: np.random.Generator):
    """Born-rule measurement of one register.

    Returns ``(label, collapsed)`` where ``collapsed`` keeps the full layout,
    projected onto the observed label and renormalized.
    """
    ax = state.axis(register)
    probs = state.marginal(register)
    k = _inverse_cdf(probs, float(rng.random()))
    branch_p = float(probs[k])
    if branch_p < BRANCH_UNDERFLOW:
        raise RenormalizationError(f"selected branch has norm^2 {branch_p!r}")
    mask = np.zeros(state.shape[ax])
    mask[k] = 1.0
    shape = [1] * len(state.layout)
    shape[ax] = -1
    projected = state.tensor * mask.reshape(shape)
    return state.layout[ax].labels[k], QuantumState(state.layout, projected / math.sqrt(branch_p))


def sample_labels(state: QuantumState, register: str, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` independent measurement outcomes of ``register`` (no collapse)."""
    probs = state.marginal(register)
    cdf = np.cumsum(probs)
    ks = np.searchsorted(cdf, rng.random(size) * cdf[-1], side="right")
    ks = np.minimum(ks, np.flatnonzero(probs)[-1])
    return np.asarray(state.register(register).labels)[ks]


def fidelity(a: QuantumState, b: QuantumState) -> float:
    if a.layout != b.layout:
        raise InvalidInputError("states have different register layouts")
    overlap = float(np.dot(a.amplitudes, b.amplitudes))
    return overlap * overlap


def tv_distance(p: Sequence[float], q: Sequence[float]) -> float:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise InvalidInputError(f"length mismatch: {p.shape} vs {q.shape}")
    for name, vec in (("p", p), ("q", q)):
        if np.any(vec < 0) or abs(math.fsum(vec.tolist()) - 1.0) > 1e-9:
            raise InvalidInputError(f"{name} is not a probability vector")
    return 0.5 * math.fsum(np.abs(p - q).tolist())


# ---------------------------------------------------------------------------
# Weights file format
# ---------------------------------------------------------------------------


def parse_weights(lines: Iterable[str]) -> WeightVector:
    """Parse one non-negative decimal per line; blanks and ``#`` lines are skipped."""
    values = []
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        try:
            value = float(text)
        except ValueError:
            raise WeightsFormatError(f"not a number: {text!r}", lineno) from None
        if not math.isfinite(value) or value < 0:
            raise WeightsFormatError(f"weight must be finite and non-negative: {text!r}", lineno)
        values.append(value)
    if not values:
        raise WeightsFormatError("no weights found")
    try:
        return WeightVector(values)
    except InvalidInputError as exc:
        raise WeightsFormatError(str(exc)) from None


def read_weights(path: str | os.PathLike) -> WeightVector:
    with open(path, encoding="utf-8") as fh:
        return parse_weights(fh)


def write_weights(path: str | os.PathLike, w) -> None:
    w = as_weights(w)
    with open(path, "w", encoding="utf-8") as fh:
        for value in w.entries:
            fh.write(f"{float(value)!r}\n")
