"""Two-phase preparation of K copies of |w>.

Preprocessing locates K dominating positions H, reads their values, and
builds the circuit C: an oracle-free piecewise preparation D followed by a
rotation of the flag on every branch outside H.  Each copy is then one run of
amplitude amplification on C.

The simulator drops the ``qry`` and ``ind`` registers from C's output because
the circuit returns them to zero; :func:`reference_full_C` keeps all four
registers for small N and is the check that dropping them is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .amplify import DEFAULT_SCHEDULE, Schedule, amplify_flag_zero
from .core import (
    QuantumState,
    QueryCounter,
    Register,
    as_weights,
    fidelity,
    flag_register,
    make_rng,
    measure,
    oracle_gate,
    oracle_query,
    out_register,
    rot_coeffs,
    rot_coeffs_array,
    state_from_weights,
)
from .errors import InvalidInputError, InvalidParameterError, SizeLimitError
from .integral import AngleTree, apply_angle_tree, build_D
from .topk import is_valid_top_k, top_k_positions

REFERENCE_MAX_N = 16


@dataclass(frozen=True)
class PreparedCircuitC:
    H: tuple
    H_values: dict
    gamma: float
    Z: float
    angle_tree: AngleTree
    p_w: float
    K: int
    N: int
    preprocessing_queries: int = 0

    def __post_init__(self):
        if len(self.H) != self.K:
            raise InvalidInputError(f"|H| = {len(self.H)} but K = {self.K}")
        if not self.Z > 0:
            raise InvalidInputError("Z must be positive")

    @cached_property
    def off_h(self) -> np.ndarray:
        """Boolean mask (0-based) of positions outside H."""
        mask = np.ones(self.N, dtype=bool)
        mask[[i - 1 for i in self.H]] = False
        mask.setflags(write=False)
        return mask

    @cached_property
    def d_amplitudes(self) -> np.ndarray:
        """Amplitudes of D|0>; computed once per circuit."""
        amps = apply_angle_tree(self.angle_tree, self.N).amplitudes.copy()
        amps.setflags(write=False)
        return amps


@dataclass
class PipelineStats:
    preprocessing_queries: int
    per_copy_queries: list = field(default_factory=list)
    fidelities: list = field(default_factory=list)
    seed: int | None = None
    valid_H: bool | None = None

    @property
    def total_queries(self) -> int:
        return self.preprocessing_queries + sum(self.per_copy_queries)

    @property
    def per_copy_mean(self) -> float:
        return sum(self.per_copy_queries) / len(self.per_copy_queries) if self.per_copy_queries else 0.0


def circuit_from_top_k(w, H, preprocessing_queries: int = 0) -> PreparedCircuitC:
    """Build C from an already-known H (values read directly, nothing charged)."""
    w = as_weights(w)
    H = tuple(sorted(int(i) for i in H))
    if not H or len(set(H)) != len(H) or H[0] < 1 or H[-1] > w.N:
        raise InvalidInputError(f"H must be a non-empty set of distinct indices in [1, {w.N}]")
    H_values = {i: float(w.entries[i - 1]) for i in H}
    return _assemble(w, H, H_values, preprocessing_queries)


def _assemble(w, H, H_values, preprocessing_queries) -> PreparedCircuitC:
    K, N = len(H), w.N
    gamma = min(H_values.values())
    Z = (N - K) * gamma + math.fsum(H_values.values())
    tree = build_D(H, H_values, gamma, Z, N)
    return PreparedCircuitC(
        H=H,
        H_values=H_values,
        gamma=gamma,
        Z=Z,
        angle_tree=tree,
        p_w=w.W / Z,
        K=K,
        N=N,
        preprocessing_queries=preprocessing_queries,
    )


def preprocess(
    w,
    K: int,
    delta: float,
    rng,
    counter: QueryCounter | None = None,
    schedule: Schedule = DEFAULT_SCHEDULE,
) -> PreparedCircuitC:
    """Find H, read its K values, and assemble the circuit C."""
    w = as_weights(w)
    if not 1 <= K <= w.N:
        raise InvalidParameterError(f"need 1 <= K <= N, got K={K}, N={w.N}")
    rng = make_rng(rng)
    local = QueryCounter()
    found = top_k_positions(w, K, delta, rng, local, schedule)
    H = tuple(sorted(found.H))
    H_values = {i: oracle_query(w, i, local) for i in H}
    if counter is not None:
        counter.charge(local.count)
    return _assemble(w, H, H_values, local.count)


def _check_matches(prep: PreparedCircuitC, w) -> None:
    if prep.N != w.N:
        raise InvalidInputError(f"circuit built for N={prep.N}, weights have N={w.N}")


def apply_C(prep: PreparedCircuitC, w, counter: QueryCounter) -> QuantumState:
    """Output of C on |0> over ``(out, rot)``.  Two oracle uses."""
    w = as_weights(w)
    _check_matches(prep, w)
    d_amps = prep.d_amplitudes
    values = oracle_gate(w, counter)
    amps = np.zeros((prep.N, 2))
    amps[:, 0] = d_amps
    if prep.gamma > 0:
        off = prep.off_h
        keep, flip = rot_coeffs_array(values[off], prep.gamma)
        amps[off, 0] = d_amps[off] * keep
        amps[off, 1] = d_amps[off] * flip
    oracle_gate(w, counter)
    return QuantumState((out_register(prep.N), flag_register("rot")), amps)


# ---------------------------------------------------------------------------
# Full four-register reference for small N
# ---------------------------------------------------------------------------


def _xor_bits(a: float, b: float) -> float:
    """Bitwise XOR of two float64 encodings (the query gate's v (+) w_i at c = 64)."""
    ia = np.array([a], dtype=np.float64).view(np.uint64)
    ib = np.array([b], dtype=np.float64).view(np.uint64)
    return float((ia ^ ib).view(np.float64)[0])


def _qry_register(w) -> Register:
    labels = [0.0]
    for value in w.entries:
        if float(value) not in labels:
            labels.append(float(value))
    return Register("qry", tuple(labels))


def _apply_oracle(t: np.ndarray, w, qry: Register) -> np.ndarray:
    """Query gate on axes (qry=1, out=2) of a (rot, qry, out, ind) tensor."""
    new = np.zeros_like(t)
    for q, v in enumerate(qry.labels):
        for i in range(w.N):
            branch = t[:, q, i, :]
            if not np.any(branch):
                continue
            target = _xor_bits(v, float(w.entries[i]))
            new[:, qry.position(target), i, :] += branch
    return new


def _apply_indicator(t: np.ndarray, H) -> np.ndarray:
    new = t.copy()
    for i in range(t.shape[2]):
        if (i + 1) not in H:
            new[:, :, i, :] = t[:, :, i, ::-1]
    return new


def _apply_controlled_rot(t: np.ndarray, gamma: float, qry: Register) -> np.ndarray:
    """Rotation on rot controlled by ind = 1, angle read from qry.

    The gate is completed to the unitary |1> -> -s|0> + c|1>; only |0> occurs.
    """
    new = t.copy()
    if gamma == 0:
        return new
    for q, v in enumerate(qry.labels):
        c, s = rot_coeffs(v, gamma)
        b0 = t[0, q, :, 1]
        b1 = t[1, q, :, 1]
        new[0, q, :, 1] = c * b0 - s * b1
        new[1, q, :, 1] = s * b0 + c * b1
    return new


def reference_full_C(prep: PreparedCircuitC, w) -> QuantumState:
    """Gate-by-gate simulation of C over ``(rot, qry, out, ind)``."""
    w = as_weights(w)
    _check_matches(prep, w)
    if w.N > REFERENCE_MAX_N:
        raise SizeLimitError(f"reference simulator supports N <= {REFERENCE_MAX_N}, got {w.N}")
    qry = _qry_register(w)
    layout = (flag_register("rot"), qry, out_register(w.N), flag_register("ind"))
    t = np.zeros(tuple(r.dim for r in layout))
    t[0, 0, :, 0] = apply_angle_tree(prep.angle_tree, w.N).amplitudes
    H = set(prep.H)
    t = _apply_indicator(t, H)
    t = _apply_oracle(t, w, qry)
    t = _apply_controlled_rot(t, prep.gamma, qry)
    t = _apply_oracle(t, w, qry)
    t = _apply_indicator(t, H)
    return QuantumState(layout, t)


def reduce_reference(full: QuantumState) -> QuantumState:
    """Drop qry and ind from a reference output, assuming both read |0>."""
    t = full.tensor[:, 0, :, 0]
    out = full.register("out")
    return QuantumState((out, flag_register("rot")), t.T)


# ---------------------------------------------------------------------------
# Copies and applications
# ---------------------------------------------------------------------------


def aa_cap(prep: PreparedCircuitC) -> int:
    """ceil(sqrt(N / K)): enough iterations because p_w >= K / N."""
    return max(1, math.ceil(math.sqrt(prep.N / prep.K)))


def amplify_to_w(
    prep: PreparedCircuitC,
    w,
    rng,
    counter: QueryCounter,
    schedule: Schedule = DEFAULT_SCHEDULE,
) -> QuantumState:
    w = as_weights(w)
    _check_matches(prep, w)
    outcome = amplify_flag_zero(lambda c: apply_C(prep, w, c), make_rng(rng), counter, aa_cap(prep), schedule)
    return outcome.state


def _copies(prep, w, count, rng, schedule):
    target = state_from_weights(w)
    states, costs, fids = [], [], []
    for _ in range(count):
        local = QueryCounter()
        state = amplify_to_w(prep, w, rng, local, schedule)
        states.append(state)
        costs.append(local.count)
        fids.append(fidelity(state, target))
    return states, costs, fids


def prepare_k_copies(
    w,
    K: int,
    delta: float,
    rng,
    schedule: Schedule = DEFAULT_SCHEDULE,
) -> tuple[list[QuantumState], PipelineStats]:
    """Preprocess once, then amplify K times."""
    w = as_weights(w)
    seed = rng if isinstance(rng, (int, np.integer)) else None
    rng = make_rng(rng)
    prep = preprocess(w, K, delta, rng, schedule=schedule)
    states, costs, fids = _copies(prep, w, K, rng, schedule)
    stats = PipelineStats(prep.preprocessing_queries, costs, fids, seed, is_valid_top_k(w, prep.H))
    return states, stats


def importance_sample(
    w,
    K: int,
    delta: float,
    rng,
    n_samples: int | None = None,
    schedule: Schedule = DEFAULT_SCHEDULE,
) -> tuple[list[int], PipelineStats]:
    """Indices drawn i.i.d. from w / W by measuring prepared copies.

    ``n_samples`` defaults to K; more samples reuse the same preprocessing.
    """
    w = as_weights(w)
    seed = rng if isinstance(rng, (int, np.integer)) else None
    rng = make_rng(rng)
    count = K if n_samples is None else n_samples
    prep = preprocess(w, K, delta, rng, schedule=schedule)
    target = state_from_weights(w)
    indices, costs, fids = [], [], []
    for _ in range(count):
        local = QueryCounter()
        state = amplify_to_w(prep, w, rng, local, schedule)
        label, _ = measure(state, "out", rng)
        indices.append(int(label))
        costs.append(local.count)
        fids.append(fidelity(state, target))
    stats = PipelineStats(prep.preprocessing_queries, costs, fids, seed, is_valid_top_k(w, prep.H))
    return indices, stats


def reduction_run(bits, K: int, copies: int, rng, delta: float = 0.1) -> tuple[set[int], PipelineStats]:
    """:func:`ksearch_reduction_demo` plus the query statistics of the run."""
    bits = np.asarray(bits)
    if not np.all((bits == 0) | (bits == 1)):
        raise InvalidInputError("bits must be a 0/1 vector")
    if int(bits.sum()) < 2 * K:
        raise InvalidInputError(f"need at least {2 * K} ones, got {int(bits.sum())}")
    if copies < 0:
        raise InvalidParameterError("copies must be non-negative")
    if copies == 0:
        return set(), PipelineStats(0)
    w = as_weights(bits.astype(np.float64))
    seed = rng if isinstance(rng, (int, np.integer)) else None
    rng = make_rng(rng)
    prep = preprocess(w, min(copies, w.N), delta, rng)
    states, costs, fids = _copies(prep, w, copies, rng, DEFAULT_SCHEDULE)
    found = set()
    for state in states:
        label, _ = measure(state, "out", rng)
        if bits[label - 1] == 1:
            found.add(int(label))
    return found, PipelineStats(prep.preprocessing_queries, costs, fids, seed, is_valid_top_k(w, prep.H))


def ksearch_reduction_demo(bits, K: int, copies: int, rng, delta: float = 0.1) -> set[int]:
    """Measure ``copies`` prepared copies of |bits> and collect the 1-positions seen.

    Preprocessing is sized for the number of copies (capped at N).
    """
    return reduction_run(bits, K, copies, rng, delta)[0]
