"""State preparation by integration over a binary split tree.

The target squared amplitudes are the piecewise masses used by the
preprocessing circuit: ``w_i / Z`` on the index set H and ``gamma / Z`` off
it.  Each tree node stores the fraction of its interval's mass that goes to
the left half; applying the tree to |0> walks those fractions down to the
leaves.  N is padded up to a power of two with zero-mass leaves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .core import QuantumState, out_register
from .errors import InvalidInputError, InvalidIntervalError, InvalidParameterError


@dataclass(frozen=True)
class AngleTree:
    """Split fractions per level, root first.  ``levels[l]`` has ``2**l`` entries.

    ``angles`` holds the rotation angle of each split (cos^2 = fraction).  It
    is derived from the fractions when omitted; :func:`build_tree` supplies it
    directly so that tiny right-hand masses survive rounding of the fraction.
    """

    depth: int
    levels: tuple
    gate_count: int
    N: int
    angles: tuple | None = None

    def __post_init__(self):
        for lvl, fractions in enumerate(self.levels):
            if fractions.shape != (2**lvl,):
                raise InvalidInputError(f"level {lvl} should hold {2**lvl} fractions")
            if np.any((fractions < 0) | (fractions > 1)):
                raise InvalidInputError(f"split fraction outside [0, 1] at level {lvl}")
        if self.angles is None:
            derived = tuple(np.arccos(np.sqrt(f)) for f in self.levels)
            object.__setattr__(self, "angles", derived)


class PiecewiseMass:
    """O(log K) interval masses for the H / off-H piecewise profile."""

    def __init__(self, H_values: Mapping[int, float], gamma: float, Z: float, N: int):
        if not Z > 0:
            raise InvalidParameterError(f"Z must be positive, got {Z!r}")
        if gamma < 0:
            raise InvalidParameterError(f"gamma must be non-negative, got {gamma!r}")
        order = sorted(H_values)
        if order and not (1 <= order[0] and order[-1] <= N):
            raise InvalidIntervalError(f"H indices must lie in [1, {N}]")
        self.N = N
        self.gamma = float(gamma)
        self.Z = float(Z)
        self.positions = np.array([i - 1 for i in order], dtype=np.int64)
        self.values = np.array([float(H_values[i]) for i in order])
        self.cumulative = np.concatenate(([0.0], np.cumsum(self.values)))

    def leaf_masses(self, size: int) -> np.ndarray:
        """Per-index masses, zero-padded to ``size``."""
        leaves = np.zeros(size)
        leaves[: self.N] = self.gamma
        leaves[self.positions] = self.values
        return leaves / self.Z

    def masses(self, start: np.ndarray, stop: np.ndarray) -> np.ndarray:
        """Mass of the half-open 0-based intervals [start, stop), clipped to N."""
        start = np.minimum(np.asarray(start, dtype=np.int64), self.N)
        stop = np.minimum(np.asarray(stop, dtype=np.int64), self.N)
        lo = np.searchsorted(self.positions, start)
        hi = np.searchsorted(self.positions, stop)
        in_h = self.cumulative[hi] - self.cumulative[lo]
        off_h = (stop - start) - (hi - lo)
        return (in_h + self.gamma * off_h) / self.Z


def prefix_mass(H_values: Mapping[int, float], gamma: float, Z: float, i: int, j: int, N: int | None = None) -> float:
    """Squared-amplitude mass of the piecewise state on indices i..j (1-based, inclusive)."""
    if i > j:
        raise InvalidIntervalError(f"empty interval [{i}, {j}]")
    if i < 1 or (N is not None and j > N):
        raise InvalidIntervalError(f"interval [{i}, {j}] outside [1, {N}]")
    if not Z > 0:
        raise InvalidParameterError(f"Z must be positive, got {Z!r}")
    in_h = [float(v) for k, v in H_values.items() if i <= k <= j]
    return (math.fsum(in_h) + gamma * ((j - i + 1) - len(in_h))) / Z


def _depth(N: int) -> int:
    return (N - 1).bit_length()


def build_tree(mass: PiecewiseMass) -> AngleTree:
    """Split fractions for every node, with an accounting gate count.

    A level costs one conditional rotation per distinct angle among its live
    nodes (nonzero mass); off-H subtrees of equal size share the same angle.
    Node masses are summed bottom-up from the leaves so that a child's mass
    never passes through a sum with a much larger sibling.
    """
    N = mass.N
    depth = _depth(N)
    size = 1 << depth
    sums = [mass.leaf_masses(size)]
    for _ in range(depth):
        sums.append(sums[-1][0::2] + sums[-1][1::2])
    levels, angles = [], []
    gate_count = 0
    for lvl in range(depth):
        children = sums[depth - lvl - 1]
        left, right = children[0::2], children[1::2]
        parent = left + right
        live = parent > 0
        fractions = np.full(parent.size, 0.5)
        fractions[live] = np.clip(left[live] / parent[live], 0.0, 1.0)
        theta = np.full(parent.size, math.pi / 4)
        theta[live] = np.arctan2(np.sqrt(right[live]), np.sqrt(left[live]))
        levels.append(fractions)
        angles.append(theta)
        gate_count += int(np.unique(theta[live]).size)
    for arr in levels + angles:
        arr.setflags(write=False)
    return AngleTree(depth, tuple(levels), gate_count, N, tuple(angles))


def build_D(H, H_values: Mapping[int, float], gamma: float, Z: float, N: int) -> AngleTree:
    """Angle tree for the piecewise state sqrt(w_i/Z) on H, sqrt(gamma/Z) elsewhere."""
    if not Z > 0:
        raise InvalidParameterError(f"Z must be positive, got {Z!r}")
    missing = set(H) - set(H_values)
    if missing:
        raise InvalidInputError(f"no value supplied for H indices {sorted(missing)}")
    return build_tree(PiecewiseMass({i: H_values[i] for i in H}, gamma, Z, N))


def apply_angle_tree(tree: AngleTree, N: int | None = None) -> QuantumState:
    """Run the split recursion from |0> and return the N-level state."""
    N = tree.N if N is None else N
    if N > 1 << tree.depth:
        raise InvalidInputError(f"tree of depth {tree.depth} cannot address {N} levels")
    amps = padded_amplitudes(tree)
    if np.any(amps[N:] != 0):
        raise InvalidInputError("padding leaves carry nonzero amplitude")
    return QuantumState((out_register(N),), amps[:N])


def padded_amplitudes(tree: AngleTree) -> np.ndarray:
    """All 2**depth leaf amplitudes, padding included."""
    amps = np.ones(1)
    for theta in tree.angles:
        nxt = np.empty(2 * amps.size)
        nxt[0::2] = amps * np.cos(theta)
        nxt[1::2] = amps * np.sin(theta)
        amps = nxt
    return amps
