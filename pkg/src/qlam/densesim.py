"""Dense state-vector oracle for cross-checking the sparse register algebra.

Stores all 2**m amplitudes and takes the naive route everywhere: gates are
applied by building the full 2**m x 2**m matrix and multiplying, and
measurement loops over every basis index and reads wire bits out of the
binary string.  Deliberately shares no machinery with the sparse
implementation it validates.  Capped at 12 wires.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantum import ArityMismatchError, GateExpr, IndexOutOfRangeError

MAX_WIDTH = 12


@dataclass(frozen=True, eq=False)
class DenseState:
    width: int
    vector: np.ndarray

    def __post_init__(self) -> None:
        if not 1 <= self.width <= MAX_WIDTH:
            raise ValueError(f"width {self.width} outside [1, {MAX_WIDTH}]")
        vec = np.asarray(self.vector, dtype=complex)
        if vec.shape != (1 << self.width,):
            raise ValueError(f"vector length {vec.shape} != 2**{self.width}")
        object.__setattr__(self, "vector", vec)


def from_amplitudes(width: int, items) -> DenseState:
    vec = np.zeros(1 << width, dtype=complex)
    for u, a in items:
        vec[u] = a
    return DenseState(width, vec)


def basis(width: int, index: int) -> DenseState:
    vec = np.zeros(1 << width, dtype=complex)
    vec[index] = 1.0
    return DenseState(width, vec)


def gate_matrix(g: GateExpr) -> np.ndarray:
    """Full 2**arity square matrix of a gate expression (Kronecker fold)."""
    mat = np.array(g.atoms[0].matrix, dtype=complex)
    for atom in g.atoms[1:]:
        mat = np.kron(mat, np.array(atom.matrix, dtype=complex))
    return mat


def dense_apply(g: GateExpr, s: DenseState) -> DenseState:
    if g.arity != s.width:
        raise ArityMismatchError(
            f"gate of arity {g.arity} applied to a width-{s.width} state")
    return DenseState(s.width, gate_matrix(g) @ s.vector)


def dense_measure(s: DenseState, indices) -> list[tuple[int, float, DenseState]]:
    """All (outcome word, probability, post-state) branches with p > 0.

    Outcome words are read off each index's binary string, so this stays
    independent of the sparse implementation's bit arithmetic.
    """
    idx = sorted(indices)
    if not idx or idx[0] < 1 or idx[-1] > s.width:
        raise IndexOutOfRangeError(
            f"measured indices {idx} not within [1, {s.width}]")
    dim = 1 << s.width
    words: dict[int, np.ndarray] = {}
    for u in range(dim):
        bits = format(u, f"0{s.width}b")
        w = int("".join(bits[i - 1] for i in idx), 2)
        sel = words.get(w)
        if sel is None:
            sel = words[w] = np.zeros(dim, dtype=complex)
        sel[u] = s.vector[u]
    out = []
    for w in sorted(words):
        p = float(np.sum(np.abs(words[w]) ** 2))
        if p <= 1e-12:
            continue
        out.append((w, p, DenseState(s.width, words[w] / np.sqrt(p))))
    return out
