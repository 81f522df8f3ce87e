"""Dense statevector simulation.

States are complex numpy vectors of length ``2**Q``; qubit ``q`` is bit
``q`` of the amplitude index (same convention as :mod:`jgcvqe.fock`).
Qubit value 1 means the spin-orbital is occupied.

Sampling uses numpy's PCG64 generator (``np.random.default_rng(seed)``).
"""

from __future__ import annotations

import collections
import math

import numpy as np

from .fock import OccupationConfig, bitstring
from .onebody import Gate, GateSequence

NORM_TOL = 1e-10

# Instrumentation: number of calls into the simulator, keyed by operation.
counters: collections.Counter = collections.Counter()

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_SDG = np.array([[1, 0], [0, -1j]], dtype=complex)
_BASIS_CHANGE = {"Z": None, "X": _H, "Y": _H @ _SDG}


def n_qubits_of(state: np.ndarray) -> int:
    q = int(state.shape[0]).bit_length() - 1
    if state.ndim != 1 or (1 << q) != state.shape[0]:
        raise ValueError(f"state length {state.shape} is not a power of two")
    return q


def prepare(config: OccupationConfig) -> np.ndarray:
    state = np.zeros(1 << config.n_orbitals, dtype=complex)
    state[config.index] = 1.0
    return state


def vacuum(n_qubits: int) -> np.ndarray:
    state = np.zeros(1 << n_qubits, dtype=complex)
    state[0] = 1.0
    return state


def _apply_1q(state: np.ndarray, n: int, q: int, u: np.ndarray) -> np.ndarray:
    t = state.reshape(1 << (n - 1 - q), 2, 1 << q)
    return np.einsum("ab,ibj->iaj", u, t).reshape(-1)


def _apply_cx(state: np.ndarray, n: int, control: int, target: int) -> np.ndarray:
    t = state.reshape((2,) * n).copy()
    ac, at = n - 1 - control, n - 1 - target
    sel = [slice(None)] * n
    sel[ac] = 1
    sub = t[tuple(sel)]
    t[tuple(sel)] = np.flip(sub, axis=at if at < ac else at - 1)
    return t.reshape(-1)


def gate_matrix(gate: Gate) -> np.ndarray:
    """2x2 unitary of a single-qubit gate."""
    if gate.name == "X":
        return np.array([[0, 1], [1, 0]], dtype=complex)
    half = gate.angle / 2
    if gate.name == "RZ":
        return np.diag([np.exp(-1j * half), np.exp(1j * half)])
    if gate.name == "RY":
        c, s = math.cos(half), math.sin(half)
        return np.array([[c, -s], [s, c]], dtype=complex)
    raise ValueError(f"{gate.name} is not a single-qubit gate")


def apply(state: np.ndarray, gates: GateSequence) -> np.ndarray:
    """Run the gates left to right on a copy of ``state``."""
    counters["apply"] += 1
    n = n_qubits_of(state)
    if gates.n_qubits != n:
        raise ValueError(f"circuit has {gates.n_qubits} qubits, state has {n}")
    out = np.array(state, dtype=complex, copy=True)
    for g in gates.gates:
        if any(not 0 <= q < n for q in g.qubits):
            raise IndexError(f"gate {g} outside {n} qubits")
        if g.name == "CX":
            out = _apply_cx(out, n, *g.qubits)
        else:
            out = _apply_1q(out, n, g.qubits[0], gate_matrix(g))
    return out


def run(gates: GateSequence) -> np.ndarray:
    """Simulate from the all-zero state."""
    return apply(vacuum(gates.n_qubits), gates)


def _check_basis(basis: str, n: int) -> str:
    basis = basis.upper()
    if len(basis) != n or set(basis) - set("XYZ"):
        raise ValueError(f"basis {basis!r} must be {n} letters from X, Y, Z")
    return basis


def rotate_to_basis(state: np.ndarray, basis: str) -> np.ndarray:
    """Rotate so that each qubit's X or Y eigenbasis maps onto Z.

    ``basis`` holds one letter per qubit, qubit 0 first. After rotation,
    outcome bit 0 corresponds to Pauli eigenvalue +1.
    """
    n = n_qubits_of(state)
    basis = _check_basis(basis, n)
    out = np.asarray(state, dtype=complex)
    for q, letter in enumerate(basis):
        u = _BASIS_CHANGE[letter]
        if u is not None:
            out = _apply_1q(out, n, q, u)
    return out


def rotate_from_basis(state: np.ndarray, basis: str) -> np.ndarray:
    """Inverse of :func:`rotate_to_basis`."""
    n = n_qubits_of(state)
    basis = _check_basis(basis, n)
    out = np.asarray(state, dtype=complex)
    for q, letter in enumerate(basis):
        u = _BASIS_CHANGE[letter]
        if u is not None:
            out = _apply_1q(out, n, q, u.conj().T)
    return out


def probabilities(state: np.ndarray, basis: str | None = None) -> np.ndarray:
    """Outcome probabilities indexed by basis index."""
    if basis is not None:
        state = rotate_to_basis(state, basis)
    p = np.abs(state) ** 2
    return p / p.sum()


def exact_distribution(state: np.ndarray, basis: str) -> dict[str, float]:
    """Exact outcome distribution ``{bitstring: probability}`` (nonzero only)."""
    counters["exact_distribution"] += 1
    n = n_qubits_of(state)
    p = probabilities(state, basis)
    return {bitstring(int(i), n): float(p[i]) for i in np.flatnonzero(p)}


def sample_indices(p: np.ndarray, shots: int, seed: int) -> np.ndarray:
    """Multinomial shot counts for every outcome index."""
    counters["sample"] += 1
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    return rng.multinomial(shots, p)


def sample(state: np.ndarray, shots: int, seed: int, basis: str | None = None) -> dict[str, int]:
    """Draw ``shots`` computational-basis measurements; ``{bitstring: count}``."""
    n = n_qubits_of(state)
    counts = sample_indices(probabilities(state, basis), shots, seed)
    return {bitstring(int(i), n): int(counts[i]) for i in np.flatnonzero(counts)}
