"""Occupation-number bookkeeping for fermionic Fock states.

Basis states are labelled by bitstrings over spin-orbitals. Orbital ``q``
carries weight ``2**q`` in the integer index (little-endian), and the
canonical creation order puts orbital 0 leftmost, so creating ``q`` picks
up ``(-1)**(number of occupied orbitals below q)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_DENSE_ORBITALS = 12


@dataclass(frozen=True)
class OccupationConfig:
    """Occupations ``n_q`` of ``Q`` spin-orbitals, orbital 0 first."""

    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError(f"occupations must be 0 or 1, got {self.bits!r}")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_string(cls, s: str) -> "OccupationConfig":
        return cls(tuple(int(c) for c in s.strip()))

    @classmethod
    def from_index(cls, index: int, n_orbitals: int) -> "OccupationConfig":
        if not 0 <= index < (1 << n_orbitals):
            raise ValueError(f"index {index} out of range for Q={n_orbitals}")
        return cls(tuple((index >> q) & 1 for q in range(n_orbitals)))

    @classmethod
    def from_occupied(cls, occupied: Iterable[int], n_orbitals: int) -> "OccupationConfig":
        bits = [0] * n_orbitals
        for q in occupied:
            bits[q] = 1
        return cls(tuple(bits))

    @property
    def n_orbitals(self) -> int:
        return len(self.bits)

    @property
    def index(self) -> int:
        return sum(b << q for q, b in enumerate(self.bits))

    @property
    def particles(self) -> int:
        return sum(self.bits)

    def occupied(self) -> list[int]:
        return [q for q, b in enumerate(self.bits) if b]

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)


def bitstring(index: int, n_orbitals: int) -> str:
    """Serialize a basis index as a 0/1 string, orbital 0 first."""
    return "".join("1" if (index >> q) & 1 else "0" for q in range(n_orbitals))


def parse_bitstring(s: str) -> int:
    return sum(1 << q for q, c in enumerate(s) if c == "1")


def _parity_below(state: int, q: int) -> int:
    return -1 if bin(state & ((1 << q) - 1)).count("1") % 2 else 1


def create(state: int, q: int) -> tuple[int, int] | None:
    """Integer-level ``c_q^dagger``. Returns ``(new_state, sign)`` or None."""
    if (state >> q) & 1:
        return None
    return state | (1 << q), _parity_below(state, q)


def annihilate(state: int, q: int) -> tuple[int, int] | None:
    if not (state >> q) & 1:
        return None
    return state & ~(1 << q), _parity_below(state, q)


def _check_index(config: OccupationConfig, q: int) -> None:
    if not 0 <= q < config.n_orbitals:
        raise IndexError(f"orbital {q} out of range for Q={config.n_orbitals}")


def apply_creation(config: OccupationConfig, q: int) -> tuple[OccupationConfig, int] | None:
    """Apply ``c_q^dagger`` to a Fock state.

    Returns ``(config', sign)``, or ``None`` when orbital ``q`` is already
    occupied and the result vanishes.
    """
    _check_index(config, q)
    out = create(config.index, q)
    if out is None:
        return None
    return OccupationConfig.from_index(out[0], config.n_orbitals), out[1]


def apply_annihilation(config: OccupationConfig, q: int) -> tuple[OccupationConfig, int] | None:
    _check_index(config, q)
    out = annihilate(config.index, q)
    if out is None:
        return None
    return OccupationConfig.from_index(out[0], config.n_orbitals), out[1]


@dataclass(frozen=True)
class HamiltonianTerm:
    """One product ``h * N[number_set] * Cdag[create_set] * C[annihilate_set]``.

    ``create_set`` and ``annihilate_set`` are ordered: the operator product is
    written left to right in sequence order, so the rightmost annihilator acts
    first on a ket.
    """

    coefficient: complex
    number_set: tuple[int, ...] = ()
    create_set: tuple[int, ...] = ()
    annihilate_set: tuple[int, ...] = ()

    def __post_init__(self):
        for name in ("number_set", "create_set", "annihilate_set"):
            object.__setattr__(self, name, tuple(int(q) for q in getattr(self, name)))
        object.__setattr__(self, "coefficient", complex(self.coefficient))
        sets = [set(self.number_set), set(self.create_set), set(self.annihilate_set)]
        for seq, s in zip((self.number_set, self.create_set, self.annihilate_set), sets):
            if len(s) != len(seq):
                raise ValueError(f"repeated orbital in {seq}")
        if sets[0] & sets[1] or sets[0] & sets[2] or sets[1] & sets[2]:
            raise ValueError("number, creation and annihilation sets must be disjoint")
        if any(q < 0 for q in self.orbitals):
            raise ValueError("negative orbital index")

    @property
    def orbitals(self) -> tuple[int, ...]:
        return self.number_set + self.create_set + self.annihilate_set

    @property
    def moved(self) -> frozenset[int]:
        """Orbitals touched by creation or annihilation operators."""
        return frozenset(self.create_set) | frozenset(self.annihilate_set)

    def adjoint(self) -> "HamiltonianTerm":
        return HamiltonianTerm(
            self.coefficient.conjugate(),
            self.number_set,
            tuple(reversed(self.annihilate_set)),
            tuple(reversed(self.create_set)),
        )

    def scaled(self, factor: complex) -> "HamiltonianTerm":
        return HamiltonianTerm(
            self.coefficient * factor, self.number_set, self.create_set, self.annihilate_set
        )


def number_term(q: int, h: complex = 1.0) -> HamiltonianTerm:
    return HamiltonianTerm(h, number_set=(q,))


def hopping_terms(p: int, q: int, h: complex = 1.0) -> list[HamiltonianTerm]:
    """``h c_p^dagger c_q + h* c_q^dagger c_p``."""
    t = HamiltonianTerm(h, create_set=(p,), annihilate_set=(q,))
    return [t, t.adjoint()]


def _apply_term_int(state: int, term: HamiltonianTerm) -> tuple[int, complex] | None:
    sign = 1
    for q in reversed(term.annihilate_set):
        out = annihilate(state, q)
        if out is None:
            return None
        state, s = out
        sign *= s
    for q in reversed(term.create_set):
        out = create(state, q)
        if out is None:
            return None
        state, s = out
        sign *= s
    for q in term.number_set:
        if not (state >> q) & 1:
            return None
    return state, sign * term.coefficient


def _check_term(term: HamiltonianTerm, n_orbitals: int) -> None:
    if any(q >= n_orbitals for q in term.orbitals):
        raise IndexError(f"term {term} references orbitals beyond Q={n_orbitals}")


def apply_term(
    config: OccupationConfig, term: HamiltonianTerm
) -> tuple[OccupationConfig, complex] | None:
    """Act with one Hamiltonian term on a Fock state.

    Returns ``(config', amplitude)`` where the amplitude includes the
    coefficient and fermionic sign, or ``None`` if the term annihilates
    the state.
    """
    _check_term(term, config.n_orbitals)
    out = _apply_term_int(config.index, term)
    if out is None:
        return None
    return OccupationConfig.from_index(out[0], config.n_orbitals), out[1]


def dense_operator(terms: Sequence[HamiltonianTerm], n_orbitals: int) -> np.ndarray:
    """Dense ``2**Q x 2**Q`` matrix of a sum of terms in the Fock basis."""
    if n_orbitals > MAX_DENSE_ORBITALS:
        raise ValueError(
            f"dense operator with Q={n_orbitals} exceeds the Q<={MAX_DENSE_ORBITALS} guard"
        )
    for term in terms:
        _check_term(term, n_orbitals)
    dim = 1 << n_orbitals
    mat = np.zeros((dim, dim), dtype=complex)
    for term in terms:
        for state in range(dim):
            out = _apply_term_int(state, term)
            if out is not None:
                mat[out[0], state] += out[1]
    return mat


def occupation_table(n_orbitals: int) -> np.ndarray:
    """``(2**Q, Q)`` array of occupation bits for every basis index."""
    idx = np.arange(1 << n_orbitals)
    return ((idx[:, None] >> np.arange(n_orbitals)[None, :]) & 1).astype(np.int8)
