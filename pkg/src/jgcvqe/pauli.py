"""Jordan-Wigner strings and Jastrow-dressed measurement terms.

Letter strings list qubit 0 first. ``c_q^dagger = (X_q - i Y_q)/2 * prod_{q'<q} Z_q'``
and ``n_q = (1 - Z_q)/2``.

Jastrow convention used throughout the package::

    G(theta) = exp(-sum_{q <= q'} theta[q, q'] n_q n_q')

with ``theta`` a real symmetric matrix: each unordered pair is counted once
and a diagonal entry contributes ``exp(-theta[q, q] n_q)``.

Sandwiching a fermionic term ``h N C^dagger[P] C[M]`` between two copies of
``G`` only multiplies it by a function of the occupations outside the
moved orbitals ``P | M``. Per unordered pair ``(q, q')`` the exponent
weight is ``eps_q + eps_q' + zeta_qq'`` where ``eps_q = 1`` for unmoved
orbitals and ``zeta_qq' = 1`` when both lie in ``P`` or both lie in ``M``
(those pairs give a constant factor ``exp(-theta)``).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .fock import HamiltonianTerm, occupation_table

MERGE_TOL = 1e-14

# Single-qubit Pauli product table: (a, b) -> (phase, letter) with a*b = phase*letter.
_PRODUCT = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}


@dataclass(frozen=True)
class PauliString:
    coefficient: complex
    letters: str

    def __str__(self) -> str:
        c = self.coefficient
        num = f"{c.real:.17g}" if c.imag == 0 else f"({c.real:.17g}{c.imag:+.17g}j)"
        return f"{num} {self.letters}"

    @classmethod
    def parse(cls, text: str) -> "PauliString":
        coef, letters = text.split()
        return cls(complex(coef.strip("()")), letters)


def _multiply(a: dict[str, complex], b: dict[str, complex]) -> dict[str, complex]:
    out: dict[str, complex] = {}
    for la, ca in a.items():
        for lb, cb in b.items():
            phase = 1 + 0j
            letters = []
            for x, y in zip(la, lb):
                p, z = _PRODUCT[(x, y)]
                phase *= p
                letters.append(z)
            key = "".join(letters)
            out[key] = out.get(key, 0) + phase * ca * cb
    return out


def _single(n: int, q: int, letter: str, tail: bool) -> str:
    s = ["I"] * n
    if tail:
        s[:q] = ["Z"] * q
    s[q] = letter
    return "".join(s)


def _creation(n: int, q: int, dagger: bool) -> dict[str, complex]:
    sign = -1 if dagger else 1
    return {_single(n, q, "X", True): 0.5, _single(n, q, "Y", True): sign * 0.5j}


def _number(n: int, q: int) -> dict[str, complex]:
    return {"I" * n: 0.5, _single(n, q, "Z", False): -0.5}


def _merge(strings: Iterable[PauliString], tol: float = MERGE_TOL) -> list[PauliString]:
    acc: dict[str, complex] = {}
    for s in strings:
        acc[s.letters] = acc.get(s.letters, 0) + s.coefficient
    return [PauliString(complex(c), k) for k, c in acc.items() if abs(c) > tol]


def jordan_wigner(term: HamiltonianTerm, n_orbitals: int) -> list[PauliString]:
    """Expand one fermionic product term into Pauli strings."""
    if any(q >= n_orbitals for q in term.orbitals):
        raise IndexError(f"term {term} exceeds Q={n_orbitals}")
    acc: dict[str, complex] = {"I" * n_orbitals: term.coefficient}
    for q in term.number_set:
        acc = _multiply(acc, _number(n_orbitals, q))
    for q in term.create_set:
        acc = _multiply(acc, _creation(n_orbitals, q, dagger=True))
    for q in term.annihilate_set:
        acc = _multiply(acc, _creation(n_orbitals, q, dagger=False))
    return _merge(PauliString(c, k) for k, c in acc.items())


def jordan_wigner_sum(terms: Sequence[HamiltonianTerm], n_orbitals: int) -> list[PauliString]:
    return _merge(s for t in terms for s in jordan_wigner(t, n_orbitals))


_PAULI_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
}


def pauli_matrix(letters: str) -> np.ndarray:
    """Dense matrix with qubit 0 as the least significant index bit."""
    out = np.ones((1, 1), dtype=complex)
    for letter in letters:
        out = np.kron(_PAULI_MATS[letter], out)
    return out


def pauli_sum_matrix(strings: Sequence[PauliString], n_qubits: int) -> np.ndarray:
    dim = 1 << n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for s in strings:
        out += s.coefficient * pauli_matrix(s.letters)
    return out


@dataclass(frozen=True, eq=False)
class DressedTerm:
    """One Pauli string of ``G H G`` with its Jastrow exponent structure.

    ``letters`` carries X/Y on the moved orbitals and Z/I elsewhere.
    ``epsilon[q]`` is True for unmoved orbitals; ``zeta`` marks pairs inside
    the creation set or inside the annihilation set.
    """

    coefficient: complex
    letters: str
    epsilon: tuple[bool, ...]
    zeta: frozenset[tuple[int, int]]

    def __post_init__(self):
        for q, (letter, e) in enumerate(zip(self.letters, self.epsilon)):
            if e and letter in "XY":
                raise ValueError(f"X/Y letter on unmoved orbital {q}")
            if not e and letter not in "XY":
                raise ValueError(f"moved orbital {q} must carry X or Y")

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    @property
    def key(self) -> tuple:
        return (self.letters, self.epsilon, self.zeta)

    @property
    def xy_part(self) -> PauliString:
        return PauliString(1.0, "".join(c if c in "XY" else "I" for c in self.letters))

    @property
    def z_part(self) -> PauliString:
        return PauliString(1.0, "".join(c if c == "Z" else "I" for c in self.letters))

    @cached_property
    def xy_mask(self) -> np.ndarray:
        return np.array([c in "XY" for c in self.letters])

    @cached_property
    def z_mask(self) -> np.ndarray:
        return np.array([c == "Z" for c in self.letters])

    @cached_property
    def pair_weights(self) -> np.ndarray:
        """Upper-triangular ``eps_q + eps_q' + zeta_qq'`` (diagonal included)."""
        eps = np.array(self.epsilon, dtype=float)
        w = eps[:, None] + eps[None, :]
        for q, r in self.zeta:
            w[q, r] += 1
        return np.triu(w)

    def __eq__(self, other):
        return (
            isinstance(other, DressedTerm)
            and self.coefficient == other.coefficient
            and self.key == other.key
        )

    def __hash__(self):
        return hash((self.coefficient, self.key))

    def exponents(self, bits: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """Jastrow exponent per measured outcome; ``bits`` is ``(M, Q)``.

        ``theta`` may hold ``+inf``; active infinite pairs give ``+inf``.
        """
        bits = np.asarray(bits, dtype=float)
        v = np.where(np.array(self.epsilon)[None, :], bits, 1.0)
        w = self.pair_weights
        inf_mask = np.isinf(theta)
        finite = np.where(inf_mask, 0.0, theta) * w
        out = np.einsum("mq,qr,mr->m", v, finite, v)
        if inf_mask.any():
            hits = np.einsum("mq,qr,mr->m", v, (inf_mask & (w > 0)).astype(float), v)
            out = np.where(hits > 0, np.inf, out)
        return out

    def values(self, bits: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """``h * a_m * b_m * exp(-exponent_m)`` per measured outcome.

        Outcome bits are read in the term's own measurement basis, where
        bit 0 means eigenvalue +1 for every letter.
        """
        bits = np.asarray(bits)
        parity = (bits[:, self.xy_mask].sum(axis=1) + bits[:, self.z_mask].sum(axis=1)) % 2
        sign = 1 - 2 * parity
        return self.coefficient * sign * np.exp(-self.exponents(bits, theta))

    def dense(self, theta: np.ndarray) -> np.ndarray:
        """Dense operator ``h * P * exp(-exponent)`` in the Fock basis."""
        table = occupation_table(self.n_qubits)
        weights = np.exp(-self.exponents(table, np.asarray(theta, dtype=float)))
        return self.coefficient * pauli_matrix(self.letters) * weights[None, :]


def _epsilon_zeta(term: HamiltonianTerm, n_orbitals: int):
    moved = term.moved
    eps = tuple(q not in moved for q in range(n_orbitals))
    zeta = set()
    for group in (term.create_set, term.annihilate_set):
        s = sorted(group)
        for a in range(len(s)):
            for b in range(a, len(s)):
                zeta.add((s[a], s[b]))
    return eps, frozenset(zeta)


def dress_term(term: HamiltonianTerm, n_orbitals: int) -> list[DressedTerm]:
    """Jordan-Wigner strings of one term, each tagged with its exponent structure.

    The result does not depend on ``theta``; parameters enter only when the
    terms are evaluated, which is what lets stored measurements be replayed.
    """
    eps, zeta = _epsilon_zeta(term, n_orbitals)
    return [
        DressedTerm(s.coefficient, s.letters, eps, zeta) for s in jordan_wigner(term, n_orbitals)
    ]


def dress_hamiltonian(terms: Sequence[HamiltonianTerm], n_orbitals: int) -> list[DressedTerm]:
    """Dress every term and merge strings sharing letters and exponent structure."""
    acc: dict[tuple, list] = {}
    for t in terms:
        for d in dress_term(t, n_orbitals):
            if d.key in acc:
                acc[d.key][0] += d.coefficient
            else:
                acc[d.key] = [d.coefficient, d]
    out = []
    for coef, d in acc.values():
        if abs(coef) > MERGE_TOL:
            out.append(DressedTerm(complex(coef), d.letters, d.epsilon, d.zeta))
    return out


def identity_term(n_orbitals: int) -> DressedTerm:
    """``G * 1 * G = G^2``: the normalization term."""
    return DressedTerm(1.0 + 0j, "I" * n_orbitals, (True,) * n_orbitals, frozenset())


def measurement_basis(term: DressedTerm) -> str:
    """X/Y where the term has X/Y, Z elsewhere."""
    return "".join(c if c in "XY" else "Z" for c in term.letters)


def dressed_matrix(terms: Sequence[DressedTerm], theta: np.ndarray) -> np.ndarray:
    """Dense sum of dressed terms at the given ``theta``."""
    if not terms:
        raise ValueError("no terms")
    out = np.zeros((1 << terms[0].n_qubits,) * 2, dtype=complex)
    for t in terms:
        out += t.dense(theta)
    return out
