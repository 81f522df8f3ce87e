"""Hubbard model on small periodic clusters with a Gutzwiller factor.

``H = mu * M + k * K + d * D`` with spin-orbital index ``q = i + N * sigma``
(all spin-up sites first). The Gutzwiller factor ``G = exp(-theta * D)``
is the Jastrow matrix with ``theta`` on each ``(i_up, i_down)`` pair.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from . import cvqe, sim
from .cvqe import JastrowParams, MeasurementRecordSet
from .fock import HamiltonianTerm, OccupationConfig, number_term
from .onebody import GateSequence, state_preparation
from .pauli import DressedTerm, dress_hamiltonian, measurement_basis

DEGENERACY_TOL = 1e-9


@dataclass(frozen=True)
class Lattice:
    name: str
    n_sites: int
    bonds: tuple[tuple[int, int], ...]

    def __post_init__(self):
        clean = sorted({(min(i, j), max(i, j)) for i, j in self.bonds})
        if any(i == j or not (0 <= i < self.n_sites and 0 <= j < self.n_sites) for i, j in clean):
            raise ValueError(f"invalid bonds for {self.n_sites} sites: {self.bonds}")
        object.__setattr__(self, "bonds", tuple(clean))

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n_sites, self.n_sites))
        for i, j in self.bonds:
            a[i, j] = a[j, i] = 1.0
        return a


def periodic_lattice(name: str, lx: int, ly: int, vectors: Sequence[tuple[int, int]]) -> Lattice:
    """Bonds of an ``lx x ly`` torus at the Gamma point.

    A site pair joined through several periodic images appears once.
    """
    bonds = set()
    for x, y in itertools.product(range(lx), range(ly)):
        for dx, dy in vectors:
            a = x + lx * y
            b = (x + dx) % lx + lx * ((y + dy) % ly)
            if a != b:
                bonds.add((min(a, b), max(a, b)))
    return Lattice(name, lx * ly, tuple(sorted(bonds)))


def square4() -> Lattice:
    return periodic_lattice("square4", 2, 2, [(1, 0), (0, 1)])


def triangular4() -> Lattice:
    return periodic_lattice("triangular4", 2, 2, [(1, 0), (0, 1), (1, -1)])


LATTICES = {"square4": square4, "triangular4": triangular4}


def get_lattice(name: str) -> Lattice:
    try:
        return LATTICES[name]()
    except KeyError:
        raise ValueError(f"unknown lattice {name!r}; choose from {sorted(LATTICES)}") from None


@dataclass(frozen=True)
class HubbardParams:
    mu: float
    k: float
    d: float
    n_sites: int

    @property
    def n_orbitals(self) -> int:
        return 2 * self.n_sites


def default_mu(lat: Lattice, d: float, k: float = 1.0) -> float:
    """Half-filling chemical potential: ``-d/2`` (square), ``k - 2d/3`` (triangular)."""
    if lat.name == "square4":
        return -d / 2
    if lat.name == "triangular4":
        return k - 2 * d / 3
    raise ValueError(f"no default chemical potential for lattice {lat.name!r}")


def make_params(lat: Lattice, d: float, k: float = 1.0, mu: float | None = None) -> HubbardParams:
    return HubbardParams(default_mu(lat, d, k) if mu is None else mu, k, d, lat.n_sites)


def _check(lat: Lattice, p: HubbardParams) -> None:
    if lat.n_sites != p.n_sites:
        raise ValueError(f"lattice has {lat.n_sites} sites, params say {p.n_sites}")


def number_terms(lat: Lattice) -> list[HamiltonianTerm]:
    return [number_term(q) for q in range(2 * lat.n_sites)]


def kinetic_terms(lat: Lattice) -> list[HamiltonianTerm]:
    n = lat.n_sites
    out = []
    for sigma in (0, 1):
        for i, j in lat.bonds:
            a, b = i + n * sigma, j + n * sigma
            out.append(HamiltonianTerm(1.0, create_set=(a,), annihilate_set=(b,)))
            out.append(HamiltonianTerm(1.0, create_set=(b,), annihilate_set=(a,)))
    return out


def interaction_terms(lat: Lattice) -> list[HamiltonianTerm]:
    n = lat.n_sites
    return [HamiltonianTerm(1.0, number_set=(i, i + n)) for i in range(n)]


def build_hamiltonian(lat: Lattice, p: HubbardParams) -> list[HamiltonianTerm]:
    _check(lat, p)
    terms = [t.scaled(p.mu) for t in number_terms(lat)]
    terms += [t.scaled(p.k) for t in kinetic_terms(lat)]
    terms += [t.scaled(p.d) for t in interaction_terms(lat)]
    return [t for t in terms if t.coefficient != 0]


def one_body_matrix(lat: Lattice, p: HubbardParams) -> np.ndarray:
    """Single-spin hopping plus chemical potential."""
    return p.k * lat.adjacency() + p.mu * np.eye(lat.n_sites)


def _phase_fix(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    return v if nz.size == 0 else v * (np.abs(v[nz[0]]) / v[nz[0]])


def canonical_eigenbasis(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs with a solver-independent basis inside degenerate levels.

    Within a degenerate level the basis is Gram-Schmidt of the projected
    site vectors ``P e_0, P e_1, ...``; vectors are phase-fixed (first
    nonzero component real positive) and ordered lexicographically.
    Returns ``(energies, vectors)`` with vectors as columns.
    """
    w, v = np.linalg.eigh(h)
    energies, vectors = [], []
    start = 0
    while start < len(w):
        stop = start + 1
        while stop < len(w) and w[stop] - w[start] < DEGENERACY_TOL:
            stop += 1
        block = v[:, start:stop]
        proj = block @ block.conj().T
        basis: list[np.ndarray] = []
        for e in np.eye(len(w)):
            u = proj @ e
            for b in basis:
                u = u - (b.conj() @ u) * b
            if np.linalg.norm(u) > 1e-8:
                basis.append(u / np.linalg.norm(u))
            if len(basis) == stop - start:
                break
        basis = [_phase_fix(b) for b in basis]
        basis.sort(key=lambda b: tuple(np.round(b.real, 10)) + tuple(np.round(b.imag, 10)))
        level = float(np.mean(w[start:stop]))
        energies += [level] * len(basis)
        vectors += basis
        start = stop
    return np.array(energies), np.array(vectors).T


@dataclass(frozen=True, eq=False)
class FermiSea:
    """Slater determinant filling the lowest one-body orbitals of each spin.

    ``f_spin`` rows are orbitals in the site basis, occupied ones first.
    """

    f_spin: np.ndarray
    orbital_energies: np.ndarray
    occupied: tuple[int, ...]
    particles_per_spin: int

    @property
    def n_sites(self) -> int:
        return self.f_spin.shape[0]

    @property
    def f(self) -> np.ndarray:
        return scipy.linalg.block_diag(self.f_spin, self.f_spin)

    @property
    def config_spin(self) -> OccupationConfig:
        return OccupationConfig.from_occupied(range(self.particles_per_spin), self.n_sites)

    @property
    def config(self) -> OccupationConfig:
        return OccupationConfig(self.config_spin.bits * 2)

    def circuit(self) -> GateSequence:
        return state_preparation(self.f, self.config)

    def spin_circuit(self) -> GateSequence:
        return state_preparation(self.f_spin, self.config_spin)

    def one_body_energy(self) -> float:
        """Sum of occupied one-body energies over both spins."""
        return 2.0 * float(sum(self.orbital_energies[: self.particles_per_spin]))


def fermi_sea(
    lat: Lattice,
    p: HubbardParams,
    particles_per_spin: int | None = None,
    occupied: Sequence[int] | None = None,
) -> FermiSea:
    """Fill ``particles_per_spin`` orbitals of ``k * A + mu``, identically per spin.

    Orbitals are ordered by energy, then by the canonical tie-break of
    :func:`canonical_eigenbasis`. ``occupied`` overrides which of those
    orbitals (by index in that order) are filled.
    """
    _check(lat, p)
    n = lat.n_sites
    if particles_per_spin is None:
        particles_per_spin = n // 2 if occupied is None else len(occupied)
    if not 0 <= particles_per_spin <= n:
        raise ValueError(f"cannot place {particles_per_spin} particles on {n} sites")
    energies, vecs = canonical_eigenbasis(one_body_matrix(lat, p))
    occ = tuple(range(particles_per_spin)) if occupied is None else tuple(occupied)
    if len(occ) != particles_per_spin or len(set(occ)) != len(occ) or any(
        not 0 <= o < n for o in occ
    ):
        raise ValueError(f"invalid occupied orbital list {occupied}")
    order = list(occ) + [o for o in range(n) if o not in occ]
    f_spin = vecs[:, order].T.astype(complex)
    return FermiSea(f_spin, energies[order], occ, particles_per_spin)


def gutzwiller(theta: float, n_sites: int) -> JastrowParams:
    """``theta`` on every ``(i_up, i_down)`` pair, so ``G = exp(-theta D)``."""
    if math.isnan(theta) or theta == -math.inf:
        raise ValueError("theta must be a real number or +inf")
    m = np.zeros((2 * n_sites, 2 * n_sites))
    for i in range(n_sites):
        m[i, i + n_sites] = m[i + n_sites, i] = theta
    return JastrowParams(m)


def dressed_kinetic(lat: Lattice, p: HubbardParams) -> list[DressedTerm]:
    """Dressed strings of ``G k K G`` in factored form.

    Per bond and spin: ``(k/2) (X Z..Z X + Y Z..Z Y)`` on the moved pair,
    times a Jastrow weight over every other orbital. With the Gutzwiller
    matrix this weight is ``exp(-theta n_{i,-s}) exp(-theta n_{j,-s})``
    times ``exp(-2 theta n_l,up n_l,down)`` for the remaining sites.
    """
    _check(lat, p)
    n = lat.n_sites
    q_total = 2 * n
    out = []
    for i, j in lat.bonds:
        for sigma in (0, 1):
            a, b = i + n * sigma, j + n * sigma
            eps = tuple(q not in (a, b) for q in range(q_total))
            zeta = frozenset({(a, a), (b, b)})
            for letter in "XY":
                s = ["I"] * q_total
                s[a] = s[b] = letter
                for l in range(a + 1, b):
                    s[l] = "Z"
                out.append(DressedTerm(complex(p.k / 2), "".join(s), eps, zeta))
    return out


def dressed_hamiltonian(lat: Lattice, p: HubbardParams) -> list[DressedTerm]:
    return dress_hamiltonian(build_hamiltonian(lat, p), p.n_orbitals)


def model_descriptor(lat: Lattice, p: HubbardParams, sea: FermiSea | None = None) -> dict:
    desc = {
        "lattice": lat.name,
        "N": lat.n_sites,
        "bonds": [list(b) for b in lat.bonds],
        "mu": p.mu,
        "k": p.k,
        "d": p.d,
        "ordering": "up-block-first",
    }
    if sea is not None:
        desc["particles_per_spin"] = sea.particles_per_spin
        desc["occupied"] = list(sea.occupied)
    return desc


def from_descriptor(desc: dict) -> tuple[Lattice, HubbardParams]:
    lat = Lattice(desc["lattice"], desc["N"], tuple(tuple(b) for b in desc["bonds"]))
    return lat, HubbardParams(desc["mu"], desc["k"], desc["d"], desc["N"])


def full_records(
    lat: Lattice,
    p: HubbardParams,
    shots: int | None,
    seed: int = 0,
    sea: FermiSea | None = None,
) -> MeasurementRecordSet:
    """Records of the full ``2N``-qubit Fermi-sea circuit."""
    sea = sea or fermi_sea(lat, p)
    terms = dressed_hamiltonian(lat, p)
    return cvqe.collect_records(sea.circuit(), terms, shots, seed, model_descriptor(lat, p, sea))


def spin_factorized_records(
    lat: Lattice,
    p: HubbardParams,
    shots: int | None,
    seed: int = 0,
    sea: FermiSea | None = None,
    down: str = "exact",
) -> MeasurementRecordSet:
    """Simulate only the ``N``-qubit spin-up circuit.

    Each full-register basis must be all-Z on at least one spin half. The
    spin-down half comes from the exact single-spin distribution
    (``down="exact"``) or reuses the spin-up records (``down="mirror"``).
    """
    if down not in ("exact", "mirror"):
        raise ValueError(f"down must be 'exact' or 'mirror', got {down!r}")
    sea = sea or fermi_sea(lat, p)
    n = lat.n_sites
    halves = ["Z" * n]
    for t in dressed_hamiltonian(lat, p):
        b = measurement_basis(t)
        up, dn = b[:n], b[n:]
        if up != "Z" * n and dn != "Z" * n:
            raise ValueError(f"term {t.letters} couples both spin sectors")
        for h in (up, dn):
            if h not in halves:
                halves.append(h)
    circ = sea.spin_circuit()
    state = sim.run(circ)
    groups = cvqe.measure_groups(state, halves, shots, seed)
    chash = cvqe.circuit_hash(circ)
    model = model_descriptor(lat, p, sea)
    partner = None
    if shots is not None and down == "exact":
        partner = MeasurementRecordSet(
            n, cvqe.measure_groups(state, halves, None, seed), True, None, None, chash, model,
            sector="spin-down",
        )
    return MeasurementRecordSet(
        n_qubits=n,
        groups=groups,
        exact=shots is None,
        seed=None if shots is None else seed,
        shots=shots,
        circuit_hash=chash,
        model=model,
        sector="spin-up",
        partner=partner,
    )
