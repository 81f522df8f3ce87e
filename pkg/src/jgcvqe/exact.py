"""Dense reference calculations.

Nothing here goes through measurement records: energies come from full
matrices built two ways (fermionic action and Pauli strings) that must
agree before they are used.
"""

from __future__ import annotations

import itertools
import math
from typing import Sequence

import numpy as np

from .cvqe import as_jastrow, minimize_1d
from .fock import MAX_DENSE_ORBITALS, HamiltonianTerm, dense_operator, occupation_table
from .hubbard import HubbardParams, Lattice, gutzwiller
from .pauli import jordan_wigner_sum, pauli_sum_matrix

CROSS_CHECK_TOL = 1e-12
RESIDUAL_TOL = 1e-10


def dense_hamiltonian(terms: Sequence[HamiltonianTerm], n_orbitals: int) -> np.ndarray:
    """Dense matrix, cross-checked between the Fock and Pauli builders."""
    if n_orbitals > MAX_DENSE_ORBITALS:
        raise ValueError(f"Q={n_orbitals} exceeds the dense guard")
    h1 = dense_operator(terms, n_orbitals)
    h2 = pauli_sum_matrix(jordan_wigner_sum(terms, n_orbitals), n_orbitals)
    err = np.max(np.abs(h1 - h2), initial=0.0)
    if err > CROSS_CHECK_TOL * max(1.0, np.max(np.abs(h1), initial=0.0)):
        raise RuntimeError(f"dense builders disagree by {err:.3g}")
    return h1


def _first_canonical(space: np.ndarray) -> np.ndarray:
    proj = space @ space.conj().T
    for e in np.eye(space.shape[0]):
        u = proj @ e
        norm = np.linalg.norm(u)
        if norm > 1e-8:
            u = u / norm
            nz = np.flatnonzero(np.abs(u) > 1e-12)
            return u * (np.abs(u[nz[0]]) / u[nz[0]])
    raise RuntimeError("empty eigenspace")


def ground_state(
    terms: Sequence[HamiltonianTerm], n_orbitals: int, degeneracy_tol: float = 1e-9
) -> tuple[float, np.ndarray]:
    """Lowest eigenvalue and a canonical ground vector of the full Fock space."""
    h = dense_hamiltonian(terms, n_orbitals)
    if np.max(np.abs(h - h.conj().T), initial=0.0) > 1e-12:
        raise ValueError("Hamiltonian is not Hermitian")
    w, v = np.linalg.eigh(h)
    e0 = float(w[0])
    deg = int(np.sum(w - e0 < degeneracy_tol))
    psi = _first_canonical(v[:, :deg]) if deg > 1 else v[:, 0]
    residual = np.linalg.norm(h @ psi - e0 * psi)
    if residual > RESIDUAL_TOL:
        raise RuntimeError(f"eigenvector residual {residual:.3g}")
    return e0, psi


def jastrow_diagonal(theta, n_orbitals: int) -> np.ndarray:
    """Diagonal of ``G(theta)`` in the Fock basis."""
    m = as_jastrow(theta, n_orbitals).matrix
    occ = occupation_table(n_orbitals).astype(float)
    pair = np.triu(np.ones((n_orbitals, n_orbitals), dtype=bool))
    inf = np.isinf(m) & pair
    fin = np.where(np.isinf(m), 0.0, m) * pair
    expo = np.einsum("mq,qr,mr->m", occ, fin, occ)
    if inf.any():
        blocked = np.einsum("mq,qr,mr->m", occ, inf.astype(float), occ) > 0
        expo = np.where(blocked, np.inf, expo)
    return np.exp(-expo)


def dressed_expectation(
    psi: np.ndarray, terms: Sequence[HamiltonianTerm], theta, h: np.ndarray | None = None
) -> tuple[float, float, float]:
    """``(<psi|G H G|psi>, <psi|G^2|psi>, ratio)`` from dense matrices."""
    n = int(psi.shape[0]).bit_length() - 1
    if h is None:
        h = dense_hamiltonian(terms, n)
    g = jastrow_diagonal(theta, n)
    gpsi = g * psi
    num = float(np.real(gpsi.conj() @ (h @ gpsi)))
    den = float(np.real(gpsi.conj() @ gpsi))
    return num, den, (num / den if den > 0 else math.nan)


def optimal_gutzwiller(
    psi: np.ndarray,
    terms: Sequence[HamiltonianTerm],
    n_sites: int,
    bracket: tuple[float, float] = (0.0, 3.0),
    tol: float = 1e-8,
):
    """Minimize the dense dressed energy along the Gutzwiller direction."""
    h = dense_hamiltonian(terms, 2 * n_sites)

    def energy(t: float) -> float:
        e = dressed_expectation(psi, terms, gutzwiller(t, n_sites), h)[2]
        return math.inf if math.isnan(e) else e

    return minimize_1d(energy, bracket, tol)


# Second, independent exact diagonalization for the Hubbard model: spin
# orbitals interleaved as 2*i + sigma and the Hamiltonian built block by
# block in fixed (N_up, N_down) sectors.


def _sign_between(state: int, lo: int, hi: int) -> int:
    mask = ((1 << hi) - 1) ^ ((1 << (lo + 1)) - 1)
    return -1 if bin(state & mask).count("1") % 2 else 1


def _sector_states(n_sites: int, n_up: int, n_dn: int) -> list[int]:
    states = []
    for ups in itertools.combinations(range(n_sites), n_up):
        for dns in itertools.combinations(range(n_sites), n_dn):
            s = 0
            for i in ups:
                s |= 1 << (2 * i)
            for i in dns:
                s |= 1 << (2 * i + 1)
            states.append(s)
    return states


def hubbard_sector_energies(lat: Lattice, p: HubbardParams) -> dict[tuple[int, int], float]:
    """Lowest energy in every ``(N_up, N_down)`` sector."""
    n = lat.n_sites
    out = {}
    for n_up in range(n + 1):
        for n_dn in range(n + 1):
            states = _sector_states(n, n_up, n_dn)
            index = {s: a for a, s in enumerate(states)}
            h = np.zeros((len(states), len(states)))
            for a, s in enumerate(states):
                doubles = sum(((s >> (2 * i)) & 1) & ((s >> (2 * i + 1)) & 1) for i in range(n))
                h[a, a] = p.mu * (n_up + n_dn) + p.d * doubles
                for i, j in lat.bonds:
                    for sigma in (0, 1):
                        for src, dst in ((2 * i + sigma, 2 * j + sigma), (2 * j + sigma, 2 * i + sigma)):
                            if (s >> src) & 1 and not (s >> dst) & 1:
                                t = s ^ (1 << src) ^ (1 << dst)
                                lo, hi = min(src, dst), max(src, dst)
                                h[index[t], a] += p.k * _sign_between(s, lo, hi)
            out[(n_up, n_dn)] = float(np.linalg.eigvalsh(h)[0])
    return out


def hubbard_ground_energy(lat: Lattice, p: HubbardParams) -> float:
    return min(hubbard_sector_energies(lat, p).values())
