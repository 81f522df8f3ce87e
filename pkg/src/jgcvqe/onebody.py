"""One-body basis changes and their circuits.

A unitary ``f`` with ``f[q, q'] = <phi_q'|psi_q>`` defines new creation
operators ``a_q^dagger = sum_q' f[q, q'] c_q'^dagger``. The Fock-space
operator ``U(f)`` with ``U c_q^dagger U^dagger = a_q^dagger`` is built from
elementary factors: adjacent-row real rotations ``r^y_{i,i+1}`` and
single-row phases ``r^z_j``.

Composition rule: ``U(A) U(B) = U(B A)``, so if ``f = s_1 s_2 ... s_M``
then running the circuits for ``s_1, s_2, ..., s_M`` in time order
realizes ``U(f)``. Gate lists are therefore in the same order as the
matrix factors.

Rotation convention: ``r^y_{i,i+1}(phi)`` has ``cos`` on both diagonal
entries, ``+sin`` at ``[i, i+1]`` and ``-sin`` at ``[i+1, i]``. Its
Fock-space image is ``exp(phi (c_{i+1}^dagger c_i - c_i^dagger c_{i+1}))``,
which equals ``R^XY(phi) R^YX(-phi)`` on qubits ``(i, i+1)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .fock import OccupationConfig

UNITARY_TOL = 1e-10
SKIP_TOL = 1e-12
_ZERO_ANGLE = 1e-15


@dataclass(frozen=True)
class YRotation:
    """Real rotation mixing rows ``i`` and ``i + 1``."""

    i: int
    angle: float

    @property
    def j(self) -> int:
        return self.i + 1


@dataclass(frozen=True)
class ZRotation:
    """Phase ``exp(i * angle)`` on row ``j``."""

    j: int
    angle: float


Step = Union[YRotation, ZRotation]


def ry_matrix(n: int, i: int, angle: float) -> np.ndarray:
    r = np.eye(n, dtype=complex)
    c, s = math.cos(angle), math.sin(angle)
    r[i, i] = c
    r[i + 1, i + 1] = c
    r[i, i + 1] = s
    r[i + 1, i] = -s
    return r


def rz_matrix(n: int, j: int, angle: float) -> np.ndarray:
    r = np.eye(n, dtype=complex)
    r[j, j] = np.exp(1j * angle)
    return r


def step_matrix(n: int, step: Step) -> np.ndarray:
    if isinstance(step, YRotation):
        return ry_matrix(n, step.i, step.angle)
    return rz_matrix(n, step.j, step.angle)


@dataclass(frozen=True)
class GivensSequence:
    """Factorization ``f = s_1 s_2 ... s_M diag(residual_diagonal)``."""

    n: int
    steps: tuple[Step, ...]
    residual_diagonal: tuple[complex, ...]

    def __post_init__(self):
        if len(self.residual_diagonal) != self.n:
            raise ValueError("residual diagonal must have one phase per row")
        for s in self.steps:
            if isinstance(s, YRotation) and not 0 <= s.i < self.n - 1:
                raise ValueError(f"rotation rows ({s.i}, {s.i + 1}) out of range")
            if isinstance(s, ZRotation) and not 0 <= s.j < self.n:
                raise ValueError(f"phase row {s.j} out of range")

    @property
    def y_count(self) -> int:
        return sum(isinstance(s, YRotation) for s in self.steps)

    def to_text(self) -> str:
        lines = [f"N {self.n}"]
        for s in self.steps:
            if isinstance(s, YRotation):
                lines.append(f"Y {s.i} {s.angle:.17g}")
            else:
                lines.append(f"Z {s.j} {s.angle:.17g}")
        for j, ph in enumerate(self.residual_diagonal):
            lines.append(f"D {j} {float(np.angle(ph)):.17g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "GivensSequence":
        n = None
        steps: list[Step] = []
        diag: dict[int, complex] = {}
        for line in text.splitlines():
            parts = line.split()
            if not parts:
                continue
            tag = parts[0]
            if tag == "N":
                n = int(parts[1])
            elif tag == "Y":
                steps.append(YRotation(int(parts[1]), float(parts[2])))
            elif tag == "Z":
                steps.append(ZRotation(int(parts[1]), float(parts[2])))
            elif tag == "D":
                diag[int(parts[1])] = complex(np.exp(1j * float(parts[2])))
            else:
                raise ValueError(f"unknown step tag {tag!r}")
        if n is None:
            raise ValueError("missing 'N' header line")
        return cls(n, tuple(steps), tuple(diag.get(j, 1.0 + 0j) for j in range(n)))


def check_unitary(f: np.ndarray, tol: float = UNITARY_TOL) -> np.ndarray:
    f = np.asarray(f, dtype=complex)
    if f.ndim != 2 or f.shape[0] != f.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {f.shape}")
    err = np.max(np.abs(f.conj().T @ f - np.eye(f.shape[0])))
    if err > tol:
        raise ValueError(f"matrix is not unitary (max |f^H f - I| = {err:.3g})")
    return f


def elimination_order(n: int) -> list[tuple[int, int]]:
    """Lower-triangular ``(row, col)`` targets, anti-diagonal sweeps from the
    lower-left corner. Entries sharing a sweep label touch disjoint rows."""
    order = []
    for label in range(1, 2 * n - 2):
        for col in range(n - 1):
            row = n + 2 * col - label
            if col < row <= n - 1:
                order.append((row, col))
    return order


def decompose(f: np.ndarray) -> GivensSequence:
    """Factor a unitary into adjacent-row rotations and a residual diagonal.

    Each target ``(r, c)`` is zeroed by left-multiplying with a phase on row
    ``r`` followed by a real rotation of rows ``(r - 1, r)``. The phase is
    the smallest one that makes ``f[r, c] / f[r - 1, c]`` real. The
    reconstruction factors are the inverses of those row operations.
    """
    work = check_unitary(f).copy()
    n = work.shape[0]
    steps: list[Step] = []
    for row, col in elimination_order(n):
        i, j = row - 1, row
        a, b = work[i, col], work[j, col]
        if abs(b) < SKIP_TOL:
            work[j, col] = 0.0
            continue
        arg_a = float(np.angle(a)) if abs(a) >= SKIP_TOL else 0.0
        phi_z = float(np.remainder(arg_a - float(np.angle(b)) + math.pi / 2, math.pi) - math.pi / 2)
        if abs(phi_z) > _ZERO_ANGLE:
            work[j, :] *= np.exp(1j * phi_z)
            steps.append(ZRotation(j, -phi_z))
        b_aligned = float((work[j, col] * np.exp(-1j * arg_a)).real)
        phi_y = math.atan2(b_aligned, abs(a))
        c, s = math.cos(phi_y), math.sin(phi_y)
        ri, rj = work[i, :].copy(), work[j, :].copy()
        work[i, :] = c * ri + s * rj
        work[j, :] = -s * ri + c * rj
        work[j, col] = 0.0
        steps.append(YRotation(i, -phi_y))
    residual = np.diag(work).copy()
    return GivensSequence(n, tuple(steps), tuple(complex(x) for x in residual))


def reconstruct(seq: GivensSequence) -> np.ndarray:
    out = np.eye(seq.n, dtype=complex)
    for s in seq.steps:
        out = out @ step_matrix(seq.n, s)
    return out @ np.diag(np.asarray(seq.residual_diagonal, dtype=complex))


@dataclass(frozen=True)
class Gate:
    """Abstract gate: ``X``, ``RZ``, ``RY`` (angle in radians) or ``CX``.

    ``RZ(phi) = exp(-i phi Z / 2)`` and ``RY(phi) = exp(-i phi Y / 2)``.
    For ``CX`` the qubits are ``(control, target)``.
    """

    name: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __str__(self) -> str:
        q = " ".join(str(x) for x in self.qubits)
        return f"{self.name} {q}" if self.angle is None else f"{self.name} {q} {self.angle:.17g}"


_ARITY = {"X": 1, "RZ": 1, "RY": 1, "CX": 2}


@dataclass(frozen=True)
class GateSequence:
    """Gates in time order. ``global_phase`` is the phase dropped during
    compilation: the ideal operator equals ``exp(1j * global_phase)`` times
    the product of these gates."""

    n_qubits: int
    gates: tuple[Gate, ...] = ()
    global_phase: float = 0.0

    def __post_init__(self):
        for g in self.gates:
            if g.name not in _ARITY or len(g.qubits) != _ARITY[g.name]:
                raise ValueError(f"malformed gate {g}")
            if any(not 0 <= q < self.n_qubits for q in g.qubits):
                raise IndexError(f"gate {g} outside {self.n_qubits} qubits")

    def __add__(self, other: "GateSequence") -> "GateSequence":
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit counts differ")
        return GateSequence(
            self.n_qubits, self.gates + other.gates, self.global_phase + other.global_phase
        )

    def count(self, name: str) -> int:
        return sum(g.name == name for g in self.gates)

    def depth(self) -> int:
        level = [0] * self.n_qubits
        for g in self.gates:
            d = max(level[q] for q in g.qubits) + 1
            for q in g.qubits:
                level[q] = d
        return max(level, default=0)

    def to_text(self) -> str:
        head = f"QUBITS {self.n_qubits}\nPHASE {self.global_phase:.17g}\n"
        return head + "".join(f"{g}\n" for g in self.gates)

    @classmethod
    def from_text(cls, text: str) -> "GateSequence":
        n, phase, gates = None, 0.0, []
        for line in text.splitlines():
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "QUBITS":
                n = int(parts[1])
            elif parts[0] == "PHASE":
                phase = float(parts[1])
            elif parts[0] == "CX":
                gates.append(Gate("CX", (int(parts[1]), int(parts[2]))))
            elif parts[0] == "X":
                gates.append(Gate("X", (int(parts[1]),)))
            else:
                gates.append(Gate(parts[0], (int(parts[1]),), float(parts[2])))
        if n is None:
            raise ValueError("missing QUBITS header")
        return cls(n, tuple(gates), phase)


def xy_rotation(i: int, j: int, angle: float) -> list[Gate]:
    """``exp(-i angle/2 X_i Y_j)`` in time order."""
    return [
        Gate("RY", (i,), -math.pi / 2),
        Gate("CX", (i, j)),
        Gate("RY", (j,), angle),
        Gate("CX", (i, j)),
        Gate("RY", (i,), math.pi / 2),
    ]


def yx_rotation(i: int, j: int, angle: float) -> list[Gate]:
    """``exp(-i angle/2 Y_i X_j)`` in time order."""
    return [
        Gate("RY", (j,), -math.pi / 2),
        Gate("CX", (j, i)),
        Gate("RY", (i,), angle),
        Gate("CX", (j, i)),
        Gate("RY", (j,), math.pi / 2),
    ]


def compile_thouless(seq: GivensSequence) -> GateSequence:
    """Map a Givens factorization onto gates implementing ``U(f)``.

    A phase step ``exp(i phi n_j)`` becomes ``RZ(j, phi)`` and contributes
    ``phi / 2`` to the dropped global phase. A rotation step becomes
    ``R^XY(phi) R^YX(-phi)`` on the adjacent pair (4 CX gates). Residual
    phases are emitted last.
    """
    gates: list[Gate] = []
    phase = 0.0
    for s in seq.steps:
        if isinstance(s, ZRotation):
            gates.append(Gate("RZ", (s.j,), s.angle))
            phase += s.angle / 2
        else:
            gates += xy_rotation(s.i, s.i + 1, s.angle)
            gates += yx_rotation(s.i, s.i + 1, -s.angle)
    for j, ph in enumerate(seq.residual_diagonal):
        angle = float(np.angle(ph))
        if abs(angle) > _ZERO_ANGLE:
            gates.append(Gate("RZ", (j,), angle))
            phase += angle / 2
    return GateSequence(seq.n, tuple(gates), phase)


def preparation_gates(config: OccupationConfig) -> GateSequence:
    """``X`` on each occupied orbital, producing ``|Phi_n>`` from the vacuum."""
    return GateSequence(config.n_orbitals, tuple(Gate("X", (q,)) for q in config.occupied()))


def state_preparation(f: np.ndarray, config: OccupationConfig) -> GateSequence:
    """Full circuit ``U(f) |Phi_n>`` starting from the vacuum."""
    f = np.asarray(f)
    if f.shape[0] != config.n_orbitals:
        raise ValueError("matrix size and configuration length differ")
    return preparation_gates(config) + compile_thouless(decompose(f))


def slater_amplitudes(f: np.ndarray, config: OccupationConfig) -> dict[OccupationConfig, complex]:
    """Amplitudes of ``prod_q (a_q^dagger)^{n_q} |0>`` in the Fock basis.

    The amplitude on ``m`` is the determinant of ``f`` restricted to rows
    ``occupied(n)`` and columns ``occupied(m)``. Only nonzero entries are
    returned.
    """
    f = np.asarray(f, dtype=complex)
    n = config.n_orbitals
    rows = config.occupied()
    out: dict[OccupationConfig, complex] = {}
    for cols in itertools.combinations(range(n), len(rows)):
        amp = complex(np.linalg.det(f[np.ix_(rows, cols)])) if rows else 1.0 + 0j
        if amp != 0:
            out[OccupationConfig.from_occupied(cols, n)] = amp
    return out


def slater_vector(f: np.ndarray, config: OccupationConfig) -> np.ndarray:
    vec = np.zeros(1 << config.n_orbitals, dtype=complex)
    for m, amp in slater_amplitudes(f, config).items():
        vec[m.index] = amp
    return vec


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Gaussian matrix."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
