"""Cascaded-VQE estimator with a Jastrow factor evaluated on stored records.

The circuit is sampled once per measurement basis. Any ``theta`` is then
evaluated classically from the stored outcomes::

    E(theta) = <G H G> / <G^2>

where every dressed term contributes ``h * a_m * b_m * exp(-exponent_m)``
per outcome ``m`` and ``<G^2>`` comes from the all-Z group.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import sim
from .fock import bitstring, parse_bitstring
from .onebody import GateSequence
from .pauli import DressedTerm, identity_term, measurement_basis

RECORD_FORMAT = "jgcvqe-records/1"
SYMMETRY_TOL = 1e-14


class MissingGroupError(KeyError):
    pass


class RecordIntegrityError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class JastrowParams:
    """Real symmetric ``theta[q, q']``; entries may be ``+inf``."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"theta must be square, got shape {m.shape}")
        if np.isnan(m).any() or (m == -np.inf).any():
            raise ValueError("theta entries must be real numbers or +inf")
        inf = np.isinf(m)
        if (inf != inf.T).any():
            raise ValueError("theta is not symmetric")
        fin = np.where(inf, 0.0, m)
        if np.max(np.abs(fin - fin.T), initial=0.0) > SYMMETRY_TOL:
            raise ValueError("theta is not symmetric")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def zeros(cls, n: int) -> "JastrowParams":
        return cls(np.zeros((n, n)))

    @property
    def n_qubits(self) -> int:
        return self.matrix.shape[0]


def as_jastrow(theta, n: int | None = None) -> JastrowParams:
    jp = theta if isinstance(theta, JastrowParams) else JastrowParams(np.asarray(theta, dtype=float))
    if n is not None and jp.n_qubits != n:
        raise ValueError(f"theta is {jp.n_qubits}x{jp.n_qubits}, expected {n}x{n}")
    return jp


@dataclass(frozen=True, eq=False)
class RecordGroup:
    """Outcomes of one measurement basis.

    ``weights`` are shot counts, or exact probabilities when ``shots`` is None.
    """

    basis: str
    outcomes: np.ndarray
    weights: np.ndarray
    shots: int | None
    seed: int | None

    def __post_init__(self):
        order = np.argsort(self.outcomes, kind="stable")
        out = np.asarray(self.outcomes, dtype=np.int64)[order]
        w = np.asarray(self.weights)[order]
        if self.shots is not None:
            w = w.astype(np.int64)
            if int(w.sum()) != self.shots:
                raise ValueError(f"counts sum to {int(w.sum())}, declared {self.shots} shots")
        else:
            w = w.astype(float)
        out.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "outcomes", out)
        object.__setattr__(self, "weights", w)

    @property
    def n_qubits(self) -> int:
        return len(self.basis)

    @cached_property
    def probs(self) -> np.ndarray:
        if self.shots is None:
            return self.weights
        return self.weights / self.shots

    @cached_property
    def bits(self) -> np.ndarray:
        return ((self.outcomes[:, None] >> np.arange(self.n_qubits)[None, :]) & 1).astype(np.int8)

    def as_dict(self) -> dict[str, float | int]:
        return {
            bitstring(int(i), self.n_qubits): (int(w) if self.shots is not None else float(w))
            for i, w in zip(self.outcomes, self.weights)
        }

    def _payload(self) -> dict:
        key = "probabilities" if self.shots is None else "counts"
        return {"basis": self.basis, "seed": self.seed, "shots": self.shots, key: self.as_dict()}

    @classmethod
    def _from_payload(cls, d: Mapping) -> "RecordGroup":
        table = d["probabilities"] if d["shots"] is None else d["counts"]
        outcomes = np.array([parse_bitstring(k) for k in table], dtype=np.int64)
        weights = np.array(list(table.values()))
        return cls(d["basis"], outcomes, weights, d["shots"], d["seed"])


@dataclass(frozen=True, eq=False)
class MeasurementRecordSet:
    """Replayable measurement records for one prepared state.

    ``sector`` is ``"full"`` for the complete register. For spin-factorized
    runs it is ``"spin-up"``: the groups hold the single-spin circuit and
    ``partner`` (sector ``"spin-down"``) supplies the other spin; a missing
    partner means the spin-up records are mirrored.
    """

    n_qubits: int
    groups: tuple[RecordGroup, ...]
    exact: bool
    seed: int | None
    shots: int | None
    circuit_hash: str
    model: dict = field(default_factory=dict)
    sector: str = "full"
    partner: "MeasurementRecordSet | None" = None

    def __post_init__(self):
        bases = [g.basis for g in self.groups]
        if len(set(bases)) != len(bases):
            raise ValueError("duplicate measurement basis")
        if any(g.n_qubits != self.n_qubits for g in self.groups):
            raise ValueError("group basis length differs from n_qubits")

    @cached_property
    def _by_basis(self) -> dict[str, RecordGroup]:
        return {g.basis: g for g in self.groups}

    @cached_property
    def _joint_cache(self) -> dict:
        return {}

    def group(self, basis: str) -> RecordGroup:
        try:
            return self._by_basis[basis]
        except KeyError:
            raise MissingGroupError(f"no record group for basis {basis}") from None

    @property
    def bases(self) -> list[str]:
        return [g.basis for g in self.groups]

    def _payload(self) -> dict:
        return {
            "format": RECORD_FORMAT,
            "header": {
                "Q": self.n_qubits,
                "model": self.model,
                "circuit_hash": self.circuit_hash,
                "seed": self.seed,
                "shots": self.shots,
                "exact": self.exact,
                "sector": self.sector,
            },
            "groups": [g._payload() for g in self.groups],
            "partner": None if self.partner is None else self.partner._payload(),
        }

    @cached_property
    def content_hash(self) -> str:
        return _digest(self._payload())

    def to_json(self) -> str:
        payload = self._payload()
        payload["header"]["content_hash"] = _digest(payload)
        return json.dumps(payload, sort_keys=True, indent=1) + "\n"

    @classmethod
    def _from_payload(cls, p: Mapping) -> "MeasurementRecordSet":
        h = p["header"]
        return cls(
            n_qubits=h["Q"],
            groups=tuple(RecordGroup._from_payload(g) for g in p["groups"]),
            exact=h["exact"],
            seed=h["seed"],
            shots=h["shots"],
            circuit_hash=h["circuit_hash"],
            model=dict(h["model"]),
            sector=h["sector"],
            partner=None if p.get("partner") is None else cls._from_payload(p["partner"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "MeasurementRecordSet":
        payload = json.loads(text)
        if payload.get("format") != RECORD_FORMAT:
            raise RecordIntegrityError(f"unknown record format {payload.get('format')!r}")
        stored = payload["header"].pop("content_hash", None)
        if stored is None or stored != _digest(payload):
            raise RecordIntegrityError("record content hash mismatch")
        return cls._from_payload(payload)


def _digest(payload: Mapping) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def circuit_hash(gates: GateSequence) -> str:
    return hashlib.sha256(gates.to_text().encode()).hexdigest()


def write_records(records: MeasurementRecordSet, path, force: bool = False) -> Path:
    path = Path(path)
    if path.exists() and not force:
        raise FileExistsError(f"{path} exists (use force to overwrite)")
    path.write_text(records.to_json())
    return path


def read_records(path) -> MeasurementRecordSet:
    return MeasurementRecordSet.from_json(Path(path).read_text())


def required_bases(terms: Sequence[DressedTerm]) -> list[str]:
    """Distinct bases in first-appearance order, all-Z first."""
    if not terms:
        raise ValueError("no terms")
    bases = ["Z" * terms[0].n_qubits]
    for t in terms:
        b = measurement_basis(t)
        if b not in bases:
            bases.append(b)
    return bases


def measure_groups(
    state: np.ndarray, bases: Sequence[str], shots: int | None, seed: int
) -> tuple[RecordGroup, ...]:
    """Sample (or, with ``shots=None``, tabulate exactly) each basis.

    Group ``k`` uses the independent stream ``seed + k``.
    """
    groups = []
    for k, basis in enumerate(bases):
        if shots is None:
            table = sim.exact_distribution(state, basis)
            groups.append(
                RecordGroup(
                    basis,
                    np.array([parse_bitstring(s) for s in table], dtype=np.int64),
                    np.array(list(table.values())),
                    None,
                    None,
                )
            )
        else:
            p = sim.probabilities(state, basis)
            counts = sim.sample_indices(p, shots, seed + k)
            nz = np.flatnonzero(counts)
            groups.append(RecordGroup(basis, nz, counts[nz], shots, seed + k))
    return tuple(groups)


def records_from_state(
    state: np.ndarray,
    terms: Sequence[DressedTerm],
    shots: int | None,
    seed: int = 0,
    circuit: str = "",
    model: dict | None = None,
) -> MeasurementRecordSet:
    n = sim.n_qubits_of(state)
    groups = measure_groups(state, required_bases(terms), shots, seed)
    return MeasurementRecordSet(
        n_qubits=n,
        groups=groups,
        exact=shots is None,
        seed=None if shots is None else seed,
        shots=shots,
        circuit_hash=circuit,
        model=dict(model or {}),
    )


def collect_records(
    state_prep: GateSequence,
    terms: Sequence[DressedTerm],
    shots: int | None,
    seed: int = 0,
    model: dict | None = None,
) -> MeasurementRecordSet:
    """Run the circuit once per distinct measurement basis and store outcomes.

    ``shots=None`` stores exact outcome probabilities (infinite-shot mode).
    """
    if shots is not None and shots < 1:
        raise ValueError("shots must be >= 1")
    state = sim.run(state_prep)
    return records_from_state(state, terms, shots, seed, circuit_hash(state_prep), model)


@dataclass(frozen=True, eq=False)
class EnergyEstimate:
    numerator: float
    denominator: float
    energy: float
    stderr: float
    theta: JastrowParams
    theta_value: float | None = None
    boundary: str | None = None


def _joint(records: MeasurementRecordSet, basis: str):
    """Source group, joint outcome bits and the partner marginal for ``basis``.

    For full records the joint is the group itself. For spin-factorized
    records the two spin halves are combined as a product distribution.
    """
    cache = records._joint_cache
    if basis in cache:
        return cache[basis]
    if records.sector == "full":
        g = records.group(basis)
        out = (g, g.bits, None)
    else:
        n = records.n_qubits
        if len(basis) != 2 * n:
            raise ValueError(f"spin-factorized records need {2 * n}-qubit terms")
        other = records.partner if records.partner is not None else records
        gu, gd = records.group(basis[:n]), other.group(basis[n:])
        mu, md = len(gu.outcomes), len(gd.outcomes)
        bits = np.hstack([np.repeat(gu.bits, md, axis=0), np.tile(gd.bits, (mu, 1))])
        out = (gu, bits, gd.probs)
    cache[basis] = out
    return out


def _source_values(records, basis, term, theta) -> tuple[str, np.ndarray]:
    g, bits, partner_probs = _joint(records, basis)
    x = term.values(bits, theta)
    if partner_probs is not None:
        x = x.reshape(len(g.outcomes), len(partner_probs)) @ partner_probs
    return g.basis, x


def evaluate(
    records: MeasurementRecordSet, terms: Sequence[DressedTerm], theta
) -> EnergyEstimate:
    """Replay stored outcomes at ``theta``. No circuit is rerun."""
    if not terms:
        raise ValueError("no terms")
    n = terms[0].n_qubits
    jp = as_jastrow(theta, n)
    th = jp.matrix
    per_source: dict[str, np.ndarray] = {}
    for t in terms:
        src, x = _source_values(records, measurement_basis(t), t, th)
        per_source[src] = per_source[src] + x if src in per_source else x
    z_src, y = _source_values(records, "Z" * n, identity_term(n), th)

    num = 0.0
    var_num = 0.0
    for src, x in per_source.items():
        g = records.group(src)
        xr = x.real
        mean = float(g.probs @ xr)
        num += mean
        if g.shots is not None:
            var_num += float(g.probs @ (xr - mean) ** 2) / g.shots
    gz = records.group(z_src)
    y = y.real
    den = float(gz.probs @ y)
    energy = num / den if den > 0 else math.nan

    stderr = 0.0
    if gz.shots is not None and den > 0:
        var_den = float(gz.probs @ (y - den) ** 2) / gz.shots
        cov = 0.0
        if z_src in per_source:
            xz = per_source[z_src].real
            cov = float(gz.probs @ ((xz - gz.probs @ xz) * (y - den))) / gz.shots
        var_e = var_num / den**2 - 2 * num * cov / den**3 + num**2 * var_den / den**4
        stderr = math.sqrt(max(var_e, 0.0))
    return EnergyEstimate(num, den, energy, stderr, jp)


def scan_theta(
    records: MeasurementRecordSet, terms: Sequence[DressedTerm], grid: Sequence
) -> tuple[list[EnergyEstimate], int]:
    """Evaluate every grid point; returns estimates in grid order and the argmin."""
    if len(grid) == 0:
        raise ValueError("empty theta grid")
    estimates = [evaluate(records, terms, th) for th in grid]
    energies = np.array([e.energy for e in estimates])
    return estimates, int(np.nanargmin(energies))


@dataclass(frozen=True)
class ScalarMinimum:
    x: float
    value: float
    boundary: str | None


def minimize_1d(
    fun: Callable[[float], float],
    bracket: tuple[float, float],
    tol: float = 1e-8,
    grid_points: int = 31,
    allow_infinite: bool = True,
) -> ScalarMinimum:
    """Grid scan followed by bounded Brent refinement around the best point.

    Endpoints are returned exactly when they win. If the upper edge wins and
    ``fun(inf)`` is lower still, the result is ``x = inf`` with boundary
    ``"infinite"``.
    """
    lo, hi = map(float, bracket)
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi) or tol <= 0:
        raise ValueError(f"invalid bracket {bracket} or tolerance {tol}")
    xs = np.linspace(lo, hi, grid_points)
    fs = np.array([fun(float(x)) for x in xs])
    k = int(np.nanargmin(fs))
    best_x, best_f = float(xs[k]), float(fs[k])
    a, b = float(xs[max(k - 1, 0)]), float(xs[min(k + 1, grid_points - 1)])
    res = minimize_scalar(fun, bounds=(a, b), method="bounded", options={"xatol": tol / 4})
    # Improvements at rounding level are noise on a flat minimum.
    if res.fun < best_f - 8 * np.finfo(float).eps * max(1.0, abs(best_f)):
        best_x, best_f = float(res.x), float(res.fun)
    boundary = None
    if not np.isfinite(best_f):
        raise ValueError("objective is not finite anywhere on the bracket")
    if best_x == lo:
        boundary = "lower"
    elif best_x == hi:
        boundary = "upper"
        if allow_infinite:
            f_inf = fun(math.inf)
            if f_inf < best_f:
                return ScalarMinimum(math.inf, float(f_inf), "infinite")
    return ScalarMinimum(best_x, best_f, boundary)


def minimize_theta(
    records: MeasurementRecordSet,
    terms: Sequence[DressedTerm],
    bracket: tuple[float, float],
    tol: float,
    direction: Callable[[float], JastrowParams],
) -> EnergyEstimate:
    """Minimize the replayed energy along ``theta = direction(t)``, ``t`` in ``bracket``."""

    def energy(t: float) -> float:
        e = evaluate(records, terms, direction(t)).energy
        return math.inf if math.isnan(e) else e

    best = minimize_1d(energy, bracket, tol)
    est = evaluate(records, terms, direction(best.x))
    return EnergyEstimate(
        est.numerator, est.denominator, est.energy, est.stderr, est.theta, best.x, best.boundary
    )
