import json
import math

import numpy as np
import pytest

from jgcvqe import cvqe, exact, sim
from jgcvqe import hubbard as hb
from jgcvqe.cvqe import (
    JastrowParams,
    MissingGroupError,
    RecordIntegrityError,
    evaluate,
    minimize_1d,
    records_from_state,
    scan_theta,
)
from jgcvqe.fock import OccupationConfig, number_term
from jgcvqe.onebody import random_unitary, state_preparation
from jgcvqe.pauli import dress_hamiltonian

from conftest import random_hermitian_terms, random_symmetric_theta


def random_problem(rng, q=5, config="11010"):
    terms = random_hermitian_terms(rng, q)
    psi = sim.run(state_preparation(random_unitary(q, rng), OccupationConfig.from_string(config)))
    return terms, dress_hamiltonian(terms, q), psi


@pytest.fixture(scope="module")
def square():
    lat = hb.square4()
    p = hb.make_params(lat, 2.0)
    sea = hb.fermi_sea(lat, p)
    return lat, p, sea, hb.dressed_hamiltonian(lat, p), hb.full_records(lat, p, None, sea=sea)


class TestJastrowParams:
    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            JastrowParams(np.array([[0, 1.0], [0, 0]]))

    def test_rejects_nan_and_negative_infinity(self):
        with pytest.raises(ValueError):
            JastrowParams(np.array([[np.nan]]))
        with pytest.raises(ValueError):
            JastrowParams(np.array([[-np.inf]]))

    def test_wrong_size(self, square):
        lat, p, sea, terms, rec = square
        with pytest.raises(ValueError):
            evaluate(rec, terms, np.zeros((4, 4)))


class TestCollect:
    def test_diagonal_hamiltonian_one_group(self, rng):
        dressed = dress_hamiltonian([number_term(q, float(q)) for q in range(4)], 4)
        circ = state_preparation(random_unitary(4, rng), OccupationConfig.from_string("1100"))
        rec = cvqe.collect_records(circ, dressed, 100, seed=1)
        assert rec.bases == ["ZZZZ"]

    def test_hubbard_group_counts(self):
        for lat, groups in ((hb.square4(), 17), (hb.triangular4(), 25)):
            p = hb.make_params(lat, 2.0)
            bases = cvqe.required_bases(hb.dressed_hamiltonian(lat, p))
            # 2 groups (XX, YY type) per bond per spin, plus all-Z
            assert len(bases) == 2 * 2 * len(lat.bonds) + 1 == groups

    def test_deterministic_bytes(self, square):
        lat, p, sea, terms, _ = square
        a = hb.full_records(lat, p, 500, seed=9, sea=sea).to_json()
        b = hb.full_records(lat, p, 500, seed=9, sea=sea).to_json()
        c = hb.full_records(lat, p, 500, seed=10, sea=sea).to_json()
        assert a == b and a != c

    def test_rejects_zero_shots(self, square):
        lat, p, sea, terms, _ = square
        with pytest.raises(ValueError):
            cvqe.collect_records(sea.circuit(), terms, 0)


class TestEvaluate:
    def test_theta_zero_is_plain_vqe(self, rng):
        terms, dressed, psi = random_problem(rng)
        rec = records_from_state(psi, dressed, 4000, seed=3)
        est = evaluate(rec, dressed, np.zeros((5, 5)))
        assert est.denominator == 1.0 and est.energy == est.numerator
        # plain estimator: Pauli eigenvalue averaged over the matching group
        plain = 0.0
        for d in dressed:
            g = rec.group(cvqe.measurement_basis(d))
            parity = (g.bits[:, d.xy_mask | d.z_mask].sum(axis=1)) % 2
            plain += float(g.probs @ (d.coefficient.real * (1 - 2 * parity)))
        assert est.energy == pytest.approx(plain, abs=1e-12)

    def test_infinite_shot_matches_dense(self, rng):
        for _ in range(5):
            terms, dressed, psi = random_problem(rng)
            rec = records_from_state(psi, dressed, None)
            theta = random_symmetric_theta(rng, 5)
            _, _, expected = exact.dressed_expectation(psi, terms, theta)
            assert evaluate(rec, dressed, theta).energy == pytest.approx(expected, abs=1e-10)

    def test_no_sampling_on_replay(self, square):
        lat, p, sea, terms, _ = square
        rec = hb.full_records(lat, p, 1000, seed=0, sea=sea)
        before = dict(sim.counters)
        for t in np.linspace(0, 3, 100):
            evaluate(rec, terms, hb.gutzwiller(t, 4))
        assert dict(sim.counters) == before

    def test_pure(self, square):
        lat, p, sea, terms, _ = square
        rec = hb.full_records(lat, p, 1000, seed=4, sea=sea)
        a = evaluate(rec, terms, hb.gutzwiller(0.6, 4))
        b = evaluate(rec, terms, hb.gutzwiller(0.6, 4))
        assert (a.numerator, a.denominator, a.energy, a.stderr) == (b.numerator, b.denominator, b.energy, b.stderr)

    def test_denominator_monotone(self, rng):
        terms, dressed, psi = random_problem(rng)
        rec = records_from_state(psi, dressed, 2000, seed=8)
        base = np.abs(random_symmetric_theta(rng, 5))
        for q, r in [(0, 1), (2, 2), (3, 4)]:
            dens = []
            for step in np.linspace(0, 2, 9):
                th = base.copy()
                th[q, r] += step
                th[r, q] = th[q, r]
                dens.append(evaluate(rec, dressed, th).denominator)
            assert all(b <= a for a, b in zip(dens, dens[1:]))

    def test_variational_bound(self, square):
        lat, p, sea, terms, rec = square
        e0, _ = exact.ground_state(hb.build_hamiltonian(lat, p), 8)
        for t in np.linspace(0, 3, 31):
            assert evaluate(rec, terms, hb.gutzwiller(t, 4)).energy >= e0 - 1e-9

    def test_infinite_theta(self, square):
        lat, p, sea, terms, rec = square
        inf = evaluate(rec, terms, hb.gutzwiller(math.inf, 4))
        big = evaluate(rec, terms, hb.gutzwiller(60.0, 4))
        assert inf.energy == pytest.approx(big.energy, abs=1e-9)
        psi = sim.run(sea.circuit())
        assert inf.energy == pytest.approx(
            exact.dressed_expectation(psi, hb.build_hamiltonian(lat, p), hb.gutzwiller(math.inf, 4))[2], abs=1e-10
        )

    def test_stderr_zero_for_exact_records(self, square):
        *_, terms, rec = square
        assert evaluate(rec, terms, hb.gutzwiller(0.5, 4)).stderr == 0

    def test_stderr_scaling(self, rng):
        terms, dressed, psi = random_problem(rng, q=4, config="1010")
        theta = np.abs(random_symmetric_theta(rng, 4))
        small = [evaluate(records_from_state(psi, dressed, 2000, s), dressed, theta).stderr for s in range(20)]
        large = [evaluate(records_from_state(psi, dressed, 8000, s), dressed, theta).stderr for s in range(20)]
        ratio = np.mean(large) / np.mean(small)
        assert abs(ratio - 0.5) <= 0.125

    def test_missing_group(self, square):
        lat, p, sea, terms, rec = square
        partial = cvqe.MeasurementRecordSet(8, rec.groups[:1], True, None, None, "")
        with pytest.raises(MissingGroupError):
            evaluate(partial, terms, hb.gutzwiller(0.5, 4))

    def test_diagonal_terms_need_only_z(self, square):
        lat, p, sea, terms, rec = square
        diag = hb.dress_hamiltonian(hb.number_terms(lat) + hb.interaction_terms(lat), 8)
        z_only = cvqe.MeasurementRecordSet(8, rec.groups[:1], True, None, None, "")
        assert cvqe.required_bases(diag) == ["Z" * 8]
        assert math.isfinite(evaluate(z_only, diag, hb.gutzwiller(0.5, 4)).energy)


class TestPersistence:
    def test_round_trip_bitwise(self, square, tmp_path):
        lat, p, sea, terms, _ = square
        rec = hb.full_records(lat, p, 300, seed=2, sea=sea)
        path = cvqe.write_records(rec, tmp_path / "r.json")
        back = cvqe.read_records(path)
        th = hb.gutzwiller(0.7, 4)
        a, b = evaluate(rec, terms, th), evaluate(back, terms, th)
        assert (a.energy, a.stderr) == (b.energy, b.stderr)
        assert back.to_json() == rec.to_json()

    def test_tamper_detected(self, square, tmp_path):
        lat, p, sea, terms, _ = square
        payload = json.loads(hb.full_records(lat, p, 300, seed=2, sea=sea).to_json())
        first = payload["groups"][0]["counts"]
        key = next(iter(first))
        first[key] += 1
        with pytest.raises(RecordIntegrityError):
            cvqe.MeasurementRecordSet.from_json(json.dumps(payload))

    def test_no_overwrite(self, square, tmp_path):
        *_, rec = square
        cvqe.write_records(rec, tmp_path / "r.json")
        with pytest.raises(FileExistsError):
            cvqe.write_records(rec, tmp_path / "r.json")
        cvqe.write_records(rec, tmp_path / "r.json", force=True)

    def test_counts_must_sum(self):
        with pytest.raises(ValueError):
            cvqe.RecordGroup("Z", np.array([0, 1]), np.array([3, 4]), 8, 0)


class TestScanAndMinimize:
    def test_constant_hamiltonian_flat(self, rng):
        dressed = dress_hamiltonian([number_term(q) for q in range(3)], 3)
        psi = sim.prepare(OccupationConfig.from_string("101"))
        rec = records_from_state(psi, dressed, None)
        grid = [np.full((3, 3), t) for t in np.linspace(0, 2, 5)]
        est, _ = scan_theta(rec, dressed, grid)
        assert np.ptp([e.energy for e in est]) <= 1e-14

    def test_square_interior_minimum(self, square):
        lat, p, sea, terms, rec = square
        ts = np.round(np.arange(0, 3.0001, 0.01), 10)
        est, k = scan_theta(rec, terms, [hb.gutzwiller(t, 4) for t in ts])
        assert 0 < ts[k] < 3

    def test_d_zero_boundary(self):
        lat = hb.square4()
        p = hb.make_params(lat, 0.0)
        rec = hb.full_records(lat, p, None)
        terms = hb.dressed_hamiltonian(lat, p)
        ts = np.linspace(0, 3, 31)
        _, k = scan_theta(rec, terms, [hb.gutzwiller(t, 4) for t in ts])
        assert k == 0
        best = cvqe.minimize_theta(rec, terms, (0, 3), 1e-8, lambda t: hb.gutzwiller(t, 4))
        assert best.theta_value <= 1e-8

    def test_quadratic(self):
        res = minimize_1d(lambda x: (x - 1.234) ** 2, (0, 3), tol=1e-8)
        assert abs(res.x - 1.234) <= 1e-8 and res.boundary is None

    def test_boundaries(self):
        assert minimize_1d(lambda x: x, (0, 1)).boundary == "lower"
        assert minimize_1d(lambda x: -x, (0, 1), allow_infinite=False).boundary == "upper"
        inf = minimize_1d(lambda x: -math.atan(x), (0, 1))
        assert inf.x == math.inf and inf.boundary == "infinite"

    def test_agrees_with_dense_minimizer(self, square):
        lat, p, sea, terms, rec = square
        tol = 1e-8
        best = cvqe.minimize_theta(rec, terms, (0, 3), tol, lambda t: hb.gutzwiller(t, 4))
        ref = exact.optimal_gutzwiller(sim.run(sea.circuit()), hb.build_hamiltonian(lat, p), 4, (0, 3), tol)
        # a flat minimum limits the x resolution to about sqrt(eps)
        assert abs(best.theta_value - ref.x) <= max(2 * tol, 1e-6)
        assert best.energy == pytest.approx(ref.value, abs=1e-12)
