import numpy as np
import pytest
import scipy.linalg

from jgcvqe import cvqe, exact, sim
from jgcvqe import hubbard as hb
from jgcvqe.fock import dense_operator
from jgcvqe.pauli import dress_hamiltonian, dressed_matrix

LATTICES = [hb.square4(), hb.triangular4()]


def dense_g(theta, n_sites):
    return np.diag(exact.jastrow_diagonal(hb.gutzwiller(theta, n_sites), 2 * n_sites))


class TestLattices:
    def test_bond_counts(self):
        assert len(hb.square4().bonds) == 4
        assert len(hb.triangular4().bonds) == 6

    def test_square_geometry(self):
        assert sorted(hb.square4().bonds) == [(0, 1), (0, 2), (1, 3), (2, 3)]

    def test_unknown(self):
        with pytest.raises(ValueError):
            hb.get_lattice("hex")


class TestHamiltonian:
    def test_hopping_pairs(self):
        lat = hb.square4()
        assert len(hb.kinetic_terms(lat)) == 2 * 8  # 4 bonds x 2 spins, each with its adjoint

    def test_pure_chemical_potential(self):
        lat = hb.square4()
        p = hb.HubbardParams(mu=-0.3, k=0.0, d=0.0, n_sites=4)
        e, psi = exact.ground_state(hb.build_hamiltonian(lat, p), 8)
        assert e == pytest.approx(-0.3 * 8)

    @pytest.mark.parametrize("lat", LATTICES, ids=lambda l: l.name)
    def test_one_body_matches_dense(self, lat):
        p = hb.make_params(lat, 0.0)
        # one-particle block of the dense operator equals the hopping matrix
        h = dense_operator(hb.build_hamiltonian(lat, p), 8)
        single = [1 << i for i in range(4)]
        np.testing.assert_allclose(h[np.ix_(single, single)].real, hb.one_body_matrix(lat, p), atol=1e-14)


class TestDefaultMu:
    def test_values(self):
        assert hb.default_mu(hb.square4(), 2.0) == -1
        assert hb.default_mu(hb.triangular4(), 0.0) == 1
        assert hb.default_mu(hb.square4(), 0.0) == 0

    @pytest.mark.parametrize("lat", LATTICES, ids=lambda l: l.name)
    @pytest.mark.parametrize("d", [0.0, 2.0, 4.0])
    def test_ground_state_is_half_filled(self, lat, d):
        sectors = exact.hubbard_sector_energies(lat, hb.make_params(lat, d))
        best = min(sectors.values())
        assert sectors[(2, 2)] == pytest.approx(best, abs=1e-9)


class TestFermiSea:
    def test_zero_hopping_is_site_basis(self):
        lat = hb.square4()
        sea = hb.fermi_sea(lat, hb.HubbardParams(0.0, 0.0, 0.0, 4))
        f = np.abs(sea.f_spin)
        assert np.allclose(np.sort(f, axis=1)[:, -1], 1) and np.allclose(f.sum(axis=0), 1)

    def test_square_degeneracy_recorded(self):
        lat = hb.square4()
        p = hb.make_params(lat, 2.0)
        sea = hb.fermi_sea(lat, p)
        w = np.linalg.eigvalsh(hb.one_body_matrix(lat, p))
        np.testing.assert_allclose(np.sort(sea.orbital_energies), w, atol=1e-12)
        assert np.sum(np.abs(w - w[1]) < 1e-9) == 2  # 0-energy pair at half filling
        assert hb.model_descriptor(lat, p, sea)["occupied"] == [0, 1]

    @pytest.mark.parametrize("lat", LATTICES, ids=lambda l: l.name)
    def test_kinetic_expectation(self, lat):
        p = hb.make_params(lat, 1.0)
        sea = hb.fermi_sea(lat, p)
        psi = sim.run(sea.circuit())
        k = dense_operator(hb.kinetic_terms(lat) + [t.scaled(p.mu) for t in hb.number_terms(lat)], 8)
        assert np.vdot(psi, k @ psi).real == pytest.approx(sea.one_body_energy(), abs=1e-10)

    def test_half_filling_samples(self):
        lat = hb.square4()
        sea = hb.fermi_sea(lat, hb.make_params(lat, 2.0))
        counts = sim.sample(sim.run(sea.circuit()), 2000, seed=1)
        assert all(k.count("1") == 4 for k in counts)

    def test_occupied_override(self):
        lat = hb.square4()
        p = hb.make_params(lat, 2.0)
        sea = hb.fermi_sea(lat, p, occupied=[0, 2])
        assert sea.occupied == (0, 2)
        with pytest.raises(ValueError):
            hb.fermi_sea(lat, p, occupied=[0, 0])


class TestGutzwiller:
    def test_zero(self):
        assert np.all(hb.gutzwiller(0.0, 4).matrix == 0)

    def test_structure(self):
        m = hb.gutzwiller(0.7, 4).matrix
        upper = np.argwhere(np.triu(m) != 0)
        assert [tuple(x) for x in upper] == [(0, 4), (1, 5), (2, 6), (3, 7)]

    def test_exp_of_double_occupancy(self):
        d_op = dense_operator(hb.interaction_terms(hb.square4()), 8)
        np.testing.assert_allclose(dense_g(0.7, 4), scipy.linalg.expm(-0.7 * d_op), atol=1e-14)


class TestDressedKinetic:
    def test_theta_zero_bare(self):
        lat = hb.square4()
        p = hb.make_params(lat, 2.0)
        bare = dense_operator(hb.kinetic_terms(lat), 8)
        np.testing.assert_allclose(dressed_matrix(hb.dressed_kinetic(lat, p), np.zeros((8, 8))), bare, atol=1e-14)

    @pytest.mark.parametrize("lat", LATTICES, ids=lambda l: l.name)
    @pytest.mark.parametrize("theta", [0.5, 1.7, np.inf])
    def test_gkg(self, lat, theta):
        p = hb.make_params(lat, 2.0)
        g = dense_g(theta, 4)
        kin = dense_operator(hb.kinetic_terms(lat), 8)
        got = dressed_matrix(hb.dressed_kinetic(lat, p), hb.gutzwiller(theta, 4).matrix)
        assert np.max(np.abs(got - g @ kin @ g)) <= 1e-12

    def test_factored_form_matches_generic_dressing(self):
        lat = hb.triangular4()
        p = hb.make_params(lat, 2.0)
        th = hb.gutzwiller(0.9, 4).matrix
        generic = dress_hamiltonian(hb.kinetic_terms(lat), 8)
        np.testing.assert_allclose(
            dressed_matrix(hb.dressed_kinetic(lat, p), th), dressed_matrix(generic, th), atol=1e-14
        )

    def test_weight_factors(self):
        # bond (0,1) spin up: e^{-theta n_{0dn}} e^{-theta n_{1dn}} e^{-2 theta n_l,up n_l,dn}
        lat = hb.square4()
        term = hb.dressed_kinetic(lat, hb.make_params(lat, 2.0))[0]
        theta = 0.4
        bits = np.array([[0, 0, 1, 0, 1, 1, 1, 0], [0, 0, 1, 1, 0, 0, 1, 1]])
        expected = np.array([theta * 2 + 2 * theta, 2 * theta * 2])
        np.testing.assert_allclose(term.exponents(bits, hb.gutzwiller(theta, 4).matrix), expected)

    @pytest.mark.parametrize("op", ["M", "D"])
    def test_diagonal_operators_commute(self, op):
        lat = hb.square4()
        terms = hb.number_terms(lat) if op == "M" else hb.interaction_terms(lat)
        m = dense_operator(terms, 8)
        g = dense_g(0.8, 4)
        np.testing.assert_allclose(g @ m @ g, m @ g @ g, atol=1e-15)


class TestSpinFactorized:
    def test_header(self):
        lat = hb.square4()
        rec = hb.spin_factorized_records(lat, hb.make_params(lat, 2.0), None)
        assert rec.n_qubits == 4 and rec.sector == "spin-up"

    @pytest.mark.parametrize("lat", LATTICES, ids=lambda l: l.name)
    def test_matches_full(self, lat):
        p = hb.make_params(lat, 2.0)
        terms = hb.dressed_hamiltonian(lat, p)
        full = hb.full_records(lat, p, None)
        half = hb.spin_factorized_records(lat, p, None)
        for t in np.linspace(0, 3, 7):
            th = hb.gutzwiller(t, 4)
            assert cvqe.evaluate(half, terms, th).energy == pytest.approx(
                cvqe.evaluate(full, terms, th).energy, abs=1e-10)

    def test_sampled_down_modes(self):
        lat = hb.square4()
        p = hb.make_params(lat, 2.0)
        terms = hb.dressed_hamiltonian(lat, p)
        ref = cvqe.evaluate(hb.full_records(lat, p, None), terms, hb.gutzwiller(0.5, 4)).energy
        for down in ("exact", "mirror"):
            rec = hb.spin_factorized_records(lat, p, 20000, seed=3, down=down)
            assert (rec.partner is not None) == (down == "exact")
            est = cvqe.evaluate(rec, terms, hb.gutzwiller(0.5, 4))
            # mirrored halves share their noise, so the single-sector stderr
            # understates the error by about a factor of two
            bound = 5 if down == "exact" else 10
            assert abs(est.energy - ref) <= bound * est.stderr

    def test_d_zero_exact(self):
        lat = hb.square4()
        p = hb.make_params(lat, 0.0)
        rec = hb.spin_factorized_records(lat, p, None)
        best = cvqe.minimize_theta(rec, hb.dressed_hamiltonian(lat, p), (0, 3), 1e-8,
                                   lambda t: hb.gutzwiller(t, 4))
        e0, _ = exact.ground_state(hb.build_hamiltonian(lat, p), 8)
        assert best.energy - e0 <= 1e-9
