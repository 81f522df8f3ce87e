import numpy as np
import pytest

from jgcvqe.fock import HamiltonianTerm


@pytest.fixture
def rng():
    return np.random.default_rng(20221005)


def random_term(rng, n_orbitals, max_each=2):
    """Random product term with disjoint number / creation / annihilation sets."""
    perm = [int(q) for q in rng.permutation(n_orbitals)]
    a, b, c = (int(x) for x in rng.integers(0, max_each + 1, size=3))
    coef = complex(rng.normal(), rng.normal())
    return HamiltonianTerm(coef, perm[:a], perm[a:a + b], perm[a + b:a + b + c])


def random_hermitian_terms(rng, n_orbitals, n_pairs=5):
    terms = []
    for _ in range(n_pairs):
        t = random_term(rng, n_orbitals)
        terms += [t, t.adjoint()]
    return terms


def random_symmetric_theta(rng, n, scale=0.6):
    m = rng.uniform(-scale, scale, size=(n, n))
    return (m + m.T) / 2
