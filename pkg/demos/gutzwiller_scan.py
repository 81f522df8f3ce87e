"""
Scanning the Gutzwiller parameter on stored measurements
========================================================

The Fermi sea of the 4-site square Hubbard cluster is sampled once.
The energy is then replayed over a theta grid without touching the
simulator again.
"""

import numpy as np

from jgcvqe import cvqe, exact, sim
from jgcvqe import hubbard as hb

lat = hb.square4()
p = hb.make_params(lat, d=2.0)
sea = hb.fermi_sea(lat, p)
terms = hb.dressed_hamiltonian(lat, p)

# one sampling pass, 10^5 shots per measurement basis
records = hb.full_records(lat, p, shots=100_000, seed=1, sea=sea)
print(len(records.groups), "measurement groups")

calls = dict(sim.counters)
thetas = np.linspace(0, 1.5, 16)
for t in thetas:
    e = cvqe.evaluate(records, terms, hb.gutzwiller(t, lat.n_sites))
    print(f"theta={t:5.2f}  E={e.energy:+.4f} +/- {e.stderr:.4f}")
assert dict(sim.counters) == calls  # replay only

# reference numbers from dense matrices
e0, _ = exact.ground_state(hb.build_hamiltonian(lat, p), p.n_orbitals)
best = exact.optimal_gutzwiller(sim.run(sea.circuit()), hb.build_hamiltonian(lat, p), lat.n_sites)
print(f"exact ground energy {e0:.6f}; best Gutzwiller {best.value:.6f} at theta={best.x:.4f}")
