"""
Preparing a Slater determinant with Givens rotations
====================================================

A random one-body basis change is split into adjacent-row rotations,
compiled to a small gate list and checked against determinant minors.
"""

import numpy as np

from jgcvqe import sim
from jgcvqe.fock import OccupationConfig
from jgcvqe.onebody import decompose, reconstruct, slater_vector, state_preparation, random_unitary

rng = np.random.default_rng(7)
f = random_unitary(4, rng)

# the rotation list, one line per elementary step
seq = decompose(f)
print(seq.to_text())
print("reconstruction error:", np.max(np.abs(reconstruct(seq) - f)))

# fill orbitals 0 and 1, then rotate into the new basis
config = OccupationConfig.from_string("1100")
circuit = state_preparation(f, config)
print(len(circuit.gates), "gates,", circuit.count("CX"), "CX, depth", circuit.depth())

psi = sim.run(circuit) * np.exp(1j * circuit.global_phase)
print("max amplitude error vs determinants:", np.max(np.abs(psi - slater_vector(f, config))))
