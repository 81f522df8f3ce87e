"""Jastrow-Gutzwiller factors evaluated classically on stored quantum measurements.

Modules
-------
fock      occupation bitstrings and fermionic operator algebra
onebody   Givens factorization of one-body unitaries and Thouless circuits
sim       dense statevector simulator with basis rotation and sampling
pauli     Jordan-Wigner strings and Jastrow-dressed measurement terms
cvqe      record collection and replayed energy estimation
hubbard   Hubbard clusters, Fermi sea, Gutzwiller parameters
exact     dense reference energies
cli       experiment runner (``python -m jgcvqe``)
"""

__version__ = "0.1.0"
