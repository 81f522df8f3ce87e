"""
Optimal Gutzwiller energy versus interaction strength
=====================================================

For both 4-site lattices the infinite-shot energy is minimized over theta
at each d and compared with exact diagonalization. Writes two CSV files
in the current directory.
"""

import csv

from jgcvqe import cli

for lattice in ("square4", "triangular4"):
    cfg = dict(cli.DEFAULTS, lattice=lattice, mode="infinite-shot")
    rows = cli.sweep_rows(cfg)
    with open(f"sweep_{lattice}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["d", "E_opt", "theta_opt", "E_exact"])
        for r in rows:
            w.writerow([r["d"], r["E_opt"], r["theta_opt"], r["E_exact"]])
    print(lattice)
    for r in rows:
        print(f"  d={r['d']:.1f}  E_opt={r['E_opt']:+.5f}  theta*={r['theta_opt']:.4f}  exact={r['E_exact']:+.5f}")
