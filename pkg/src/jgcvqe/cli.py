"""Command-line experiment runner.

Subcommands::

    run       simulate the Fermi-sea circuit and write a record file
    evaluate  replay a record file over a theta grid (CSV)
    sweep     optimal Gutzwiller energy versus d, with the exact reference (CSV)
    exact     exact ground energies versus d (CSV)

Settings resolve as built-in defaults, then ``--config`` (flat ``key = value``
lines), then explicit flags. Every output gets a ``.manifest.json`` next to
it echoing the resolved settings.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from . import cvqe, exact, hubbard as hb

MODES = ("full", "spin-factorized", "infinite-shot")

DEFAULTS = {
    "lattice": "square4",
    "d": 2.0,
    "k": 1.0,
    "mu": None,
    "shots": 100_000,
    "seed": 0,
    "mode": "full",
    "down": "exact",
    "occupied": None,
    "theta_min": 0.0,
    "theta_max": 3.0,
    "theta_steps": 301,
    "tol": 1e-8,
    "d_grid": None,
    "d_min": 0.0,
    "d_max": 4.0,
    "d_steps": 9,
    "workers": 1,
    "out": None,
    "force": False,
}


def _int_list(text):
    return None if text in (None, "", "none") else [int(x) for x in str(text).split(",")]


def _float_list(text):
    return None if text in (None, "", "none") else [float(x) for x in str(text).split(",")]


def _opt_float(text):
    return None if text in (None, "", "none", "default") else float(text)


def _bool(text):
    return text if isinstance(text, bool) else str(text).lower() in ("1", "true", "yes", "on")


CONVERT = {
    "lattice": str, "d": float, "k": float, "mu": _opt_float, "shots": int, "seed": int,
    "mode": str, "down": str, "occupied": _int_list, "theta_min": float, "theta_max": float,
    "theta_steps": int, "tol": float, "d_grid": _float_list, "d_min": float, "d_max": float,
    "d_steps": int, "workers": int, "out": str, "force": _bool,
}


def read_config(path) -> dict:
    cfg = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONVERT:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        cfg[key] = CONVERT[key](value)
    return cfg


def resolve(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(read_config(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = CONVERT[key](value) if isinstance(value, str) else value
    if cfg["mode"] not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if cfg["shots"] < 1:
        raise ValueError("shots must be >= 1")
    if cfg["theta_steps"] < 1:
        raise ValueError("theta_steps must be >= 1")
    return cfg


def _check_out(path, force: bool) -> Path:
    path = Path(path)
    if path.exists() and not force:
        raise FileExistsError(f"{path} exists; pass --force to overwrite")
    return path


def _write_manifest(path: Path, command: str, cfg: dict) -> None:
    digest = hashlib.sha256(path.read_bytes()).hexdigest()
    manifest = {"command": command, "config": cfg, "output": path.name, "sha256": digest}
    Path(str(path) + ".manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def theta_grid(cfg: dict) -> np.ndarray:
    return np.linspace(cfg["theta_min"], cfg["theta_max"], cfg["theta_steps"])


def d_grid(cfg: dict) -> list[float]:
    if cfg["d_grid"] is not None:
        return list(cfg["d_grid"])
    return [float(x) for x in np.linspace(cfg["d_min"], cfg["d_max"], cfg["d_steps"])]


def model_for(cfg: dict, d: float | None = None):
    lat = hb.get_lattice(cfg["lattice"])
    d = cfg["d"] if d is None else d
    p = hb.make_params(lat, d, cfg["k"], cfg["mu"])
    sea = hb.fermi_sea(lat, p, occupied=cfg["occupied"])
    return lat, p, sea


def make_records(cfg: dict, d: float | None = None, seed: int | None = None):
    lat, p, sea = model_for(cfg, d)
    seed = cfg["seed"] if seed is None else seed
    if cfg["mode"] == "spin-factorized":
        return hb.spin_factorized_records(lat, p, cfg["shots"], seed, sea, cfg["down"])
    shots = None if cfg["mode"] == "infinite-shot" else cfg["shots"]
    return hb.full_records(lat, p, shots, seed, sea)


def terms_for(records: cvqe.MeasurementRecordSet):
    lat, p = hb.from_descriptor(records.model)
    return lat, p, hb.dressed_hamiltonian(lat, p)


def cmd_run(cfg: dict) -> Path:
    out = _check_out(cfg["out"] or "records.json", cfg["force"])
    records = make_records(cfg)
    out.write_text(records.to_json())
    _write_manifest(out, "run", cfg)
    lat, p, sea = model_for(cfg)
    circ = sea.spin_circuit() if cfg["mode"] == "spin-factorized" else sea.circuit()
    print(
        f"{out}: {len(records.groups)} measurement groups on {records.n_qubits} qubits "
        f"({records.sector}); circuit {len(circ.gates)} gates, {circ.count('CX')} CX, "
        f"depth {circ.depth()}"
    )
    return out


def evaluate_grid(records, thetas: Sequence[float]):
    lat, p, terms = terms_for(records)
    grid = [hb.gutzwiller(float(t), lat.n_sites) for t in thetas]
    return cvqe.scan_theta(records, terms, grid)


def cmd_evaluate(cfg: dict, records_path) -> Path:
    records = cvqe.read_records(records_path)
    out = _check_out(cfg["out"] or Path(records_path).with_suffix(".scan.csv"), cfg["force"])
    thetas = theta_grid(cfg)
    estimates, k = evaluate_grid(records, thetas)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta", "numerator", "denominator", "energy", "stderr"])
        for t, e in zip(thetas, estimates):
            w.writerow([_fmt(t), _fmt(e.numerator), _fmt(e.denominator), _fmt(e.energy), _fmt(e.stderr)])
        fh.write(f"# argmin theta={_fmt(thetas[k])} energy={_fmt(estimates[k].energy)}\n")
    _write_manifest(out, "evaluate", dict(cfg, records=str(records_path)))
    print(f"argmin theta={thetas[k]:.6g} energy={estimates[k].energy:.12g}")
    return out


def sweep_point(cfg: dict, d: float, index: int) -> dict:
    """Optimal Gutzwiller energy at one ``d`` plus the exact ground energy."""
    records = make_records(cfg, d, seed=cfg["seed"] + 1000 * index)
    lat, p, terms = terms_for(records)
    best = cvqe.minimize_theta(
        records, terms, (cfg["theta_min"], cfg["theta_max"]), cfg["tol"],
        lambda t: hb.gutzwiller(t, lat.n_sites),
    )
    e_exact, _ = exact.ground_state(hb.build_hamiltonian(lat, p), p.n_orbitals)
    return {"d": d, "E_opt": best.energy, "theta_opt": best.theta_value, "E_exact": e_exact,
            "boundary": best.boundary}


def sweep_rows(cfg: dict) -> list[dict]:
    ds = d_grid(cfg)
    if cfg["workers"] > 1:
        with ProcessPoolExecutor(cfg["workers"]) as pool:
            return list(pool.map(sweep_point, [cfg] * len(ds), ds, range(len(ds))))
    return [sweep_point(cfg, d, i) for i, d in enumerate(ds)]


def cmd_sweep(cfg: dict) -> Path:
    out = _check_out(cfg["out"] or f"sweep_{cfg['lattice']}.csv", cfg["force"])
    rows = sweep_rows(cfg)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["d", "E_opt", "theta_opt", "E_exact"])
        for r in rows:
            w.writerow([_fmt(r["d"]), _fmt(r["E_opt"]), _fmt(r["theta_opt"]), _fmt(r["E_exact"])])
    _write_manifest(out, "sweep", cfg)
    print(f"{out}: {len(rows)} rows")
    return out


def exact_rows(cfg: dict) -> list[tuple[float, float]]:
    lat = hb.get_lattice(cfg["lattice"])
    rows = []
    for d in d_grid(cfg):
        p = hb.make_params(lat, d, cfg["k"], cfg["mu"])
        rows.append((d, exact.ground_state(hb.build_hamiltonian(lat, p), p.n_orbitals)[0]))
    return rows


def cmd_exact(cfg: dict) -> Path:
    out = _check_out(cfg["out"] or f"exact_{cfg['lattice']}.csv", cfg["force"])
    rows = exact_rows(cfg)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["d", "exact_energy"])
        for d, e in rows:
            w.writerow([_fmt(d), _fmt(e)])
    _write_manifest(out, "exact", cfg)
    print(f"{out}: {len(rows)} rows")
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jgcvqe", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, model=True, theta=False, dgrid=False):
        sp.add_argument("--config", help="flat key = value settings file")
        sp.add_argument("--out")
        sp.add_argument("--force", action="store_const", const=True)
        if model:
            sp.add_argument("--lattice", choices=sorted(hb.LATTICES))
            sp.add_argument("--k", type=float)
            sp.add_argument("--mu", help="chemical potential (default: half-filling value)")
        if theta:
            sp.add_argument("--theta-min", type=float)
            sp.add_argument("--theta-max", type=float)
            sp.add_argument("--theta-steps", type=int)
        if dgrid:
            sp.add_argument("--d-grid", help="comma-separated d values")
            sp.add_argument("--d-min", type=float)
            sp.add_argument("--d-max", type=float)
            sp.add_argument("--d-steps", type=int)

    def sampling(sp):
        sp.add_argument("--shots", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--mode", choices=MODES)
        sp.add_argument("--down", choices=("exact", "mirror"))
        sp.add_argument("--occupied", help="comma-separated orbital indices to fill")

    run = sub.add_parser("run", help="simulate and write a record file")
    common(run)
    run.add_argument("--d", type=float)
    sampling(run)

    ev = sub.add_parser("evaluate", help="replay records over a theta grid")
    ev.add_argument("records")
    common(ev, model=False, theta=True)

    sw = sub.add_parser("sweep", help="optimal energy versus d")
    common(sw, theta=True, dgrid=True)
    sampling(sw)
    sw.add_argument("--tol", type=float)
    sw.add_argument("--workers", type=int)

    ex = sub.add_parser("exact", help="exact ground energies versus d")
    common(ex, dgrid=True)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "sweep" and args.mode is None:
            args.mode = "infinite-shot"
        cfg = resolve(args)
        if args.command == "run":
            cmd_run(cfg)
        elif args.command == "evaluate":
            cmd_evaluate(cfg, args.records)
        elif args.command == "sweep":
            cmd_sweep(cfg)
        else:
            cmd_exact(cfg)
    except (ValueError, FileExistsError, cvqe.RecordIntegrityError, cvqe.MissingGroupError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
