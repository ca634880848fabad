"""Command-line interface.

Subcommands:

* ``simulate``    run one particle simulation from a JSON config into a run
                  directory (manifest, snapshots, diagnostics.jsonl);
* ``functionals`` evaluate H, I, D, J, K_beta on a named density preset;
* ``sweep``       grid of simulations over one config axis x seeds, with a
                  per-run summary table and per-value medians;
* ``plotdata``    flatten a run's diagnostics.jsonl into tidy CSV;
* ``verify``      fast self-check battery (conservation, exchangeability,
                  closed forms), PASS/FAIL per item.

Exit codes: 0 success, 1 runtime failure (blowup, failed check), 2 bad
configuration or arguments.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .densities import GaussianModel, TensorPower
from .diagnostics import GaussianBumpFn, bl_distance, weak_form_residual
from .dynamics import SimConfig, run
from .errors import BlowupError, ConfigError
from .estimators import EmpiricalMeasure, knn_entropy, pair_inverse_square
from .functionals import (MCSpec, entropy, entropy_production_D, fisher_information,
                          J_functional, k_family)
from .potentials import PotentialSpec, default_eta
from .reference import matched_maxwellian, maxwellian_entropy, resolve_preset
from .runio import load_config, load_trajectory, save_trajectory

__all__ = ["main"]


def _pair_observer(state):
    try:
        val = pair_inverse_square(EmpiricalMeasure(state.v))
    except Exception:
        val = float("nan")
    return {"pair_inv_sq": val}


def _entropy_observer(state):
    return {"knn_entropy": knn_entropy(state.v)}


def _cmd_simulate(args) -> int:
    config = load_config(args.config)
    observers = [_pair_observer]
    if args.entropy:
        observers.append(_entropy_observer)
    try:
        traj = run(config, observers=observers)
    except BlowupError as err:
        save_trajectory(err.trajectory, args.out, fmt=args.format)
        print(f"blowup at step {err.step_index}; partial run saved to {args.out}",
              file=sys.stderr)
        return 1
    save_trajectory(traj, args.out, fmt=args.format)
    last = traj.diagnostics[-1]
    print(json.dumps({"out": str(args.out), "steps": config.n_steps,
                      "snapshots": len(traj.snapshots),
                      "final_energy": last["energy"],
                      "runtime_s": round(traj.runtime_s, 3)}))
    return 0


def _cmd_functionals(args) -> int:
    model = resolve_preset(args.preset)
    which = [w.strip().upper() for w in args.which.split(",") if w.strip()]
    bad = [w for w in which if w not in ("H", "I", "D", "J", "K")]
    if bad:
        raise ConfigError(f"unknown functionals {bad}; choose from H,I,D,J,K")
    needs_pair = any(w in which for w in ("D", "J", "K"))
    if needs_pair:
        if args.gamma is None:
            raise ConfigError("--gamma is required for D/J/K")
        eta = args.eta if args.eta is not None else default_eta(args.samples)
        pot = PotentialSpec(gamma=args.gamma, eta=eta)
        pair = TensorPower(model, max(2, args.tensor))
        mc = MCSpec(n_samples=args.samples, seed=args.seed)

    def emit(name, est, **extra):
        rec = {"functional": name, "preset": args.preset, "method": est.method,
               "value": est.value, "abs_error": est.abs_error, "n": est.n}
        if needs_pair and est.method == "mc":
            rec.update(gamma=pot.gamma, eta=pot.eta, n_rejected=est.n_rejected)
        rec.update(extra)
        print(json.dumps(rec, sort_keys=True))

    if "H" in which:
        emit("H", entropy(model))
    if "I" in which:
        emit("I", fisher_information(model))
    if "D" in which:
        emit("D", entropy_production_D(pair, pot, mc))
    if "J" in which:
        emit("J", J_functional(pair, pot, mc))
    if "K" in which:
        betas = [float(b) for b in args.beta.split(",") if b.strip()]
        fam = k_family(pair, betas, pot, mc)
        for b in betas:
            emit("K_beta", fam.estimates[b], beta=b)
    return 0


_SWEEP_AXES = ("n_particles", "dt", "eta", "gamma")


def _run_cell(payload) -> dict:
    """One sweep cell: run, save, summarize (top-level for process pools)."""
    base, axis, value, seed, cell_dir, fmt = payload
    d = dict(base)
    d[axis] = value
    d["seed"] = seed
    config = SimConfig.from_dict(d)
    row = {"axis": axis, "value": value, "seed": seed}
    try:
        traj = run(config, observers=[_pair_observer])
    except BlowupError as err:
        save_trajectory(err.trajectory, cell_dir, fmt=fmt)
        row.update(status=f"blowup@{err.step_index}", runtime_s=float("nan"),
                   energy_drift=float("nan"), momentum_drift=float("nan"),
                   weak_residual=float("nan"), bl_to_matched=float("nan"))
        return row
    save_trajectory(traj, cell_dir, fmt=fmt)
    first, last = traj.diagnostics[0], traj.diagnostics[-1]
    phi = GaussianBumpFn(np.zeros(3), 1.0, 0.5)
    final = traj.snapshots[-1].v
    row.update(
        status="ok",
        runtime_s=round(traj.runtime_s, 3),
        energy_drift=abs(last["energy"] - first["energy"]),
        momentum_drift=float(np.max(np.abs(
            np.asarray(last["momentum"]) - np.asarray(first["momentum"])))),
        weak_residual=weak_form_residual(traj, phi, traj.times[-1]),
        bl_to_matched=bl_distance(EmpiricalMeasure(final), matched_maxwellian(final)),
    )
    return row


def _format_value(v) -> str:
    return f"{v:g}" if isinstance(v, float) else str(v)


def _cmd_sweep(args) -> int:
    base = load_config(args.config).to_dict()
    if args.axis not in _SWEEP_AXES:
        raise ConfigError(f"axis must be one of {_SWEEP_AXES}")
    cast = int if args.axis == "n_particles" else float
    try:
        values = [cast(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --values: {exc}") from exc
    if not values:
        raise ConfigError("--values is empty")
    out_root = Path(args.out)
    base_seed = int(base.get("seed", 0))
    jobs = []
    for value in values:
        for s in range(args.seeds):
            cell = out_root / f"{args.axis}={_format_value(value)}" / f"seed={base_seed + s}"
            jobs.append((base, args.axis, value, base_seed + s, cell, args.format))
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_run_cell, jobs))
    else:
        rows = [_run_cell(j) for j in jobs]

    out_root.mkdir(parents=True, exist_ok=True)
    cols = ["axis", "value", "seed", "status", "runtime_s",
            "energy_drift", "momentum_drift", "weak_residual", "bl_to_matched"]
    with open(out_root / "summary.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        w.writerows(rows)
    metric_cols = ["energy_drift", "momentum_drift", "weak_residual", "bl_to_matched"]
    with open(out_root / "summary_median.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["axis", "value", "n_ok"] + [f"median_abs_{c}" for c in metric_cols])
        for value in values:
            ok = [r for r in rows
                  if r["value"] == value and r["status"] == "ok"]
            meds = [float(np.median([abs(r[c]) for r in ok])) if ok else float("nan")
                    for c in metric_cols]
            w.writerow([args.axis, _format_value(value), len(ok)] + meds)
    n_bad = sum(r["status"] != "ok" for r in rows)
    print(json.dumps({"out": str(out_root), "runs": len(rows), "failed": n_bad}))
    return 1 if n_bad else 0


def _cmd_plotdata(args) -> int:
    traj = load_trajectory(args.run)
    rows = traj.diagnostics
    if not rows:
        raise ConfigError(f"{args.run}: no diagnostics rows")
    if args.keys:
        keys = [k.strip() for k in args.keys.split(",") if k.strip()]
        missing = [k for k in keys if k not in rows[0]]
        if missing:
            raise ConfigError(f"keys not in diagnostics: {missing} "
                              f"(have {sorted(rows[0])})")
    else:
        keys = sorted(rows[0])
    flat_rows, flat_cols = [], []
    for row in rows:
        out = {}
        for k in keys:
            v = row.get(k)
            if isinstance(v, list):
                for i, vi in enumerate(v):
                    out[f"{k}_{i}"] = vi
            else:
                out[k] = v
        flat_rows.append(out)
        for c in out:
            if c not in flat_cols:
                flat_cols.append(c)
    sink = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.DictWriter(sink, fieldnames=flat_cols)
        w.writeheader()
        w.writerows(flat_rows)
    finally:
        if args.out:
            sink.close()
    return 0


def _cmd_verify(args) -> int:
    checks = []

    def check(name, fn):
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        checks.append(ok)
        print(f"{'PASS' if ok else 'FAIL'}  {name}  [{detail}]")

    def conservation():
        cfg = SimConfig(n_particles=64, gamma=-2.0, dt=1e-3, t_end=0.05, seed=1,
                        energy_mode="rescale")
        traj = run(cfg)
        d0, d1 = traj.diagnostics[0], traj.diagnostics[-1]
        dp = float(np.max(np.abs(np.asarray(d1["momentum"]) - np.asarray(d0["momentum"]))))
        de = abs(d1["energy"] - d0["energy"]) / d0["energy"]
        return dp < 1e-10 and de < 1e-12, f"dP={dp:.2e} dE/E={de:.2e}"

    def energy_martingale():
        cfg = SimConfig(n_particles=64, gamma=-2.0, dt=1e-3, t_end=0.05, seed=1)
        traj = run(cfg)
        d0, d1 = traj.diagnostics[0], traj.diagnostics[-1]
        de = abs(d1["energy"] - d0["energy"]) / d0["energy"]
        return de < 5e-3, f"raw-scheme dE/E={de:.2e}"

    def determinism():
        cfg = SimConfig(n_particles=32, gamma=-2.5, dt=1e-3, t_end=0.02, seed=3)
        a, b = run(cfg), run(cfg)
        same = all(np.array_equal(x.v, y.v) for x, y in zip(a.snapshots, b.snapshots))
        return same, "bitwise identical replay"

    def closed_forms():
        g = GaussianModel(np.zeros(3), np.eye(3))
        h = entropy(g).value
        i = fisher_information(g).value
        eh = abs(h - maxwellian_entropy(1.0))
        ei = abs(i - 3.0)
        return eh < 1e-6 and ei < 1e-6, f"|dH|={eh:.2e} |dI|={ei:.2e}"

    def maxwellian_zero():
        g2 = TensorPower(GaussianModel(np.zeros(3), np.eye(3)), 2)
        pot = PotentialSpec(gamma=-2.0, eta=0.1)
        est = entropy_production_D(g2, pot, MCSpec(20_000, seed=0))
        return est.value == 0.0, f"D={est.value:.2e}"

    check("conservation(momentum, energy; rescale mode)", conservation)
    check("energy drift(raw scheme, martingale-scale)", energy_martingale)
    check("determinism(seeded replay)", determinism)
    check("closed_forms(H, I on standard Gaussian)", closed_forms)
    check("equilibrium(D = 0 on Maxwellian pair)", maxwellian_zero)
    n_fail = checks.count(False)
    print(f"{len(checks) - n_fail}/{len(checks)} checks passed")
    return 1 if n_fail else 0


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="landausim",
        description="Conservative stochastic particle simulator and "
                    "entropy/dissipation functional toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("simulate", help="run one simulation from a JSON config")
    ps.add_argument("--config", required=True, help="JSON config file")
    ps.add_argument("--out", required=True, help="output run directory")
    ps.add_argument("--format", choices=("csv", "bin"), default="csv")
    ps.add_argument("--entropy", action="store_true",
                    help="also record nearest-neighbor entropy per snapshot")
    ps.set_defaults(fn=_cmd_simulate)

    pf = sub.add_parser("functionals", help="evaluate H/I/D/J/K on a preset density")
    pf.add_argument("--preset", required=True,
                    help='e.g. "maxwellian(1)", "aniso_gauss(2,0.5,0.5)", "bimodal(3)"')
    pf.add_argument("--which", default="H,I", help="comma list from H,I,D,J,K")
    pf.add_argument("--beta", default="0,0.5,1", help="comma list of K_beta betas")
    pf.add_argument("--gamma", type=float, default=None, help="potential exponent")
    pf.add_argument("--eta", type=float, default=None,
                    help="regularization length (default: sample-count rule)")
    pf.add_argument("--samples", type=int, default=200_000)
    pf.add_argument("--seed", type=int, default=0)
    pf.add_argument("--tensor", type=int, default=2,
                    help="tensor power of the preset used for pair functionals")
    pf.set_defaults(fn=_cmd_functionals)

    pw = sub.add_parser("sweep", help="grid of runs over one config axis x seeds")
    pw.add_argument("--config", required=True, help="base JSON config")
    pw.add_argument("--axis", required=True, choices=_SWEEP_AXES)
    pw.add_argument("--values", required=True, help="comma-separated axis values")
    pw.add_argument("--seeds", type=int, default=1, help="number of seeds per value")
    pw.add_argument("--out", required=True, help="sweep output root")
    pw.add_argument("--workers", type=int, default=1)
    pw.add_argument("--format", choices=("csv", "bin"), default="bin")
    pw.set_defaults(fn=_cmd_sweep)

    pp = sub.add_parser("plotdata", help="flatten run diagnostics to tidy CSV")
    pp.add_argument("--run", required=True, help="run directory")
    pp.add_argument("--keys", default=None, help="comma list of columns (default all)")
    pp.add_argument("--out", default=None, help="CSV path (default stdout)")
    pp.set_defaults(fn=_cmd_plotdata)

    pv = sub.add_parser("verify", help="fast invariant self-checks")
    pv.set_defaults(fn=_cmd_verify)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BlowupError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
