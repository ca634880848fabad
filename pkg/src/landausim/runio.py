"""Run directory persistence: manifest, snapshots, diagnostics stream.

Layout of a saved run:

    manifest.json        config, seed, versions, file list, status, timing
    diagnostics.jsonl    one JSON object per recorded snapshot
    snap_000000.csv      per-snapshot velocities (or .bin, chosen by format)

CSV snapshots carry a header line '# step=<s> t=<t> n=<N>' followed by N rows
'vx,vy,vz' printed with repr-exact precision.  Binary snapshots are raw
little-endian float64 streams [step, t, v_1x, v_1y, v_1z, ...].  Identical
config and seed reproduce byte-identical files.
"""

from __future__ import annotations

import json
import platform
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import SimConfig, ParticleState, Trajectory
from .errors import ConfigError

__all__ = ["save_trajectory", "load_trajectory", "load_config", "write_manifest"]


def _snap_name(index: int, fmt: str) -> str:
    return f"snap_{index:06d}.{'csv' if fmt == 'csv' else 'bin'}"


def _write_snapshot_csv(path: Path, state: ParticleState):
    with open(path, "w") as fh:
        fh.write(f"# step={state.step_index} t={float(state.t)!r} n={state.n}\n")
        for row in state.v:
            fh.write(f"{float(row[0])!r},{float(row[1])!r},{float(row[2])!r}\n")


def _read_snapshot_csv(path: Path) -> ParticleState:
    with open(path) as fh:
        header = fh.readline().strip()
        fields = dict(part.split("=") for part in header.lstrip("# ").split())
        v = np.loadtxt(fh, delimiter=",", ndmin=2)
    return ParticleState(v, t=float(fields["t"]), step_index=int(fields["step"]))


def _write_snapshot_bin(path: Path, state: ParticleState):
    flat = np.concatenate([[float(state.step_index), state.t], state.v.ravel()])
    flat.astype("<f8").tofile(path)


def _read_snapshot_bin(path: Path) -> ParticleState:
    flat = np.fromfile(path, dtype="<f8")
    step_index, t = int(flat[0]), float(flat[1])
    return ParticleState(flat[2:].reshape(-1, 3), t=t, step_index=step_index)


def write_manifest(out_dir: Path, config: SimConfig, files, status: str,
                   runtime_s: float, fmt: str, extra: dict | None = None):
    manifest = {
        "package": "landausim",
        "version": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "config": config.to_dict(),
        "eta_effective": config.eta_effective,
        "format": fmt,
        "snapshots": list(files),
        "status": status,
        "runtime_s": runtime_s,
    }
    if extra:
        manifest.update(extra)
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def save_trajectory(traj: Trajectory, out_dir, fmt: str = "csv"):
    """Write manifest + per-snapshot files + diagnostics.jsonl under out_dir."""
    if fmt not in ("csv", "bin"):
        raise ConfigError(f"format must be 'csv' or 'bin', got {fmt!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    writer = _write_snapshot_csv if fmt == "csv" else _write_snapshot_bin
    files = []
    for idx, state in enumerate(traj.snapshots):
        name = _snap_name(idx, fmt)
        writer(out / name, state)
        files.append(name)
    with open(out / "diagnostics.jsonl", "w") as fh:
        for row in traj.diagnostics:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    status = "ok" if traj.error is None else json.dumps(traj.error)
    write_manifest(out, traj.config, files, status, traj.runtime_s, fmt)
    return out


def load_config(path) -> SimConfig:
    """Parse a JSON config file; parse errors surface line and column."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return SimConfig.from_dict(raw)


def load_trajectory(run_dir) -> Trajectory:
    """Rebuild a Trajectory (snapshots + diagnostics) from a saved run."""
    run = Path(run_dir)
    with open(run / "manifest.json") as fh:
        manifest = json.load(fh)
    config = SimConfig.from_dict(manifest["config"])
    reader = _read_snapshot_csv if manifest["format"] == "csv" else _read_snapshot_bin
    traj = Trajectory(config=config)
    for name in manifest["snapshots"]:
        traj.snapshots.append(reader(run / name))
    diag_path = run / "diagnostics.jsonl"
    if diag_path.exists():
        with open(diag_path) as fh:
            traj.diagnostics = [json.loads(line) for line in fh if line.strip()]
    if manifest["status"] != "ok":
        traj.error = json.loads(manifest["status"])
    return traj
