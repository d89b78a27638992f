"""Batch front end: ``epgroupoid <subcommand> [--config FILE] [--out DIR] [--seed N] [--key=value ...]``.

Configuration files are INI documents. Parameters for a subcommand live in the
section of the same name; an optional ``[run]`` section may hold ``out`` and
``seed``. Every parameter may also be given on the command line as
``--key=value``, which overrides the file. Angles are in degrees.

Exit codes: 0 success, 2 configuration error, 3 numerical divergence, 4 I/O error.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import control
from .algebra import InertiaTensor
from .dynamics import (
    AdvectedState,
    GroupoidEPState,
    RigidBodyState,
    integrate_advected,
    integrate_rigid_body,
    integrate_trivial_ep,
)
from .errors import CFLViolation, EPGroupoidError, IntegrationDiverged
from .field import FieldState, rotation_field, step_field, write_snapshot_csv
from .groupoid import Rotation
from .sphere import SpherePoint, SphereTangent, build_icosphere, geodesic_distance, project_tangent

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO = 0, 2, 3, 4


class ConfigError(EPGroupoidError):
    pass


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    pass


class UnknownKey(ConfigError):
    pass


# key -> (kind, default); kind is "float", "int", "vec3", "latlon" or "floats".
# A default of None means the key is required.
_SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "rigid-body": {
        "inertia": ("vec3", None),
        "M0": ("vec3", None),
        "dt": ("float", 1e-3),
        "steps": ("int", 10_000),
    },
    "advected": {
        "inertia": ("vec3", None),
        "mu0": ("vec3", None),
        "a0": ("vec3", (0.0, 0.0, 1.0)),
        "chi": ("vec3", (0.0, 0.0, 0.0)),
        "dt": ("float", 1e-3),
        "steps": ("int", 10_000),
    },
    "trivial-ep": {
        "inertia": ("vec3", (1.0, 2.0, 3.0)),
        "alpha": ("float", 1.0),
        "R": ("float", 100.0),
        "x0": ("latlon", (0.0, 0.0)),
        "X0": ("vec3", (0.0, 10.0, 0.0)),
        "eta0": ("vec3", (0.0, 0.0, 0.0)),
        "dt": ("float", 1e-3),
        "steps": ("int", 1000),
    },
    "field": {
        "inertia": ("vec3", (1.0, 2.0, 3.0)),
        "alpha": ("float", 1.0),
        "R": ("float", 100.0),
        "level": ("int", 3),
        "eta0": ("vec3", (1.0, 0.5, -0.7)),
        "omega": ("vec3", (0.0, 0.0, 0.0)),
        "noise": ("float", 0.0),
        "dt": ("float", 1e-3),
        "steps": ("int", 1000),
        "snapshot_every": ("int", 0),
    },
    "optimal-time": {
        "alpha": ("float", control.QUOTED_ALPHA),
        "lambda": ("float", control.QUOTED_LAMBDA),
        "R": ("float", control.QUOTED_RADIUS),
        "A": ("latlon", (0.0, 0.0)),
        "B": ("latlon", (control.QUOTED_ANGLE_DEG, 0.0)),
        "L": ("float", 0.0),
    },
    "sweep": {
        "alpha": ("floats", (control.QUOTED_ALPHA,)),
        "lambda": ("floats", (control.QUOTED_LAMBDA,)),
        "L": ("floats", (100.0 * math.pi / 3.0,)),
        "workers": ("int", 1),
    },
}

SUBCOMMANDS = tuple(_SCHEMA)
_NONNEG = {"noise", "snapshot_every", "L", "workers"}
_ANY_SIGN = {"M0", "mu0", "a0", "chi", "X0", "eta0", "omega", "x0", "A", "B"}


@dataclass
class RunConfig:
    subcommand: str
    params: dict
    out: Path = Path("out")
    seed: int = 0
    record_timing: bool = False
    derived: dict = field(default_factory=dict)

    def echo(self) -> dict:
        def plain(v):
            return list(v) if isinstance(v, tuple) else v
        return {
            "subcommand": self.subcommand,
            "seed": self.seed,
            "params": {k: plain(v) for k, v in sorted(self.params.items())},
            "derived": dict(sorted(self.derived.items())),
        }


def _parse_value(kind: str, key: str, raw: str):
    text = raw.strip().strip("()[]")
    try:
        if kind == "float":
            return float(text)
        if kind == "int":
            v = float(text)
            if v != int(v):
                raise ValueError
            return int(v)
        parts = [float(p) for p in text.replace(";", ",").split(",") if p.strip()]
    except ValueError:
        raise ParseError(f"cannot parse {key} = {raw!r} as {kind}") from None
    if kind == "vec3" and len(parts) != 3:
        raise ParseError(f"{key} needs 3 components, got {len(parts)}")
    if kind == "latlon" and len(parts) != 2:
        raise ParseError(f"{key} needs latitude,longitude in degrees")
    if kind == "floats" and not parts:
        raise ParseError(f"{key} needs at least one value")
    return tuple(parts)


def _validate(sub: str, p: dict) -> dict:
    for key, v in p.items():
        vals = v if isinstance(v, tuple) else (v,)
        if not all(math.isfinite(x) for x in vals):
            raise ValidationError(f"{key} must be finite")
        if key in _ANY_SIGN:
            continue
        if key in _NONNEG:
            if any(x < 0 for x in vals):
                raise ValidationError(f"{key} must be non-negative")
        elif any(x <= 0 for x in vals):
            raise ValidationError(f"{key} must be strictly positive")
    if "x0" in p or "A" in p:
        for key in ("x0", "A", "B"):
            if key in p and not -90.0 <= p[key][0] <= 90.0:
                raise ValidationError(f"latitude of {key} out of range")
    if sub == "field" and p["level"] > 7:
        raise ValidationError("level must be <= 7")
    return p


def parse_config(text: str = "", subcommand: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Parse and validate an INI run configuration, filling documented defaults."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text or "")
    except configparser.Error as exc:
        raise ParseError(str(exc)) from None
    run = dict(cp["run"]) if cp.has_section("run") else {}
    sub = subcommand or run.pop("subcommand", None)
    run.pop("subcommand", None)
    if sub not in _SCHEMA:
        raise ValidationError(f"unknown or missing subcommand {sub!r}; choose from {SUBCOMMANDS}")
    for name in cp.sections():
        if name not in ("run", sub):
            raise UnknownKey(f"unexpected section [{name}] for subcommand {sub}")
    schema = _SCHEMA[sub]
    raw = dict(cp[sub]) if cp.has_section(sub) else {}
    raw.update({k: str(v) for k, v in (overrides or {}).items() if k not in ("out", "seed")})
    for k in raw:
        if k not in schema:
            raise UnknownKey(f"unknown key {k!r} for {sub}; known: {sorted(schema)}")
    for k in run:
        if k not in ("out", "seed"):
            raise UnknownKey(f"unknown key {k!r} in [run]")
    params = {}
    for key, (kind, default) in schema.items():
        if key in raw:
            params[key] = _parse_value(kind, key, raw[key])
        elif default is None:
            raise ValidationError(f"missing required key {key!r} for {sub}")
        else:
            params[key] = default
    _validate(sub, params)
    ov = overrides or {}
    out = Path(ov.get("out", run.get("out", "out")))
    try:
        seed = int(ov.get("seed", run.get("seed", 0)))
    except ValueError:
        raise ParseError("seed must be an integer") from None
    if not 0 <= seed < 2**64:
        raise ValidationError("seed must be an unsigned 64-bit integer")
    cfg = RunConfig(sub, params, out, seed)
    if sub == "optimal-time":
        R = params["R"]
        A = SpherePoint.from_latlon(*params["A"], R=R)
        B = SpherePoint.from_latlon(*params["B"], R=R)
        cfg.derived["L"] = params["L"] if params["L"] > 0 else geodesic_distance(A, B)
        cfg.derived["L_source"] = "config" if params["L"] > 0 else "geodesic A-B"
    return cfg


# ---------------------------------------------------------------- runners

def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if not isinstance(x, (int, np.integer)) else str(x) for x in r])


def _invariant_csv(path: Path, traj) -> None:
    inv = traj.invariants
    _write_rows(path, ["t", "energy", "casimir", "speed"],
                zip(traj.times, inv["energy"], inv["casimir"], inv["speed"]))


def _drifts(traj) -> dict:
    return {k: traj.drift(k) for k in ("energy", "casimir", "speed")}


def _run_rigid_body(cfg: RunConfig, out: Path) -> dict:
    p = cfg.params
    I = InertiaTensor.diag(p["inertia"])
    traj = integrate_rigid_body(RigidBodyState(p["M0"], I), p["dt"], p["steps"])
    traj.to_csv(out / "trajectory.csv")
    _invariant_csv(out / "invariants.csv", traj)
    return {"invariant_drift_max": _drifts(traj), "final_state": traj.states[-1].tolist()}


def _run_advected(cfg: RunConfig, out: Path) -> dict:
    p = cfg.params
    I = InertiaTensor.diag(p["inertia"])
    chi = np.array(p["chi"])
    traj = integrate_advected(AdvectedState(p["mu0"], p["a0"]), I, lambda a: chi, p["dt"], p["steps"])
    traj.to_csv(out / "trajectory.csv")
    _invariant_csv(out / "invariants.csv", traj)
    return {"invariant_drift_max": _drifts(traj), "final_state": traj.states[-1].tolist()}


def _run_trivial_ep(cfg: RunConfig, out: Path) -> dict:
    p = cfg.params
    I = InertiaTensor.diag(p["inertia"])
    x0 = SpherePoint.from_latlon(*p["x0"], R=p["R"])
    X0 = project_tangent(x0, p["X0"])
    s0 = GroupoidEPState(x0, X0, Rotation.identity(), p["eta0"], I, p["alpha"])
    traj = integrate_trivial_ep(s0, p["dt"], p["steps"])
    traj.to_csv(out / "trajectory.csv")
    _invariant_csv(out / "invariants.csv", traj)
    att = traj.extras["attitude"].reshape(len(traj), 9)
    _write_rows(out / "attitude.csv", ["t"] + [f"R{i}{j}" for i in (1, 2, 3) for j in (1, 2, 3)],
                (np.concatenate([[t], a]) for t, a in zip(traj.times, att)))
    ortho = float(np.max(np.linalg.norm(
        np.einsum("kji,kjl->kil", traj.extras["attitude"], traj.extras["attitude"]) - np.eye(3), axis=(1, 2))))
    radius = float(np.max(np.abs(np.linalg.norm(traj.states[:, :3], axis=1) - p["R"])) / p["R"])
    return {
        "invariant_drift_max": {**_drifts(traj), "rotational_energy": traj.drift("rotational_energy")},
        "sphere_radius_defect_max": radius,
        "attitude_orthogonality_defect_max": ortho,
        "arc_length": float(np.sum(np.linalg.norm(np.diff(traj.states[:, :3], axis=0), axis=1))),
    }


def _run_field(cfg: RunConfig, out: Path) -> dict:
    p = cfg.params
    I = InertiaTensor.diag(p["inertia"])
    mesh = build_icosphere(p["level"], p["R"])
    rng = np.random.default_rng(cfg.seed)
    eta0 = np.tile(np.array(p["eta0"]), (mesh.n_vertices, 1))
    if p["noise"] > 0:
        eta0 = eta0 + p["noise"] * rng.standard_normal(eta0.shape)
    X0 = rotation_field(mesh, p["omega"])
    s0 = FieldState.from_velocities(mesh, eta0, X0, I, p["alpha"])
    every = p["snapshot_every"]
    uniform = p["noise"] == 0 and not any(p["omega"])
    ref = None
    if uniform:
        ref = integrate_rigid_body(RigidBodyState(I.I @ np.array(p["eta0"]), I), p["dt"], p["steps"]).states
    snapdir = out / "snapshots"
    snapdir.mkdir(exist_ok=True)
    write_snapshot_csv(s0, snapdir / "snapshot_000000.csv")
    s, energy, worst = s0, [s0.energy()], 0.0
    for k in range(1, p["steps"] + 1):
        s = step_field(s, p["dt"])
        energy.append(s.energy())
        if ref is not None:
            dev = np.max(np.abs(s.mu - ref[k])) / max(np.linalg.norm(ref[k]), 1e-300)
            worst = max(worst, float(dev))
        if (every and k % every == 0) or k == p["steps"]:
            write_snapshot_csv(s, snapdir / f"snapshot_{k:06d}.csv")
    energy = np.array(energy)
    _write_rows(out / "energy.csv", ["t", "energy"], zip(p["dt"] * np.arange(len(energy)), energy))
    report = {
        "mesh": {"level": p["level"], "vertices": mesh.n_vertices, "faces": int(len(mesh.faces)),
                 "min_edge": mesh.min_edge, "max_edge": mesh.max_edge},
        "energy_series": energy.tolist(),
        "invariant_drift_max": {"energy": float(np.max(np.abs(energy - energy[0])) / max(abs(energy[0]), 1e-300))},
        "constitutive_defect": s.constitutive_defect(),
    }
    if ref is not None:
        report["ode_pde_max_deviation"] = worst
    return report


def _run_optimal_time(cfg: RunConfig, out: Path) -> dict:
    p = cfg.params
    L = cfg.derived["L"]
    params = control.TradeoffParams(p["alpha"], p["lambda"], L)
    res = control.analytic_T_star(params)
    T_num, J_num = control.numeric_T_star(params)
    control.write_curve_csv(res, out / "cost_curve.csv")
    report = control.discrepancy_report(L, p["alpha"], p["lambda"])
    control.write_curve_csv(control.analytic_T_star(control.TradeoffParams(p["lambda"], p["lambda"], L)),
                            out / "cost_curve_reconciled.csv")
    return {
        "result": res.row(),
        "golden_section": {"T_min": T_num, "J_min": J_num,
                           "rel_diff_vs_analytic": abs(T_num - res.T_star) / res.T_star},
        "T_star_literal": report["literal"]["T_star"],
        "T_star_reconciled": report["reconciled_alpha_over_lambda_1"]["T_star"],
        "v_star_literal": report["literal"]["v_star"],
        "v_star_reconciled": report["reconciled_alpha_over_lambda_1"]["v_star"],
        "discrepancy": report,
    }


def _run_sweep(cfg: RunConfig, out: Path) -> dict:
    p = cfg.params
    rows = control.sweep(p["alpha"], p["lambda"], p["L"], workers=p["workers"])
    control.write_sweep_csv(rows, out / "sweep.csv")
    summary = {
        "rows": [r.row() for r in rows],
        "discrepancy": control.discrepancy_report(100.0 * math.pi / 3.0),
    }
    _write_json(out / "summary.json", summary)
    return {"n_rows": len(rows)}


_RUNNERS = {
    "rigid-body": _run_rigid_body,
    "advected": _run_advected,
    "trivial-ep": _run_trivial_ep,
    "field": _run_field,
    "optimal-time": _run_optimal_time,
    "sweep": _run_sweep,
}


def run(cfg: RunConfig) -> int:
    """Execute a validated configuration, writing artifacts and ``manifest.json`` to ``cfg.out``."""
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        return _fail(EXIT_IO, exc)
    t0 = time.perf_counter()
    try:
        report = _RUNNERS[cfg.subcommand](cfg, out)
    except (IntegrationDiverged, CFLViolation) as exc:
        return _fail(EXIT_DIVERGED, exc, out)
    except OSError as exc:
        return _fail(EXIT_IO, exc)
    except (ValueError, EPGroupoidError) as exc:
        return _fail(EXIT_CONFIG, exc, out)
    manifest = {"inputs": cfg.echo(), **report}
    if cfg.record_timing:
        manifest["wall_clock_s"] = time.perf_counter() - t0
    try:
        _write_json(out / "manifest.json", manifest)
    except OSError as exc:
        return _fail(EXIT_IO, exc)
    return EXIT_OK


def _fail(code: int, exc: BaseException, out: Path | None = None) -> int:
    err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(err, sort_keys=True), file=sys.stderr)
    if out is not None:
        try:
            _write_json(out / "error.json", err)
        except OSError:
            pass
    return code


def _help_epilog() -> str:
    lines = ["defaults per subcommand (required keys marked *):"]
    for sub, schema in _SCHEMA.items():
        items = []
        for k, (kind, d) in schema.items():
            items.append(f"{k}*" if d is None else f"{k}={','.join(map(str, d)) if isinstance(d, tuple) else d}")
        lines.append(f"  {sub}: " + " ".join(items))
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="epgroupoid",
        description="Euler-Poincare simulations on SO(3) and S2 x SO(3) x S2, and the energy-time tradeoff.",
        epilog=_help_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    ap.add_argument("subcommand", nargs="?", choices=SUBCOMMANDS)
    ap.add_argument("--config", type=Path, help="INI file with a section named after the subcommand")
    ap.add_argument("--out", help="output directory (default: out)")
    ap.add_argument("--seed", help="unsigned 64-bit seed (default: 0)")
    ap.add_argument("--timing", action="store_true", help="record wall-clock time in the manifest")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args, extra = ap.parse_known_args(argv)
    overrides = {}
    for item in extra:
        if not item.startswith("--") or "=" not in item:
            return _fail(EXIT_CONFIG, ParseError(f"unrecognized argument {item!r}; use --key=value"))
        k, v = item[2:].split("=", 1)
        overrides[k] = v
    if args.out is not None:
        overrides["out"] = args.out
    if args.seed is not None:
        overrides["seed"] = args.seed
    text = ""
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            return _fail(EXIT_IO, exc)
    try:
        cfg = parse_config(text, args.subcommand, overrides)
    except (ConfigError, ValueError) as exc:
        return _fail(EXIT_CONFIG, exc)
    cfg.record_timing = args.timing
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
