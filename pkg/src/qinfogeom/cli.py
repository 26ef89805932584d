"""Command-line front end.

Every subcommand writes CSV or JSON to ``--out`` (default stdout). Outputs
carry the command, its full parameter set, the seed and the package version.
Exit status is 0 on success, 2 on invalid input and 3 on numerical failure,
with a JSON error object on stderr.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .basisopt import McConfig, mc_optimize, optimize_beta, two_qubit_bell_strategy
from .entropy import qubit_measured_entropy, umegaki_entropy
from .errors import ConvergenceError, StateError
from .expsim import run_discrimination
from .geometry import bkm_curvature, geodesic_bvp, geodesic_ivp, numeric_bkm_curvature
from .metrics import disk_grid, ellipse_field
from .qstate import planar_states

DEFAULTS = {
    "r1": 0.9,
    "r2": 0.5,
    "theta": math.pi / 2,
    "beta_grid": 1024,
    "grid": 101,
    "epsilon": 0.05,
    "seed": 0,
    "steps": 100_000,
    "restarts": 4,
    "blocks": "2,3",
    "copies": 1_000_000,
    "strategy": "both",
    "format": None,
    "out": None,
    "p1": "0.5,0",
    "p2": "0.7,2.0",
    "start": None,
    "direction": 0.0,
    "length": 10.0,
    "step": 1e-4,
    "r_min": 0.01,
    "r_max": 0.99,
    "check_every": 10,
}

SWEEP_THETA_DEFAULTS = {"r1": 0.9, "r2": 0.9}


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.15g}"
    return str(v)


def write_csv(fh, columns, rows, header):
    fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
    fh.write(",".join(columns) + "\n")
    for row in rows:
        fh.write(",".join(_fmt(v) for v in row) + "\n")


def _header(command, params, seed=None):
    # deterministic commands still record the seed so every output carries one
    return {"command": command, "version": __version__, "seed": params.get("seed", seed), **params}


# ---------------------------------------------------------------------------
# commands: each returns (columns, rows) or a flat dict
# ---------------------------------------------------------------------------

def cmd_sweep_beta(r1, r2, theta, grid=1024):
    """Measured entropy against measurement angle, with the quantum value as reference."""
    betas = np.linspace(0.0, 2 * np.pi, int(grid), endpoint=False)
    s_m = qubit_measured_entropy(r1, r2, theta, betas)
    rho1, rho2 = planar_states(r1, r2, theta)
    s_q = umegaki_entropy(rho1, rho2)
    return ["beta", "s_m", "s_q"], [(float(b), float(s), s_q) for b, s in zip(betas, s_m)]


def cmd_sweep_theta(r1, r2, grid=101):
    """Optimised one-qubit and quantum relative entropy against the angle between the states."""
    rows = []
    for th in np.linspace(0.0, 2 * np.pi, int(grid)):
        _, s_star = optimize_beta(r1, r2, th)
        rho1, rho2 = planar_states(r1, r2, th)
        s_q = umegaki_entropy(rho1, rho2)
        rows.append((float(th), s_star, s_q, s_q - s_star))
    return ["theta", "s_star", "s_q", "gap"], rows


def cmd_ellipse_field(grid=11, epsilon=0.05, r_max=0.95):
    recs = ellipse_field(disk_grid(int(grid), r_max), epsilon)
    cols = list(recs[0])
    return cols, [tuple(r[c] for c in cols) for r in recs]


def cmd_curvature(grid=99, r_min=0.01, r_max=0.99, check_every=10):
    """Closed-form curvature on a radial grid; every ``check_every``-th row also gets the numeric value."""
    rows = []
    for k, r in enumerate(np.linspace(r_min, r_max, int(grid))):
        num = numeric_bkm_curvature(float(r)) if check_every and k % check_every == 0 else math.nan
        rows.append((float(r), bkm_curvature(float(r)), num))
    return ["r", "R", "R_numeric"], rows


def _pair(text):
    a, b = (float(v) for v in str(text).split(","))
    return a, b


def cmd_geodesic(p1=None, p2=None, start=None, direction=0.0, length=10.0, step=1e-4):
    """Geodesic joining ``p1`` and ``p2``, or launched from ``start`` at angle ``direction``."""
    if start is not None:
        r0, phi0 = _pair(start)
        return geodesic_ivp(math.asin(r0), phi0, float(direction), h=step, max_length=length)
    return geodesic_bvp(_pair(p1), _pair(p2), h=step)


def cmd_benchmark(r1=0.9, r2=0.5, theta=math.pi / 2, seed=0, steps=100_000, restarts=4, blocks="2,3"):
    """Ladder of per-qubit relative entropies from one-qubit up to the quantum value."""
    blocks = [int(b) for b in str(blocks).split(",") if b]
    rho1, rho2 = planar_states(r1, r2, theta)
    _, single = optimize_beta(r1, r2, theta)
    _, bell = two_qubit_bell_strategy(r1, r2, theta)
    report = {"single_qubit": single, "bell_two_qubit": bell}
    for n in blocks:
        if n not in (2, 3):
            raise StateError("benchmark Monte-Carlo blocks must be 2 or 3")
        cfg = McConfig(steps=int(steps), seed=int(seed), restarts=int(restarts))
        report[f"mc_{n}_qubit"] = mc_optimize(rho1, rho2, n, cfg).value
    report["umegaki"] = umegaki_entropy(rho1, rho2)
    ladder = list(report.values())
    report["monotone"] = all(a <= b for a, b in zip(ladder, ladder[1:]))
    return report


def cmd_simulate(r1=0.9, r2=0.5, theta=math.pi / 2, strategy="both", copies=1_000_000, seed=0):
    rho1, rho2 = planar_states(r1, r2, theta)
    names = ["single", "entangled"] if strategy == "both" else [strategy]
    out = {}
    for name in names:
        res = run_discrimination(rho1, rho2, name, int(copies), seed=int(seed))
        for key, val in res.summary().items():
            if key not in ("seed", "copies", "strategy"):
                out[f"{name}_{key}"] = val
    if len(names) == 2:
        out["entangled_exceeds_single"] = out["entangled_rate"] > out["single_rate"]
    return out


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

COMMANDS = {
    "sweep-beta": ("r1", "r2", "theta", "beta_grid"),
    "sweep-theta": ("r1", "r2", "grid"),
    "ellipse-field": ("grid", "epsilon"),
    "curvature": ("grid", "r_min", "r_max", "check_every"),
    "geodesic": ("p1", "p2", "start", "direction", "length", "step"),
    "benchmark": ("r1", "r2", "theta", "seed", "steps", "restarts", "blocks"),
    "simulate": ("r1", "r2", "theta", "strategy", "copies", "seed"),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="qinfogeom", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file with the same keys as the flags")
        p.add_argument("--r1", type=float)
        p.add_argument("--r2", type=float)
        p.add_argument("--theta", type=float, help="radians")
        p.add_argument("--beta-grid", type=int)
        p.add_argument("--grid", type=int)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--steps", type=int)
        p.add_argument("--restarts", type=int)
        p.add_argument("--blocks", help="comma-separated Monte-Carlo block sizes, e.g. 2,3")
        p.add_argument("--copies", type=int)
        p.add_argument("--strategy", choices=["single", "entangled", "both"])
        p.add_argument("--p1", help="r,phi of the first point")
        p.add_argument("--p2", help="r,phi of the second point")
        p.add_argument("--start", help="r,phi launch point (initial-value mode)")
        p.add_argument("--direction", type=float, help="launch angle from the radial direction")
        p.add_argument("--length", type=float)
        p.add_argument("--step", type=float)
        p.add_argument("--r-min", type=float)
        p.add_argument("--r-max", type=float)
        p.add_argument("--check-every", type=int)
        p.add_argument("--format", choices=["csv", "json"])
        p.add_argument("--out")
    return parser


def resolve_params(args):
    """Merge defaults, an optional JSON config and explicit flags (highest priority)."""
    params = dict(DEFAULTS)
    if args.command == "sweep-theta":
        params.update(SWEEP_THETA_DEFAULTS)
    if args.command == "ellipse-field":
        params["grid"] = 11
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
        unknown = set(cfg) - set(DEFAULTS)
        if unknown:
            raise StateError(f"unknown config keys: {sorted(unknown)}")
        params.update(cfg)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            params[key] = val
    return params


def _validate(command, params):
    for key in ("r1", "r2"):
        if key in COMMANDS[command] and not 0 <= params[key] < 1:
            raise StateError(f"--{key} must lie in [0, 1)")
    for key in ("steps", "restarts", "copies", "grid", "beta_grid"):
        if key in COMMANDS[command] and int(params[key]) < 1:
            raise StateError(f"--{key.replace('_', '-')} must be positive")


def run(command, params):
    """Execute a command; returns ``(text, format)``."""
    _validate(command, params)
    sel = {k: params[k] for k in COMMANDS[command]}
    buf = io.StringIO()
    if command == "geodesic":
        fmt = params["format"] or "csv"
        path = cmd_geodesic(**sel)
        header = _header(command, sel, params["seed"])
        header.update(length=path.length, hit_boundary=path.hit_boundary)
        if fmt == "json":
            json.dump({**header, "s": path.s.tolist(), "r": path.r.tolist(),
                       "phi": path.polar_phi.tolist(), "E": path.E.tolist(), "J": path.J.tolist()}, buf)
        else:
            buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
            path.to_csv(buf)
        return buf.getvalue(), fmt
    if command in ("benchmark", "simulate"):
        fmt = params["format"] or "json"
        report = cmd_benchmark(**sel) if command == "benchmark" else cmd_simulate(**sel)
        flat = {**_header(command, sel, params["seed"]), **report}
        if fmt == "csv":
            write_csv(buf, list(report), [tuple(report.values())], _header(command, sel, params["seed"]))
        else:
            json.dump(flat, buf, indent=2)
            buf.write("\n")
        return buf.getvalue(), fmt
    fmt = params["format"] or "csv"
    if command == "sweep-beta":
        cols, rows = cmd_sweep_beta(sel["r1"], sel["r2"], sel["theta"], sel["beta_grid"])
    elif command == "sweep-theta":
        cols, rows = cmd_sweep_theta(**sel)
    elif command == "ellipse-field":
        cols, rows = cmd_ellipse_field(sel["grid"], sel["epsilon"])
    else:
        cols, rows = cmd_curvature(**sel)
    if fmt == "json":
        json.dump({**_header(command, sel, params["seed"]), "columns": cols, "rows": [list(r) for r in rows]}, buf)
    else:
        write_csv(buf, cols, rows, _header(command, sel, params["seed"]))
    return buf.getvalue(), fmt


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        params = resolve_params(args)
        text, _ = run(args.command, params)
    except (StateError, ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": 2}), file=sys.stderr)
        return 2
    except (ConvergenceError, ArithmeticError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": 3}), file=sys.stderr)
        return 3
    if params.get("out"):
        with open(params["out"], "w") as fh:
            fh.write(text)
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:  # e.g. piped into head
            sys.stderr.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
