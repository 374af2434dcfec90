"""Command-line driver: simulate, sweep, bound, n0, dump-matrix, normalize.

Option values are resolved as flags > config file > defaults. A config file
is TOML with kebab- or snake-case keys, optionally grouped in a table named
after the subcommand; a JSON sidecar written by a previous run is accepted
as well and replays that run.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    BoundParams,
    error_primary,
    n0_search,
    sweep_error_surface,
    t0_bound,
    theorem_bound,
)
from .carleman_classical import build_classical, build_classical_kuramoto
from .carleman_fourier import DEFAULT_DIM_CAP, LiftError, lift_1d, lift_multi
from .formats import (
    config_hash,
    field_to_dict,
    load_field,
    load_model,
    model_to_dict,
    write_blocks,
    write_classical_drift,
    write_classical_matrix,
    write_layout,
    write_sidecar,
    write_surface,
    write_trajectory,
)
from .fourier_field import FieldError, FourierField1D, QuasiPeriodicField, maclaurin_from_fourier
from .integrate import (
    DEFAULT_LINEAR_TOL,
    DEFAULT_REFERENCE_TOL,
    IntegrationError,
    TimeGrid,
    Trajectory,
    integrate_classical,
    integrate_linear,
    integrate_reference,
)
from .kuramoto import KuramotoModel, full_rhs, normalize, reduced_field, two_oscillator_reduction

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


class UsageError(Exception):
    pass


MODEL_DEFAULTS = {
    "kuramoto2": False,
    "omega1": 1.0,
    "ktilde": 1.0,
    "theta0": 0.0,
    "field": None,
    "model": None,
    "x0": None,
    "r": None,
    "D": None,
}

DEFAULTS = {
    "simulate": {
        **MODEL_DEFAULTS,
        "method": "carleman-fourier",
        "N": 10,
        "t_end": 0.5,
        "samples": 257,
        "tol": DEFAULT_LINEAR_TOL,
        "ref_tol": DEFAULT_REFERENCE_TOL,
        "linear_method": "rk",
        "full_state": False,
        "dim_cap": DEFAULT_DIM_CAP,
        "out": "trajectory.csv",
    },
    "sweep": {
        "omega1": [0.0, 1.0],
        "ktilde": 1.0,
        "method": ["classical", "carleman-fourier"],
        "N": 10,
        "theta0": None,
        "theta0_min": -math.pi / 2,
        "theta0_max": math.pi / 2,
        "theta0_count": 33,
        "t_end": 0.5,
        "t_count": 65,
        "tol": DEFAULT_LINEAR_TOL,
        "ref_tol": DEFAULT_REFERENCE_TOL,
        "linear_method": "rk",
        "floor": 1e-5,
        "cap": 10.0,
        "workers": 1,
        "out_dir": ".",
    },
    "bound": {
        **MODEL_DEFAULTS,
        "N": list(range(1, 13)),
        "t_star": 0.03,
        "samples": 50,
        "tol": DEFAULT_LINEAR_TOL,
        "ref_tol": DEFAULT_REFERENCE_TOL,
        "slack": 1e-9,
        "dim_cap": DEFAULT_DIM_CAP,
        "out": None,
    },
    "n0": {"D": None, "r": 0.5, "dfactor": 2.0, "t_star": None},
    "dump-matrix": {
        **MODEL_DEFAULTS,
        "method": "carleman-fourier",
        "N": 10,
        "dim_cap": DEFAULT_DIM_CAP,
        "out": "matrix.csv",
        "layout_out": None,
        "drift_out": None,
    },
    "normalize": {"model": None, "omegas": None, "K": None, "theta0": None, "out": None},
}


def _model_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model source (choose one)")
    g.add_argument("--kuramoto2", action="store_true", help="reduced two-oscillator Kuramoto phase")
    g.add_argument("--omega1", type=float)
    g.add_argument("--ktilde", type=float)
    g.add_argument("--theta0", type=float, help="initial phase for --kuramoto2")
    g.add_argument("--field", help="field ingestion JSON")
    g.add_argument("--model", help="Kuramoto model JSON")
    g.add_argument("--x0", type=float, nargs="+", help="initial state for --field")
    e = p.add_argument_group("envelope")
    e.add_argument("--r", type=float, help="decay ratio (default 0.5, or the field file's)")
    e.add_argument("--D", type=float, help="amplitude (default: fitted)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="carleman", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", argument_default=argparse.SUPPRESS,
                       help="integrate one model and write its trajectory")
    _model_options(p)
    p.add_argument("--method", choices=["classical", "carleman-fourier", "reference"])
    p.add_argument("-N", type=int)
    p.add_argument("--t-end", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--ref-tol", type=float)
    p.add_argument("--linear-method", choices=["rk", "expm"])
    p.add_argument("--full-state", action="store_true", help="write every lifted coordinate")
    p.add_argument("--dim-cap", type=int)
    p.add_argument("--out")
    p.add_argument("--config")

    p = sub.add_parser("sweep", argument_default=argparse.SUPPRESS,
                       help="error surfaces over initial phase and time")
    p.add_argument("--omega1", type=float, nargs="+")
    p.add_argument("--ktilde", type=float)
    p.add_argument("--method", nargs="+", choices=["classical", "carleman-fourier"])
    p.add_argument("-N", type=int)
    p.add_argument("--theta0", type=float, nargs="+", help="explicit initial-phase axis")
    p.add_argument("--theta0-min", type=float)
    p.add_argument("--theta0-max", type=float)
    p.add_argument("--theta0-count", type=int)
    p.add_argument("--t-end", type=float)
    p.add_argument("--t-count", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--ref-tol", type=float)
    p.add_argument("--linear-method", choices=["rk", "expm"])
    p.add_argument("--floor", type=float)
    p.add_argument("--cap", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--out-dir")
    p.add_argument("--config")

    p = sub.add_parser("bound", argument_default=argparse.SUPPRESS,
                       help="compare measured grade-1 errors with the theoretical bound")
    _model_options(p)
    p.add_argument("-N", type=int, nargs="+")
    p.add_argument("--t-star", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--ref-tol", type=float)
    p.add_argument("--slack", type=float)
    p.add_argument("--dim-cap", type=int)
    p.add_argument("--out")
    p.add_argument("--config")

    p = sub.add_parser("n0", argument_default=argparse.SUPPRESS,
                       help="smallest section order meeting the bound at a horizon")
    p.add_argument("--D", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--dfactor", type=float)
    p.add_argument("--t-star", type=float)
    p.add_argument("--config")

    p = sub.add_parser("dump-matrix", argument_default=argparse.SUPPRESS,
                       help="write the section operator as CSV")
    _model_options(p)
    p.add_argument("--method", choices=["classical", "carleman-fourier"])
    p.add_argument("-N", type=int)
    p.add_argument("--dim-cap", type=int)
    p.add_argument("--out")
    p.add_argument("--layout-out")
    p.add_argument("--drift-out")
    p.add_argument("--config")

    p = sub.add_parser("normalize", argument_default=argparse.SUPPRESS,
                       help="normalize a Kuramoto model")
    p.add_argument("--model")
    p.add_argument("--omegas", type=float, nargs="+")
    p.add_argument("--K", type=float)
    p.add_argument("--theta0", type=float, nargs="+")
    p.add_argument("--out")
    p.add_argument("--config")
    return parser


def _read_config(path: str, command: str) -> dict:
    text = Path(path).read_bytes()
    try:
        if path.endswith(".json"):
            data = json.loads(text)
            data = data.get("config", data)
        else:
            data = tomllib.loads(text.decode())
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise UsageError(f"cannot parse config {path}: {exc}") from None
    section = {k: v for k, v in data.items() if not isinstance(v, dict)}
    section.update(data.get(command, {}))
    return {k.replace("-", "_"): v for k, v in section.items()}


def resolve_options(command: str, args: argparse.Namespace) -> dict:
    opts = dict(DEFAULTS[command])
    given = {k: v for k, v in vars(args).items() if k != "command"}
    config_path = given.pop("config", None)
    if config_path:
        try:
            cfg = _read_config(config_path, command)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        cfg.pop("command", None)
        unknown = sorted(set(cfg) - set(opts))
        if unknown:
            raise UsageError(f"unknown config keys for {command}: {', '.join(unknown)}")
        opts.update(cfg)
    opts.update(given)
    return opts


def _with_envelope(field, r, D):
    """Apply envelope overrides; a changed ``r`` without ``D`` refits ``D``."""
    if r is None and D is None:
        return field
    r = field.r if r is None else float(r)
    if D is None and r == field.r:
        return field
    return dataclasses.replace(field, r=r, D=None if D is None else float(D))


def resolve_model(opts: dict):
    """Return ``(field, x0, description)`` for the selected model source."""
    sources = [bool(opts["kuramoto2"]), opts["field"] is not None, opts["model"] is not None]
    if sum(sources) != 1:
        raise UsageError("choose exactly one model source: --kuramoto2, --field or --model")
    r = 0.5 if opts["r"] is None else float(opts["r"])
    D = opts["D"]
    try:
        if opts["kuramoto2"]:
            field = reduced_field(float(opts["omega1"]), float(opts["ktilde"]), r=r, D=D)
            return field, float(opts["theta0"]), {
                "kind": "kuramoto2", "omega1": opts["omega1"], "ktilde": opts["ktilde"],
                "theta0": opts["theta0"],
            }
        if opts["field"] is not None:
            field = _with_envelope(load_field(opts["field"]), opts["r"], D)
            if opts["x0"] is None:
                raise UsageError("--field needs --x0")
            x0 = opts["x0"]
            if isinstance(field, FourierField1D):
                if len(x0) != 1:
                    raise UsageError("scalar field needs a single --x0 value")
                x0 = float(x0[0])
            elif len(x0) != field.d:
                raise UsageError(f"--x0 needs {field.d} values")
            return field, x0, {"kind": "field", "field": field_to_dict(field)}
        model = load_model(opts["model"])
        if model.d == 2 and model.is_normalized():
            omega1, ktilde, th0 = two_oscillator_reduction(model)
            field = reduced_field(omega1, ktilde, r=r, D=D)
            return field, th0, {"kind": "model-reduced", "model": model_to_dict(model)}
        return full_rhs(model, r=r, D=D), list(model.theta0), {
            "kind": "model", "model": model_to_dict(model),
        }
    except (FieldError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"invalid model input: {exc}") from None
    except OSError as exc:
        raise UsageError(f"cannot read model input: {exc}") from None


def _lift(field, x0, N, cap):
    if isinstance(field, FourierField1D):
        return lift_1d(field, x0, N)
    return lift_multi(field, x0, N, cap=cap)


def _classical_system(opts, field, x0, N):
    if not isinstance(field, FourierField1D):
        raise UsageError("classical Carleman linearization needs a scalar field")
    if opts["kuramoto2"]:
        return build_classical_kuramoto(float(opts["omega1"]), float(opts["ktilde"]), N, x0=x0)
    return build_classical(maclaurin_from_fourier(field, N), x0, N)


def cmd_simulate(opts: dict) -> int:
    field, x0, desc = resolve_model(opts)
    N, method = int(opts["N"]), opts["method"]
    if N < 1:
        raise UsageError("N must be at least 1")
    if opts["samples"] < 2 or opts["t_end"] <= 0:
        raise UsageError("need --samples >= 2 and --t-end > 0")
    grid = TimeGrid.uniform(float(opts["t_end"]), int(opts["samples"]))
    extra = {}
    if method == "reference":
        traj = integrate_reference(field, x0, grid, tol=float(opts["ref_tol"]))
    elif method == "classical":
        system = _classical_system(opts, field, x0, N)
        traj = integrate_classical(system, grid, tol=float(opts["tol"]))
    else:
        system = _lift(field, x0, N, int(opts["dim_cap"]))
        traj = integrate_linear(system, grid, tol=float(opts["tol"]), method=opts["linear_method"])
        extra["lifted_dim"] = system.dim
        if not opts["full_state"]:
            traj = Trajectory(traj.grid, system.grade_one(traj.states), traj.meta)
    out = Path(opts["out"])
    write_trajectory(traj, out)
    write_sidecar(out.with_suffix(".json"), _config_record("simulate", opts),
                  model=desc, solver=traj.meta, **extra)
    return 0


def _axis(opts, explicit, lo, hi, count):
    if opts[explicit] is not None:
        return np.array(sorted(float(v) for v in opts[explicit]))
    return np.linspace(float(opts[lo]), float(opts[hi]), int(opts[count]))


def cmd_sweep(opts: dict) -> int:
    thetas = _axis(opts, "theta0", "theta0_min", "theta0_max", "theta0_count")
    if int(opts["t_count"]) < 1 or float(opts["t_end"]) < 0:
        raise UsageError("need --t-count >= 1 and --t-end >= 0")
    times = np.linspace(0.0, float(opts["t_end"]), int(opts["t_count"]))
    methods = opts["method"] if isinstance(opts["method"], list) else [opts["method"]]
    omegas = opts["omega1"] if isinstance(opts["omega1"], list) else [opts["omega1"]]
    out_dir = Path(opts["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    record = _config_record("sweep", opts)
    for method in methods:
        for omega1 in omegas:
            surface = sweep_error_surface(
                float(omega1), method, int(opts["N"]), thetas, times,
                ktilde=float(opts["ktilde"]), ref_tol=float(opts["ref_tol"]),
                lin_tol=float(opts["tol"]), linear_method=opts["linear_method"],
                floor=float(opts["floor"]), cap=float(opts["cap"]), workers=int(opts["workers"]),
            )
            stem = f"{surface.metric}_omega1={float(omega1):g}"
            write_surface(surface, out_dir / f"{stem}.csv")
            write_sidecar(
                out_dir / f"{stem}.json", record,
                surface={"metric": surface.metric, "method": method, "omega1": float(omega1),
                         "ktilde": float(opts["ktilde"]), "N": int(opts["N"])},
                failures=surface.failures,
            )
    return 0


def cmd_bound(opts: dict) -> int:
    field, x0, desc = resolve_model(opts)
    params = BoundParams.for_field(field)
    T0 = t0_bound(params)
    t_star = float(opts["t_star"])
    report = {"model": desc, "D": params.D, "r": params.r, "dfactor": params.dfactor,
              "T0": T0, "t_star": t_star}
    try:
        report["N0"] = n0_search(params, t_star)
        report["satisfiable"] = True
        horizon = t_star
    except ValueError as exc:
        report["N0"] = None
        report["satisfiable"] = False
        report["reason"] = str(exc)
        horizon = T0
    grid = TimeGrid(np.linspace(0.0, horizon, int(opts["samples"]), endpoint=horizon == t_star))
    ref = integrate_reference(field, x0, grid, tol=float(opts["ref_tol"]))
    taus = getattr(field, "taus", (1.0,))
    rows = []
    Ns = opts["N"] if isinstance(opts["N"], list) else [opts["N"]]
    for N in Ns:
        system = _lift(field, x0, int(N), int(opts["dim_cap"]))
        traj = integrate_linear(system, grid, tol=float(opts["tol"]))
        err = error_primary(traj, ref, system.layout, taus)
        bound = theorem_bound(params, grid.samples, int(N))
        excess = float(np.max(err - bound))
        rows.append({"N": int(N), "max_error": float(err.max()), "max_bound": float(bound.max()),
                     "max_excess": excess, "pass": excess <= float(opts["slack"])})
    report["per_N"] = rows
    report["config_hash"] = config_hash(_config_record("bound", opts))
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if opts["out"]:
        Path(opts["out"]).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_n0(opts: dict) -> int:
    if opts["D"] is None or opts["t_star"] is None:
        raise UsageError("n0 needs --D and --t-star")
    params = BoundParams(float(opts["D"]), float(opts["r"]), float(opts["dfactor"]))
    N0 = n0_search(params, float(opts["t_star"]))
    sys.stdout.write(json.dumps({"N0": N0, "T0": t0_bound(params), "t_star": float(opts["t_star"])}) + "\n")
    return 0


def cmd_dump_matrix(opts: dict) -> int:
    field, x0, _ = resolve_model(opts)
    N = int(opts["N"])
    if opts["method"] == "classical":
        system = _classical_system(opts, field, x0, N)
        write_classical_matrix(system, opts["out"])
        if opts["drift_out"]:
            write_classical_drift(system, opts["drift_out"])
    else:
        system = _lift(field, x0, N, int(opts["dim_cap"]))
        write_blocks(system, opts["out"])
        if opts["layout_out"]:
            write_layout(system.layout, opts["layout_out"], N)
    return 0


def cmd_normalize(opts: dict) -> int:
    if opts["model"] is not None:
        try:
            model = load_model(opts["model"])
        except (OSError, KeyError, ValueError) as exc:
            raise UsageError(f"invalid model file: {exc}") from None
    elif None not in (opts["omegas"], opts["K"], opts["theta0"]):
        model = KuramotoModel(tuple(opts["omegas"]), float(opts["K"]), tuple(opts["theta0"]))
    else:
        raise UsageError("normalize needs --model or all of --omegas, --K, --theta0")
    norm = normalize(model)
    payload = {**model_to_dict(norm), "ktilde": norm.ktilde, "time_scale": norm.time_scale,
               "drift": norm.drift, "mean_phase0": norm.mean_phase0}
    text = json.dumps(payload, indent=2) + "\n"
    if opts["out"]:
        Path(opts["out"]).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _config_record(command: str, opts: dict) -> dict:
    return {"command": command, **{k: v for k, v in sorted(opts.items())}}


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "bound": cmd_bound,
    "n0": cmd_n0,
    "dump-matrix": cmd_dump_matrix,
    "normalize": cmd_normalize,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve_options(args.command, args)
        return COMMANDS[args.command](opts)
    except UsageError as exc:
        parser.error(str(exc))
    except (IntegrationError, LiftError, FieldError, ValueError, OSError) as exc:
        print(f"carleman {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
