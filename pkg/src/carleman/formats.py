"""Readers and writers for the JSON inputs and CSV outputs.

Floats are written with ``repr`` so that files round-trip exactly and
identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .carleman_classical import ClassicalSystem
from .carleman_fourier import LiftedSystem, MultiIndexTable, block_entries
from .fourier_field import FieldError, FourierField1D, QuasiPeriodicField
from .integrate import Trajectory
from .kuramoto import KuramotoModel


def _num(x) -> str:
    return repr(float(x))


def parse_field(data: dict) -> FourierField1D | QuasiPeriodicField:
    """Build a field from the ingestion schema.

    Entries with an ``"n"`` key form the scalar shorthand; otherwise each
    entry carries a 1-based component ``"p"`` and ``L`` integer ``d``-vectors
    under ``"alphas"``.
    """
    envelope = data.get("envelope") or {}
    r = float(envelope.get("r", 0.5))
    D = envelope.get("D")
    D = None if D is None else float(D)
    entries = data.get("coeffs")
    if not isinstance(entries, list):
        raise FieldError("field file needs a 'coeffs' list")
    if entries and all("n" in e for e in entries):
        coeffs: dict = {}
        for e in entries:
            n = int(e["n"])
            coeffs[n] = coeffs.get(n, 0j) + complex(e.get("re", 0.0), e.get("im", 0.0))
        return FourierField1D(coeffs, r=r, D=D)
    try:
        d, L = int(data["d"]), int(data["L"])
        taus = [float(t) for t in data["taus"]]
    except KeyError as exc:
        raise FieldError(f"field file missing key {exc}") from None
    if len(taus) != L:
        raise FieldError(f"'taus' has {len(taus)} entries, expected L={L}")
    coeffs = {}
    for e in entries:
        alphas = e["alphas"]
        if len(alphas) != L or any(len(a) != d for a in alphas):
            raise FieldError(f"'alphas' must be {L} vectors of length {d}: {alphas}")
        key = (int(e["p"]) - 1, tuple(int(a) for alpha in alphas for a in alpha))
        coeffs[key] = coeffs.get(key, 0j) + complex(e.get("re", 0.0), e.get("im", 0.0))
    return QuasiPeriodicField(d, tuple(taus), coeffs, r=r, D=D)


def load_field(path) -> FourierField1D | QuasiPeriodicField:
    return parse_field(json.loads(Path(path).read_text()))


def field_to_dict(field: FourierField1D | QuasiPeriodicField) -> dict:
    envelope = {"D": field.D, "r": field.r}
    if isinstance(field, FourierField1D):
        coeffs = [{"n": n, "re": g.real, "im": g.imag} for n, g in sorted(field.coeffs.items())]
        return {"coeffs": coeffs, "envelope": envelope}
    d, L = field.d, field.L
    coeffs = [
        {
            "p": p + 1,
            "alphas": [list(alpha[l * d:(l + 1) * d]) for l in range(L)],
            "re": g.real,
            "im": g.imag,
        }
        for (p, alpha), g in sorted(field.coeffs.items())
    ]
    return {"d": d, "L": L, "taus": list(field.taus), "coeffs": coeffs, "envelope": envelope}


def parse_model(data: dict) -> KuramotoModel:
    omegas = [float(w) for w in data["omegas"]]
    theta0 = [float(t) for t in data["theta0"]]
    if "d" in data and int(data["d"]) != len(omegas):
        raise ValueError(f"model declares d={data['d']} but lists {len(omegas)} frequencies")
    return KuramotoModel(tuple(omegas), float(data["K"]), tuple(theta0))


def load_model(path) -> KuramotoModel:
    return parse_model(json.loads(Path(path).read_text()))


def model_to_dict(model: KuramotoModel) -> dict:
    return {"d": model.d, "omegas": list(model.omegas), "K": model.K, "theta0": list(model.theta0)}


def write_classical_matrix(system: ClassicalSystem, path) -> None:
    """``row,col,value`` triplets of the nonzero entries, 1-based."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "col", "value"])
        rows, cols = np.nonzero(system.A)
        for i, j in zip(rows, cols):
            w.writerow([i + 1, j + 1, _num(system.A[i, j])])


def write_classical_drift(system: ClassicalSystem, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "value"])
        for i in np.flatnonzero(system.a):
            w.writerow([i + 1, _num(system.a[i])])


def read_classical_matrix(path, N: int) -> np.ndarray:
    A = np.zeros((N, N))
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            A[int(row["row"]) - 1, int(row["col"]) - 1] = float(row["value"])
    return A


def write_blocks(system: LiftedSystem, path) -> None:
    """``k,l,row,col,re,im`` with 0-based in-block indices."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "l", "row", "col", "re", "im"])
        for k, l, i, j, v in block_entries(system):
            w.writerow([k, l, i, j, _num(v.real), _num(v.imag)])


def read_blocks(path) -> dict[tuple[int, int], list[tuple[int, int, complex]]]:
    out: dict = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            key = (int(row["k"]), int(row["l"]))
            out.setdefault(key, []).append(
                (int(row["row"]), int(row["col"]), complex(float(row["re"]), float(row["im"])))
            )
    return out


def write_layout(table: MultiIndexTable, path, N: int | None = None) -> None:
    N = table.K if N is None else N
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["grade", "position"] + [f"gamma_{j + 1}" for j in range(table.m)])
        for k in range(1, N + 1):
            for pos, gamma in enumerate(table.grade(k)):
                w.writerow([k, pos, *gamma])


def write_trajectory(traj: Trajectory, path) -> None:
    """``t,comp0_re,comp0_im,...``; real trajectories have no ``_im`` columns."""
    states = traj.states.reshape(len(traj.grid), -1)
    is_complex = np.iscomplexobj(states)
    header = ["t"]
    for c in range(states.shape[1]):
        header.append(f"comp{c}_re")
        if is_complex:
            header.append(f"comp{c}_im")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t, row in zip(traj.t, states):
            cells = [_num(t)]
            for v in row:
                cells.append(_num(v.real))
                if is_complex:
                    cells.append(_num(v.imag))
            w.writerow(cells)


def read_trajectory(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in r] for r in reader]
    data = np.array(rows).reshape(len(rows), len(header))
    t = data[:, 0]
    if any(h.endswith("_im") for h in header):
        states = data[:, 1::2] + 1j * data[:, 2::2]
    else:
        states = data[:, 1:]
    return t, states


def write_surface(surface, path) -> None:
    """``theta0,t,value``, row-major over initial phase then time."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theta0", "t", "value"])
        for th, row in zip(surface.theta0_axis, surface.values):
            for t, v in zip(surface.t_axis, row):
                w.writerow([_num(th), _num(t), _num(v)])


def read_surface(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        rows = [(float(r["theta0"]), float(r["t"]), float(r["value"])) for r in csv.DictReader(fh)]
    thetas = np.array(sorted({r[0] for r in rows}))
    ts = np.array(sorted({r[1] for r in rows}))
    values = np.array([r[2] for r in rows]).reshape(thetas.size, ts.size)
    return thetas, ts, values


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return "sha256:" + hashlib.sha256(blob.encode()).hexdigest()


def write_sidecar(path, config: dict, **extra) -> dict:
    payload = {"config": config, "config_hash": config_hash(config), **extra}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")
    return payload
