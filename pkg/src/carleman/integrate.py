"""Time integration for the original fields and their finite sections.

One adaptive Dormand-Prince 5(4) kernel serves every system. It works on any
numpy state vector, real or complex, and samples the solution on a requested
time grid through the pair's continuous extension.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .carleman_classical import ClassicalSystem
from .carleman_fourier import LiftedSystem
from .fourier_field import FourierField1D, QuasiPeriodicField, eval_field_1d, eval_field_multi

DEFAULT_REFERENCE_TOL = 1e-12
DEFAULT_LINEAR_TOL = 1e-10
DIVERGENCE_CLIP = 1e12
EXPM_MAX_DIM = 2000

# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_E = np.array([71 / 57600, 0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# continuous extension: y(t + s h) = y + h * K^T P [s, s^2, s^3, s^4]
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


class IntegrationError(RuntimeError):
    """Step-size underflow or non-finite state; ``t_last`` is the last good time."""

    def __init__(self, message: str, t_last: float):
        super().__init__(f"{message} (last valid time {t_last:.17g})")
        self.t_last = t_last


@dataclass(frozen=True)
class TimeGrid:
    samples: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", s)
        if s.ndim != 1 or s.size == 0:
            raise ValueError("time grid needs at least one sample")
        if s[0] < self.t0:
            raise ValueError("samples must not precede t0")
        if np.any(np.diff(s) <= 0):
            raise ValueError("time samples must be strictly increasing")

    @classmethod
    def uniform(cls, t_end: float, samples: int) -> "TimeGrid":
        if t_end <= 0:
            raise ValueError("t_end must be positive")
        if samples < 2:
            raise ValueError("a uniform grid needs at least two samples")
        return cls(np.linspace(0.0, t_end, samples))

    @property
    def t_end(self) -> float:
        return float(self.samples[-1])

    def __len__(self) -> int:
        return self.samples.size


@dataclass
class Trajectory:
    grid: TimeGrid
    states: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def t(self) -> np.ndarray:
        return self.grid.samples

    @property
    def diverged(self) -> bool:
        return bool(self.meta.get("diverged", False))


def _initial_step(rhs, t0, y0, f0, atol, rtol, t_end):
    scale = atol + rtol * np.abs(y0)
    d0 = np.max(np.abs(y0) / scale)
    d1 = np.max(np.abs(f0) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, t_end - t0)
    y1 = y0 + h0 * f0
    f1 = rhs(t0 + h0, y1)
    d2 = np.max(np.abs(f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, t_end - t0)


def dopri5(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    grid: TimeGrid,
    tol: float,
    clip: float | None = None,
    max_steps: int = 1_000_000,
) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` from ``grid.t0`` and sample at ``grid.samples``.

    The error of every accepted step satisfies ``|err_i| <= tol * (1 + |y_i|)``
    componentwise. With ``clip`` set, the run stops once any component exceeds
    it in magnitude; the remaining samples repeat the last state clipped to
    ``clip`` and ``meta['diverged']`` is set.
    """
    y = np.array(y0, dtype=complex if np.iscomplexobj(y0) else float)
    atol = rtol = tol
    samples = grid.samples
    out = np.empty((samples.size,) + y.shape, dtype=y.dtype)
    t = grid.t0
    t_end = float(samples[-1])
    i = 0
    while i < samples.size and samples[i] == t:
        out[i] = y
        i += 1
    meta = {"method": "dopri5", "tol": tol, "steps": 0, "rejected": 0, "diverged": False}
    if i == samples.size:
        return Trajectory(grid, out, meta)

    K = np.empty((7,) + y.shape, dtype=y.dtype)
    K[0] = rhs(t, y)
    h = _initial_step(rhs, t, y, K[0], atol, rtol, t_end)
    while i < samples.size:
        if meta["steps"] >= max_steps:
            raise IntegrationError("maximum number of steps exceeded", t)
        h_min = 16 * np.spacing(max(abs(t), 1.0))
        if h < h_min:
            raise IntegrationError("step size underflow", t)
        last = t + h >= t_end
        if last:
            h = t_end - t
        for s in range(1, 7):
            dy = np.tensordot(_A[s], K[:s], axes=1) * h
            K[s] = rhs(t + _C[s] * h, y + dy)
        y_new = y + h * np.tensordot(_B, K, axes=1)
        err = h * np.tensordot(_E, K, axes=1)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = np.max(np.abs(err) / scale)
        if not np.isfinite(err_norm):
            if clip is not None:
                return _finish_diverged(out, i, y, t, clip, meta, grid)
            raise IntegrationError("non-finite state", t)
        if err_norm > 1.0:
            meta["rejected"] += 1
            h *= max(0.2, 0.9 * err_norm ** (-1 / 5))
            continue
        meta["steps"] += 1
        t_new = t_end if last else t + h
        Q = np.tensordot(K, _P, axes=(0, 0))  # shape y.shape + (4,)
        while i < samples.size and samples[i] <= t_new:
            theta = (samples[i] - t) / h
            powers = theta ** np.arange(1, 5)
            out[i] = y_new if samples[i] == t_new else y + h * (Q @ powers)
            i += 1
        if clip is not None and np.max(np.abs(y_new)) > clip:
            return _finish_diverged(out, i, y_new, t_new, clip, meta, grid)
        t, y = t_new, y_new
        K[0] = K[6]
        factor = 5.0 if err_norm == 0 else min(5.0, 0.9 * err_norm ** (-1 / 5))
        h *= factor
    return Trajectory(grid, out, meta)


def _clip_states(y, clip):
    y = np.where(np.isfinite(y), y, clip)
    if np.iscomplexobj(y):
        mag = np.abs(y)
        return np.where(mag > clip, y / np.maximum(mag, 1e-300) * clip, y)
    return np.clip(y, -clip, clip)


def _finish_diverged(out, i, y, t, clip, meta, grid):
    out[:i] = _clip_states(out[:i], clip)
    out[i:] = _clip_states(y, clip)
    meta.update(diverged=True, diverged_at=float(t))
    return Trajectory(grid, out, meta)


def integrate_reference(field, x0, grid: TimeGrid, tol: float = DEFAULT_REFERENCE_TOL) -> Trajectory:
    """Solve the original nonlinear system ``x' = g(x)``; states are real."""
    if not 1e-14 <= tol <= 1e-6:
        raise ValueError(f"reference tolerance must lie in [1e-14, 1e-6], got {tol}")
    if isinstance(field, FourierField1D):
        y0 = np.array([float(x0)])

        def rhs(t, y):
            return np.atleast_1d(eval_field_1d(field, y[0]))

    elif isinstance(field, QuasiPeriodicField):
        y0 = np.asarray(x0, dtype=float).reshape(field.d)

        def rhs(t, y):
            return eval_field_multi(field, y)

    else:
        raise TypeError(f"unsupported field type {type(field).__name__}")
    traj = dopri5(rhs, y0, grid, tol)
    traj.meta["method"] = "reference-dopri5"
    return traj


def integrate_linear(system: LiftedSystem, grid: TimeGrid, tol: float = DEFAULT_LINEAR_TOL,
                     method: str = "rk") -> Trajectory:
    """Solve ``z' = B z``, ``z(0) = z0`` for a Carleman-Fourier section.

    ``method='rk'`` uses the adaptive kernel; ``method='expm'`` evaluates
    ``expm(t B) z0`` at every sample (dense, ``dim <= 2000``).
    """
    if system.z0 is None:
        raise ValueError("lifted system has no initial state")
    B = system.operator
    if method == "rk":
        traj = dopri5(lambda t, z: B @ z, system.z0, grid, tol)
        traj.meta["method"] = "dopri5"
        return traj
    if method == "expm":
        if system.dim > EXPM_MAX_DIM:
            raise ValueError(f"expm method limited to dim <= {EXPM_MAX_DIM}, got {system.dim}")
        dense = B.toarray()
        states = np.array([scipy.linalg.expm((t - grid.t0) * dense) @ system.z0 for t in grid.samples])
        return Trajectory(grid, states, {"method": "expm", "tol": None, "diverged": False})
    raise ValueError(f"unknown linear method {method!r}")


def integrate_classical(system: ClassicalSystem, grid: TimeGrid, tol: float = DEFAULT_LINEAR_TOL,
                        clip: float = DIVERGENCE_CLIP) -> Trajectory:
    """Solve ``x' = A x + a`` from the monomial lift; divergence is clipped, not raised."""
    A, a = system.A, system.a
    traj = dopri5(lambda t, x: A @ x + a, system.x0_lift, grid, tol, clip=clip)
    traj.meta["method"] = "dopri5"
    return traj
