"""Error bounds, error metrics and sweeps for the finite-section approximations.

The bound functions take only the envelope ``(D, r)`` and a rate factor;
none of them depend on the initial state or on ``g(0)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .carleman_classical import build_classical_kuramoto
from .carleman_fourier import LiftedSystem, MultiIndexTable, lift_1d
from .fourier_field import QuasiPeriodicField, extend_state
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
from .kuramoto import reduced_field

CLIP_FLOOR = 1e-5
CLIP_CAP = 10.0


@dataclass(frozen=True)
class BoundParams:
    """Envelope constants plus the rate factor multiplying ``D``.

    ``dfactor`` is 2 for scalar fields and ``2**d`` for quasi-periodic fields
    on ``R^d``, so the bounds grow with ``dfactor * D * t``.
    """

    D: float
    r: float
    dfactor: float = 2.0

    def __post_init__(self):
        if self.D <= 0:
            raise ValueError("envelope amplitude D must be positive")
        if not 0 < self.r < 1:
            raise ValueError("envelope ratio r must lie in (0, 1)")

    @classmethod
    def for_field(cls, field) -> "BoundParams":
        if isinstance(field, QuasiPeriodicField):
            return cls(field.D, field.r, 2.0**field.d)
        return cls(field.D, field.r, 2.0)

    @property
    def rate(self) -> float:
        return self.dfactor * self.D


def t0_bound(p: BoundParams) -> float:
    """Horizon ``(1/sqrt(r) - 1)**2 / (dfactor * D)`` below which the bound decays in ``N``."""
    return (1.0 / math.sqrt(p.r) - 1.0) ** 2 / p.rate


def theorem_bound(p: BoundParams, t, N: int):
    """``sqrt(c t) / (1 - r) * (1 + sqrt(c t))**(2N) * r**N`` with ``c = dfactor * D``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be nonnegative")
    s = np.sqrt(p.rate * t)
    with np.errstate(divide="ignore"):
        log_b = np.log(s) - math.log1p(-p.r) + 2 * N * np.log1p(s) + N * math.log(p.r)
    out = np.where(s > 0, np.exp(log_b), 0.0)
    return float(out) if out.ndim == 0 else out


def n0_search(p: BoundParams, t_star: float, max_n: int = 100_000) -> int:
    """Smallest ``N >= 1`` with ``theorem_bound(p, t_star, N) <= 1/2``."""
    T0 = t0_bound(p)
    if t_star >= T0:
        raise ValueError(
            f"horizon exceeds T_0; condition unsatisfiable (t_star={t_star}, T_0={T0})"
        )
    for N in range(1, max_n + 1):
        if theorem_bound(p, t_star, N) <= 0.5:
            return N
    raise ValueError(f"no N <= {max_n} meets the bound at t_star={t_star}")


def grade_one_errors(lifted: Trajectory, reference: Trajectory, table: MultiIndexTable, taus) -> np.ndarray:
    """``|z_j(t) - exp(i x_ext_j(t))|`` for every grade-1 slot ``j``; shape ``(samples, m)``."""
    if lifted.grid.samples.shape != reference.grid.samples.shape or np.any(
        lifted.grid.samples != reference.grid.samples
    ):
        raise ValueError("lifted and reference trajectories are on different grids")
    m = table.m
    x_ext = np.array([extend_state(x, taus) for x in reference.states])
    return np.abs(lifted.states[:, :m] - np.exp(1j * x_ext))


def error_primary(lifted: Trajectory, reference: Trajectory, table: MultiIndexTable, taus) -> np.ndarray:
    """Per-sample max over grade-1 slots of the lifted-vs-true error."""
    return grade_one_errors(lifted, reference, table, taus).max(axis=1)


def clip_metric(err, floor: float = CLIP_FLOOR, cap: float = CLIP_CAP) -> np.ndarray:
    """Running supremum of ``log10(min(cap, max(err, floor)))``."""
    err = np.asarray(err, dtype=float)
    if np.any(err < 0):
        raise ValueError("errors must be nonnegative")
    # NaN errors come from blown-up states; they saturate at the cap
    clipped = np.log10(np.minimum(cap, np.maximum(np.nan_to_num(err, nan=cap), floor)))
    return np.maximum.accumulate(clipped)


def extract_phase(series, phase0: float, grid: TimeGrid | None = None) -> np.ndarray:
    """Continuous phase of a sampled complex signal starting from ``phase0``.

    Increments are principal arguments of consecutive ratios, so no branch
    cut is crossed as long as the signal turns by less than ``pi/2`` per sample.
    """
    z = np.asarray(series, dtype=complex)
    if grid is not None and len(grid) != z.size:
        raise ValueError("series and grid lengths differ")
    if np.any(np.abs(z) < 1e-12):
        raise ValueError("phase undefined: series passes near zero")
    steps = np.angle(z[1:] / z[:-1])
    if np.any(np.abs(steps) >= math.pi / 2):
        raise ValueError("grid too coarse for unwrapping")
    return phase0 + np.concatenate([[0.0], np.cumsum(steps)])


def proof_chain_check(N: int, t: float) -> tuple[float, float]:
    """``(lhs, rhs)`` of ``(1/N) sum_m C(N,m-1) C(N,m) t**m <= sqrt(t) (1+sqrt(t))**(2N)``."""
    if not 1 <= N <= 60:
        raise ValueError("N must lie in 1..60")
    if t < 0:
        raise ValueError("t must be nonnegative")
    tq = Fraction(t)
    lhs = sum(Fraction(math.comb(N, m - 1) * math.comb(N, m)) * tq**m for m in range(1, N + 1)) / N
    rhs = math.sqrt(t) * (1.0 + math.sqrt(t)) ** (2 * N)
    return float(lhs), rhs


def comparison_polynomials(N: int) -> list[list[Fraction]]:
    """Coefficients of the extremal solution of ``u_k' = k (1 + sum_{l>k} u_l)``, ``u(0) = 0``.

    Entry ``k-1`` lists the polynomial coefficients of ``u_{k,N}`` in ascending
    powers of the rescaled time.
    """
    polys: list[list[Fraction]] = [[] for _ in range(N)]
    tail = [Fraction(1)]  # 1 + sum_{l > k} u_l
    for k in range(N, 0, -1):
        integral = [Fraction(0)] + [Fraction(k) * c / (i + 1) for i, c in enumerate(tail)]
        polys[k - 1] = integral
        tail = [
            (tail[i] if i < len(tail) else 0) + (integral[i] if i < len(integral) else 0)
            for i in range(max(len(tail), len(integral)))
        ]
    return polys


def ukn_estimate_rhs(N: int, k: int, t: float) -> float:
    """``sum_{m=0}^{N-k+1} C(N, m) C(N-k+1, m) t**m``."""
    return float(sum(math.comb(N, m) * math.comb(N - k + 1, m) * Fraction(t) ** m for m in range(N - k + 2)))


def scaled_block_errors(system: LiftedSystem, lifted: Trajectory, reference: Trajectory, p: BoundParams,
                        taus=(1.0,)) -> np.ndarray:
    """``u_{k,N}(s) = (1 - r) r**(k-N-1) ||z_k(t) - y_k(t)||_inf`` for each grade.

    The lifted trajectory must be sampled at ``t = s / (dfactor * D)``; the
    returned array has shape ``(samples, N)``.
    """
    table, N = system.layout, system.N
    out = np.empty((len(lifted.grid), N))
    x_ext = np.array([extend_state(x, taus) for x in reference.states])
    for k in range(1, N + 1):
        gam = table.gamma_matrix(k)
        exact = np.exp(1j * x_ext @ gam.T)
        eta = np.abs(lifted.states[:, system.grade_slice(k)] - exact).max(axis=1)
        out[:, k - 1] = (1 - p.r) * p.r ** (k - N - 1) * eta
    return out


@dataclass
class ErrorSurface:
    theta0_axis: np.ndarray
    t_axis: np.ndarray
    values: np.ndarray
    metric: str
    N: int
    omega1: float
    ktilde: float = 1.0
    failures: list = field(default_factory=list)


def _sweep_cell(args):
    omega1, ktilde, method, N, theta0, t_axis, ref_tol, lin_tol, linear_method, floor, cap = args
    grid = TimeGrid(np.asarray(t_axis))
    field_ = reduced_field(omega1, ktilde)
    failure = None
    try:
        ref = integrate_reference(field_, theta0, grid, tol=ref_tol)
        theta = ref.states[:, 0]
        if method == "classical":
            sys_ = build_classical_kuramoto(omega1, ktilde, N, x0=theta0)
            traj = integrate_classical(sys_, grid, tol=lin_tol)
            err = np.abs(traj.states[:, 0] - theta)
            if traj.diverged:
                failure = {"theta0": theta0, "reason": "diverged", "t": traj.meta["diverged_at"]}
        else:
            sys_ = lift_1d(field_, theta0, N)
            traj = integrate_linear(sys_, grid, tol=lin_tol, method=linear_method)
            z = sys_.grade_one(traj.states)
            err = np.maximum(np.abs(z[:, 0] - np.exp(1j * theta)), np.abs(z[:, 1] - np.exp(-1j * theta)))
        row = clip_metric(err, floor, cap)
    except (IntegrationError, ValueError, FloatingPointError) as exc:
        row = np.full(len(grid), math.log10(cap))
        failure = {"theta0": theta0, "reason": str(exc)}
    return row, failure


def sweep_error_surface(
    omega1: float,
    method: str,
    N: int,
    theta0_axis,
    t_axis,
    ktilde: float = 1.0,
    ref_tol: float = DEFAULT_REFERENCE_TOL,
    lin_tol: float = DEFAULT_LINEAR_TOL,
    linear_method: str = "rk",
    floor: float = CLIP_FLOOR,
    cap: float = CLIP_CAP,
    workers: int = 1,
) -> ErrorSurface:
    """Clipped log-error surface over initial phase and time for the reduced Kuramoto phase.

    ``method='classical'`` measures ``|x_{1,N} - theta|``; ``'carleman-fourier'``
    the larger of the two grade-1 errors. Failed cells saturate at ``log10(cap)``
    and are listed in ``failures``.
    """
    if method not in ("classical", "carleman-fourier"):
        raise ValueError(f"unknown method {method!r}")
    theta0_axis = np.asarray(theta0_axis, dtype=float)
    t_axis = np.asarray(t_axis, dtype=float)
    if theta0_axis.size == 0 or t_axis.size == 0:
        raise ValueError("sweep axes must be nonempty")
    if np.any(np.diff(theta0_axis) <= 0) or np.any(np.diff(t_axis) <= 0):
        raise ValueError("sweep axes must be sorted")
    jobs = [
        (omega1, ktilde, method, N, float(th), tuple(t_axis), ref_tol, lin_tol, linear_method, floor, cap)
        for th in theta0_axis
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_cell, jobs))
    else:
        results = [_sweep_cell(job) for job in jobs]
    values = np.array([row for row, _ in results])
    failures = [f for _, f in results if f is not None]
    metric = "E_C" if method == "classical" else "E_CF"
    return ErrorSurface(theta0_axis, t_axis, values, metric, N, omega1, ktilde, failures)
