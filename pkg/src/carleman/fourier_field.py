"""Fourier representations of periodic and quasi-periodic vector fields.

Fields are finitely supported: a map from integer frequencies to complex
coefficients, together with an exponential decay envelope ``(D, r)`` that
certifies ``|g_n| <= D * r**|n|`` and feeds the error bounds in
:mod:`carleman.analysis`.
"""

from __future__ import annotations

import math
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np

REALITY_TOL = 1e-12
IMAG_RESIDUE_EVAL = 1e-12
IMAG_RESIDUE_MACLAURIN = 1e-10
# relative slack when checking envelope and Maclaurin bounds
BOUND_SLACK = 1e-12


class FieldError(ValueError):
    """Raised for malformed or non-real field data."""


def _check_finite(coeffs: Mapping, what: str) -> None:
    for key, value in coeffs.items():
        if not (math.isfinite(value.real) and math.isfinite(value.imag)):
            raise FieldError(f"{what}: non-finite coefficient at {key!r}")


def _conj_close(a: complex, b: complex) -> bool:
    scale = max(1.0, abs(a), abs(b))
    return abs(a - b.conjugate()) <= REALITY_TOL * scale


@dataclass(frozen=True)
class FourierField1D:
    """Scalar ``2*pi``-periodic field ``g(x) = sum_n g_n exp(i n x)``.

    Parameters
    ----------
    coeffs : mapping int -> complex
        Fourier coefficients; absent frequencies are zero.
    r : float
        Decay ratio of the envelope, ``0 < r < 1``.
    D : float, optional
        Envelope amplitude. Fitted from the coefficients when omitted,
        validated otherwise.
    real_valued : bool
        Whether the field is real. Real fields are stored exactly
        conjugate-symmetric.
    """

    coeffs: Mapping[int, complex]
    r: float = 0.5
    D: float | None = None
    real_valued: bool = True

    def __post_init__(self):
        if not 0.0 < self.r < 1.0:
            raise FieldError(f"envelope ratio r must lie in (0, 1), got {self.r}")
        coeffs = {int(n): complex(v) for n, v in self.coeffs.items() if v != 0}
        _check_finite(coeffs, "FourierField1D")
        if self.real_valued:
            coeffs = _symmetrize_1d(coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        fitted = _fit_1d(coeffs, self.r)
        if self.D is None:
            object.__setattr__(self, "D", fitted)
        elif self.D < fitted * (1.0 - BOUND_SLACK):
            raise FieldError(
                f"envelope D={self.D} too small for r={self.r}; need D >= {fitted}"
            )

    @property
    def envelope(self) -> tuple[float, float]:
        return self.D, self.r

    @cached_property
    def _arrays(self) -> tuple[np.ndarray, np.ndarray]:
        ns = np.array(sorted(self.coeffs), dtype=float)
        gs = np.array([self.coeffs[int(n)] for n in ns], dtype=complex)
        return ns, gs

    def max_frequency(self) -> int:
        return max((abs(n) for n in self.coeffs), default=0)

    def __call__(self, x):
        return eval_field_1d(self, x)


def _symmetrize_1d(coeffs: dict[int, complex]) -> dict[int, complex]:
    out = {}
    for n, g in coeffs.items():
        partner = coeffs.get(-n, 0j)
        if not _conj_close(g, partner):
            raise FieldError(
                f"field not real-valued: g_{-n} != conj(g_{n}) ({partner} vs {g})"
            )
        if n == 0:
            out[0] = complex(g.real, 0.0)
        elif n > 0:
            out[n] = g
            out[-n] = g.conjugate()
    return out


def _fit_1d(coeffs: Mapping[int, complex], r: float) -> float:
    if not coeffs:
        return 0.0
    return max(abs(g) * r ** (-abs(n)) for n, g in coeffs.items())


@dataclass(frozen=True)
class QuasiPeriodicField:
    """Vector field on ``R^d`` with ``L`` fundamental frequencies.

    Component ``p`` is ``sum g[p, alpha] exp(i (tau_1 a_1 + ... + tau_L a_L) . x)``
    where ``alpha`` is the concatenation ``(a_1, ..., a_L)`` of ``L`` integer
    ``d``-vectors. Keys of ``coeffs`` are ``(p, alpha)`` with ``p`` 0-based and
    ``alpha`` a flat tuple of length ``L*d``.
    """

    d: int
    taus: tuple[float, ...]
    coeffs: Mapping[tuple[int, tuple[int, ...]], complex]
    r: float = 0.5
    D: float | None = None
    real_valued: bool = True

    def __post_init__(self):
        taus = tuple(float(t) for t in self.taus)
        object.__setattr__(self, "taus", taus)
        if self.d < 1:
            raise FieldError("state dimension d must be positive")
        if not taus or any(t <= 0 for t in taus):
            raise FieldError("fundamental frequencies must be positive")
        if len(set(taus)) != len(taus):
            raise FieldError("fundamental frequencies must be distinct")
        if not 0.0 < self.r < 1.0:
            raise FieldError(f"envelope ratio r must lie in (0, 1), got {self.r}")
        width = self.d * len(taus)
        coeffs = {}
        for (p, alpha), v in self.coeffs.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != width:
                raise FieldError(f"multi-index {alpha} must have length L*d={width}")
            if not 0 <= p < self.d:
                raise FieldError(f"component index {p} outside 0..{self.d - 1}")
            if v != 0:
                coeffs[(int(p), alpha)] = complex(v)
        _check_finite(coeffs, "QuasiPeriodicField")
        if self.real_valued:
            coeffs = _symmetrize_multi(coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        fitted = _fit_multi(coeffs, self.d, taus, self.r)
        if self.D is None:
            object.__setattr__(self, "D", fitted)
        elif self.D < fitted * (1.0 - BOUND_SLACK):
            raise FieldError(
                f"envelope D={self.D} too small for r={self.r}; need D >= {fitted}"
            )

    @property
    def L(self) -> int:
        return len(self.taus)

    @property
    def envelope(self) -> tuple[float, float]:
        return self.D, self.r

    @cached_property
    def _arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        keys = sorted(self.coeffs)
        ps = np.array([p for p, _ in keys], dtype=int)
        alphas = np.array([a for _, a in keys], dtype=float).reshape(len(keys), self.L, self.d)
        # frequency vector sum_l tau_l alpha_l, one row per coefficient
        freqs = np.einsum("l,kld->kd", np.array(self.taus), alphas)
        gs = np.array([self.coeffs[k] for k in keys], dtype=complex)
        return ps, freqs, gs

    def __call__(self, x):
        return eval_field_multi(self, x)


def _symmetrize_multi(coeffs):
    out = {}
    for (p, alpha), g in coeffs.items():
        neg = tuple(-a for a in alpha)
        partner = coeffs.get((p, neg), 0j)
        if not _conj_close(g, partner):
            raise FieldError(
                f"field not real-valued: coefficient at (p={p}, {neg}) is not the "
                f"conjugate of (p={p}, {alpha})"
            )
        if neg == alpha:
            out[(p, alpha)] = complex(g.real, 0.0)
        elif alpha > neg:
            out[(p, alpha)] = g
            out[(p, neg)] = g.conjugate()
    return out


def _fit_multi(coeffs, d: int, taus, r: float) -> float:
    if not coeffs:
        return 0.0
    sums: dict[tuple[int, int], float] = defaultdict(float)
    for (p, alpha), g in coeffs.items():
        sums[(p, sum(abs(a) for a in alpha))] += abs(g)
    scale = sum(taus) / 2.0**d
    return max(scale * s * r ** (-k) for (_, k), s in sums.items())


def eval_field_1d(field: FourierField1D, x):
    """Evaluate a real 1-D field at ``x`` (scalar or array)."""
    if not field.real_valued:
        raise FieldError("field not real-valued")
    ns, gs = field._arrays
    x = np.asarray(x, dtype=float)
    total = np.exp(1j * np.multiply.outer(x, ns)) @ gs
    if np.any(np.abs(total.imag) >= IMAG_RESIDUE_EVAL * np.maximum(1.0, np.abs(total.real))):
        raise FieldError("field not real-valued: imaginary residue in evaluation")
    out = total.real
    return float(out) if out.ndim == 0 else out


def eval_field_multi(field: QuasiPeriodicField, x) -> np.ndarray:
    """Evaluate a real quasi-periodic field at the state ``x`` of length ``d``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (field.d,):
        raise FieldError(f"state has shape {x.shape}, expected ({field.d},)")
    ps, freqs, gs = field._arrays
    terms = gs * np.exp(1j * (freqs @ x))
    total = np.zeros(field.d, dtype=complex)
    np.add.at(total, ps, terms)
    if np.any(np.abs(total.imag) >= IMAG_RESIDUE_EVAL * np.maximum(1.0, np.abs(total.real))):
        raise FieldError("field not real-valued: imaginary residue in evaluation")
    return total.real


def fit_envelope(field: FourierField1D | QuasiPeriodicField, r: float) -> float:
    """Smallest ``D`` for which the decay envelope holds at ratio ``r``.

    For quasi-periodic fields the per-grade condition
    ``sup_p sum_{|alpha|=k} |g[p, alpha]| <= 2**d * D * r**k / sum(taus)`` is used.
    An empty field gives ``D = 0`` and a warning.
    """
    if not 0.0 < r < 1.0:
        raise FieldError(f"r must lie in (0, 1), got {r}")
    if not field.coeffs:
        warnings.warn("empty coefficient map; envelope amplitude is zero", stacklevel=2)
        return 0.0
    if isinstance(field, QuasiPeriodicField):
        return _fit_multi(field.coeffs, field.d, field.taus, r)
    return _fit_1d(field.coeffs, r)


@dataclass(frozen=True)
class MaclaurinCoeffs:
    """Maclaurin coefficients ``c_0..c_M`` of a real periodic field.

    ``truncation_tail`` bounds ``|g(x) - sum_{m<=M} c_m x**m|`` for
    ``|x| <= ln(1/r) / 2``.
    """

    c: tuple[float, ...]
    truncation_tail: float
    D: float
    r: float

    @property
    def M(self) -> int:
        return len(self.c) - 1

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.c)

    def tail_bound(self, x: float) -> float:
        """Analytic bound on the discarded part of the series at ``x``."""
        lam = math.log(1.0 / self.r)
        q = abs(x) / lam
        if q >= 1.0:
            return math.inf
        return 2.0 * self.D / (self.r * lam) * q ** (self.M + 1) / (1.0 - q)


def maclaurin_from_fourier(field: FourierField1D, M: int) -> MaclaurinCoeffs:
    """Exact Maclaurin coefficients ``c_m = (1/m!) sum_n (i n)**m g_n``."""
    if M < 1:
        raise ValueError("Maclaurin order M must be at least 1")
    D, r = field.envelope
    lam = math.log(1.0 / r)
    c = []
    for m in range(M + 1):
        total = 0j
        scale = 0.0
        for n, g in field.coeffs.items():
            term = (1j * n) ** m * g / math.factorial(m)
            total += term
            scale += abs(term)
        if abs(total.imag) > IMAG_RESIDUE_MACLAURIN * max(1.0, scale):
            raise FieldError(f"field not real-valued: c_{m} has imaginary part {total.imag}")
        bound = D * (1 + r) / (1 - r) if m == 0 else 2 * D / r * lam ** (-m - 1)
        if abs(total.real) > bound * (1 + BOUND_SLACK) + 1e-300:
            raise FieldError(f"c_{m}={total.real} violates its envelope bound {bound}")
        c.append(total.real)
    tail = 2.0 * D / (r * lam) * 2.0 ** (-M)
    return MaclaurinCoeffs(tuple(c), tail, D, r)


@dataclass(frozen=True)
class ExtendedField:
    """Nonnegative-frequency field on the extended state of dimension ``2 d L``.

    ``fcoeffs`` maps ``(j, gamma)`` (``j`` 0-based) to ``f[j; gamma]``.
    """

    d: int
    taus: tuple[float, ...]
    fcoeffs: Mapping[tuple[int, tuple[int, ...]], complex] = field(default_factory=dict)

    @property
    def L(self) -> int:
        return len(self.taus)

    @property
    def m(self) -> int:
        return 2 * self.d * self.L

    def offsets(self) -> dict[tuple[int, ...], np.ndarray]:
        """Group coefficients by frequency: ``gamma -> [f_{0;gamma}, .., f_{m-1;gamma}]``."""
        out: dict[tuple[int, ...], np.ndarray] = {}
        for (j, gamma), v in self.fcoeffs.items():
            out.setdefault(gamma, np.zeros(self.m, dtype=complex))[j] += v
        return out

    def evaluate(self, x_ext) -> np.ndarray:
        x_ext = np.asarray(x_ext, dtype=float)
        out = np.zeros(self.m, dtype=complex)
        for (j, gamma), v in self.fcoeffs.items():
            out[j] += v * np.exp(1j * np.dot(gamma, x_ext))
        return out


def extend_field(field: QuasiPeriodicField) -> ExtendedField:
    """Rewrite ``field`` over ``[tau_1 x, .., tau_L x, -tau_1 x, .., -tau_L x]``.

    Every coefficient ``g[p, alpha]`` lands at ``j = s*L*d + l*d + p`` for
    ``l < L`` and sign slot ``s in {0, 1}``, with value ``(-1)**s * tau_l * g``
    and frequency ``gamma = [alpha_+, alpha_-]``.
    """
    d, L = field.d, field.L
    fco: dict[tuple[int, tuple[int, ...]], complex] = defaultdict(complex)
    for (p, alpha), g in field.coeffs.items():
        pos = tuple(max(a, 0) for a in alpha)
        neg = tuple(max(-a, 0) for a in alpha)
        gamma = pos + neg
        for sign in (0, 1):
            for l, tau in enumerate(field.taus):
                j = sign * L * d + l * d + p
                fco[(j, gamma)] += (-1) ** sign * tau * g
    return ExtendedField(d, field.taus, {k: v for k, v in fco.items() if v != 0})


def as_quasi_periodic(field: FourierField1D) -> QuasiPeriodicField:
    """View a 1-D field as a ``d = 1, L = 1, tau = 1`` quasi-periodic field."""
    coeffs = {(0, (n,)): g for n, g in field.coeffs.items()}
    return QuasiPeriodicField(1, (1.0,), coeffs, r=field.r, real_valued=field.real_valued)


def extend_state(x0, taus) -> np.ndarray:
    """``[tau_1 x0, .., tau_L x0, -tau_1 x0, .., -tau_L x0]``."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    scaled = np.concatenate([t * x0 for t in taus])
    return np.concatenate([scaled, -scaled])
