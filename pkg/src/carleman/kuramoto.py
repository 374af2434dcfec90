"""Kuramoto phase oscillators ``theta_p' = omega_p + (K/d) sum_q sin(theta_q - theta_p)``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fourier_field import FourierField1D, QuasiPeriodicField

NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True)
class KuramotoModel:
    omegas: tuple[float, ...]
    K: float
    theta0: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "omegas", tuple(float(w) for w in self.omegas))
        object.__setattr__(self, "theta0", tuple(float(t) for t in self.theta0))
        if self.K == 0:
            raise ValueError("coupling strength K must be nonzero")
        if len(self.omegas) != len(self.theta0):
            raise ValueError("omegas and theta0 must have the same length")
        if self.d < 2:
            raise ValueError("Kuramoto model needs at least two oscillators")

    @property
    def d(self) -> int:
        return len(self.omegas)

    def is_normalized(self) -> bool:
        return (
            abs(sum(self.theta0)) <= NORMALIZATION_TOL
            and abs(sum(self.omegas)) <= NORMALIZATION_TOL
            and abs(abs(self.K) - self.d) <= NORMALIZATION_TOL
        )


@dataclass(frozen=True)
class NormalizedKuramoto(KuramotoModel):
    """Kuramoto model with zero-mean phases and frequencies and ``|K| = d``.

    The original phases are recovered as
    ``theta_p(s) = theta_tilde_p(s / time_scale) + drift * s + mean_phase0``
    with ``time_scale = d / |K_original|``.
    """

    time_scale: float = 1.0
    drift: float = 0.0
    mean_phase0: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        if not self.is_normalized():
            raise ValueError("model is not normalized")

    @property
    def ktilde(self) -> float:
        return -self.K / self.d


def normalize(model: KuramotoModel) -> NormalizedKuramoto:
    d, K = model.d, model.K
    if isinstance(model, NormalizedKuramoto):
        return model
    mean_phase = math.fsum(model.theta0) / d
    omega_sum = math.fsum(model.omegas)
    theta = [t - mean_phase for t in model.theta0]
    omegas = [(d * w - omega_sum) / abs(K) for w in model.omegas]
    # exact zero sums for the two-oscillator case
    if d == 2:
        theta = [theta[0], -theta[0]]
        omegas = [omegas[0], -omegas[0]]
    return NormalizedKuramoto(
        tuple(omegas),
        math.copysign(d, K),
        tuple(theta),
        time_scale=d / abs(K),
        drift=omega_sum / d,
        mean_phase0=mean_phase,
    )


def reduced_field(omega1: float, ktilde: float, r: float = 0.5, D: float | None = None) -> FourierField1D:
    """Field of ``theta' = omega1 + ktilde * sin(2 theta)``."""
    if abs(abs(ktilde) - 1.0) > NORMALIZATION_TOL:
        raise ValueError(f"unnormalized coupling: |ktilde| must be 1, got {ktilde}")
    coeffs = {0: complex(omega1), 2: -0.5j * ktilde, -2: 0.5j * ktilde}
    return FourierField1D(coeffs, r=r, D=D)


def two_oscillator_reduction(model: KuramotoModel) -> tuple[float, float, float]:
    """``(omega1, ktilde, theta1_0)`` for a normalized two-oscillator model."""
    if model.d != 2:
        raise ValueError("reduction to one phase requires d = 2")
    if not model.is_normalized():
        raise ValueError("model is not normalized; call normalize() first")
    return model.omegas[0], -model.K / 2, model.theta0[0]


def equilibria(omega1: float, ktilde: float) -> tuple[float, float] | str:
    """Equilibrium representatives of the reduced phase, or ``"divergent"``.

    The equilibria form the families ``{e1, e2} + pi Z``; the representatives
    returned lie in ``(-pi, pi/2]``.
    """
    if abs(abs(ktilde) - 1.0) > NORMALIZATION_TOL:
        raise ValueError(f"unnormalized coupling: |ktilde| must be 1, got {ktilde}")
    if abs(omega1) > 1.0:
        return "divergent"
    s = math.asin(omega1)
    return (
        _wrap_rep(-ktilde / 2 * s),
        _wrap_rep(ktilde / 2 * s - math.pi / 2),
    )


def _wrap_rep(x: float) -> float:
    """Shift ``x`` by multiples of ``pi`` into ``(-pi, pi/2]``."""
    while x > math.pi / 2:
        x -= math.pi
    while x <= -math.pi:
        x += math.pi
    return x


def full_rhs(model: KuramotoModel, r: float = 0.5, D: float | None = None) -> QuasiPeriodicField:
    """The full ``d``-oscillator field as a single-frequency quasi-periodic field."""
    d, K = model.d, model.K
    coeffs: dict[tuple[int, tuple[int, ...]], complex] = {}
    for p in range(d):
        if model.omegas[p] != 0:
            coeffs[(p, (0,) * d)] = complex(model.omegas[p])
        for q in range(d):
            if q == p:
                continue
            alpha = np.zeros(d, dtype=int)
            alpha[q], alpha[p] = 1, -1
            coeffs[(p, tuple(alpha))] = K / (2j * d)
            coeffs[(p, tuple(-alpha))] = -K / (2j * d)
    return QuasiPeriodicField(d, (1.0,), coeffs, r=r, D=D)
