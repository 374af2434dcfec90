"""Classical Carleman linearization on the monomial basis ``x, x**2, ..., x**N``.

Row ``n`` (1-based) of the section matrix holds ``n * c_{n'-n+1}`` in column
``n'`` for ``n' >= n - 1``; everything below the first subdiagonal is zero.
The drift vector is ``[c_0, 0, ..., 0]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fourier_field import MaclaurinCoeffs


@dataclass(frozen=True)
class ClassicalSystem:
    """Finite section ``x' = A x + a`` with ``x(0) = [x0, x0**2, .., x0**N]``."""

    A: np.ndarray
    a: np.ndarray
    x0_lift: np.ndarray

    @property
    def N(self) -> int:
        return self.A.shape[0]


def lift_monomials(x0: float, N: int) -> np.ndarray:
    return float(x0) ** np.arange(1, N + 1)


def build_classical(c: MaclaurinCoeffs | list[float], x0: float, N: int) -> ClassicalSystem:
    coeffs = np.asarray(c.c if isinstance(c, MaclaurinCoeffs) else c, dtype=float)
    if N < 1:
        raise ValueError("section size N must be at least 1")
    if len(coeffs) < N + 1:
        raise ValueError(
            f"insufficient Maclaurin order: need c_0..c_{N}, got {len(coeffs)} coefficients"
        )
    A = np.zeros((N, N))
    for i in range(N):
        n = i + 1
        # columns n' = n-1 .. N use c_0 .. c_{N-n+1}
        lo = max(i - 1, 0)
        A[i, lo:] = n * coeffs[lo - i + 1 : N - i + 1]
    a = np.zeros(N)
    a[0] = coeffs[0]
    return ClassicalSystem(A, a, lift_monomials(x0, N))


def build_classical_kuramoto(omega1: float, ktilde: float, N: int, x0: float = 0.0) -> ClassicalSystem:
    """Closed-form section for ``theta' = omega1 + ktilde * sin(2 theta)``."""
    if abs(abs(ktilde) - 1.0) > 1e-12:
        raise ValueError(f"unnormalized coupling: |ktilde| must be 1, got {ktilde}")
    if N < 1:
        raise ValueError("section size N must be at least 1")
    A = np.zeros((N, N))
    for n in range(1, N + 1):
        if n >= 2:
            A[n - 1, n - 2] = omega1 * n
        for n2 in range(n, N + 1):
            gap = n2 - n
            if gap % 2 == 0 and gap <= N - 1:
                A[n - 1, n2 - 1] = (
                    ktilde * n * 2 ** (gap + 1) * (-1) ** (gap // 2) / math.factorial(gap + 1)
                )
    a = np.zeros(N)
    a[0] = omega1
    return ClassicalSystem(A, a, lift_monomials(x0, N))
