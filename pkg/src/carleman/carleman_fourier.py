"""Carleman-Fourier lifting onto exponentials of the extended state.

The lifted coordinates of grade ``k`` are ``exp(i gamma . x_ext)`` for all
nonnegative integer vectors ``gamma`` with ``|gamma| = k``. Because the
extended field only has nonnegative frequencies, differentiation maps grade
``k`` into grades ``l >= k`` and the lifted operator is block upper
triangular. Block ``(k, l)`` is stored as a sparse matrix of shape
``(n_k, n_l)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .fourier_field import (
    ExtendedField,
    FourierField1D,
    QuasiPeriodicField,
    as_quasi_periodic,
    extend_field,
    extend_state,
)

DEFAULT_DIM_CAP = 200_000


class LiftError(ValueError):
    """Raised when a lifted system cannot be built or fails its invariants."""


def grade_size(m: int, k: int) -> int:
    return math.comb(k + m - 1, m - 1)


def lifted_dimension(m: int, N: int) -> int:
    return sum(grade_size(m, k) for k in range(1, N + 1))


def _compositions(m: int, k: int):
    """Nonnegative ``m``-vectors summing to ``k``, lexicographically descending."""
    if m == 1:
        yield (k,)
        return
    for first in range(k, -1, -1):
        for rest in _compositions(m - 1, k - first):
            yield (first,) + rest


@dataclass(frozen=True)
class MultiIndexTable:
    """Graded layout of the lifted coordinates, grades ``1..K``."""

    m: int
    K: int
    grades: tuple[tuple[tuple[int, ...], ...], ...]
    lookup: Mapping[tuple[int, ...], tuple[int, int]]

    def grade(self, k: int) -> tuple[tuple[int, ...], ...]:
        return self.grades[k - 1]

    def offsets(self, N: int | None = None) -> np.ndarray:
        """Start of each grade block in the stacked state; length ``N + 1``."""
        N = self.K if N is None else N
        sizes = [len(self.grade(k)) for k in range(1, N + 1)]
        return np.concatenate([[0], np.cumsum(sizes)]).astype(int)

    def dimension(self, N: int | None = None) -> int:
        return int(self.offsets(N)[-1])

    def gamma_matrix(self, k: int) -> np.ndarray:
        return np.array(self.grade(k), dtype=float).reshape(-1, self.m)


def enumerate_multiindices(m: int, K: int, cap: int = DEFAULT_DIM_CAP) -> MultiIndexTable:
    if m < 2 or K < 1:
        raise ValueError(f"need m >= 2 and K >= 1, got m={m}, K={K}")
    total = lifted_dimension(m, K)
    if total > cap:
        raise LiftError(
            f"state dimension cap exceeded: {total} lifted coordinates for m={m}, "
            f"K={K} (cap {cap})"
        )
    grades = tuple(tuple(_compositions(m, k)) for k in range(1, K + 1))
    lookup = {g: (k, pos) for k, grade in enumerate(grades, start=1) for pos, g in enumerate(grade)}
    return MultiIndexTable(m, K, grades, lookup)


@dataclass(frozen=True)
class LiftedSystem:
    """Finite section ``z' = B z`` of the Carleman-Fourier linearization."""

    N: int
    layout: MultiIndexTable
    blocks: Mapping[tuple[int, int], sp.csr_matrix]
    z0: np.ndarray | None
    operator: sp.csr_matrix
    block_offsets: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.block_offsets[-1])

    def grade_slice(self, k: int) -> slice:
        return slice(self.block_offsets[k - 1], self.block_offsets[k])

    def grade_one(self, z: np.ndarray) -> np.ndarray:
        """Primary block ``z_1`` of a state (or of a stack of states)."""
        return z[..., self.grade_slice(1)]


def build_blocks_1d(field: FourierField1D, N: int) -> dict[tuple[int, int], sp.csr_matrix]:
    """Blocks ``B_{k,l}`` for a scalar field, in the ``m = 2`` layout.

    Row ``p`` of block ``(k, k+s)`` has ``i (k - 2p) g_s`` at column ``p`` and
    ``i (k - 2p) g_{-s}`` at column ``p + s``; for ``s = 0`` only the diagonal
    entry ``i (k - 2p) g_0`` is present.
    """
    if not field.real_valued:
        raise LiftError("field not real-valued")
    if N < 1:
        raise ValueError("section order N must be at least 1")
    blocks = {}
    smax = field.max_frequency()
    for k in range(1, N + 1):
        p = np.arange(k + 1)
        factor = 1j * (k - 2 * p)
        for s in range(0, min(smax, N - k) + 1):
            l = k + s
            g_pos = field.coeffs.get(s, 0j)
            g_neg = field.coeffs.get(-s, 0j)
            if g_pos == 0 and g_neg == 0:
                continue
            rows, cols, vals = [p], [p], [factor * g_pos]
            if s > 0:
                rows.append(p)
                cols.append(p + s)
                vals.append(factor * g_neg)
            blocks[(k, l)] = _block(
                np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), (k + 1, l + 1)
            )
    return blocks


def _block(rows, cols, vals, shape) -> sp.csr_matrix:
    keep = vals != 0
    return sp.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=shape, dtype=complex)


def build_blocks_multi(ext: ExtendedField, table: MultiIndexTable, N: int) -> dict[tuple[int, int], sp.csr_matrix]:
    """Blocks ``F_{k,l}`` with entry ``i sum_j gamma_j f[j; delta - gamma]``."""
    if table.m != ext.m:
        raise LiftError(f"layout dimension {table.m} does not match extended field {ext.m}")
    if N > table.K:
        raise LiftError(f"section order {N} exceeds layout grade {table.K}")
    offsets = ext.offsets()
    triplets: dict[tuple[int, int], tuple[list, list, list]] = {}
    for k in range(1, N + 1):
        gammas = table.gamma_matrix(k)
        for shift, fvec in offsets.items():
            l = k + sum(shift)
            if l > N:
                continue
            vals = 1j * (gammas @ fvec)
            nz = np.flatnonzero(vals)
            if nz.size == 0:
                continue
            rows, cols, data = triplets.setdefault((k, l), ([], [], []))
            grade = table.grade(k)
            for row in nz:
                delta = tuple(a + b for a, b in zip(grade[row], shift))
                rows.append(row)
                cols.append(table.lookup[delta][1])
                data.append(vals[row])
    blocks = {}
    for (k, l), (rows, cols, data) in sorted(triplets.items()):
        shape = (len(table.grade(k)), len(table.grade(l)))
        mat = sp.coo_matrix((data, (rows, cols)), shape=shape, dtype=complex).tocsr()
        mat.sum_duplicates()
        mat.eliminate_zeros()
        blocks[(k, l)] = mat
    return blocks


def initial_lifted(x0_ext, table: MultiIndexTable, N: int) -> np.ndarray:
    """Stacked ``exp(i gamma . x0_ext)`` over grades ``1..N``."""
    if N > table.K:
        raise LiftError(f"section order {N} exceeds layout grade {table.K}")
    x0_ext = np.asarray(x0_ext, dtype=float)
    if x0_ext.shape != (table.m,):
        raise LiftError(f"extended state has shape {x0_ext.shape}, expected ({table.m},)")
    return np.concatenate([np.exp(1j * (table.gamma_matrix(k) @ x0_ext)) for k in range(1, N + 1)])


def assemble(blocks: Mapping[tuple[int, int], sp.spmatrix], z0, table: MultiIndexTable, N: int) -> LiftedSystem:
    """Stack blocks into one sparse operator and check the structural invariants."""
    offsets = table.offsets(N)
    dim = int(offsets[-1])
    grid = [[None] * N for _ in range(N)]
    for (k, l), blk in blocks.items():
        if not (1 <= k <= N and 1 <= l <= N):
            raise LiftError(f"block ({k}, {l}) outside section order {N}")
        if l < k:
            raise LiftError(f"block-upper-triangular invariant violated: block ({k}, {l}) present")
        expected = (offsets[k] - offsets[k - 1], offsets[l] - offsets[l - 1])
        if blk.shape != expected:
            raise LiftError(f"block ({k}, {l}) has shape {blk.shape}, expected {expected}")
        if k == l:
            coo = sp.coo_matrix(blk)
            if np.any(coo.row != coo.col):
                raise LiftError(f"diagonal-block invariant violated: block ({k}, {k}) is not diagonal")
            if np.any(coo.data.real != 0):
                raise LiftError(
                    f"diagonal-block invariant violated: block ({k}, {k}) has non-imaginary entries"
                )
        grid[k - 1][l - 1] = blk
    for k in range(N):
        if grid[k][k] is None:
            size = int(offsets[k + 1] - offsets[k])
            grid[k][k] = sp.csr_matrix((size, size), dtype=complex)
    operator = sp.bmat(grid, format="csr", dtype=complex)
    if z0 is not None:
        z0 = np.asarray(z0, dtype=complex)
        if z0.shape != (dim,):
            raise LiftError(f"initial state has length {z0.shape}, expected {dim}")
        if np.any(np.abs(np.abs(z0) - 1.0) > 1e-12):
            raise LiftError("unit-modulus invariant violated: initial state off the unit circle")
    frozen = {key: sp.csr_matrix(b) for key, b in sorted(blocks.items())}
    return LiftedSystem(N, table, frozen, z0, operator, offsets)


def lift_1d(field: FourierField1D, x0: float, N: int) -> LiftedSystem:
    """Carleman-Fourier section of order ``N`` for ``x' = g(x)``, ``x(0) = x0``."""
    table = enumerate_multiindices(2, N)
    z0 = initial_lifted(extend_state(x0, (1.0,)), table, N)
    return assemble(build_blocks_1d(field, N), z0, table, N)


def lift_multi(field: QuasiPeriodicField | FourierField1D, x0, N: int, cap: int = DEFAULT_DIM_CAP) -> LiftedSystem:
    """Carleman-Fourier section of order ``N`` for a quasi-periodic field."""
    if isinstance(field, FourierField1D):
        field = as_quasi_periodic(field)
    ext = extend_field(field)
    table = enumerate_multiindices(ext.m, N, cap=cap)
    z0 = initial_lifted(extend_state(x0, field.taus), table, N)
    return assemble(build_blocks_multi(ext, table, N), z0, table, N)


def grade_one_index(p: int, l: int, sign: int, d: int, L: int) -> int:
    """Position in grade 1 tracking ``(-1)**sign * tau_l * x_p`` (all 0-based)."""
    return sign * L * d + l * d + p


def block_entries(system: LiftedSystem):
    """Yield ``(k, l, row, col, value)`` for every stored block entry."""
    for (k, l), blk in system.blocks.items():
        coo = sp.coo_matrix(blk)
        order = np.lexsort((coo.col, coo.row))
        for i in order:
            yield k, l, int(coo.row[i]), int(coo.col[i]), complex(coo.data[i])


__all__ = [
    "DEFAULT_DIM_CAP",
    "LiftError",
    "LiftedSystem",
    "MultiIndexTable",
    "assemble",
    "block_entries",
    "build_blocks_1d",
    "build_blocks_multi",
    "enumerate_multiindices",
    "grade_one_index",
    "grade_size",
    "initial_lifted",
    "lift_1d",
    "lift_multi",
    "lifted_dimension",
]
