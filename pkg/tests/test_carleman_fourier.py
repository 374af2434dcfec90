import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from carleman.carleman_fourier import (
    LiftError,
    assemble,
    block_entries,
    build_blocks_1d,
    enumerate_multiindices,
    grade_one_index,
    grade_size,
    initial_lifted,
    lift_1d,
    lift_multi,
    lifted_dimension,
)
from carleman.fourier_field import (
    FourierField1D,
    QuasiPeriodicField,
    eval_field_1d,
    eval_field_multi,
    extend_field,
    extend_state,
)
from carleman.kuramoto import KuramotoModel, full_rhs, reduced_field

SQ2 = math.sqrt(2.0)


@pytest.mark.parametrize("m, k", [(2, 1), (2, 5), (4, 3), (6, 4)])
def test_grade_size_counts(m, k):
    table = enumerate_multiindices(m, k)
    assert len(table.grade(k)) == grade_size(m, k) == math.comb(k + m - 1, m - 1)
    assert table.dimension() == lifted_dimension(m, k)


def test_grade_order_lex_descending():
    table = enumerate_multiindices(2, 3)
    assert table.grade(2) == ((2, 0), (1, 1), (0, 2))
    g = enumerate_multiindices(3, 2).grade(2)
    assert list(g) == sorted(g, reverse=True)
    assert all(sum(x) == 2 for x in g)


def test_lookup_inverse():
    table = enumerate_multiindices(4, 3)
    for k in range(1, 4):
        for pos, gamma in enumerate(table.grade(k)):
            assert table.lookup[gamma] == (k, pos)


def test_dimension_cap():
    with pytest.raises(LiftError, match="state dimension cap exceeded"):
        enumerate_multiindices(8, 10, cap=1000)


def test_initial_lifted_examples():
    table = enumerate_multiindices(2, 3)
    z = initial_lifted(extend_state(math.pi / 2, (1.0,)), table, 1)
    np.testing.assert_allclose(z, [1j, -1j], atol=1e-15)
    z = initial_lifted(extend_state(0.77, (1.0,)), table, 2)
    assert z[2 + 1] == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_array_equal(initial_lifted(np.zeros(2), table, 3), np.ones(9))


@pytest.mark.parametrize("N", [1, 3, 8])
def test_structural_invariants(kuramoto_field, N):
    sys_ = lift_1d(kuramoto_field, 0.4, N)
    assert sys_.dim == lifted_dimension(2, N)
    assert all(l >= k for k, l in sys_.blocks)
    for k in range(1, N + 1):
        diag = sys_.blocks[(k, k)].toarray()
        assert np.all(diag.real == 0)
        assert np.count_nonzero(diag - np.diag(np.diag(diag))) == 0
    dense = sys_.operator.toarray()
    for k in range(1, N + 1):
        for l in range(1, k):
            assert not dense[sys_.grade_slice(k), sys_.grade_slice(l)].any()


def test_block_entries_1d_formula():
    g = {0: 0.3, 1: 0.2 - 0.1j, -1: 0.2 + 0.1j, 2: 0.05j, -2: -0.05j}
    field = FourierField1D(g)
    blocks = build_blocks_1d(field, 4)
    for (k, l), blk in blocks.items():
        s = l - k
        dense = blk.toarray()
        expected = np.zeros((k + 1, l + 1), dtype=complex)
        for p in range(k + 1):
            expected[p, p] += 1j * (k - 2 * p) * field.coeffs.get(s, 0)
            if s:
                expected[p, p + s] += 1j * (k - 2 * p) * field.coeffs.get(-s, 0)
        np.testing.assert_allclose(dense, expected, atol=1e-15)


@given(st.floats(-3, 3), st.integers(3, 8))
def test_operator_is_exact_derivative_below_truncation(x, N):
    # for grades k <= N - smax the section reproduces d/dt exp(i gamma x_ext) exactly
    field = reduced_field(0.7, 1.0)
    sys_ = lift_1d(field, x, N)
    z = sys_.z0
    gdot = eval_field_1d(field, x)
    dz = sys_.operator @ z
    for k in range(1, N - 1):
        gam = sys_.layout.gamma_matrix(k)
        expected = 1j * (gam @ np.array([gdot, -gdot])) * z[sys_.grade_slice(k)]
        np.testing.assert_allclose(dz[sys_.grade_slice(k)], expected, atol=1e-12)


@given(st.floats(-3, 3), st.integers(3, 5))
def test_multi_operator_is_exact_derivative(x, N):
    f = _two_freq()
    sys_ = lift_multi(f, [x], N)
    ext = extend_field(f)
    xe = extend_state([x], f.taus)
    xdot = ext.evaluate(xe)
    dz = sys_.operator @ sys_.z0
    for k in range(1, N):
        gam = sys_.layout.gamma_matrix(k)
        expected = 1j * (gam @ xdot) * sys_.z0[sys_.grade_slice(k)]
        np.testing.assert_allclose(dz[sys_.grade_slice(k)], expected, atol=1e-12)


def _two_freq():
    return QuasiPeriodicField(
        1,
        (1.0, SQ2),
        {(0, (0, 0)): 0.5, (0, (1, 0)): -0.15j, (0, (-1, 0)): 0.15j, (0, (0, 1)): -0.1j, (0, (0, -1)): 0.1j},
    )


@pytest.mark.parametrize("omega1", [0.0, 1.0])
@pytest.mark.parametrize("N", [1, 4, 10])
def test_multi_path_matches_1d_path(omega1, N):
    field = reduced_field(omega1, 1.0)
    a = lift_1d(field, 0.9, N)
    b = lift_multi(field, 0.9, N)
    diff = abs(a.operator - b.operator)
    assert (diff.max() if diff.nnz else 0.0) <= 1e-13
    np.testing.assert_allclose(a.z0, b.z0, atol=1e-13)


def test_kuramoto_d2_full_lift_is_consistent():
    model = KuramotoModel((0.5, -0.5), 2.0, (0.3, -0.3))
    f = full_rhs(model)
    sys_ = lift_multi(f, model.theta0, 3)
    assert sys_.layout.m == 4
    xdot = eval_field_multi(f, model.theta0)
    dz = sys_.operator @ sys_.z0
    z1 = sys_.z0[sys_.grade_slice(1)]
    expected = 1j * np.concatenate([xdot, -xdot]) * z1
    np.testing.assert_allclose(dz[sys_.grade_slice(1)], expected, atol=1e-13)


def test_conjugate_reversal_symmetry(kuramoto_field):
    # reversing a grade block and conjugating maps B onto itself for real fields
    sys_ = lift_1d(kuramoto_field, 0.2, 6)
    for (k, l), blk in sys_.blocks.items():
        dense = blk.toarray()
        np.testing.assert_allclose(dense[::-1, ::-1].conj(), dense, atol=1e-15)


def test_assemble_rejects_lower_block(kuramoto_field):
    table = enumerate_multiindices(2, 2)
    blocks = build_blocks_1d(kuramoto_field, 2)
    blocks[(2, 1)] = sp.csr_matrix((3, 2), dtype=complex)
    with pytest.raises(LiftError, match="block-upper-triangular"):
        assemble(blocks, None, table, 2)


def test_assemble_rejects_real_diagonal(kuramoto_field):
    table = enumerate_multiindices(2, 1)
    blocks = {(1, 1): sp.csr_matrix(np.diag([1.0 + 1j, -1j]))}
    with pytest.raises(LiftError, match="diagonal-block invariant"):
        assemble(blocks, None, table, 1)


def test_assemble_rejects_off_circle_state(kuramoto_field):
    table = enumerate_multiindices(2, 1)
    with pytest.raises(LiftError, match="unit-modulus"):
        assemble(build_blocks_1d(kuramoto_field, 1), np.array([1.0, 0.5]), table, 1)


def test_grade_one_index():
    assert grade_one_index(0, 0, 0, 1, 2) == 0
    assert grade_one_index(0, 1, 0, 1, 2) == 1
    assert grade_one_index(0, 1, 1, 1, 2) == 3
    assert grade_one_index(1, 0, 1, 2, 1) == 3


def test_block_entries_sorted(kuramoto_field):
    sys_ = lift_1d(kuramoto_field, 0.1, 4)
    entries = list(block_entries(sys_))
    keys = [(k, l, i, j) for k, l, i, j, _ in entries]
    assert keys == sorted(keys)
    assert len(entries) == sum(b.nnz for b in sys_.blocks.values())
