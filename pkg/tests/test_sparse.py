import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import csr_matrices, random_csr
from tridentsim.errors import DimensionError, ParameterError
from tridentsim.sparse import (
    CsrMatrix,
    column_normalize,
    elementwise_power,
    multiply_adds,
    prune,
    scale,
    spgeam,
    spgemm_local,
    transpose,
    vstack,
)


def dense_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # triple loop, independent of the kernel under test
    c = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for k in range(a.shape[1]):
            if a[i, k] != 0.0:
                for j in range(b.shape[1]):
                    c[i, j] += a[i, k] * b[k, j]
    return c


def dense_pattern(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (np.abs(a) > 0).astype(int) @ (np.abs(b) > 0).astype(int) > 0


def test_identity_times_a():
    a = CsrMatrix.from_dense([[1.0, 0, 2], [0, 3, 0], [4, 0, 5]])
    assert spgemm_local(CsrMatrix.identity(3), a).equals(a)


def test_two_by_two_product():
    a = CsrMatrix.from_dense([[1.0, 0], [0, 2]])
    b = CsrMatrix.from_dense([[0.0, 3], [4, 0]])
    np.testing.assert_array_equal(spgemm_local(a, b).to_dense(), [[0, 3], [8, 0]])


def test_empty_row_stays_empty(rng):
    a = random_csr(rng, 6, 5, 0.6)
    dense = a.to_dense()
    dense[2] = 0.0
    a = CsrMatrix.from_dense(dense)
    c = spgemm_local(a, random_csr(rng, 5, 7, 0.6))
    assert c.row_lengths()[2] == 0


def test_spgemm_dimension_mismatch():
    with pytest.raises(DimensionError):
        spgemm_local(CsrMatrix.empty(2, 3), CsrMatrix.empty(2, 3))


def test_spgeam_examples():
    a = CsrMatrix.from_dense([[1.0, 0], [0, 1]])
    b = CsrMatrix.from_dense([[0.0, 2], [0, 1]])
    np.testing.assert_array_equal(spgeam(a, b).to_dense(), [[1, 2], [0, 2]])
    assert spgeam(a, CsrMatrix.empty(2, 2)).equals(a)
    with pytest.raises(DimensionError):
        spgeam(a, CsrMatrix.empty(3, 2))


def test_cancellation_keeps_explicit_zeros(rng):
    a = random_csr(rng, 8, 8, 0.4, signed=True)
    z = spgeam(a, scale(a, -1.0))
    assert z.same_pattern(a)
    assert np.all(z.values == 0.0)


def test_spgemm_cancellation_keeps_entry():
    a = CsrMatrix.from_dense([[1.0, 1.0]])
    b = CsrMatrix.from_dense([[1.0], [-1.0]])
    c = spgemm_local(a, b)
    assert c.nnz == 1 and c.values[0] == 0.0


def test_normalize_prune_power_examples():
    col = column_normalize(CsrMatrix.from_dense([[2.0], [2.0]]))
    np.testing.assert_array_equal(col.values, [0.5, 0.5])
    p = prune(CsrMatrix.from_dense([[0.001, 0.5]]), 0.002)
    assert p.nnz == 1
    np.testing.assert_array_equal(p.to_dense(), [[0, 0.5]])
    np.testing.assert_array_equal(elementwise_power(CsrMatrix.from_dense([[0.5]]), 2).values, [0.25])
    with pytest.raises(ParameterError):
        prune(p, -1.0)


def test_prune_is_strict():
    m = CsrMatrix.from_dense([[0.002, 0.0019]])
    assert prune(m, 0.002).to_dense().tolist() == [[0.002, 0.0]]


def test_zero_sum_column_untouched():
    m = CsrMatrix.from_coo(2, 2, [0, 1], [0, 1], [0.0, 4.0])
    out = column_normalize(m)
    np.testing.assert_array_equal(out.values, [0.0, 1.0])


def test_from_coo_sums_duplicates_and_rejects_when_asked():
    m = CsrMatrix.from_coo(2, 2, [1, 0, 1], [1, 0, 1], [2.0, 1.0, 3.0])
    assert m.nnz == 2
    np.testing.assert_array_equal(m.to_dense(), [[1, 0], [0, 5]])
    with pytest.raises(ValueError):
        CsrMatrix.from_coo(2, 2, [1, 1], [1, 1], [2.0, 3.0], sum_duplicates=False)


def test_from_coo_bounds():
    with pytest.raises(DimensionError):
        CsrMatrix.from_coo(2, 2, [2], [0], [1.0])


def test_vstack_and_row_block(rng):
    a = random_csr(rng, 9, 6, 0.4)
    parts = [a.row_block(0, 4), a.row_block(4, 4), a.row_block(4, 9)]
    assert vstack(parts).equals(a)


def test_select_rows(rng):
    a = random_csr(rng, 7, 5, 0.5)
    sel = a.select_rows([5, 1, 1])
    np.testing.assert_array_equal(sel.to_dense(), a.to_dense()[[5, 1, 1]])


def test_multiply_adds_counts_products(rng):
    a = random_csr(rng, 10, 8, 0.3)
    b = random_csr(rng, 8, 9, 0.3)
    expected = int(((a.to_dense() != 0).astype(int) @ (b.to_dense() != 0).astype(int).sum(axis=1)).sum())
    assert multiply_adds(a, b) == expected


@settings(max_examples=80, deadline=None)
@given(st.data())
def test_spgemm_matches_dense_oracle(data):
    a = data.draw(csr_matrices(max_dim=10))
    b = data.draw(csr_matrices(max_dim=10, nrows=a.ncols))
    c = spgemm_local(a, b)
    c.check()
    ad, bd = a.to_dense(), b.to_dense()
    ref = dense_product(ad, bd)
    pattern = dense_pattern(ad, bd)
    got = np.zeros(c.shape, dtype=bool)
    got[c.row_ids(), c.colind] = True
    np.testing.assert_array_equal(got, pattern)
    scale_ = np.abs(ad) @ np.abs(bd)
    assert np.all(np.abs(c.to_dense() - ref) <= 1e-12 * np.maximum(scale_, 1e-300))


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_spgeam_commutative_associative(data):
    a = data.draw(csr_matrices(max_dim=8))
    b = data.draw(csr_matrices(nrows=a.nrows, ncols=a.ncols))
    c = data.draw(csr_matrices(nrows=a.nrows, ncols=a.ncols))
    ab, ba = spgeam(a, b), spgeam(b, a)
    assert ab.same_pattern(ba)
    np.testing.assert_array_equal(ab.values, ba.values)
    left, right = spgeam(ab, c), spgeam(a, spgeam(b, c))
    assert left.same_pattern(right)
    np.testing.assert_allclose(left.values, right.values, rtol=1e-12, atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(csr_matrices(max_dim=10, signed=False), st.sampled_from([0.0, 0.05, 0.2, 0.5]))
def test_prune_after_normalize(a, theta):
    n = column_normalize(a)
    sums = np.asarray(n.to_scipy().sum(axis=0)).ravel()
    nonzero_cols = np.unique(n.colind)
    np.testing.assert_allclose(sums[nonzero_cols], 1.0, atol=1e-12)
    p = prune(n, theta)
    p.check()
    assert p.nnz <= n.nnz
    assert np.all(p.values >= theta)


@settings(max_examples=40, deadline=None)
@given(csr_matrices(max_dim=10))
def test_transpose_involution(a):
    assert transpose(transpose(a)).equals(a)
    np.testing.assert_array_equal(transpose(a).to_dense(), a.to_dense().T)


def test_kernel_summation_order_is_ascending_k():
    # one output entry fed by k = 0, 1, 2 in that order
    vals = [1e16, 1.0, -1e16]
    a = CsrMatrix.from_dense([vals])
    b = CsrMatrix.from_dense([[1.0], [1.0], [1.0]])
    expected = (vals[0] + vals[1]) + vals[2]
    assert spgemm_local(a, b).values[0] == expected


def test_canonical_check_rejects_unsorted():
    m = CsrMatrix(1, 3, [0, 2], [2, 0], [1.0, 1.0])
    with pytest.raises(ValueError):
        m.check()
