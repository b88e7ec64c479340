import math

import numpy as np
import pytest

from mnarmc import ObservedData, mean_value, norms, shift, svd


def test_shift_zero_base_case():
    out = shift(np.zeros((2, 2)), 1.5)
    assert np.array_equal(out, np.full((2, 2), 1.5))


def test_shift_inverse_pair_bitwise():
    # dyadic entries and a dyadic constant make the round trip exact
    rng = np.random.default_rng(0)
    M = rng.integers(-2048, 2048, size=(5, 6)) / 1024.0
    back = shift(shift(M, 1.5), -1.5)
    assert back.tobytes() == M.tobytes()


def test_shift_identity():
    rng = np.random.default_rng(1)
    M = rng.standard_normal((4, 3))
    assert np.array_equal(shift(M, 0.0), M)


def test_shift_rejects_nonfinite_constant():
    with pytest.raises(ValueError):
        shift(np.zeros((2, 2)), math.inf)


def test_mean_value_closed_forms():
    assert mean_value(np.ones((3, 4))) == 1.0
    assert mean_value(np.array([[1.0, 2.0], [3.0, 4.0]])) == 2.5


def test_mean_value_shift_relation(rng):
    M = rng.standard_normal((7, 5))
    assert mean_value(shift(M, 2.25)) == pytest.approx(mean_value(M) + 2.25, rel=1e-12)


def test_mean_value_centering(rng):
    M = rng.standard_normal((6, 6))
    centered = shift(M, -mean_value(M))
    assert abs(mean_value(centered)) <= 1e-12 * np.abs(M).max()


def test_norms_identity():
    out = norms(np.eye(3))
    assert out.frobenius == pytest.approx(math.sqrt(3.0), rel=1e-14)
    assert out.nuclear == pytest.approx(3.0, rel=1e-12)
    assert out.spectral == pytest.approx(1.0, rel=1e-12)
    assert out.entry_max == 1.0


def test_norms_rank_one(rng):
    u = rng.standard_normal(6)
    v = rng.standard_normal(4)
    u /= np.linalg.norm(u)
    v /= np.linalg.norm(v)
    out = norms(np.outer(u, v))
    for value in (out.frobenius, out.nuclear, out.spectral):
        assert value == pytest.approx(1.0, rel=1e-12)


def test_norms_nuclear_matches_svd(rng):
    M = rng.standard_normal((6, 5))
    out = norms(M)
    assert out.nuclear == pytest.approx(float(svd(M).singulars.sum()), rel=1e-10)
    assert out.spectral <= out.frobenius <= out.nuclear


def test_norm_triangle_inequalities(rng):
    for _ in range(20):
        A = rng.standard_normal((5, 7))
        B = rng.standard_normal((5, 7))
        na, nb, nab = norms(A), norms(B), norms(A + B)
        for attr in ("frobenius", "nuclear", "spectral"):
            lhs = getattr(nab, attr)
            rhs = getattr(na, attr) + getattr(nb, attr)
            assert lhs <= rhs * (1.0 + 1e-9)


def test_nuclear_norm_convex_in_shift(rng):
    M = rng.standard_normal((6, 8))
    h = lambda c: norms(shift(M, c)).nuclear
    for _ in range(50):
        c1, c2 = rng.uniform(-5, 5, size=2)
        mid = h(0.5 * (c1 + c2))
        assert mid <= 0.5 * (h(c1) + h(c2)) + 1e-9


def test_svd_diagonal():
    out = svd(np.diag([3.0, 2.0, 1.0]))
    assert np.allclose(out.singulars, [3.0, 2.0, 1.0])


def test_svd_zero_matrix():
    out = svd(np.zeros((4, 3)))
    assert np.all(out.singulars == 0.0)


def test_svd_reconstruction_and_orthonormality(rng):
    M = rng.standard_normal((7, 4))
    out = svd(M)
    tol = 1e-8 * out.singulars[0] * math.sqrt(M.size)
    assert np.linalg.norm(out.reconstruct() - M) <= tol
    assert np.allclose(out.left.T @ out.left, np.eye(4), atol=1e-12)
    assert np.allclose(out.right.T @ out.right, np.eye(4), atol=1e-12)
    assert np.all(np.diff(out.singulars) <= 0.0)
    assert np.all(out.singulars >= 0.0)


def test_svd_sign_convention_deterministic(rng):
    M = rng.standard_normal((6, 6))
    a = svd(M)
    b = svd(M.copy())
    assert np.array_equal(a.left, b.left)
    assert np.array_equal(a.right, b.right)
    for k in range(a.singulars.size):
        col = a.left[:, k]
        nz = np.nonzero(col)[0]
        assert col[nz[0]] >= 0.0


def test_as_matrix_rejects_bad_input():
    from mnarmc import as_matrix

    with pytest.raises(ValueError):
        as_matrix(np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        as_matrix(np.array([[1.0, math.nan]]))


def test_observed_data_zeroes_unobserved_and_indexes(rng):
    X = rng.standard_normal((4, 5))
    W = np.zeros((4, 5))
    W[1, 2] = W[3, 0] = W[1, 4] = 1
    data = ObservedData(X, W)
    assert data.values[0, 0] == 0.0
    assert data.values[1, 2] == X[1, 2]
    assert data.n_observed == 3
    assert list(data.row_indices[1]) == [2, 4]
    assert list(data.col_indices[0]) == [3]
    rows, cols = data.observed_positions()
    assert sorted(zip(rows, cols)) == [(1, 2), (1, 4), (3, 0)]


def test_observed_data_rejects_bad_mask(rng):
    X = rng.standard_normal((3, 3))
    with pytest.raises(ValueError):
        ObservedData(X, np.full((3, 3), 0.5))
    with pytest.raises(ValueError):
        ObservedData(X, np.ones((2, 3)))


def test_observed_data_immutable(rng):
    data = ObservedData(rng.standard_normal((3, 3)), np.ones((3, 3)))
    with pytest.raises(ValueError):
        data.values[0, 0] = 7.0
