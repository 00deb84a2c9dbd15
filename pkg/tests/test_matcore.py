import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from muonlab.exceptions import DegenerateInputError, DimensionError, NumericError
from muonlab.matcore import (
    as_matrix,
    frobenius_inner,
    frobenius_norm,
    nuclear_norm,
    singular_values,
    spectral_norm,
    svd,
)


def test_frobenius_inner_examples():
    assert frobenius_inner(np.eye(2), np.eye(2)) == 2.0
    assert frobenius_inner(np.ones((3, 2)), np.zeros((3, 2))) == 0.0
    assert frobenius_inner([[1, 2], [3, 4]], [[5, 6], [7, 8]]) == 70.0


def test_frobenius_inner_shape_mismatch():
    with pytest.raises(DimensionError):
        frobenius_inner(np.eye(2), np.eye(3))


def test_frobenius_norm_examples():
    assert frobenius_norm(np.zeros((2, 2))) == 0.0
    assert frobenius_norm(np.eye(3)) == pytest.approx(np.sqrt(3), abs=1e-15)
    assert frobenius_norm([[3.0], [4.0]]) == 5.0


def test_as_matrix_rejects_bad_input():
    with pytest.raises(DimensionError):
        as_matrix(np.ones(3))
    with pytest.raises(DimensionError):
        as_matrix(np.ones((0, 2)))
    with pytest.raises(DimensionError):
        as_matrix(np.ones((2, 3)), tall=True)
    with pytest.raises(NumericError):
        as_matrix([[1.0, np.nan]])
    with pytest.raises(NumericError):
        as_matrix([[np.inf]])


def test_svd_diagonal():
    f = svd(np.diag([3.0, 2.0]))
    np.testing.assert_allclose(f.s, [3.0, 2.0])
    np.testing.assert_allclose(np.abs(f.u), np.eye(2), atol=1e-15)
    np.testing.assert_allclose(np.abs(f.v), np.eye(2), atol=1e-15)
    np.testing.assert_allclose(f.u * np.sign(np.diag(f.u)), np.eye(2), atol=1e-15)


def test_svd_reconstruction_random(rng):
    a = rng.standard_normal((8, 5))
    f = svd(a)
    assert f.rank == 5
    assert np.linalg.norm(f.reconstruct() - a) < 1e-10
    np.testing.assert_allclose(f.u.T @ f.u, np.eye(5), atol=1e-12)
    np.testing.assert_allclose(f.v.T @ f.v, np.eye(5), atol=1e-12)
    assert np.all(np.diff(f.s) <= 0) and np.all(f.s > 0)


def test_svd_rank_one_outer_product():
    x = np.array([1.0, -2.0, 0.5, 3.0])
    y = np.array([2.0, 1.0, -1.0])
    f = svd(np.outer(x, y))
    assert f.rank == 1
    assert f.s[0] == pytest.approx(np.linalg.norm(x) * np.linalg.norm(y), rel=1e-14)


def test_svd_zero_matrix_is_degenerate():
    with pytest.raises(DegenerateInputError):
        svd(np.zeros((3, 2)))


def test_nuclear_norm_examples():
    assert nuclear_norm(np.diag([3.0, 2.0])) == pytest.approx(5.0, abs=1e-14)
    assert nuclear_norm(np.eye(6)) == pytest.approx(6.0, abs=1e-13)
    assert nuclear_norm(np.zeros((4, 2))) == 0.0


def test_spectral_norm():
    assert spectral_norm(np.diag([3.0, -7.0, 2.0])) == pytest.approx(7.0)
    assert spectral_norm(np.zeros((2, 2))) == 0.0
    np.testing.assert_allclose(singular_values(np.diag([1.0, 4.0])), [4.0, 1.0])


shapes = st.tuples(st.integers(1, 12), st.integers(1, 12)).map(lambda t: (max(t), min(t)))
finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
# squares of these stay normal, so <a, a> itself is exact enough to compare
moderate = finite.filter(lambda x: x == 0.0 or abs(x) > 1e-100)


@given(shapes.flatmap(lambda s: arrays(np.float64, s, elements=moderate)))
def test_norm_identities(a):
    fro = frobenius_norm(a)
    assert fro**2 == pytest.approx(frobenius_inner(a, a), rel=1e-12, abs=1e-300)
    nuc = nuclear_norm(a)
    if fro == 0.0:
        assert nuc == 0.0
        return
    r = svd(a).rank
    assert fro <= nuc * (1 + 1e-12)
    assert nuc <= np.sqrt(r) * fro * (1 + 1e-12)


@given(shapes.flatmap(lambda s: arrays(np.float64, s, elements=finite)))
def test_norm_sandwich_any_scale(a):
    fro, nuc = frobenius_norm(a), nuclear_norm(a)
    assert (fro == 0.0) == (nuc == 0.0)
    if fro > 0.0:
        assert fro <= nuc * (1 + 1e-12)


@given(st.integers(1, 64), st.integers(1, 64), st.integers(0, 2**32 - 1))
def test_reconstruction_property(m, n, seed):
    m, n = max(m, n), min(m, n)
    a = np.random.default_rng(seed).standard_normal((m, n))
    f = svd(a)
    assert np.linalg.norm(f.reconstruct() - a) / np.linalg.norm(a) < 1e-9
