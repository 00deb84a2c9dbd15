import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from muonlab.exceptions import DimensionError, NumericError
from muonlab.matcore import frobenius_inner, nuclear_norm
from muonlab.orthogonalize import (
    NS5_COEFFS,
    NS_BAND,
    NS_BAND_TOL,
    OrthKind,
    OrthMethod,
    newton_schulz5,
    ns_vs_exact,
    orthogonalize,
    orthogonalize_exact,
    quintic,
    quintic_iterate,
)
from muonlab.rng import random_orthonormal, spread_spectrum_matrix


def test_default_coefficients():
    assert NS5_COEFFS == (3.4445, -4.7750, 2.0315)
    m = OrthMethod.newton_schulz()
    assert m.ns_coeffs == NS5_COEFFS and m.ns_steps == 5
    assert OrthMethod().kind is OrthKind.EXACT_SVD


def test_ns_steps_must_be_positive():
    with pytest.raises(ValueError):
        OrthMethod.newton_schulz(steps=0)
    with pytest.raises(ValueError):
        OrthMethod(ns_steps=-2)


def test_quintic_frozen_values():
    assert quintic(1.0) == pytest.approx(0.7010, abs=1e-12)
    # frozen from the scalar recursion
    assert quintic_iterate(0.5) == pytest.approx(0.7654385304543396, abs=1e-15)
    assert quintic_iterate(1.0) == pytest.approx(0.6964364094697522, abs=1e-15)


def test_exact_diagonal_gives_identity():
    np.testing.assert_allclose(orthogonalize_exact(np.diag([3.0, 2.0])), np.eye(2), atol=1e-15)
    out = orthogonalize(np.diag([3.0, 2.0]), OrthMethod.exact())
    np.testing.assert_allclose(out.direction, np.eye(2), atol=1e-15)
    assert out.path is OrthKind.EXACT_SVD and not out.degenerate and out.rank == 2


def test_exact_tall_diagonal_block():
    c = np.zeros((4, 2))
    c[0, 0], c[1, 1] = 3.0, 2.0
    o = orthogonalize_exact(c)
    np.testing.assert_allclose(o[:2], np.eye(2), atol=1e-15)
    np.testing.assert_allclose(o[2:], 0.0, atol=1e-15)


def test_exact_inner_product_is_nuclear_norm(rng):
    c = rng.standard_normal((8, 5))
    assert frobenius_inner(c, orthogonalize_exact(c)) == pytest.approx(nuclear_norm(c), abs=1e-9)


def test_exact_full_rank_norm_and_argmax(rng):
    c = rng.standard_normal((10, 4))
    o = orthogonalize_exact(c)
    assert np.linalg.norm(o) ** 2 == pytest.approx(4.0, abs=1e-10)
    np.testing.assert_allclose(o.T @ o, np.eye(4), atol=1e-12)
    best = frobenius_inner(c, o)
    for _ in range(20):
        q = random_orthonormal(10, 4, rng)
        assert frobenius_inner(c, q) <= best + 1e-12


def test_exact_rank_deficient(rng):
    c = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 4))
    out = orthogonalize(c)
    assert out.rank == 2
    assert np.linalg.norm(out.direction) ** 2 == pytest.approx(2.0, abs=1e-10)


def test_zero_input_is_degenerate():
    for method in (OrthMethod.exact(), OrthMethod.newton_schulz()):
        out = orthogonalize(np.zeros((5, 3)), method)
        assert out.degenerate and out.rank == 0
        assert not np.any(out.direction)


def test_wide_input_rejected():
    with pytest.raises(DimensionError):
        orthogonalize(np.ones((2, 3)))
    with pytest.raises(DimensionError):
        newton_schulz5(np.ones((2, 3)))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_ns_overflow_raises():
    # absurd coefficients blow the iterate up
    with pytest.raises(NumericError):
        newton_schulz5(np.eye(3), OrthMethod.newton_schulz(steps=40, coeffs=(50.0, 0.0, 1e6)))


def test_ns_isotropic_matches_scalar_oracle():
    q = random_orthonormal(9, 4, np.random.default_rng(1))
    x = newton_schulz5(q)
    s = np.linalg.svd(x, compute_uv=False)
    np.testing.assert_allclose(s, quintic_iterate(0.5), atol=1e-9)


def test_ns_acts_on_singular_values_only(rng):
    u = random_orthonormal(7, 3, rng)
    v = random_orthonormal(3, 3, rng)
    s = np.array([3.0, 2.0, 1.0])
    x = newton_schulz5((u * s) @ v.T)
    expected = (u * quintic_iterate(s / np.linalg.norm(s))) @ v.T
    np.testing.assert_allclose(x, expected, atol=1e-12)


def test_ns_direction_agreement(rng):
    # <NS5(c), polar(c)> / n is the mean of the quintic's output over the
    # normalized spectrum, which oscillates in about [0.68, 1.13]. Single draws
    # dip below 0.9 (about 4 in 10 Gaussian 16 x 8 matrices); the average does not.
    agree = []
    for _ in range(200):
        c = rng.standard_normal((16, 8))
        agree.append(frobenius_inner(newton_schulz5(c), orthogonalize_exact(c)) / 8)
    assert np.mean(agree) >= 0.9
    assert min(agree) >= 0.75


@pytest.mark.parametrize("shape", [(8, 4), (16, 8), (64, 32)])
def test_ns_within_band(shape):
    rng = np.random.default_rng(sum(shape))
    for _ in range(10):
        rep = ns_vs_exact(spread_spectrum_matrix(*shape, rng))
        assert rep.ok, rep
        assert rep.tolerance == pytest.approx(NS_BAND_TOL * np.sqrt(shape[1]))
        assert NS_BAND[0] <= rep.sv_min and rep.sv_max <= NS_BAND[1]


@given(st.floats(1e-3, 1e3), st.integers(0, 10_000), st.sampled_from(["exact", "ns"]))
def test_scale_invariance(alpha, seed, which):
    c = np.random.default_rng(seed).standard_normal((6, 3))
    method = OrthMethod.exact() if which == "exact" else OrthMethod.newton_schulz()
    a = orthogonalize(c, method).direction
    b = orthogonalize(alpha * c, method).direction
    np.testing.assert_allclose(a, b, atol=1e-10)
