import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from muonlab.exceptions import InfeasibleBatchError, StabilityConditionError
from muonlab.optimizer import Variant
from muonlab.theory import (
    BoundConstants,
    ComplexityModel,
    avg_grad_norm_bound,
    batch_coefficient,
    critical_batch,
    critical_batch_from_constants,
    critical_batch_muon,
    grad_norm_bound,
    momentum_tracking_bound,
    param_norm_bound,
    sfo_complexity,
    steps_needed,
    theorem_bound,
)


def _consts(**kw):
    base = dict(L=1.0, sigma2=1.0, n=4, eta=0.01, beta=0.9, lam=0.1, f_w0=2.0,
                w0_norm=1.0, wstar_norm=1.0, delta=0.5)
    base.update(kw)
    return BoundConstants(**base)


# ---------------------------------------------------------------------------
# derived constants


def test_beta_bar_frozen():
    c = _consts(beta=0.95)
    assert c.beta_bar == pytest.approx(0.0725, abs=1e-15)
    assert 2 * c.beta_bar == pytest.approx(0.145, abs=1e-15)


def test_derived_constants_from_fields():
    c = _consts(L=2.0, eta=0.1, beta=0.5, lam=0.2, n=8, w0_norm=3.0, wstar_norm=1.0)
    assert c.nu == pytest.approx(math.sqrt(8.0))
    assert c.gamma == pytest.approx(0.4)
    assert c.rho == pytest.approx((1 + 2 * 1.2 * 0.2) / 2)
    assert c.d0 == pytest.approx(2.0 * (3.0 + math.sqrt(8) / 0.2 + 1.0))


# ---------------------------------------------------------------------------
# norm bounds


def test_param_norm_bound_examples():
    c = _consts(lam=0.1, eta=1.0, n=4, w0_norm=5.0)
    assert param_norm_bound(c, 0) == pytest.approx(25.0, rel=1e-15)
    assert param_norm_bound(c, 10_000) == pytest.approx(20.0, rel=1e-12)
    at = _consts(lam=0.1, eta=10.0, n=4, w0_norm=123.0)
    for t in (1, 2, 7):
        assert param_norm_bound(at, t) == pytest.approx(20.0, rel=1e-15)
    # W_0 itself is unconstrained
    assert param_norm_bound(at, 0) == pytest.approx(143.0, rel=1e-15)


def test_grad_norm_bound_examples():
    c = _consts(L=2.0, lam=0.1, eta=10.0, n=1, wstar_norm=0.0, w0_norm=3.0)
    assert grad_norm_bound(c, 5) == pytest.approx(20.0, rel=1e-15)
    assert grad_norm_bound(c, 0) == pytest.approx(26.0, rel=1e-15)
    assert grad_norm_bound(c, 5, form="display") == pytest.approx(20.0, rel=1e-15)
    full = _consts(L=1.0, lam=0.1, eta=1.0, n=4, w0_norm=5.0, wstar_norm=1.0)
    assert grad_norm_bound(full, 3, form="display") == pytest.approx(0.9**3 * 5 + 10 + 1, rel=1e-14)
    # the derivation form keeps sqrt(n) on the floor: 0.729*5 + 20 + 1 = 24.645
    assert grad_norm_bound(full, 3) == pytest.approx(24.645, rel=1e-14)
    assert grad_norm_bound(full, 10**6) == pytest.approx(21.0, rel=1e-12)


def test_avg_grad_norm_bound_example():
    c = _consts(L=1.0, w0_norm=5.0, eta=1.0, lam=0.1, n=1, wstar_norm=0.0)
    assert avg_grad_norm_bound(c, 50) == pytest.approx(11.0, rel=1e-15)
    at = _consts(eta=10.0, lam=0.1)
    assert avg_grad_norm_bound(at, 1) == avg_grad_norm_bound(at, 1000)


def test_bounds_reject_unstable_and_bad_form():
    c = _consts(eta=11.0, lam=0.1)
    for fn in (lambda: param_norm_bound(c, 0), lambda: grad_norm_bound(c, 0),
               lambda: avg_grad_norm_bound(c, 5)):
        with pytest.raises(StabilityConditionError):
            fn()
    with pytest.raises(StabilityConditionError):
        param_norm_bound(_consts(lam=0.0), 0)
    with pytest.raises(ValueError):
        grad_norm_bound(_consts(), 1, form="fancy")


def test_momentum_tracking_examples():
    c = _consts(beta=0.9, delta=1.0, L=1.0, eta=0.01, n=4, sigma2=1.0)
    assert momentum_tracking_bound(c, 2, 10) == pytest.approx(1.0825, rel=1e-13)
    frozen = _consts(beta=0.9, delta=0.0, eta=0.0, sigma2=2.0)
    assert momentum_tracking_bound(frozen, 50, 4) == pytest.approx(2 * 0.1 * 2.0 / 4)
    near_one = _consts(beta=0.99999, delta=0.0, eta=0.0)
    assert momentum_tracking_bound(near_one, 1, 1) < 1e-4


# ---------------------------------------------------------------------------
# convergence bounds


@pytest.mark.parametrize("beta", [0.5, 0.9, 0.95])
def test_y_coefficients(beta):
    c = _consts(beta=beta, sigma2=3.0, lam=0.1)
    ys = {v: theorem_bound(c, v, 10, 10).Y for v in Variant}
    assert ys[Variant.PLAIN] == pytest.approx((1 - beta) * 3.0, rel=1e-14)
    assert ys[Variant.NESTEROV] == pytest.approx((2 * beta + 1) * (1 - beta) / 2 * 3.0, rel=1e-14)
    assert ys[Variant.WD] == pytest.approx((1 - beta + 0.05) * 3.0, rel=1e-14)
    assert ys[Variant.NESTEROV_WD] == pytest.approx(((2 * beta + 1) * (1 - beta) + 0.1) / 2 * 3.0, rel=1e-14)
    # weight decay adds exactly lambda sigma2 / 2
    assert ys[Variant.WD] - ys[Variant.PLAIN] == pytest.approx(0.05 * 3.0, rel=1e-12)


@pytest.mark.parametrize("variant", list(Variant))
def test_breakdown_recomposes(variant):
    c = _consts()
    for T, b in [(1, 1), (100, 8), (1000, 512)]:
        bd = theorem_bound(c, variant, T, b)
        assert bd.recomposed() == pytest.approx(bd.total, rel=1e-12)
        assert bd.rows()[-5][0] == "total"


@pytest.mark.parametrize("variant", list(Variant))
def test_bound_monotone_in_T_and_b(variant):
    c = _consts()
    grid = [1, 2, 5, 10, 100, 1000, 10**5]
    for b in grid:
        totals = [theorem_bound(c, variant, T, b).total for T in grid]
        assert all(x >= y for x, y in zip(totals, totals[1:]))
    for T in grid:
        totals = [theorem_bound(c, variant, T, b).total for b in grid]
        assert all(x >= y for x, y in zip(totals, totals[1:]))


def test_wd_variants_require_stability():
    c = _consts(eta=20.0, lam=0.1)
    with pytest.raises(StabilityConditionError):
        theorem_bound(c, Variant.WD, 10, 10)
    theorem_bound(c, Variant.PLAIN, 10, 10)


def test_breakdown_term_names():
    bd = theorem_bound(_consts(), Variant.NESTEROV_WD, 10, 4)
    assert set(bd.z_terms) == {"momentum_drift", "step_size", "decay_norm", "decay_gradient"}
    assert bd.Z == pytest.approx(sum(bd.z_terms.values()))
    assert bd.sublinear == pytest.approx(0.9 * math.sqrt(2 * 0.1 * 4) * 1.0)


# ---------------------------------------------------------------------------
# complexity model


def test_steps_needed_examples():
    m = ComplexityModel(X=100.0, Y=1.0, epsilon=0.1)
    assert steps_needed(m, 20) == pytest.approx(2000.0, rel=1e-14)
    assert steps_needed(m, 11) == pytest.approx(11000.0, rel=1e-12)
    assert steps_needed(m, 1e12) == pytest.approx(1000.0, rel=1e-9)
    with pytest.raises(InfeasibleBatchError):
        steps_needed(m, 10)


def test_sfo_example_and_minimiser():
    m = ComplexityModel(X=100.0, Y=1.0, epsilon=0.1)
    assert critical_batch(m) == pytest.approx(20.0)
    assert sfo_complexity(m, 20) == pytest.approx(40000.0, rel=1e-14)
    with pytest.raises(InfeasibleBatchError):
        sfo_complexity(m, 5)


@given(st.floats(0.1, 1e3), st.floats(0.01, 10.0), st.floats(1e-3, 1.0))
def test_sfo_convex_with_minimum_at_critical_batch(X, Y, eps):
    m = ComplexityModel(X=X, Y=Y, epsilon=eps)
    b_star = critical_batch(m)
    s = sfo_complexity(m, b_star)
    for f in (1.01, 1.3, 3.0):
        assert sfo_complexity(m, b_star * f) >= s * (1 - 1e-12)
    lo = m.min_batch * 1.05
    assert sfo_complexity(m, max(lo, b_star / 1.01)) >= s * (1 - 1e-12)
    # central difference of the derivative vanishes at b*
    h = b_star * 1e-5
    d = (sfo_complexity(m, b_star + h) - sfo_complexity(m, b_star - h)) / (2 * h)
    assert abs(d) <= 1e-4 * s / b_star


def test_model_validation():
    with pytest.raises(ValueError):
        ComplexityModel(X=0.0, Y=1.0, epsilon=0.1)
    with pytest.raises(ValueError):
        ComplexityModel(X=1.0, Y=-1.0, epsilon=0.1)


# ---------------------------------------------------------------------------
# critical batch


def test_critical_batch_coefficients():
    expected = {Variant.PLAIN: 0.1, Variant.NESTEROV: 0.145, Variant.WD: 0.2, Variant.NESTEROV_WD: 0.245}
    for v, coef in expected.items():
        assert abs(critical_batch_muon(1.0, 1.0, v, 0.95, 0.1) - coef) <= 1e-12
        assert critical_batch_muon(1.0, 0.01, v, 0.95, 0.1) == pytest.approx(coef * 100, rel=1e-12)


def test_critical_batch_limits():
    for v in Variant:
        assert critical_batch_muon(0.0, 0.1, v, 0.9, 0.1) == 0.0
    near = critical_batch_muon(2.0, 0.5, Variant.NESTEROV_WD, 0.999, 0.1)
    assert near == pytest.approx(0.1 * 2.0 / 0.5, rel=0.05)
    with pytest.raises(ValueError):
        critical_batch_muon(1.0, 0.0, Variant.PLAIN, 0.9)


@pytest.mark.parametrize("variant", list(Variant))
def test_larger_beta_smaller_critical_batch(variant):
    vals = [critical_batch_muon(1.0, 0.1, variant, b, 0.1) for b in (0.7, 0.9, 0.95)]
    assert vals[0] > vals[1] > vals[2]


def test_nesterov_dominance_switches_at_half():
    # (2 beta + 1)(1 - beta) >= 2 (1 - beta)  iff  beta >= 1/2
    for beta in np.linspace(0.0, 0.99, 100):
        nest = batch_coefficient(Variant.NESTEROV, beta)
        plain = batch_coefficient(Variant.PLAIN, beta)
        assert (nest >= plain - 1e-15) == (beta >= 0.5 - 1e-12)


@pytest.mark.parametrize("variant", list(Variant))
def test_prediction_matches_theorem_decomposition(variant):
    c = _consts(beta=0.9, lam=0.1, sigma2=7.0)
    lam = 0.1 if variant.weight_decay else 0.0
    assert critical_batch_from_constants(c, variant, 0.2) == pytest.approx(
        critical_batch_muon(7.0, 0.2, variant, 0.9, lam), rel=1e-13)
