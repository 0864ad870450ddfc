import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import ONE, U, X, vi3_model
from twofold.errors import (InvalidRegularization, NoEquilibrium, OrderUnavailable,
                            OutOfDomain)
from twofold.pws import extract_coefficients, model_from_coefficients
from twofold.regularizer import (RegularizationFn, critical_manifold, layer_field, phi_eval,
                                 phi_inverse, regularized_field, w_inverse, w_transform,
                                 y_hat_star0)

FNS = [RegularizationFn.linear(), RegularizationFn.cubic(), RegularizationFn.septic()]
IDS = ["linear", "cubic", "septic"]
inner = st.floats(-0.999, 0.999)


@pytest.mark.parametrize("fn", FNS, ids=IDS)
def test_endpoints_and_clamp(fn):
    assert phi_eval(fn, 1.0) == 1.0 and phi_eval(fn, -1.0) == -1.0
    assert phi_eval(fn, 0.0) == 0.0
    assert phi_eval(fn, 3.0) == 1.0 and phi_eval(fn, -7.0) == -1.0
    for k in (1, 2, 3):
        assert phi_eval(fn, 1.5, k) == 0.0


@pytest.mark.parametrize("fn", FNS, ids=IDS)
@settings(max_examples=50)
@given(s=inner)
def test_odd_and_increasing(fn, s):
    assert phi_eval(fn, -s) == pytest.approx(-phi_eval(fn, s), abs=1e-15)
    assert phi_eval(fn, s, 1) > 0.0
    assert -1.0 < phi_eval(fn, s) < 1.0


def test_smoothness_classes():
    assert RegularizationFn.linear().smoothness == 0
    assert RegularizationFn.cubic().smoothness == 1
    assert RegularizationFn.septic().smoothness == 1


def test_cubic_values():
    fn = RegularizationFn.cubic()
    assert phi_eval(fn, 0.5) == pytest.approx(0.75 - 0.0625)
    assert phi_eval(fn, 0.0, 1) == 1.5
    assert phi_eval(fn, 0.5, 2) == pytest.approx(-1.5)
    assert phi_eval(fn, 0.2, 3) == pytest.approx(-3.0)


def test_derivatives_match_finite_differences():
    fn = RegularizationFn.septic()
    h = 1e-6
    for s in (-0.7, 0.1, 0.6):
        for k in (0, 1, 2):
            fd = (phi_eval(fn, s + h, k) - phi_eval(fn, s - h, k)) / (2 * h)
            assert phi_eval(fn, s, k + 1) == pytest.approx(fd, rel=1e-6, abs=1e-6)


def test_order_unavailable():
    with pytest.raises(OrderUnavailable):
        phi_eval(RegularizationFn.cubic(), 0.1, 4)


def test_vectorised_evaluation():
    fn = RegularizationFn.cubic()
    s = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
    out = phi_eval(fn, s)
    assert out.shape == s.shape
    assert out[0] == -1.0 and out[-1] == 1.0


def test_invalid_custom_rejected():
    with pytest.raises(InvalidRegularization):
        RegularizationFn.custom([0.5])
    with pytest.raises(InvalidRegularization):
        RegularizationFn.custom([3.0, -2.0])
    with pytest.raises(InvalidRegularization):
        RegularizationFn.from_kind("quintic")


def test_custom_matches_named():
    assert RegularizationFn.custom([1.5, -0.5]).coefficients == RegularizationFn.cubic().coefficients


@pytest.mark.parametrize("fn", FNS, ids=IDS)
@settings(max_examples=50)
@given(s=inner)
def test_inverse_round_trip(fn, s):
    assert phi_inverse(fn, phi_eval(fn, s)) == pytest.approx(s, abs=1e-12)


def test_inverse_domain():
    with pytest.raises(OutOfDomain):
        phi_inverse(RegularizationFn.cubic(), 1.0)


@pytest.mark.parametrize("fn", FNS, ids=IDS)
@settings(max_examples=50)
@given(s=inner)
def test_w_reciprocal_symmetry(fn, s):
    assert w_transform(fn, s) * w_transform(fn, -s) == pytest.approx(1.0, rel=1e-12)
    assert w_inverse(fn, w_transform(fn, s)) == pytest.approx(s, abs=1e-10)


def test_w_derivative():
    fn = RegularizationFn.cubic()
    h = 1e-6
    fd = (w_transform(fn, 0.3 + h) - w_transform(fn, 0.3 - h)) / (2 * h)
    assert w_transform(fn, 0.3, 1) == pytest.approx(fd, rel=1e-7)
    assert w_transform(fn, 0.0) == 1.0
    with pytest.raises(OutOfDomain):
        w_transform(fn, 1.0)
    with pytest.raises(OutOfDomain):
        w_inverse(fn, 0.0)


def test_regularized_field_limits(vi3):
    fn = RegularizationFn.cubic()
    eps = 1e-3
    above = regularized_field(vi3, fn, eps, 0.2, 2e-3, 0.01)
    below = regularized_field(vi3, fn, eps, 0.2, -2e-3, 0.01)
    assert above == pytest.approx(tuple(float(v) for v in vi3.plus(0.2, 2e-3, 0.01)))
    assert below == pytest.approx(tuple(float(v) for v in vi3.minus(0.2, -2e-3, 0.01)))
    mid = regularized_field(vi3, fn, eps, 0.2, 0.0, 0.01)
    avg = [0.5 * (float(p) + float(m)) for p, m in zip(vi3.plus(0.2, 0, 0.01), vi3.minus(0.2, 0, 0.01))]
    assert mid == pytest.approx(tuple(avg))


@settings(max_examples=30)
@given(st.floats(-1e-3, 1e-3), st.floats(-0.5, 0.5))
def test_regularized_field_continuous_for_linear(y, x):
    fn = RegularizationFn.linear()
    eps = 1e-3
    a = regularized_field(vi3_model(), fn, eps, x, y, 0.0)
    b = regularized_field(vi3_model(), fn, eps, x, y + 1e-12, 0.0)
    assert np.allclose(a, b, atol=1e-8)


def test_critical_manifold_is_layer_zero(vi3):
    fn = RegularizationFn.cubic()
    for x, branch in ((-0.3, "attracting"), (0.3, "repelling")):
        cm = critical_manifold(vi3, fn, x, 0.0)
        assert cm is not None and cm.branch == branch
        assert abs(layer_field(vi3, fn, x, cm.y_hat, 0.0)) <= 1e-12
    assert critical_manifold(vi3, fn, 0.05, 0.1) is None


def test_critical_manifold_stability_sign(vi3):
    fn = RegularizationFn.septic()
    att = critical_manifold(vi3, fn, -0.3, 0.0)
    rep = critical_manifold(vi3, fn, 0.3, 0.0)
    assert layer_field(vi3, fn, att.x, att.y_hat, 0.0, order=1) < 0
    assert layer_field(vi3, fn, rep.x, rep.y_hat, 0.0, order=1) > 0


def test_equilibrium_level(ii2, vi3):
    for m in (ii2, vi3):
        lvl = y_hat_star0(m, RegularizationFn.cubic())
        q = m.delta / m.alpha
        assert phi_eval(RegularizationFn.cubic(), lvl.y_hat) == pytest.approx((1 + q) / (1 - q), abs=1e-14)
        assert lvl.phi1 == pytest.approx(1.5)
    m = extract_coefficients((-ONE, X), (2 * ONE, -U))
    lvl = y_hat_star0(m, RegularizationFn.linear())
    assert lvl.y_hat == pytest.approx(1 / 3) and lvl.phi2 == 0.0


def test_equilibrium_level_requires_sign():
    with pytest.raises(NoEquilibrium):
        y_hat_star0(model_from_coefficients(1, 1, 1), RegularizationFn.cubic())


def test_phi_is_callable():
    fn = RegularizationFn.cubic()
    assert fn(0.5) == phi_eval(fn, 0.5)
    assert math.isclose(fn(0.5, 1), 1.5 - 1.5 * 0.25)
