import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import ii2_model
from twofold.errors import CanardObstruction, NoCanard, NoEquilibrium, NoHopf, OpenLevelSet
from twofold.pws import model_from_coefficients
from twofold.regularizer import RegularizationFn, phi_eval, y_hat_star0
from twofold.scaling_chart import (Regime, analyze, canard_mu2, equilibrium_k2,
                                   equilibrium_mu2_derivative, hamiltonian, hamiltonian_orbit,
                                   hopf_mu2, hopf_numeric, kappa2_field, kappa2_jacobian,
                                   linearize_k2, lyapunov_a2, melnikov, mu2_F, potential,
                                   potential_slope, turning_points, y_hat_c)

LIN, CUB, SEP = RegularizationFn.linear(), RegularizationFn.cubic(), RegularizationFn.septic()


def test_ii2_goldens(ii2):
    assert hopf_mu2(ii2, LIN) == pytest.approx(13.0, abs=1e-12)
    assert hopf_mu2(ii2, CUB) == pytest.approx(26 / 3, abs=1e-12)
    assert lyapunov_a2(ii2, LIN) == pytest.approx(0.5, abs=1e-12)
    assert lyapunov_a2(ii2, CUB) == pytest.approx(-0.5, abs=1e-12)


def test_vi3_goldens(vi3):
    assert hopf_mu2(vi3, CUB) == pytest.approx(-1 / 12, abs=1e-12)
    assert hopf_mu2(vi3, SEP) == pytest.approx(-1 / 8, abs=1e-12)
    assert lyapunov_a2(vi3, CUB) == pytest.approx(-5 / 64, abs=1e-12)
    assert y_hat_c(vi3, CUB) == pytest.approx(0.2260737, abs=1e-6)
    assert phi_eval(CUB, y_hat_c(vi3, CUB), 1) == pytest.approx(1.4233, abs=5e-5)
    assert canard_mu2(vi3, CUB) == pytest.approx(-1 / (9 * phi_eval(CUB, y_hat_c(vi3, CUB), 1)),
                                                 abs=1e-14)
    assert canard_mu2(vi3, CUB) == pytest.approx(-0.07806, abs=5e-5)
    assert canard_mu2(vi3, SEP) == pytest.approx(-0.12188, abs=5e-5)


def test_vi3_septic_a2_is_positive(vi3):
    assert lyapunov_a2(vi3, SEP) == pytest.approx(5 / 144, abs=1e-12)


def test_no_canard_or_hopf_where_excluded(ii2):
    with pytest.raises(NoCanard):
        canard_mu2(ii2, CUB)
    saddle = model_from_coefficients(-1, 1, 2)
    assert saddle.omega < 0
    with pytest.raises(NoHopf):
        hopf_mu2(saddle, CUB)
    with pytest.raises(NoEquilibrium):
        equilibrium_k2(model_from_coefficients(1, 1, 1), CUB, 0.0, 0.0)


def test_equilibrium_at_r2_zero(vi3):
    x2, yh = equilibrium_k2(vi3, CUB, 0.0, 0.05)
    assert x2 == pytest.approx(vi3.beta * vi3.delta / vi3.omega * 0.05, abs=1e-14)
    assert yh == pytest.approx(y_hat_star0(vi3, CUB).y_hat, abs=1e-14)


@settings(max_examples=25)
@given(st.floats(0.0, 0.1), st.floats(-0.2, 0.2))
def test_equilibrium_residual(r2, mu2):
    m = ii2_model()
    x2, yh = equilibrium_k2(m, CUB, r2, mu2)
    f = kappa2_field(m, CUB, x2, yh, r2, mu2)
    assert max(abs(f[0]), abs(f[1])) <= 1e-11


def test_jacobian_matches_finite_differences(ii2):
    z, r2, mu2, h = (0.3, 0.2), 0.05, 0.4, 1e-7
    jac = kappa2_jacobian(ii2, SEP, *z, r2, mu2)
    for j in range(2):
        dz = np.zeros(2)
        dz[j] = h
        fp = np.array(kappa2_field(ii2, SEP, *(np.array(z) + dz), r2, mu2))
        fm = np.array(kappa2_field(ii2, SEP, *(np.array(z) - dz), r2, mu2))
        assert np.allclose(jac[:, j], (fp - fm) / (2 * h), rtol=1e-6, atol=1e-7)


def test_equilibrium_derivative(vi3):
    d = equilibrium_mu2_derivative(vi3, CUB, 0.05, 0.01)
    a = np.array(equilibrium_k2(vi3, CUB, 0.05, 0.01 + 1e-6))
    b = np.array(equilibrium_k2(vi3, CUB, 0.05, 0.01 - 1e-6))
    assert np.allclose(d, (a - b) / 2e-6, rtol=1e-6)


def test_linearization_regimes(ii2):
    assert linearize_k2(ii2, CUB, 0.0).regime is Regime.CENTER
    f = mu2_F(ii2, CUB)
    assert linearize_k2(ii2, CUB, 0.5 * f).regime is Regime.FOCUS
    assert linearize_k2(ii2, CUB, 2.0 * f).regime is Regime.NODE
    lin = linearize_k2(ii2, CUB, 0.3)
    assert lin.detA == pytest.approx(np.linalg.det(lin.A))
    assert lin.trA == pytest.approx(np.trace(lin.A))
    assert linearize_k2(model_from_coefficients(-1, 1, 2), CUB, 0.1).regime is Regime.SADDLE


def test_node_focus_boundary_discriminant(ii2):
    lin = linearize_k2(ii2, LIN, mu2_F(ii2, LIN))
    assert lin.trA ** 2 - 4 * lin.detA == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("fn,expected", [(LIN, 0.1297892), (CUB, 0.0865732)], ids=["linear", "cubic"])
def test_numeric_hopf(ii2, fn, expected):
    mu2 = hopf_numeric(ii2, fn, 0.01)
    assert mu2 == pytest.approx(expected, abs=1e-6)
    assert mu2 == pytest.approx(hopf_mu2(ii2, fn) * 0.01, abs=2e-3)


def test_numeric_hopf_converges_to_closed_form(vi3):
    errs = [abs(hopf_numeric(vi3, CUB, r2) / r2 - hopf_mu2(vi3, CUB)) for r2 in (0.02, 0.01)]
    assert errs[1] < 0.6 * errs[0]


def test_potential_slope_vanishes_at_equilibrium(ii2):
    y0 = y_hat_star0(ii2, CUB).y_hat
    assert abs(potential_slope(ii2, CUB, y0)) <= 1e-14
    assert potential(ii2, CUB, y0) == 0.0
    h = 1e-5
    fd = (potential(ii2, CUB, 0.4 + h) - potential(ii2, CUB, 0.4 - h)) / (2 * h)
    assert fd == pytest.approx(potential_slope(ii2, CUB, 0.4), rel=1e-6)


def test_field_is_hamiltonian(ii2):
    # at r2 = mu2 = 0 the chart field is a multiple of J grad H
    for x2, yh in ((0.3, 0.2), (-0.5, -0.4), (0.1, 1.7)):
        f = np.array(kappa2_field(ii2, CUB, x2, yh, 0.0, 0.0))
        h = 1e-6
        hx = (hamiltonian(ii2, CUB, x2 + h, yh) - hamiltonian(ii2, CUB, x2 - h, yh)) / (2 * h)
        hy = (hamiltonian(ii2, CUB, x2, yh + h) - hamiltonian(ii2, CUB, x2, yh - h)) / (2 * h)
        assert abs(f @ np.array([hx, hy])) <= 1e-7 * (1 + np.linalg.norm(f))


@pytest.mark.parametrize("h", [0.05, 0.5, 2.0])
@pytest.mark.parametrize("fn", [LIN, CUB], ids=["linear", "cubic"])
def test_hamiltonian_conserved_along_orbit(ii2, fn, h):
    orb = hamiltonian_orbit(ii2, fn, h)
    energy = np.array([hamiltonian(ii2, fn, x, y) for x, y in orb.nodes])
    assert np.max(np.abs(energy - h)) <= 1e-8
    assert orb.y_hat_0 < 0 < orb.y_hat_1


def test_turning_points_bracket(ii2):
    lo, hi = turning_points(ii2, CUB, 0.5)
    assert hamiltonian(ii2, CUB, 0.0, lo) == pytest.approx(0.5, abs=1e-12)
    assert hamiltonian(ii2, CUB, 0.0, hi) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(OpenLevelSet):
        turning_points(ii2, CUB, -1.0)


def test_level_set_blocked_by_canard(vi3):
    with pytest.raises(CanardObstruction):
        melnikov(vi3, CUB, 10.0)


def test_melnikov_small_orbit_tends_to_hopf(ii2):
    assert melnikov(ii2, CUB, 1e-4).mu2_of_h == pytest.approx(hopf_mu2(ii2, CUB), rel=1e-2)


def test_melnikov_large_h_limit(ii2):
    nu = 0.05
    m = melnikov(ii2, LIN, 1 / (2 * nu ** 2))
    target = -(-6.0) / (2 * nu ** 2)
    assert abs(m.mu2_of_h - target) <= 0.1 * target


def test_analyze_summary(vi3, ii2):
    a = analyze(vi3, CUB)
    assert a.mu2_c == pytest.approx(canard_mu2(vi3, CUB))
    assert a.delta_VI3 == pytest.approx(1 / 3, abs=1e-12)
    b = analyze(ii2, CUB)
    assert b.mu2_c is None and b.y_hat_c is None
    assert b.delta_II2 == pytest.approx(-6.0)
    assert b.regime is Regime.CENTER
    assert math.isfinite(b.mu2_F)
