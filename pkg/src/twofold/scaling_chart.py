"""Blown-up dynamics near the two-fold in the scaling chart.

Coordinates ``x = r2 x2``, ``y = r2**2 y_hat``, ``mu = r2 mu2`` with
``eps = r2**2``.  The chart field is::

    x2'    = X1+ (1 + phi) + X1- (1 - phi)
    y_hat' = [X2+ (1 + phi) + X2- (1 - phi)] / r2

evaluated with the rescaled arguments; one unit of chart time equals
``2 r2`` units of the original time.  All closed-form quantities are
leading coefficients in ``r2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.integrate import quad
from scipy.optimize import brentq

from . import _rk
from ._fields import chart_blocks, events, melnikov_params
from .errors import (CanardObstruction, InsufficientSmoothness, IntegrationError, NewtonDiverged,
                     NoCanard, NoEquilibrium, NoHopf, OpenLevelSet, SingularDenominator)
from .pws import NormalFormModel, delta_ii2, delta_vi3
from .regularizer import RegularizationFn, phi_eval, phi_inverse, y_hat_star0

QUAD_TOL = 1e-11
POLE_EXCLUSION = 1e-6


class Regime(str, enum.Enum):
    SADDLE = "saddle"
    FOCUS = "focus"
    NODE = "node"
    CENTER = "center"


# -- field --------------------------------------------------------------------

def _blend(fn, y_hat):
    ph = phi_eval(fn, y_hat)
    return 1.0 + ph, 1.0 - ph


def kappa2_field(model: NormalFormModel, fn: RegularizationFn, x2, y_hat, r2: float,
                 mu2: float) -> tuple:
    """Chart vector field ``(x2', y_hat')``; exact in ``r2`` and vectorized in the state."""
    a1, a2, b1, b2 = chart_blocks(model, r2, mu2)
    hp, hm = _blend(fn, y_hat)
    ev = lambda c: npoly.polyval2d(x2, y_hat, c)  # noqa: E731
    return ev(a1) * hp + ev(b1) * hm, ev(a2) * hp + ev(b2) * hm


def kappa2_jacobian(model: NormalFormModel, fn: RegularizationFn, x2: float, y_hat: float,
                    r2: float, mu2: float) -> np.ndarray:
    """Exact Jacobian of :func:`kappa2_field` with respect to ``(x2, y_hat)``."""
    blocks = chart_blocks(model, r2, mu2)
    hp, hm = _blend(fn, y_hat)
    dph = phi_eval(fn, y_hat, 1)
    val = [npoly.polyval2d(x2, y_hat, c) for c in blocks]
    dx = [npoly.polyval2d(x2, y_hat, npoly.polyder(c, axis=0)) for c in blocks]
    dy = [npoly.polyval2d(x2, y_hat, npoly.polyder(c, axis=1)) for c in blocks]
    jac = np.empty((2, 2))
    for row, (p, m) in enumerate(((0, 2), (1, 3))):
        jac[row, 0] = dx[p] * hp + dx[m] * hm
        jac[row, 1] = dy[p] * hp + dy[m] * hm + (val[p] - val[m]) * dph
    return jac


def _mu2_derivative(model, fn, x2, y_hat, r2, mu2):
    blocks = chart_blocks(model, r2, mu2, dmu=True)
    hp, hm = _blend(fn, y_hat)
    v = [npoly.polyval2d(x2, y_hat, c) for c in blocks]
    return np.array([v[0] * hp + v[2] * hm, v[1] * hp + v[3] * hm])


# -- equilibrium and linearization --------------------------------------------

def _require_equilibrium(model):
    if model.alpha * model.delta >= 0:
        raise NoEquilibrium("alpha*delta >= 0: no equilibrium in the scaling chart")


def equilibrium_k2(model: NormalFormModel, fn: RegularizationFn, r2: float, mu2: float,
                   tol: float = 1e-12, max_iter: int = 50) -> tuple:
    """Equilibrium ``(x2*, y_hat*)`` of the chart field.

    Seeded at ``(beta delta mu2 / Omega, y_hat_0*)``, which is exact for
    ``r2 = 0``, and refined by Newton on the full field.

    Raises
    ------
    NoEquilibrium
        If ``alpha delta >= 0``.
    NewtonDiverged
        If Newton leaves ``|y_hat| < 1`` or does not converge.
    """
    _require_equilibrium(model)
    lvl = y_hat_star0(model, fn)
    z = np.array([model.beta * model.delta / model.omega * mu2, lvl.y_hat])
    for _ in range(max_iter):
        f = np.array(kappa2_field(model, fn, z[0], z[1], r2, mu2))
        if np.max(np.abs(f)) <= tol:
            return float(z[0]), float(z[1])
        step = np.linalg.solve(kappa2_jacobian(model, fn, z[0], z[1], r2, mu2), f)
        z = z - step
        if not np.all(np.isfinite(z)) or abs(z[1]) >= 1.0:
            raise NewtonDiverged(f"equilibrium Newton left the band at r2={r2:g}, mu2={mu2:g}")
        if np.max(np.abs(step)) <= tol:
            return float(z[0]), float(z[1])
    raise NewtonDiverged(f"equilibrium Newton did not converge at r2={r2:g}, mu2={mu2:g}")


def equilibrium_mu2_derivative(model, fn, r2, mu2, z=None) -> np.ndarray:
    """``d(x2*, y_hat*)/d mu2`` along the equilibrium family."""
    if z is None:
        z = equilibrium_k2(model, fn, r2, mu2)
    jac = kappa2_jacobian(model, fn, z[0], z[1], r2, mu2)
    return -np.linalg.solve(jac, _mu2_derivative(model, fn, z[0], z[1], r2, mu2))


def _w_prime(fn, lvl):
    ph = phi_eval(fn, lvl.y_hat)
    return -2.0 * lvl.phi1 / (1.0 + ph) ** 2


def mu2_F(model: NormalFormModel, fn: RegularizationFn) -> float:
    """Node/focus boundary ``|mu2|`` of the ``r2 = 0`` equilibrium (``Omega > 0``)."""
    _require_equilibrium(model)
    om = model.omega
    if om <= 0:
        raise NoHopf("Omega <= 0: the equilibrium is a saddle")
    wp = _w_prime(fn, y_hat_star0(model, fn))
    return 2.0 * om ** 1.5 / (math.sqrt(-wp) * abs(model.alpha * model.beta))


@dataclass(frozen=True)
class Linearization:
    A: np.ndarray
    detA: float
    trA: float
    regime: Regime


def linearize_k2(model: NormalFormModel, fn: RegularizationFn, mu2: float) -> Linearization:
    """Linearization at ``r2 = 0`` in the slow parametrization of the critical manifold."""
    _require_equilibrium(model)
    a, b, om = model.alpha, model.beta, model.omega
    wp = _w_prime(fn, y_hat_star0(model, fn))
    A = np.array([[0.0, a * wp], [om / a, a * b / om * wp * mu2]])
    det = -om * wp
    tr = a * b / om * wp * mu2
    if om < 0:
        regime = Regime.SADDLE
    elif mu2 == 0.0:
        regime = Regime.CENTER
    elif abs(mu2) < mu2_F(model, fn):
        regime = Regime.FOCUS
    else:
        regime = Regime.NODE
    return Linearization(A, float(det), float(tr), regime)


# -- closed-form coefficients -------------------------------------------------

def _require_hopf(model):
    _require_equilibrium(model)
    if model.omega <= 0:
        raise NoHopf("Omega <= 0: no Hopf bifurcation")


def hopf_mu2(model: NormalFormModel, fn: RegularizationFn) -> float:
    """Leading coefficient of the Hopf value ``mu2_H / r2``."""
    _require_hopf(model)
    m = model
    lvl = y_hat_star0(m, fn)
    s = m.alpha * (m.zeta_plus + m.chi_plus) - m.delta * (m.zeta_minus + m.chi_minus)
    return (2.0 * s * m.omega / ((m.alpha - m.delta) ** 2 * lvl.phi1)
            - (m.chi_minus + m.beta * m.chi_plus) * lvl.y_hat) / m.beta


def lyapunov_a2(model: NormalFormModel, fn: RegularizationFn) -> float:
    """Leading coefficient ``a2`` of the first Lyapunov coefficient ``a = a2 r2``.

    Raises
    ------
    NoHopf
        If ``alpha delta >= 0`` or ``Omega <= 0``.
    InsufficientSmoothness
        If the equilibrium height is not interior to the band, where
        ``phi`` is three times differentiable.
    """
    _require_hopf(model)
    m = model
    lvl = y_hat_star0(m, fn)
    if not -1.0 < lvl.y_hat < 1.0:
        raise InsufficientSmoothness("third derivative of phi unavailable at the equilibrium")
    a, d, b, om = m.alpha, m.delta, m.beta, m.omega
    p1, p2, p3 = lvl.phi1, lvl.phi2, lvl.phi3
    first = (a - d) * p1 ** 2 / (16.0 * om ** 2) * (
        (b + 1.0) ** 2 * (d * m.zeta_minus - a * m.zeta_plus)
        - (a - d) ** 2 * (m.eta_minus + b * m.eta_plus))
    second = (b + 1.0) * p2 / (16.0 * om) * (d * m.chi_minus - a * m.chi_plus)
    third = 0.125 * (p3 / (p1 * (a - d)) - p2 ** 2 / (p1 ** 2 * (a - d)) - (b + 1.0) * p2 / om) * (
        d * (m.zeta_minus + m.chi_minus) - a * (m.zeta_plus + m.chi_plus))
    return first + second + third


def y_hat_c(model: NormalFormModel, fn: RegularizationFn) -> float:
    """Height where the Poisson factor ``beta(1-phi) - (1+phi)`` vanishes (``beta > 0``)."""
    if model.beta <= 0:
        raise NoCanard("beta <= 0: no canard height")
    return phi_inverse(fn, (model.beta - 1.0) / (model.beta + 1.0))


def canard_mu2(model: NormalFormModel, fn: RegularizationFn) -> float:
    """Leading coefficient ``mu2_c / r2`` of the maximal canard."""
    m = model
    if m.beta <= 0 or m.omega <= 0:
        raise NoCanard("the maximal canard requires beta > 0 and Omega > 0")
    yc = y_hat_c(m, fn)
    p1c = phi_eval(fn, yc, 1)
    return -(2.0 * m.omega / ((m.beta + 1.0) ** 2 * p1c) * (m.eta_minus + m.beta * m.eta_plus)
             + yc * (m.chi_minus + m.beta * m.chi_plus)) / m.beta


def cycle_discriminants(model: NormalFormModel) -> tuple:
    """``(Delta_II2, Delta_VI3)``."""
    return delta_ii2(model), delta_vi3(model)


# -- numerical Hopf point -----------------------------------------------------

def _trace_at(model, fn, r2, mu2):
    z = equilibrium_k2(model, fn, r2, mu2)
    return float(np.trace(kappa2_jacobian(model, fn, z[0], z[1], r2, mu2)))


def hopf_numeric(model: NormalFormModel, fn: RegularizationFn, r2: float,
                 guess: float | None = None, tol: float = 1e-13) -> float:
    """``mu2`` where the trace of the exact chart Jacobian vanishes at the equilibrium.

    Raises
    ------
    NoHopf
        If no sign change of the trace is bracketed near the guess.
    """
    _require_hopf(model)
    if guess is None:
        guess = hopf_mu2(model, fn) * r2
    width = max(0.05, 2.0 * abs(guess))
    for _ in range(8):
        lo, hi = guess - width, guess + width
        try:
            tlo = _trace_at(model, fn, r2, lo)
            thi = _trace_at(model, fn, r2, hi)
        except NewtonDiverged:
            width *= 0.5
            continue
        if tlo * thi < 0:
            return float(brentq(lambda m: _trace_at(model, fn, r2, m), lo, hi, xtol=tol))
        width *= 2.0
    raise NoHopf(f"no trace sign change near mu2={guess:g} at r2={r2:g}")


# -- Hamiltonian limit --------------------------------------------------------

def _poisson(model, fn, s):
    """``(hp, hm, den)`` with ``den = beta(1-phi) - (1+phi)``."""
    hp, hm = _blend(fn, s)
    return hp, hm, model.beta * hm - hp


def potential_slope(model: NormalFormModel, fn: RegularizationFn, y_hat):
    """``dH/dy_hat``."""
    hp, hm, den = _poisson(model, fn, y_hat)
    return (model.delta * hp + model.alpha * hm) / den


def _pole(model, fn):
    return y_hat_c(model, fn) if model.beta > 0 else None


def potential(model: NormalFormModel, fn: RegularizationFn, y_hat: float,
              y0: float | None = None) -> float:
    """``V(y_hat) = H(0, y_hat)``, linear outside the band, quadrature inside.

    Raises
    ------
    SingularDenominator
        If the path from ``y_hat_0*`` crosses the pole of the integrand.
    """
    if y0 is None:
        y0 = y_hat_star0(model, fn).y_hat
    lo, hi = min(y0, y_hat), max(y0, y_hat)
    pole = _pole(model, fn)
    if pole is not None and lo - POLE_EXCLUSION < pole < hi + POLE_EXCLUSION:
        raise SingularDenominator(f"integration path crosses y_hat_c = {pole:.12g}")
    sign = 1.0 if y_hat >= y0 else -1.0
    a, b = max(lo, -1.0), min(hi, 1.0)
    total = 0.0
    if b > a:
        total, _ = quad(lambda s: potential_slope(model, fn, s), a, b,
                        epsabs=QUAD_TOL, epsrel=1e-13, limit=200)
    # exact linear pieces outside the band
    if hi > 1.0:
        total += -model.delta * (hi - max(lo, 1.0))
    if lo < -1.0:
        total += model.alpha / model.beta * (min(hi, -1.0) - lo)
    return sign * total


def hamiltonian(model: NormalFormModel, fn: RegularizationFn, x2: float, y_hat: float) -> float:
    """``H = x2**2 / 2 + V(y_hat)`` of the chart field at ``r2 = mu2 = 0``."""
    return 0.5 * x2 * x2 + potential(model, fn, y_hat)


def _turning_point(model, fn, h, y0, side):
    """Solution of ``V(y) = h`` with ``side * (y - y0) > 0``."""
    pole = _pole(model, fn)
    V = lambda y: potential(model, fn, y, y0) - h  # noqa: E731
    edge = 1.0 if side > 0 else -1.0
    if pole is not None and side * (pole - y0) > 0:
        far = pole - side * 2.0 * POLE_EXCLUSION
        if V(far) < 0:
            raise CanardObstruction(f"level h={h:g} reaches the canard height {pole:.9g}")
        return brentq(V, y0, far, xtol=1e-14, rtol=1e-15)
    vedge = V(edge) if side * (edge - y0) > 0 else -h
    if vedge >= 0:
        return brentq(V, y0, edge, xtol=1e-14, rtol=1e-15)
    slope = -model.delta if side > 0 else model.alpha / model.beta
    growth = side * slope
    if growth <= 0:
        raise OpenLevelSet(f"level h={h:g} is unbounded on the {'upper' if side > 0 else 'lower'} side")
    start = edge if side * (edge - y0) > 0 else y0
    return start + side * (-vedge) / growth


@dataclass(frozen=True)
class HamiltonianOrbit:
    """Half of a closed level set, from ``(0, y_hat_0)`` to ``(0, y_hat_1)``."""

    h: float
    y_hat_0: float
    y_hat_1: float
    half_period: float
    t: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    d_r2: float = 0.0
    d_mu2_time: float = 0.0


def turning_points(model: NormalFormModel, fn: RegularizationFn, h: float) -> tuple:
    """``(y_hat_0^h, y_hat_1^h)`` with ``y_hat_0^h < y_hat_0* < y_hat_1^h``."""
    if not h > 0:
        raise OpenLevelSet("the energy must be positive")
    _require_equilibrium(model)
    y0 = y_hat_star0(model, fn).y_hat
    return _turning_point(model, fn, h, y0, -1), _turning_point(model, fn, h, y0, +1)


def hamiltonian_orbit(model: NormalFormModel, fn: RegularizationFn, h: float,
                      rtol: float = 1e-12, atol: float = 1e-13) -> HamiltonianOrbit:
    """Integrate the Hamiltonian field over half a period, with Melnikov integrands."""
    lo, hi = turning_points(model, fn, h)
    p = melnikov_params(model, fn)
    z0 = np.array([0.0, lo, 0.0, 0.0])
    hp, hm = _blend(fn, lo)
    v0 = model.delta * hp + model.alpha * hm
    ev = events((0, 0.0, -np.sign(v0), _rk.EV_TERMINAL), (1, 1.0, 0.0, _rk.EV_BREAK),
                (1, -1.0, 0.0, _rk.EV_BREAK))
    tmax = 1e3 * (1.0 + math.sqrt(h))
    out = _rk.integrate_model(p, 0.0, z0, tmax, rtol, atol, 0.0, np.inf, 10 ** 6, ev, True, 10 ** 6)
    status, t, z = out[0], out[1], out[2]
    if status != _rk.STATUS_EVENT:
        raise IntegrationError(f"half orbit at h={h:g} did not return to x2 = 0 (status {status})")
    if abs(z[1] - hi) > 1e-6 * (1.0 + abs(hi)):
        raise IntegrationError(f"half orbit returned at {z[1]:.12g}, expected {hi:.12g}")
    return HamiltonianOrbit(h, lo, hi, float(t), out[4], out[5][:, :2],
                            2.0 * float(z[2]), 2.0 * float(z[3]))


def _d_mu2_quadrature(model, fn, h, lo, hi, y0):
    b = model.beta
    if abs(lo) > 1.0 and abs(hi) > 1.0:
        def integrand(v):
            s = phi_inverse(fn, v)
            _, _, den = _poisson(model, fn, s)
            rad = max(2.0 * (h - potential(model, fn, s, y0)), 0.0)
            return b * math.copysign(math.sqrt(rad), -den) / den ** 2
        val, _ = quad(integrand, -1.0, 1.0, epsabs=QUAD_TOL, epsrel=1e-11, limit=200)
        return -4.0 * val
    # y = c - r cos(theta) removes the square-root endpoint behaviour
    c, r = 0.5 * (lo + hi), 0.5 * (hi - lo)

    def integrand(theta):
        s = c - r * math.cos(theta)
        if abs(s) >= 1.0:
            return 0.0
        _, _, den = _poisson(model, fn, s)
        rad = max(2.0 * (h - potential(model, fn, s, y0)), 0.0)
        x2 = math.copysign(math.sqrt(rad), -den)
        return b * phi_eval(fn, s, 1) / den ** 2 * x2 * r * math.sin(theta)

    pts = [math.acos((c - e) / r) for e in (-1.0, 1.0) if lo < e < hi]
    val, _ = quad(integrand, 0.0, math.pi, epsabs=QUAD_TOL, epsrel=1e-11, limit=200,
                  points=pts or None)
    return -4.0 * val


@dataclass(frozen=True)
class MelnikovResult:
    h: float
    d_r2: float
    d_mu2: float
    mu2_of_h: float
    orbit: HamiltonianOrbit = field(repr=False)


def melnikov(model: NormalFormModel, fn: RegularizationFn, h: float) -> MelnikovResult:
    """Distance-function derivatives and the cycle parameter ``mu2(h) / r2``.

    Raises
    ------
    OpenLevelSet
        If the level set ``H = h`` is unbounded.
    CanardObstruction
        If the level set reaches the canard height.
    """
    orbit = hamiltonian_orbit(model, fn, h)
    y0 = y_hat_star0(model, fn).y_hat
    d_mu2 = _d_mu2_quadrature(model, fn, h, orbit.y_hat_0, orbit.y_hat_1, y0)
    return MelnikovResult(h, orbit.d_r2, d_mu2, -orbit.d_r2 / d_mu2, orbit)


# -- summary ------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingChartAnalysis:
    """Leading-order scaling-chart quantities; ``None`` where not applicable."""

    x2_star: float | None
    y_hat_star: float | None
    detA: float | None
    trA: float | None
    regime: Regime | None
    mu2_H: float | None
    a2: float | None
    mu2_c: float | None
    mu2_F: float | None
    delta_II2: float
    delta_VI3: float
    y_hat_c: float | None


def _maybe(f, *args):
    try:
        return f(*args)
    except (NoEquilibrium, NoHopf, NoCanard, InsufficientSmoothness):
        return None


def analyze(model: NormalFormModel, fn: RegularizationFn, mu2: float = 0.0) -> ScalingChartAnalysis:
    lin = _maybe(linearize_k2, model, fn, mu2)
    eq = _maybe(equilibrium_k2, model, fn, 0.0, mu2)
    d2, d3 = cycle_discriminants(model)
    return ScalingChartAnalysis(
        x2_star=None if eq is None else eq[0],
        y_hat_star=None if eq is None else eq[1],
        detA=None if lin is None else lin.detA,
        trA=None if lin is None else lin.trA,
        regime=None if lin is None else lin.regime,
        mu2_H=_maybe(hopf_mu2, model, fn),
        a2=_maybe(lyapunov_a2, model, fn),
        mu2_c=_maybe(canard_mu2, model, fn),
        mu2_F=_maybe(mu2_F, model, fn),
        delta_II2=d2,
        delta_VI3=d3,
        y_hat_c=_maybe(y_hat_c, model, fn),
    )
