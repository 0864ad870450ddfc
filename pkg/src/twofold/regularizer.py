"""Transition functions and the regularized field.

The regularization replaces the switch at y = 0 by::

    X_eps = 1/2 X+ (1 + phi(y/eps)) + 1/2 X- (1 - phi(y/eps))

where ``phi`` is an odd polynomial on (-1, 1), clamped to +-1 outside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq

from .errors import InvalidRegularization, NoEquilibrium, OrderUnavailable, OutOfDomain
from .pws import NormalFormModel, RegionLabel, label_at

SEPTIC = (Fraction(1), Fraction(-14, 27), Fraction(83, 54), Fraction(-55, 54))
KINDS = ("linear", "cubic", "septic", "custom")


@dataclass(frozen=True)
class RegularizationFn:
    """Odd polynomial transition function.

    Parameters
    ----------
    kind : str
        One of ``linear``, ``cubic``, ``septic``, ``custom``.
    coefficients : tuple of float
        Coefficients of ``s, s**3, s**5, ...`` in ascending order.
    """

    kind: str
    coefficients: tuple

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if not coeffs:
            raise InvalidRegularization("phi needs at least one coefficient")
        object.__setattr__(self, "coefficients", coeffs)
        full = np.zeros(2 * len(coeffs))
        full[1::2] = coeffs
        polys = [Polynomial(full)]
        for _ in range(3):
            polys.append(polys[-1].deriv())
        object.__setattr__(self, "_polys", tuple(polys))
        self._validate()

    def _validate(self):
        p, dp = self._polys[0], self._polys[1]
        if abs(p(1.0) - 1.0) > 1e-12:
            raise InvalidRegularization(f"phi(1) = {p(1.0)!r}, expected 1")
        grid = np.linspace(-1.0, 1.0, 10001)[1:-1]
        if np.any(dp(grid) <= 0.0):
            raise InvalidRegularization("phi must be strictly increasing on (-1, 1)")
        vals = p(grid)
        if np.any(np.abs(vals) >= 1.0):
            raise InvalidRegularization("phi must map (-1, 1) into (-1, 1)")

    @property
    def smoothness(self) -> int:
        """Global differentiability class k of the clamped function."""
        k = 0
        for d in self._polys[1:]:
            if abs(d(1.0)) > 1e-12:
                break
            k += 1
        return k

    @property
    def polynomial(self) -> Polynomial:
        return self._polys[0]

    def power_coefficients(self) -> np.ndarray:
        """Coefficients of the interior polynomial in the power basis."""
        return self._polys[0].coef.copy()

    def __call__(self, s, order: int = 0):
        return phi_eval(self, s, order)

    @classmethod
    def linear(cls):
        return cls("linear", (1.0,))

    @classmethod
    def cubic(cls):
        return cls("cubic", (1.5, -0.5))

    @classmethod
    def septic(cls):
        return cls("septic", tuple(float(c) for c in SEPTIC))

    @classmethod
    def custom(cls, coefficients):
        return cls("custom", tuple(coefficients))

    @classmethod
    def from_kind(cls, kind: str, coefficients=None):
        if kind == "custom":
            if coefficients is None:
                raise InvalidRegularization("custom phi requires coefficients")
            return cls.custom(coefficients)
        if kind not in KINDS:
            raise InvalidRegularization(f"unknown phi kind {kind!r}")
        return getattr(cls, kind)()


def phi_eval(fn: RegularizationFn, s, order: int = 0):
    """``phi`` or one of its first three derivatives, clamped outside (-1, 1)."""
    if order not in (0, 1, 2, 3):
        raise OrderUnavailable(f"derivative order {order} not available (0..3)")
    s_arr = np.asarray(s, dtype=float)
    inside = np.abs(s_arr) < 1.0
    val = fn._polys[order](np.where(inside, s_arr, 0.0))
    if order == 0:
        val = np.where(inside, val, np.sign(s_arr))
    else:
        val = np.where(inside, val, 0.0)
    return float(val) if np.ndim(val) == 0 else val


def phi_inverse(fn: RegularizationFn, v: float) -> float:
    """Inverse of ``phi`` on (-1, 1): bracketed bisection, then Newton."""
    if not -1.0 < v < 1.0:
        raise OutOfDomain(f"phi^-1 requires a value in (-1, 1), got {v!r}")
    p, dp = fn._polys[0], fn._polys[1]
    s = brentq(lambda t: p(t) - v, -1.0, 1.0, xtol=1e-15, maxiter=200)
    for _ in range(3):
        d = dp(s)
        if d <= 0.0:
            break
        step = (p(s) - v) / d
        if abs(step) > 1e-10:
            break
        s -= step
    return float(s)


def w_transform(fn: RegularizationFn, y_hat: float, order: int = 0) -> float:
    """``w = (1 - phi)/(1 + phi)`` (order 0) or ``w' = -2 phi'/(1 + phi)**2`` (order 1)."""
    if not -1.0 < y_hat < 1.0:
        raise OutOfDomain(f"w requires y_hat in (-1, 1), got {y_hat!r}")
    ph = phi_eval(fn, y_hat)
    if order == 0:
        return (1.0 - ph) / (1.0 + ph)
    if order == 1:
        return -2.0 * phi_eval(fn, y_hat, 1) / (1.0 + ph) ** 2
    raise OrderUnavailable("w_transform provides orders 0 and 1")


def w_inverse(fn: RegularizationFn, z: float) -> float:
    if not z > 0.0 or not math.isfinite(z):
        raise OutOfDomain(f"w^-1 requires z in (0, inf), got {z!r}")
    return phi_inverse(fn, (1.0 - z) / (1.0 + z))


def regularized_field(model: NormalFormModel, fn: RegularizationFn, eps: float,
                      x, y, mu) -> tuple:
    """Regularized vector field ``X_eps`` at ``(x, y)``."""
    ph = phi_eval(fn, np.asarray(y, dtype=float) / eps)
    fp1, fp2 = model.plus(x, y, mu)
    fm1, fm2 = model.minus(x, y, mu)
    hp = 0.5 * (1.0 + ph)
    hm = 0.5 * (1.0 - ph)
    return fp1 * hp + fm1 * hm, fp2 * hp + fm2 * hm


@dataclass(frozen=True)
class CriticalManifoldPoint:
    x: float
    y_hat: float
    branch: str


def critical_manifold(model: NormalFormModel, fn: RegularizationFn, x: float,
                      mu: float) -> CriticalManifoldPoint | None:
    """Point of the critical manifold above ``(x, 0)``, or ``None`` off sliding."""
    a = float(model.xplus[1](x, 0.0, mu))
    b = float(model.xminus[1](x, 0.0, mu))
    lab = label_at(a, b)
    if lab not in (RegionLabel.STABLE_SLIDING, RegionLabel.UNSTABLE_SLIDING):
        return None
    yh = w_inverse(fn, a / -b)
    branch = "attracting" if lab is RegionLabel.STABLE_SLIDING else "repelling"
    return CriticalManifoldPoint(float(x), yh, branch)


def layer_field(model: NormalFormModel, fn: RegularizationFn, x: float, y_hat: float,
                mu: float, order: int = 0) -> float:
    """Fast normal component ``X2+ (1+phi) + X2- (1-phi)`` at y = 0, or its y_hat-derivative."""
    a = float(model.xplus[1](x, 0.0, mu))
    b = float(model.xminus[1](x, 0.0, mu))
    if order == 0:
        ph = phi_eval(fn, y_hat)
        return a * (1.0 + ph) + b * (1.0 - ph)
    return (a - b) * phi_eval(fn, y_hat, 1)


@dataclass(frozen=True)
class EquilibriumLevel:
    """``y_hat_0*`` and ``phi^(i)`` there for i = 1, 2, 3."""

    y_hat: float
    phi1: float
    phi2: float
    phi3: float


def y_hat_star0(model: NormalFormModel, fn: RegularizationFn) -> EquilibriumLevel:
    """Height of the blown-up equilibrium at ``r2 = mu2 = 0``.

    Raises
    ------
    NoEquilibrium
        If ``alpha delta > 0``.
    """
    if model.alpha * model.delta > 0:
        raise NoEquilibrium("alpha*delta > 0: no equilibrium in the scaling chart")
    q = model.delta / model.alpha
    yh = phi_inverse(fn, (1.0 + q) / (1.0 - q))
    return EquilibriumLevel(yh, *(phi_eval(fn, yh, k) for k in (1, 2, 3)))
