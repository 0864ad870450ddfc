"""Piecewise-smooth two-fold systems at epsilon = 0.

The upper field ``X+`` acts on ``y > 0`` and the lower field ``X-`` on
``y < 0``.  Both are exact polynomials in ``(x, y, mu)``.  In normal form
``X+`` has a fold at the origin and ``X-`` a fold at ``(mu, 0)``::

    X+ = (delta + zeta+ x + ...,  x + eta+ x^2 + chi+ y + ...)
    X- = (alpha + zeta- x + ..., -beta (x-mu) + eta- (x-mu)^2 + chi- y + ...)

with ``delta = +-1``, ``alpha beta != 0`` and ``Omega = beta delta + alpha != 0``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq

from .errors import (DegenerateModel, DomainViolation, NoCycle, NoPseudoEquilibrium,
                     NotNormalized, NotSliding, WrongClass)
from .polynomial import Poly3

TOL = 1e-12
DEFAULT_WINDOW = (-0.5, 0.5)


class Kind(str, enum.Enum):
    VV1 = "VV1"
    VV2 = "VV2"
    VI1 = "VI1"
    VI2 = "VI2"
    VI3 = "VI3"
    II1 = "II1"
    II2 = "II2"


class Visibility(str, enum.Enum):
    VISIBLE = "visible"
    VISIBLE_INVISIBLE = "visible-invisible"
    INVISIBLE = "invisible"


class RegionLabel(str, enum.Enum):
    STABLE_SLIDING = "stable-sliding"
    UNSTABLE_SLIDING = "unstable-sliding"
    CROSSING_UP = "crossing-up"
    CROSSING_DOWN = "crossing-down"


class PseudoStability(str, enum.Enum):
    PSEUDO_SADDLE = "pseudo-saddle"
    ATTRACTING_NODE = "attracting-pseudo-node"
    REPELLING_NODE = "repelling-pseudo-node"


class SingularCanard(str, enum.Enum):
    VRAI = "vrai"
    FAUX = "faux"
    NONE = "none"


class CycleStability(str, enum.Enum):
    ATTRACTING = "attracting"
    REPELLING = "repelling"


class LimitCycle(str, enum.Enum):
    NO = "no"
    YES = "yes"
    REGULARIZED_ONLY = "regularized-only"


@dataclass(frozen=True)
class NormalFormModel:
    """Polynomial fields ``X+``, ``X-`` and their normal-form coefficients.

    Build instances with :func:`extract_coefficients`, which validates the
    normal form; direct construction skips the checks.
    """

    xplus: tuple
    xminus: tuple
    delta: float
    alpha: float
    beta: float
    zeta_plus: float = 0.0
    zeta_minus: float = 0.0
    eta_plus: float = 0.0
    eta_minus: float = 0.0
    chi_plus: float = 0.0
    chi_minus: float = 0.0
    mu: float = 0.0

    @property
    def omega(self) -> float:
        return self.beta * self.delta + self.alpha

    def plus(self, x, y=0.0, mu=None):
        mu = self.mu if mu is None else mu
        return self.xplus[0](x, y, mu), self.xplus[1](x, y, mu)

    def minus(self, x, y=0.0, mu=None):
        mu = self.mu if mu is None else mu
        return self.xminus[0](x, y, mu), self.xminus[1](x, y, mu)

    def with_mu(self, mu: float) -> "NormalFormModel":
        return NormalFormModel(**{**self.__dict__, "mu": float(mu)})

    def normal_components(self, mu: float):
        """``(X2+(x,0,mu), X2-(x,0,mu))`` as univariate polynomials in x."""
        return self.xplus[1].restrict_x(0.0, mu), self.xminus[1].restrict_x(0.0, mu)


def _identically_zero(values, tol=TOL) -> bool:
    return bool(np.all(np.abs(values) <= tol))


def extract_coefficients(xplus, xminus, mu: float = 0.0, tol: float = TOL) -> NormalFormModel:
    """Read the normal-form coefficients off exact polynomial fields.

    Parameters
    ----------
    xplus, xminus : pair of Poly3
        Components ``(X1, X2)`` of the upper and lower fields.
    mu : float
        Unfolding parameter stored with the model.

    Raises
    ------
    DegenerateModel
        If ``delta alpha beta Omega`` vanishes within ``tol``.
    NotNormalized
        If the folds are not at ``(0, 0)`` and ``(mu, 0)`` or the scaling
        ``|delta| = 1``, ``d X2+/dx = 1`` is not met.
    """
    p1, p2 = (p if isinstance(p, Poly3) else Poly3(p) for p in xplus)
    m1, m2 = (p if isinstance(p, Poly3) else Poly3(p) for p in xminus)

    # X2+(0,0,mu) must vanish for every mu
    if not _identically_zero(p2.coeffs[0, 0, :], tol):
        raise NotNormalized("X2+ must vanish at (0, 0) for every mu")
    # X2-(mu,0,mu) must vanish for every mu: collect powers of mu after x -> mu
    c = m2.coeffs[:, 0, :]
    along = np.zeros(c.shape[0] + c.shape[1])
    for i in range(c.shape[0]):
        for k in range(c.shape[1]):
            along[i + k] += c[i, k]
    if not _identically_zero(along, tol):
        raise NotNormalized("X2- must vanish at (mu, 0) for every mu")

    delta = p1.at("x")
    alpha = m1.at("x")
    beta = -m2.deriv("x").at("x")
    slope = p2.deriv("x").at("x")
    omega = beta * delta + alpha
    if min(abs(delta), abs(alpha), abs(beta), abs(omega)) <= tol:
        raise DegenerateModel(
            f"degenerate two-fold: delta={delta:g}, alpha={alpha:g}, beta={beta:g}, Omega={omega:g}")
    if abs(abs(delta) - 1.0) > tol:
        raise NotNormalized(f"X1+(0,0,0) = {delta:g}; the normal form requires +-1")
    if abs(slope - 1.0) > tol:
        raise NotNormalized(f"dX2+/dx(0,0,0) = {slope:g}; the normal form requires 1")

    return NormalFormModel(
        xplus=(p1, p2), xminus=(m1, m2),
        delta=math.copysign(1.0, delta), alpha=alpha, beta=beta,
        zeta_plus=p1.deriv("x").at("x"), zeta_minus=m1.deriv("x").at("x"),
        eta_plus=0.5 * p2.deriv("x", 2).at("x"), eta_minus=0.5 * m2.deriv("x", 2).at("x"),
        chi_plus=p2.deriv("y").at("x"), chi_minus=m2.deriv("y").at("x"),
        mu=float(mu),
    )


def model_from_coefficients(delta, alpha, beta, zeta_plus=0.0, zeta_minus=0.0,
                            eta_plus=0.0, eta_minus=0.0, chi_plus=0.0, chi_minus=0.0,
                            mu=0.0) -> NormalFormModel:
    """Quadratic normal-form polynomials with the given coefficients."""
    x, y, m = (Poly3.variable(v) for v in ("x", "y", "mu"))
    u = x - m
    xplus = (delta + zeta_plus * x, x + eta_plus * x * x + chi_plus * y)
    xminus = (alpha + zeta_minus * x, -beta * u + eta_minus * u * u + chi_minus * y)
    return extract_coefficients(xplus, xminus, mu=mu)


@dataclass(frozen=True)
class TwoFoldClass:
    kind: Kind
    visibility: Visibility


def classify(model: NormalFormModel) -> TwoFoldClass:
    """Two-fold type from the signs of delta, alpha, beta and Omega.

    For ``delta = -1`` with ``alpha beta > 0`` the reflection
    ``(x, y, t) -> (-x, -y, -t)`` swaps the roles of the two folds and maps
    the case onto ``delta = 1``; it lands on VI2/VI3 for ``alpha, beta > 0``
    (split by the sign of Omega) and on VI1 for ``alpha, beta < 0``.
    """
    d, a, b, om = model.delta, model.alpha, model.beta, model.omega
    if d > 0:
        if a > 0 and b > 0:
            return TwoFoldClass(Kind.VV1, Visibility.VISIBLE)
        if a < 0 and b < 0:
            return TwoFoldClass(Kind.VV2, Visibility.VISIBLE)
        if a > 0 and b < 0:
            return TwoFoldClass(Kind.VI1, Visibility.VISIBLE_INVISIBLE)
        return TwoFoldClass(Kind.VI2 if om < 0 else Kind.VI3, Visibility.VISIBLE_INVISIBLE)
    if a * b < 0:
        return TwoFoldClass(Kind.II1 if a < 0 else Kind.II2, Visibility.INVISIBLE)
    if a > 0:
        return TwoFoldClass(Kind.VI2 if om < 0 else Kind.VI3, Visibility.VISIBLE_INVISIBLE)
    return TwoFoldClass(Kind.VI1, Visibility.VISIBLE_INVISIBLE)


def singular_canard(model: NormalFormModel) -> SingularCanard:
    if model.beta < 0:
        return SingularCanard.NONE
    return SingularCanard.VRAI if model.omega > 0 else SingularCanard.FAUX


# -- sliding ---------------------------------------------------------------

@dataclass(frozen=True)
class SlidingInterval:
    lo: float
    hi: float
    label: RegionLabel

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= x <= self.hi + tol


def _real_roots(p: Polynomial, lo: float, hi: float) -> list:
    p = p.trim()
    if p.degree() < 1:
        return []
    out = []
    for r in p.roots():
        if abs(r.imag) > 1e-7 * max(1.0, abs(r.real)):
            continue
        x = float(r.real)
        dp = p.deriv()
        for _ in range(5):
            d = dp(x)
            if d == 0.0:
                break
            step = p(x) / d
            x -= step
            if abs(step) < 1e-16:
                break
        if lo < x < hi:
            out.append(x)
    return sorted(out)


def label_at(a: float, b: float) -> RegionLabel | None:
    """Region label from the normal components ``a = X2+`` and ``b = X2-``."""
    if a < 0.0 < b:
        return RegionLabel.STABLE_SLIDING
    if b < 0.0 < a:
        return RegionLabel.UNSTABLE_SLIDING
    if a > 0.0 and b > 0.0:
        return RegionLabel.CROSSING_UP
    if a < 0.0 and b < 0.0:
        return RegionLabel.CROSSING_DOWN
    return None


def region_boundaries(model: NormalFormModel, mu: float, window=DEFAULT_WINDOW) -> list:
    """Tangency points of ``X+`` and ``X-`` on y = 0 inside ``window``."""
    pp, pm = model.normal_components(mu)
    pts = _real_roots(pp, *window) + _real_roots(pm, *window)
    pts.sort()
    merged = []
    for p in pts:
        if merged and abs(p - merged[-1]) < 1e-13:
            continue
        merged.append(p)
    return merged


def sliding_regions(model: NormalFormModel, mu: float, window=DEFAULT_WINDOW) -> list:
    """Partition of ``window`` on y = 0 into sliding and crossing intervals.

    Labels come from the signs of the exact normal components: stable
    sliding where ``X2+ < 0 < X2-``, unstable sliding where
    ``X2- < 0 < X2+``, crossing otherwise.
    """
    lo, hi = window
    pp, pm = model.normal_components(mu)
    cuts = [float(c) for c in [lo] + region_boundaries(model, mu, window) + [hi]]
    out = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (a + b)
        lab = label_at(pp(mid), pm(mid))
        if lab is None:
            continue
        if out and out[-1].label == lab and out[-1].hi == a:
            out[-1] = SlidingInterval(out[-1].lo, b, lab)
        else:
            out.append(SlidingInterval(a, b, lab))
    return out


@dataclass(frozen=True)
class SlidingValue:
    xdot: float
    sigma: float


def sliding_field(model: NormalFormModel, x: float, mu: float) -> SlidingValue:
    """Filippov sliding velocity and convex weight at ``(x, 0)``.

    ``sigma = X2- / (X2- - X2+)`` and ``xdot = sigma X1+ + (1 - sigma) X1-``.
    Where both normal components vanish (the two-fold) the limit along
    y = 0 is taken by l'Hopital's rule.

    Raises
    ------
    NotSliding
        If ``(x, 0)`` lies in the open crossing region.
    """
    a = float(model.xplus[1](x, 0.0, mu))
    b = float(model.xminus[1](x, 0.0, mu))
    f1p = float(model.xplus[0](x, 0.0, mu))
    f1m = float(model.xminus[0](x, 0.0, mu))
    if a * b > 0.0:
        raise NotSliding(f"x={x:g} lies in the crossing region for mu={mu:g}")
    den = b - a
    if den != 0.0:
        sigma = b / den
        return SlidingValue(sigma * f1p + (1.0 - sigma) * f1m, sigma)
    pp, pm = model.normal_components(mu)
    da = pp.deriv()(x)
    db = pm.deriv()(x)
    if db - da == 0.0:
        raise NotSliding(f"sliding field undefined at the degenerate point x={x:g}")
    sigma = db / (db - da)
    return SlidingValue(sigma * f1p + (1.0 - sigma) * f1m, sigma)


def desingularized_sliding(model: NormalFormModel, mu: float) -> Polynomial:
    """``X2- X1+ - X2+ X1-`` on y = 0 as a polynomial in x.

    Its zeros inside the sliding region are the pseudo-equilibria.
    """
    r = lambda p: p.restrict_x(0.0, mu)
    return r(model.xminus[1]) * r(model.xplus[0]) - r(model.xplus[1]) * r(model.xminus[0])


# -- pseudo-equilibria -----------------------------------------------------

@dataclass(frozen=True)
class PseudoEquilibrium:
    x_ps: float
    branch: RegionLabel
    stability: PseudoStability
    seed: float


def pseudo_equilibrium(model: NormalFormModel, mu: float, tol: float = 1e-12,
                       max_iter: int = 50) -> PseudoEquilibrium:
    """Pseudo-equilibrium near the two-fold.

    Newton on the desingularized sliding field, seeded at
    ``beta delta mu / Omega``; falls back to bisection over the sliding
    interval containing the seed.

    Raises
    ------
    NoPseudoEquilibrium
        If ``alpha delta > 0`` or ``mu = 0``.
    """
    if model.alpha * model.delta > 0:
        raise NoPseudoEquilibrium("alpha*delta > 0: no pseudo-equilibrium")
    if mu == 0.0:
        raise NoPseudoEquilibrium("mu = 0: the pseudo-equilibrium sits at the two-fold")
    seed = model.beta * model.delta * mu / model.omega
    n = desingularized_sliding(model, mu)
    dn = n.deriv()
    x = seed
    converged = False
    for _ in range(max_iter):
        d = dn(x)
        if d == 0.0:
            break
        step = n(x) / d
        x -= step
        if abs(step) <= tol * max(1.0, abs(x)):
            converged = True
            break
    pp, pm = model.normal_components(mu)
    lab = label_at(pp(x), pm(x)) if converged else None
    if lab not in (RegionLabel.STABLE_SLIDING, RegionLabel.UNSTABLE_SLIDING):
        x, lab = _bisect_pseudo(model, mu, seed, n)
    if model.omega < 0:
        stab = PseudoStability.PSEUDO_SADDLE
    elif lab is RegionLabel.STABLE_SLIDING:
        stab = PseudoStability.ATTRACTING_NODE
    else:
        stab = PseudoStability.REPELLING_NODE
    return PseudoEquilibrium(float(x), lab, stab, seed)


def _bisect_pseudo(model, mu, seed, n):
    span = 4.0 * abs(seed)
    window = (seed - span, seed + span)
    for iv in sliding_regions(model, mu, window):
        if iv.label in (RegionLabel.STABLE_SLIDING, RegionLabel.UNSTABLE_SLIDING) \
                and iv.contains(seed):
            lo, hi = iv.lo, iv.hi
            eps = 1e-14 * max(1.0, abs(seed))
            if n(lo + eps) * n(hi - eps) < 0:
                x = brentq(n, lo + eps, hi - eps, xtol=1e-15)
                return x, iv.label
    raise NoPseudoEquilibrium(f"no root of the sliding field near {seed:g}")


# -- PWS return map for the invisible two-fold ------------------------------

def delta_ii2(model: NormalFormModel) -> float:
    """Stability discriminant of the crossing cycles around an invisible two-fold."""
    a, b = model.alpha, model.beta
    return 2.0 / (3.0 * a * b) * (
        a * (model.eta_minus + b * model.eta_plus)
        + b * (model.zeta_minus + model.chi_minus + a * (model.zeta_plus + model.chi_plus)))


def delta_vi3(model: NormalFormModel) -> float:
    """Stability discriminant of the large cycles of the regularized VI3 case."""
    a, b = model.alpha, model.beta
    return 2.0 / (3.0 * a * b) * (
        a * (model.eta_minus + b * model.eta_plus)
        + b * (b + 1.0) * (model.zeta_minus + model.chi_minus))


def half_map_coefficients(model: NormalFormModel) -> tuple:
    """Quadratic coefficients ``(A+, A-)`` of the two half return maps."""
    a, b = model.alpha, model.beta
    a_plus = -2.0 / 3.0 * (model.eta_plus + model.zeta_plus + model.chi_plus)
    a_minus = 2.0 / (3.0 * a * b) * (a * model.eta_minus + b * (model.zeta_minus + model.chi_minus))
    return a_plus, a_minus


def _require_ii2(model):
    if classify(model).kind is not Kind.II2:
        raise WrongClass(f"requires an II2 two-fold, got {classify(model).kind.value}")


def pws_half_maps(model: NormalFormModel, x: float, mu: float) -> tuple:
    """Second-order half maps ``(sigma0+(x), sigma0-(x))``.

    ``sigma0+`` follows ``X+`` from ``(x, 0)`` back to y = 0;
    ``sigma0-`` follows ``X-``.
    """
    _require_ii2(model)
    a_plus, a_minus = half_map_coefficients(model)
    return -x + a_plus * x * x, -x + 2.0 * mu + a_minus * x * x


def p0_truncated(model: NormalFormModel, x: float, mu: float) -> float:
    """Composition ``sigma0- o sigma0+`` of the truncated half maps.

    Raises
    ------
    DomainViolation
        If ``sigma0+(x) >= mu``, where the lower half map is undefined.
    """
    sp, _ = pws_half_maps(model, x, mu)
    if sp >= mu:
        raise DomainViolation(f"sigma0+({x:g}) = {sp:g} >= mu = {mu:g}")
    return pws_half_maps(model, sp, mu)[1]


@dataclass(frozen=True)
class PWSCycle:
    x0: float
    stability: CycleStability
    leading: float


def pws_cycle(model: NormalFormModel, mu: float, tol: float = 1e-14,
              max_iter: int = 50) -> PWSCycle:
    """Crossing cycle of the PWS system through ``(x0, 0)``, ``x0 > 0``.

    Newton on the truncated return map seeded at ``sqrt(-2 mu / Delta)``.

    Raises
    ------
    NoCycle
        If ``mu / Delta >= 0`` or Newton fails.
    """
    _require_ii2(model)
    dlt = delta_ii2(model)
    if dlt == 0.0 or mu / dlt >= 0.0:
        raise NoCycle(f"no PWS cycle for mu={mu:g}, Delta={dlt:g}")
    a_plus, a_minus = half_map_coefficients(model)
    seed = math.sqrt(-2.0 * mu / dlt)
    x = seed
    for _ in range(max_iter):
        s = -x + a_plus * x * x
        ds = -1.0 + 2.0 * a_plus * x
        g = -s + 2.0 * mu + a_minus * s * s - x
        dg = (-1.0 + 2.0 * a_minus * s) * ds - 1.0
        step = g / dg
        x -= step
        if abs(step) <= tol * max(1.0, abs(x)):
            break
    else:
        raise NoCycle("Newton on the truncated return map did not converge")
    if not (x > 0.0) or -x + a_plus * x * x >= mu:
        raise NoCycle(f"fixed point {x:g} outside the domain of the return map")
    stab = CycleStability.ATTRACTING if dlt < 0 else CycleStability.REPELLING
    return PWSCycle(float(x), stab, seed)


# -- summary ----------------------------------------------------------------

@dataclass(frozen=True)
class TwoFoldReport:
    kind: Kind
    visibility: Visibility
    delta: float
    alpha: float
    beta: float
    omega: float
    canard: SingularCanard
    pseudo_type: str
    limit_cycle: LimitCycle
    delta_ii2: float
    delta_vi3: float
    mu: float
    regions: list = field(default_factory=list)
    pseudo: PseudoEquilibrium | None = None


def pseudo_type(model: NormalFormModel, mu: float = 1e-4) -> str:
    """``"PS"``, ``"PN"`` or ``"x"`` for the pseudo-equilibrium after bifurcation."""
    try:
        pe = pseudo_equilibrium(model, mu)
    except NoPseudoEquilibrium:
        return "x"
    return "PS" if pe.stability is PseudoStability.PSEUDO_SADDLE else "PN"


def limit_cycle_possibility(model: NormalFormModel) -> LimitCycle:
    """Crossing cycles exist only for II2; Hopf cycles need alpha delta < 0 < Omega."""
    if classify(model).kind is Kind.II2:
        return LimitCycle.YES
    if model.alpha * model.delta < 0 < model.omega:
        return LimitCycle.REGULARIZED_ONLY
    return LimitCycle.NO


def two_fold_report(model: NormalFormModel, mu: float | None = None,
                    window=DEFAULT_WINDOW) -> TwoFoldReport:
    mu = model.mu if mu is None else mu
    cls = classify(model)
    pe = None
    if mu != 0.0:
        try:
            pe = pseudo_equilibrium(model, mu)
        except NoPseudoEquilibrium:
            pe = None
    return TwoFoldReport(
        kind=cls.kind, visibility=cls.visibility, delta=model.delta, alpha=model.alpha,
        beta=model.beta, omega=model.omega, canard=singular_canard(model),
        pseudo_type=pseudo_type(model), limit_cycle=limit_cycle_possibility(model),
        delta_ii2=delta_ii2(model), delta_vi3=delta_vi3(model), mu=mu,
        regions=sliding_regions(model, mu, window), pseudo=pe)
