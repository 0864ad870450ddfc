"""Periodic orbits of the scaling-chart field and their continuation in ``mu2``.

Cycles are computed by single shooting on the return map of the section
``x2 = x2*(mu2)`` through the equilibrium, ``y_hat = y_hat*(mu2) + s``, on
the side fixed by the sign of ``s``.  The scalar defect

    g(s, mu2) = y_hat_return - y_hat*(mu2) - s

and its derivatives come from the variational flow, including the motion of
the section with ``mu2``.  Branches are traced by pseudo-arclength in
``(s, mu2)``; the return-map derivative ``1 + g_s`` is the nontrivial Floquet
multiplier.  The chart rescaling is exact for every ``r2``, so large cycles
need no change of coordinates.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import _rk
from ._fields import chart_params, events as event_rows
from .errors import (BranchEscape, IntegrationError, MonodromyIllConditioned, NewtonDiverged,
                     NoExplosion, NoFold, NotSliding, SeedDiverged, StepFailure, TwoFoldError,
                     WrongClass)
from .pws import NormalFormModel, classify, Kind
from .regularizer import RegularizationFn, critical_manifold
from .scaling_chart import (equilibrium_k2, equilibrium_mu2_derivative, hopf_mu2, hopf_numeric,
                            kappa2_field, lyapunov_a2)

SHOOT_RTOL = 1e-12
SHOOT_ATOL = 1e-13
RESIDUAL_TOL = 1e-10
ROUNDOFF_MU2 = 1e-13
RESOLUTION_LIMIT = 1e-9
RESOLUTION_STOP = "mu2 resolution limit"


@dataclass(frozen=True)
class Shot:
    """One return of the section map with first derivatives."""

    s: float
    mu2: float
    g: float
    g_s: float
    g_mu: float
    period: float
    amp_x2: float
    amp_yhat: float
    monodromy: np.ndarray = field(repr=False)

    @property
    def multiplier(self) -> float:
        return 1.0 + self.g_s


def _integrate_return(model, fn, r2, mu2, z0, level, direction, tmax=1e4, max_steps=2_000_000):
    p = chart_params(model, fn, r2, mu2, variational=True)
    rows = event_rows((0, level, direction, _rk.EV_TERMINAL), (1, 1.0, 0, _rk.EV_BREAK),
                      (1, -1.0, 0, _rk.EV_BREAK))
    out = _rk.integrate_model(p, 0.0, z0, tmax, SHOOT_RTOL, SHOOT_ATOL, 0.0, np.inf, max_steps,
                              rows, False, 2)
    if out[0] != _rk.STATUS_EVENT:
        raise IntegrationError(f"no return to the section at mu2={mu2:.12g} (status {out[0]})")
    return out


def shoot(model: NormalFormModel, fn: RegularizationFn, r2: float, s: float, mu2: float) -> Shot:
    """Return map defect on the section through the equilibrium."""
    xs, ys = equilibrium_k2(model, fn, r2, mu2)
    e = equilibrium_mu2_derivative(model, fn, r2, mu2, (xs, ys))
    z0 = np.array([xs, ys + s, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0])
    f0 = kappa2_field(model, fn, xs, ys + s, r2, mu2)
    direction = 1.0 if f0[0] > 0 else -1.0
    out = _integrate_return(model, fn, r2, mu2, z0, xs, direction)
    T, z, ext = out[1], out[2], out[9]
    f = kappa2_field(model, fn, z[0], z[1], r2, mu2)
    phi = z[2:6].reshape(2, 2)
    psi = z[6:8]
    dz = phi[:, 1]
    dT = -dz[0] / f[0]
    g_s = dz[1] + f[1] * dT - 1.0
    dz = phi @ e + psi
    dT = (e[0] - dz[0]) / f[0]
    g_mu = dz[1] + f[1] * dT - e[1]
    return Shot(float(s), float(mu2), float(z[1] - ys - s), float(g_s), float(g_mu), float(T),
                float(ext[0, 0]), float(ext[0, 1]), phi.copy())


@dataclass(frozen=True)
class Cycle:
    """Converged periodic orbit of the chart field at fixed ``r2``."""

    model: NormalFormModel = field(repr=False)
    fn: RegularizationFn = field(repr=False)
    r2: float
    s: float
    mu2: float
    shot: Shot = field(repr=False)

    @property
    def amp_x(self) -> float:
        """``max x`` in the original coordinates."""
        return self.r2 * self.shot.amp_x2

    @property
    def amp_yhat(self) -> float:
        return self.shot.amp_yhat

    @property
    def period(self) -> float:
        """Period in the original time."""
        return 2.0 * self.r2 * self.shot.period


def _newton_mu2(model, fn, r2, s, mu2, max_iter):
    for _ in range(max_iter):
        sh = shoot(model, fn, r2, s, mu2)
        step = sh.g / sh.g_mu
        mu2 -= step
        if abs(sh.g) <= _attainable(sh, abs(mu2)) and abs(step) <= 1e-11 * max(1.0, abs(mu2)):
            return shoot(model, fn, r2, s, mu2)
    raise SeedDiverged(f"Newton in mu2 did not converge at s={s:g}")


def _bracket_mu2(model, fn, r2, s, mu2):
    # the basin of Newton shrinks like 1/g_mu along a canard family
    g = lambda m: shoot(model, fn, r2, s, m).g
    scale = max(abs(mu2), r2)
    width = 1e-12 * scale
    while width < 1e-2 * scale:
        try:
            a, b = mu2 - width, mu2 + width
            if g(a) * g(b) < 0:
                m = brentq(g, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=300)
                return shoot(model, fn, r2, s, m)
        except TwoFoldError:
            pass
        width *= 10.0
    raise SeedDiverged(f"no sign change of the defect in mu2 near {mu2:g} at s={s:g}")


def _solve_mu2(model, fn, r2, s, mu2, max_iter=30):
    try:
        return _newton_mu2(model, fn, r2, s, mu2, max_iter)
    except TwoFoldError:
        return _bracket_mu2(model, fn, r2, s, mu2)


def correct_cycle(model, fn, r2, s, mu2_guess) -> Cycle:
    """Cycle through the section point at height ``s`` with ``mu2`` solved for."""
    sh = _solve_mu2(model, fn, r2, s, mu2_guess)
    return Cycle(model, fn, r2, s, sh.mu2, sh)


# -- Floquet ------------------------------------------------------------------

def floquet(cycle: Cycle, method: str = "variational", rel_step: float = 1e-6) -> float:
    """Nontrivial Floquet multiplier of a converged cycle.

    ``"variational"`` differentiates the return map through the variational
    flow; ``"fd"`` uses central differences of the return map.

    Raises
    ------
    MonodromyIllConditioned
        If the monodromy determinant and the return-map derivative disagree.
    """
    sh = cycle.shot
    lam = sh.multiplier
    det = float(np.linalg.det(sh.monodromy))
    if not math.isfinite(lam) or abs(det - lam) > 1e-5 * max(1.0, abs(lam)):
        raise MonodromyIllConditioned(f"monodromy determinant {det:.6g} vs multiplier {lam:.6g}")
    if method == "variational":
        return lam
    if method != "fd":
        raise ValueError("method must be 'variational' or 'fd'")
    h = rel_step * max(cycle.s, 1e-3)
    gp = shoot(cycle.model, cycle.fn, cycle.r2, cycle.s + h, cycle.mu2).g
    gm = shoot(cycle.model, cycle.fn, cycle.r2, cycle.s - h, cycle.mu2).g
    return 1.0 + (gp - gm) / (2.0 * h)


# -- Hopf start ---------------------------------------------------------------

@dataclass(frozen=True)
class HopfStart:
    cycle: Cycle
    mu2_hopf: float
    predicted_side: int
    side: int


def hopf_start(model: NormalFormModel, fn: RegularizationFn, r2: float,
               s0: float = 0.02) -> HopfStart:
    """Small cycle near the numerically located Hopf point.

    The side of the Hopf point on which cycles exist is predicted from the
    sign of ``a2``: ``beta delta / Omega (mu2 - mu2_H)`` is positive when
    ``a2 < 0`` and negative when ``a2 > 0``.

    Raises
    ------
    NoHopf
        Without a Hopf point (``alpha delta >= 0`` or ``Omega <= 0``).
    SeedDiverged
        If the shooting correction fails.
    """
    a2 = lyapunov_a2(model, fn)
    mu_h = hopf_numeric(model, fn, r2, hopf_mu2(model, fn) * r2)
    orient = math.copysign(1.0, model.beta * model.delta / model.omega)
    predicted = int(orient * (1.0 if a2 < 0 else -1.0)) if a2 != 0 else 0
    cyc = correct_cycle(model, fn, r2, s0, mu_h)
    side = int(math.copysign(1.0, cyc.mu2 - mu_h))
    return HopfStart(cyc, mu_h, predicted, side)


# -- pseudo-arclength continuation --------------------------------------------

@dataclass(frozen=True)
class BranchLimits:
    """Stopping rules; ``mu2_scale`` weights ``mu2`` in the arclength norm."""

    max_points: int = 400
    ds: float = 0.02
    ds_min: float = 1e-7
    ds_max: float = 0.2
    mu2_min: float = -math.inf
    mu2_max: float = math.inf
    max_amp_x2: float = math.inf
    max_s: float = math.inf
    mu2_scale: float | None = None
    strict: bool = False
    max_halvings: int = 8


@dataclass(frozen=True)
class BranchPoint:
    mu2: float
    s: float
    amp_x: float
    amp_yhat: float
    period: float
    floquet: float
    stable: bool
    fold: bool
    residual: float


@dataclass
class CycleBranch:
    r2: float
    points: list = field(default_factory=list)
    folds: list = field(default_factory=list)
    explosion: tuple | None = None
    termination: str = ""

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(p, name) for p in self.points])


def _point(cyc: Cycle, fold: bool) -> BranchPoint:
    lam = cyc.shot.multiplier
    return BranchPoint(cyc.mu2, cyc.s, cyc.amp_x, cyc.amp_yhat, cyc.period, lam, lam < 1.0, fold,
                       abs(cyc.shot.g))


def _tangent(sh: Shot, sigma: float, prev=None, direction: float = 1.0) -> np.ndarray:
    # unknowns (s, m) with m = mu2 / sigma
    t = np.array([-sh.g_mu * sigma, sh.g_s])
    t /= np.linalg.norm(t)
    ref = prev if prev is not None else np.array([direction, 0.0])
    return t if t @ ref >= 0 else -t


def _attainable(sh: Shot, sigma: float) -> float:
    # near a canard the defect is exponentially sensitive to mu2 and its
    # floor is set by mu2 round-off rather than by the integrator
    return max(RESIDUAL_TOL, ROUNDOFF_MU2 * abs(sh.g_mu) * sigma)


def _corrector(model, fn, r2, u_pred, t, sigma, side, max_iter=8):
    u = u_pred.copy()
    for it in range(max_iter):
        sh = shoot(model, fn, r2, u[0], u[1] * sigma)
        res = np.array([sh.g, t @ (u - u_pred)])
        jac = np.array([[sh.g_s, sh.g_mu * sigma], [t[0], t[1]]])
        du = np.linalg.solve(jac, -res)
        u = u + du
        if u[0] * side <= 0:
            raise NewtonDiverged("corrector crossed the equilibrium")
        if (abs(sh.g) <= _attainable(sh, sigma)
                and np.max(np.abs(du) / np.maximum(1.0, np.abs(u))) <= 1e-10):
            return shoot(model, fn, r2, u[0], u[1] * sigma), it + 1
    raise NewtonDiverged("pseudo-arclength corrector did not converge")


def mu2_resolution(sh: Shot) -> float:
    """Defect change caused by one unit of round-off in ``mu2``."""
    return float(np.finfo(float).eps * max(abs(sh.mu2), 1e-300) * abs(sh.g_mu))


def _stop(limits, msg, exc):
    if limits.strict:
        raise exc(msg)
    return msg


def continue_branch(start: Cycle, direction: float = 1.0,
                    limits: BranchLimits = BranchLimits()) -> CycleBranch:
    """Pseudo-arclength continuation of a cycle family in ``(s, mu2)``.

    ``direction = +1`` starts towards growing ``|s|``, i.e. growing cycles.

    Raises
    ------
    StepFailure
        In strict mode, after ``max_halvings`` consecutive step halvings.
    BranchEscape
        In strict mode, when the amplitude bound is exceeded.
    """
    model, fn, r2 = start.model, start.fn, start.r2
    sigma = limits.mu2_scale or max(abs(start.mu2), r2)
    branch = CycleBranch(r2)
    sh = start.shot
    u = np.array([start.s, start.mu2 / sigma])
    side = math.copysign(1.0, start.s)
    t = _tangent(sh, sigma, direction=direction * side)
    branch.points.append(_point(start, False))
    ds = limits.ds
    halvings = 0
    while len(branch.points) < limits.max_points:
        try:
            sh_new, iters = _corrector(model, fn, r2, u + ds * t, t, sigma, side)
        except (TwoFoldError, np.linalg.LinAlgError, ZeroDivisionError, FloatingPointError):
            ds *= 0.5
            halvings += 1
            if halvings > limits.max_halvings or ds < limits.ds_min:
                branch.termination = _stop(limits, "step failure after repeated halvings", StepFailure)
                break
            continue
        halvings = 0
        t_new = _tangent(sh_new, sigma, prev=t)
        fold = bool(np.sign(t_new[1]) != np.sign(t[1]) and t[1] != 0.0)
        u = np.array([sh_new.s, sh_new.mu2 / sigma])
        t = t_new
        cyc = Cycle(model, fn, r2, sh_new.s, sh_new.mu2, sh_new)
        branch.points.append(_point(cyc, fold))
        if fold:
            branch.folds.append(len(branch.points) - 1)
        if iters <= 3:
            ds = min(ds * 1.5, limits.ds_max)
        elif iters >= 6:
            ds = max(ds * 0.5, limits.ds_min)
        if not limits.mu2_min <= sh_new.mu2 <= limits.mu2_max:
            branch.termination = "mu2 range left"
            break
        if sh_new.amp_x2 > limits.max_amp_x2:
            branch.termination = _stop(limits, "amplitude bound exceeded", BranchEscape)
            break
        if abs(sh_new.s) > limits.max_s:
            branch.termination = "section bound reached"
            break
        if mu2_resolution(sh_new) > RESOLUTION_LIMIT:
            branch.termination = RESOLUTION_STOP
            break
    else:
        branch.termination = "maximum number of points"
    branch.explosion = _explosion_bracket(branch)
    return branch


def _explosion_bracket(branch: CycleBranch):
    """``mu2`` range of the points midway through the amplitude jump, if any."""
    if len(branch.points) < 3:
        return None
    amp = branch.column("amp_x")
    mu = branch.column("mu2")
    lo, hi = amp.min(), amp.max()
    span_mu = mu.max() - mu.min()
    if hi - lo <= 0 or span_mu <= 0:
        return None
    mid = (amp > lo + 0.25 * (hi - lo)) & (amp < lo + 0.75 * (hi - lo))
    if mid.sum() < 2:
        return None
    width = mu[mid].max() - mu[mid].min()
    if width > 1e-3 * span_mu:
        return None
    return float(mu[mid].min()), float(mu[mid].max())


# -- folds --------------------------------------------------------------------

@dataclass(frozen=True)
class FoldPoint:
    mu2: float
    s: float
    amp_x: float
    floquet: float


def locate_fold(branch: CycleBranch, model: NormalFormModel, fn: RegularizationFn) -> list:
    """Refine every fold of ``branch`` where the multiplier crosses 1.

    Raises
    ------
    NoFold
        If the branch has no fold.
    """
    if not branch.folds:
        raise NoFold("the branch has no turning point in mu2")
    r2 = branch.r2
    out = []
    for i in branch.folds:
        a, b = branch.points[i - 1], branch.points[i]
        cache = {}

        def q(s, guess):
            sh = _solve_mu2(model, fn, r2, s, guess)
            cache[s] = sh
            return sh.g_s

        qa = q(a.s, a.mu2)
        qb = q(b.s, b.mu2)
        if qa * qb > 0:
            # the turning point lies in the neighbouring interval
            c = branch.points[i - 2] if i >= 2 else a
            qa, a = q(c.s, c.mu2), c
        guess = [0.5 * (a.mu2 + b.mu2)]

        def qq(s):
            val = q(s, guess[0])
            guess[0] = cache[s].mu2
            return val

        s_f = brentq(qq, min(a.s, b.s), max(a.s, b.s), xtol=1e-12) if qa * qb < 0 else b.s
        sh = _solve_mu2(model, fn, r2, s_f, guess[0])
        out.append(FoldPoint(sh.mu2, s_f, r2 * sh.amp_x2, sh.multiplier))
    return out


# -- cycles through a prescribed point ----------------------------------------

def cycle_through_point(model: NormalFormModel, fn: RegularizationFn, r2: float, y_hat0: float,
                        mu2_guess: float, max_iter: int = 30) -> float:
    """``mu2`` of the cycle through ``(0, y_hat0)``, via the section ``x2 = 0``."""
    mu2 = mu2_guess
    for _ in range(max_iter):
        f0 = kappa2_field(model, fn, 0.0, y_hat0, r2, mu2)
        direction = 1.0 if f0[0] > 0 else -1.0
        z0 = np.array([0.0, y_hat0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0])
        out = _integrate_return(model, fn, r2, mu2, z0, 0.0, direction)
        z = out[2]
        f = kappa2_field(model, fn, z[0], z[1], r2, mu2)
        psi = z[6:8]
        g = z[1] - y_hat0
        g_mu = psi[1] - f[1] * psi[0] / f[0]
        step = g / g_mu
        mu2 -= step
        if abs(g) <= RESIDUAL_TOL and abs(step) <= 1e-13 * max(1.0, abs(mu2)):
            return float(mu2)
    raise SeedDiverged(f"no cycle through (0, {y_hat0:g}) near mu2={mu2_guess:g}")


# -- canard explosion ---------------------------------------------------------

def _launch(model, fn, r2, mu2, rho):
    pt = critical_manifold(model, fn, -rho, r2 * mu2)
    if pt is None or pt.branch != "attracting":
        raise NotSliding(f"no attracting critical manifold at x={-rho:g}")
    return np.array([-rho / r2, pt.y_hat])


def explosion_response(model: NormalFormModel, fn: RegularizationFn, r2: float, mu2: float,
                       rho: float = 0.2, horizon: float = 40.0) -> float:
    """``max x`` of the orbit launched on the attracting slow manifold at ``x = -rho``.

    The orbit follows the repelling slow manifold and leaves it to one side
    or the other of the maximal canard; ``max x`` jumps by O(1) there.
    The orbit stops after ``horizon`` units of chart time or on its first
    return to the launch section.
    """
    z0 = _launch(model, fn, r2, mu2, rho)
    p = chart_params(model, fn, r2, mu2)
    rows = event_rows((0, z0[0], -1, _rk.EV_TERMINAL), (1, 1.0, 0, _rk.EV_BREAK),
                      (1, -1.0, 0, _rk.EV_BREAK))
    out = _rk.integrate_model(p, 0.0, z0, horizon / r2, SHOOT_RTOL, SHOOT_ATOL, 0.0, np.inf,
                              2_000_000, rows, False, 2)
    if out[0] not in (_rk.STATUS_EVENT, _rk.STATUS_DONE):
        raise IntegrationError(f"explosion probe failed at mu2={mu2:.12g} (status {out[0]})")
    return r2 * float(out[9][0, 0])


def relaxation_cycle(model: NormalFormModel, fn: RegularizationFn, r2: float, mu2: float,
                     side: float = -1.0, rho: float = 0.2, horizon: float = 60.0) -> Cycle:
    """Large cycle seeded from the attractor reached from the slow manifold.

    The orbit launched on ``S_a`` at ``x = -rho`` is followed for ``horizon``
    units of chart time; its last crossing of the section on the side
    ``sign(side)`` seeds the shooting correction.

    Raises
    ------
    SeedDiverged
        If the orbit never crosses the section on that side, or the
        correction fails.
    """
    xs, ys = equilibrium_k2(model, fn, r2, mu2)
    z0 = _launch(model, fn, r2, mu2, rho)
    p = chart_params(model, fn, r2, mu2)
    rows = event_rows((0, xs, 0, _rk.EV_RECORD), (1, 1.0, 0, _rk.EV_BREAK),
                      (1, -1.0, 0, _rk.EV_BREAK))
    out = _rk.integrate_model(p, 0.0, z0, horizon / r2, SHOOT_RTOL, SHOOT_ATOL, 0.0, np.inf,
                              2_000_000, rows, False, 2)
    if out[0] not in (_rk.STATUS_EVENT, _rk.STATUS_DONE):
        raise IntegrationError(f"attractor probe failed at mu2={mu2:.12g} (status {out[0]})")
    offsets = [z[1] - ys for z in out[8] if (z[1] - ys) * side > 0]
    if not offsets:
        raise SeedDiverged(f"no section crossing with sign {side:+g} at mu2={mu2:g}")
    return correct_cycle(model, fn, r2, float(offsets[-1]), mu2)


@dataclass
class CanardFamily:
    """Small-cycle and relaxation branches meeting at the canard explosion.

    Single shooting resolves the family only while one unit of round-off in
    ``mu2`` moves the defect by less than the residual tolerance.  ``gap``
    is the amplitude range between the two resolved ends, the part of the
    family that lies inside the explosion window ``explosion``.
    """

    small: CycleBranch
    large: CycleBranch
    explosion: tuple
    gap: tuple


def canard_family(start: Cycle, mu2_past: float, limits: BranchLimits = BranchLimits(),
                  rho: float = 0.2) -> CanardFamily:
    """Trace both ends of a canard explosion by continuation.

    The small branch grows from ``start`` until ``mu2`` can no longer be
    resolved.  The relaxation branch is seeded at ``mu2_past``, beyond the
    explosion, and continued back towards it.
    """
    model, fn, r2 = start.model, start.fn, start.r2
    small = continue_branch(start, 1.0, limits)
    big = relaxation_cycle(model, fn, r2, mu2_past, math.copysign(1.0, start.s), rho)
    large = continue_branch(big, -1.0, limits)
    a, b = small.points[-1], large.points[-1]
    lo, hi = sorted((a.mu2, b.mu2))
    return CanardFamily(small, large, (lo, hi), (a.amp_x, b.amp_x))


@dataclass(frozen=True)
class ExplosionWidth:
    """``mu2`` distance over which the small cycles grow to ``level``."""

    r2: float
    level: float
    mu2_level: float
    mu2_edge: float
    width: float


def explosion_width(start: Cycle, level: float = 0.1,
                    limits: BranchLimits = BranchLimits()) -> ExplosionWidth:
    """Width of the canard window seen from the small-cycle branch.

    The branch from ``start`` is continued to the end of its resolvable
    part, whose ``mu2`` marks the explosion; the width is the distance from
    there to the cycle with ``max x = level``.

    Raises
    ------
    NoExplosion
        If the resolvable branch never reaches ``level``.
    """
    model, fn, r2 = start.model, start.fn, start.r2
    br = continue_branch(start, 1.0, limits)
    if br.termination != RESOLUTION_STOP:
        raise NoExplosion(f"branch ended without reaching the canard segment ({br.termination})")
    amp = br.column("amp_x")
    above = np.nonzero(amp >= level)[0]
    if above.size == 0 or above[0] == 0:
        raise NoExplosion(f"max x stays below {level:g} on the resolvable branch")
    a, b = br.points[above[0] - 1], br.points[above[0]]
    guess = [a.mu2]

    def excess(sv):
        cyc = correct_cycle(model, fn, r2, sv, guess[0])
        guess[0] = cyc.mu2
        return cyc.amp_x - level

    s_l = brentq(excess, a.s, b.s, xtol=1e-10)
    mu_l = correct_cycle(model, fn, r2, s_l, guess[0]).mu2
    edge = br.points[-1].mu2
    return ExplosionWidth(r2, level, mu_l, edge, abs(edge - mu_l))


@dataclass(frozen=True)
class Explosion:
    mu2: float
    width: float
    amp_lo: float
    amp_hi: float
    iterations: int


def locate_explosion(model: NormalFormModel, fn: RegularizationFn, r2: float, bracket: tuple,
                     rho: float = 0.2, rel_tol: float = 1e-9, level: float = 0.5) -> Explosion:
    """Bisect ``mu2`` on the amplitude response across the canard explosion.

    The threshold is the fraction ``level`` of the way from the response at
    the lower bracket end to the response at the upper end.

    Raises
    ------
    WrongClass
        If the model is not VI3.
    NoExplosion
        If the responses at the bracket ends do not differ by O(1).
    """
    kind = classify(model).kind
    if kind is not Kind.VI3:
        raise WrongClass(f"canard explosions require VI3, got {kind.value}")
    lo, hi = float(bracket[0]), float(bracket[1])
    ra = explosion_response(model, fn, r2, lo, rho)
    rb = explosion_response(model, fn, r2, hi, rho)
    if abs(rb - ra) < 0.1 * rho:
        raise NoExplosion(f"no amplitude jump in [{lo:g}, {hi:g}] (responses {ra:.4g}, {rb:.4g})")
    thr = ra + level * (rb - ra)
    sa = ra > thr
    it = 0
    while hi - lo > rel_tol * max(abs(lo), abs(hi)) and it < 200:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if (explosion_response(model, fn, r2, mid, rho) > thr) == sa:
            lo = mid
        else:
            hi = mid
        it += 1
    return Explosion(0.5 * (lo + hi), hi - lo, ra, rb, it)


# -- export -------------------------------------------------------------------

BRANCH_COLUMNS = ("mu2", "amp_x", "amp_yhat", "period", "floquet", "stable", "fold_flag")


def write_branch_csv(branch: CycleBranch, fh, header_comments=()):
    for line in header_comments:
        fh.write(f"# {line}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(BRANCH_COLUMNS)
    for p in branch.points:
        w.writerow([repr(p.mu2), repr(p.amp_x), repr(p.amp_yhat), repr(p.period), repr(p.floquet),
                    int(p.stable), int(p.fold)])
