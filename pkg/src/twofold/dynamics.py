"""Trajectories of the regularized and the piecewise-smooth systems.

Smooth flows run on the compiled Dormand-Prince integrator of
:mod:`twofold._rk`.  The Filippov integrator alternates smooth arcs of
``X+`` and ``X-`` with sliding arcs on ``y = 0`` and switches mode at
crossings and at the exact tangency roots of the normal components.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial

from . import _rk
from ._fields import chart_params, events as event_rows, plane_params
from .errors import (BlowupEscape, DomainViolation, FoldCapture, ForwardNonUnique,
                     IntegrationError, MaxStepsExceeded, NotSliding, StepUnderflow, WrongClass)
from .pws import Kind, NormalFormModel, classify
from .regularizer import RegularizationFn, critical_manifold

PLUS, MINUS, SLIDING = "in-sigma+", "in-sigma-", "sliding"
CROSS_UP, CROSS_DOWN = "cross-up", "cross-down"
SLIDE_ENTER, SLIDE_EXIT, SECTION_HIT = "sliding-enter", "sliding-exit", "section-hit"
DEFAULT_RHO = 0.2


@dataclass(frozen=True)
class Tolerances:
    """Integrator settings; defaults match the library-wide accuracy targets."""

    rtol: float = 1e-10
    atol: float = 1e-12
    max_steps: int = 1_000_000
    hmax: float = math.inf
    max_samples: int = 200_000


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class Event:
    """Hyperplane event ``z[component] = level``.

    ``direction`` is +1 for increasing crossings, -1 for decreasing and 0 for
    both; terminal events stop the integration.
    """

    component: int
    level: float
    direction: int = 0
    terminal: bool = False
    label: str = SECTION_HIT


@dataclass(frozen=True)
class EventRecord:
    t: float
    kind: str
    state: tuple


@dataclass
class Trajectory:
    """Sampled solution with events and, for hybrid runs, the mode history."""

    t: np.ndarray
    states: np.ndarray
    events: list = field(default_factory=list)
    modes: list = field(default_factory=list)
    sample_modes: list = field(default_factory=list)
    terminated: bool = False
    steps: int = 0

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def x(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.states[:, 1]


@dataclass(frozen=True)
class SectionMapResult:
    exit_state: tuple
    transit_time: float
    hits: int
    converged: bool


# -- compiled fields ----------------------------------------------------------

@dataclass(frozen=True)
class CompiledField:
    """Parameter vector for the compiled kernel together with its state size."""

    params: np.ndarray
    dim: int = 2
    kinks: tuple = ()

    @classmethod
    def regularized(cls, model: NormalFormModel, fn: RegularizationFn, eps: float, mu: float,
                    tsign: float = 1.0) -> "CompiledField":
        """``X_eps`` in the original coordinates; kinks of phi at ``y = +-eps``."""
        return cls(plane_params(model, fn, eps, mu, tsign=tsign), 2, (eps, -eps))

    @classmethod
    def chart(cls, model: NormalFormModel, fn: RegularizationFn, r2: float, mu2: float,
              tsign: float = 1.0) -> "CompiledField":
        """Scaling-chart field in ``(x2, y_hat)``; kinks at ``y_hat = +-1``."""
        return cls(chart_params(model, fn, r2, mu2, tsign=tsign), 2, (1.0, -1.0))

    @classmethod
    def side(cls, model: NormalFormModel, mu: float, which: str, tsign: float = 1.0):
        mode = _rk.MODE_PLUS if which == "+" else _rk.MODE_MINUS
        return cls(plane_params(model, None, None, mu, mode=mode, tsign=tsign), 2)

    @classmethod
    def sliding(cls, model: NormalFormModel, mu: float, tsign: float = 1.0):
        return cls(plane_params(model, None, None, mu, mode=_rk.MODE_SLIDE, tsign=tsign), 1)


def _python_field(fun: Callable):
    def rhs(t, z, p, out):
        out[:] = fun(t, z)
    return _rk.python_integrator(rhs)


def _raise_status(status, t):
    if status == _rk.STATUS_MAXSTEPS:
        raise MaxStepsExceeded(f"step limit reached at t={t:.6g}")
    if status in (_rk.STATUS_UNDERFLOW, _rk.STATUS_NONFINITE):
        raise StepUnderflow(f"step size underflow at t={t:.6g} (status {status})")


def _run(fld, z0, t0, t1, rows, tol, record=True):
    z0 = np.ascontiguousarray(z0, dtype=float)
    rows = np.ascontiguousarray(rows, dtype=float).reshape(-1, 4)
    nrec = max(2, min(tol.max_samples, tol.max_steps + 2))
    if isinstance(fld, CompiledField):
        out = _rk.integrate_model(fld.params, float(t0), z0, float(t1), tol.rtol, tol.atol, 0.0,
                                  tol.hmax, tol.max_steps, rows, record, nrec)
    else:
        integ = _python_field(fld)
        out = integ(np.zeros(1), float(t0), z0, float(t1), tol.rtol, tol.atol, 0.0, tol.hmax,
                    tol.max_steps, rows, record, nrec)
    _raise_status(out[0], out[1])
    return out


def integrate_smooth(fld, state, t_span, events=(), tol: Tolerances = DEFAULT_TOL) -> Trajectory:
    """Adaptive 5(4) integration with dense-output event location.

    Parameters
    ----------
    fld : CompiledField or callable
        Either a compiled polynomial field or ``f(t, z) -> array``.
    state : array_like
        Initial state.
    t_span : (float, float)
        Start and end time; backward integration is allowed.
    events : sequence of Event
        Hyperplane events.  Kinks of the field are added as step breakpoints.

    Raises
    ------
    StepUnderflow, MaxStepsExceeded
    """
    rows = [(e.component, e.level, e.direction,
             _rk.EV_TERMINAL if e.terminal else _rk.EV_RECORD) for e in events]
    if isinstance(fld, CompiledField):
        rows += [(1, k, 0, _rk.EV_BREAK) for k in fld.kinks]
    out = _run(fld, state, t_span[0], t_span[1], event_rows(*rows) if rows else np.zeros((0, 4)), tol)
    status, t, z, fired, rec_t, rec_z, ev_t, ev_i, ev_z, _, steps, _ = out
    recs = [EventRecord(float(tt), events[int(i)].label, tuple(zz)) for tt, i, zz in zip(ev_t, ev_i, ev_z)]
    if status == _rk.STATUS_EVENT:
        recs.append(EventRecord(float(t), events[int(fired)].label, tuple(z)))
    return Trajectory(np.array(rec_t), np.array(rec_z), recs, terminated=status == _rk.STATUS_EVENT,
                      steps=int(steps))


# -- Filippov integrator ------------------------------------------------------

def _real_roots(poly: Polynomial) -> list:
    if poly.degree() < 1 or np.all(poly.coef[1:] == 0.0):
        return []
    out = []
    for r in poly.roots():
        if abs(r.imag) <= 1e-12 * (1.0 + abs(r.real)):
            out.append(float(r.real))
    return sorted(set(out))


def _mode_at(a: float, b: float):
    """Forward mode at a point of y = 0 from the normal components of X+ and X-."""
    if a > 0 and b > 0:
        return PLUS
    if a < 0 and b < 0:
        return MINUS
    if a < 0 < b:
        return SLIDING
    if a > 0 > b:
        return "unstable"
    return None


def _mode_beyond(pa, pb, x, direction):
    """Mode just beyond ``x`` in ``direction``, resolving zeros by one-sided limits."""
    for h in (1e-9, 1e-7, 1e-5):
        xs = x + direction * h * (1.0 + abs(x))
        m = _mode_at(float(pa(xs)), float(pb(xs)))
        if m is not None:
            return m
    return None


def integrate_filippov(model: NormalFormModel, state, t_span, mu: float,
                       tol: Tolerances = DEFAULT_TOL, nonunique: str = "raise",
                       max_switches: int = 10_000) -> Trajectory:
    """Filippov solution of the piecewise-smooth system.

    Sliding arcs follow the convex combination tangent to ``y = 0`` and end
    at the exact tangency roots.  At the two-fold with ``mu = 0`` and
    ``beta > 0`` sliding passes through with finite speed.

    Parameters
    ----------
    nonunique : {"raise", "slide"}
        Forward evolution from unstable sliding is not unique.  ``"raise"``
        stops there with :class:`ForwardNonUnique`; ``"slide"`` follows the
        repelling sliding flow to its tangency endpoint.

    Raises
    ------
    ForwardNonUnique
        Carries the partial trajectory in its ``trajectory`` attribute.
    """
    if nonunique not in ("raise", "slide"):
        raise ValueError("nonunique must be 'raise' or 'slide'")
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError("the Filippov integrator runs forward in time only")
    pa, pb = model.normal_components(mu)
    roots = sorted(set(_real_roots(pa) + _real_roots(pb)))
    fields = {PLUS: CompiledField.side(model, mu, "+"), MINUS: CompiledField.side(model, mu, "-"),
              SLIDING: CompiledField.sliding(model, mu)}
    z = np.array(state, dtype=float)
    ts, zs, smodes, evs, modes = [t0], [z.copy()], [], [], []
    t = t0

    def partial():
        return Trajectory(np.array(ts), np.array(zs), evs, modes, smodes + [smodes[-1] if smodes else None])

    def start_mode(x, y):
        if y > 0:
            return PLUS
        if y < 0:
            return MINUS
        m = _mode_at(float(pa(x)), float(pb(x)))
        if m is None:
            v = float(model.xplus[0](x, 0.0, mu) if pa(x) == 0 else model.xminus[0](x, 0.0, mu))
            m = _mode_beyond(pa, pb, x, 1.0 if v >= 0 else -1.0)
        return m

    mode = start_mode(z[0], z[1])
    for _ in range(max_switches):
        if mode == "unstable":
            if nonunique == "raise":
                smodes.append(SLIDING)
                raise ForwardNonUnique(
                    f"forward evolution not unique at x={z[0]:.12g} (repelling sliding)", partial())
            mode = SLIDING
        if mode is None:
            raise NotSliding(f"cannot determine the forward mode at x={z[0]:.12g}")
        modes.append((t, mode))
        if mode == SLIDING:
            z[1] = 0.0
            rows = [(0, r, 0, _rk.EV_TERMINAL) for r in roots]
            out = _run(fields[SLIDING], z[:1], t, t1, event_rows(*rows) if rows else np.zeros((0, 4)), tol)
            status, tn, zn, fired, rec_t, rec_z = out[:6]
            for tt, xx in zip(rec_t[1:], rec_z[1:]):
                ts.append(float(tt))
                zs.append(np.array([xx[0], 0.0]))
                smodes.append(SLIDING)
            t = float(tn)
            z = np.array([zn[0], 0.0])
            if status != _rk.STATUS_EVENT:
                break
            xr = float(zn[0])
            v = float(np.sign(rec_z[-1][0] - rec_z[-2][0])) if len(rec_z) > 1 else 1.0
            nxt = _mode_beyond(pa, pb, xr, v)
            if nxt == "unstable":
                # two-fold passage from stable onto repelling sliding (vrai canard)
                evs.append(EventRecord(t, SLIDE_ENTER, tuple(z)))
                mode = "unstable"
                continue
            if nxt != SLIDING:
                evs.append(EventRecord(t, SLIDE_EXIT, tuple(z)))
            mode = nxt
            continue
        # smooth arc in sigma+ or sigma-
        direction = -1 if mode == PLUS else 1
        out = _run(fields[mode], z, t, t1, event_rows((1, 0.0, direction, _rk.EV_TERMINAL)), tol)
        status, tn, zn, fired, rec_t, rec_z = out[:6]
        for tt, zz in zip(rec_t[1:], rec_z[1:]):
            ts.append(float(tt))
            zs.append(np.array(zz))
            smodes.append(mode)
        t = float(tn)
        z = np.array(zn)
        if status != _rk.STATUS_EVENT:
            break
        z[1] = 0.0
        nxt = _mode_at(float(pa(z[0])), float(pb(z[0])))
        if nxt in (PLUS, MINUS):
            evs.append(EventRecord(t, CROSS_UP if nxt == PLUS else CROSS_DOWN, tuple(z)))
        elif nxt == SLIDING:
            evs.append(EventRecord(t, SLIDE_ENTER, tuple(z)))
        elif nxt is None:
            nxt = _mode_beyond(pa, pb, z[0], float(np.sign(rec_z[-1][0] - rec_z[-2][0])))
        mode = nxt
    else:
        raise IntegrationError("too many mode switches")
    smodes.insert(0, modes[0][1] if modes else None)
    return Trajectory(np.array(ts), np.array(zs), evs, modes, smodes[: len(ts)], steps=len(ts))


# -- Poincare maps ------------------------------------------------------------

def _require_ii2(model):
    kind = classify(model).kind
    if kind is not Kind.II2:
        raise WrongClass(f"requires an II2 two-fold, got {kind.value}")


def _half_return(fld, x0, level, direction, tol, tmax):
    rows = event_rows((1, level, direction, _rk.EV_TERMINAL), *[(1, k, 0, _rk.EV_BREAK) for k in fld.kinks])
    out = _run(fld, np.array([x0, level]), 0.0, tmax, rows, tol, record=False)
    return out


def p0_numeric(model: NormalFormModel, x0: float, mu: float, tol: Tolerances = DEFAULT_TOL,
               tmax: float = 1e3) -> SectionMapResult:
    """Return map of the piecewise-smooth flow on ``{y = 0, x > 0}``.

    Raises
    ------
    DomainViolation
        If the upper half return lands at ``x >= mu``.
    """
    _require_ii2(model)
    if not x0 > 0:
        raise DomainViolation("p0 requires x0 > 0")
    up = _half_return(CompiledField.side(model, mu, "+"), x0, 0.0, -1, tol, tmax)
    if up[0] != _rk.STATUS_EVENT:
        raise DomainViolation(f"upper half orbit from x0={x0:g} does not return")
    x1 = float(up[2][0])
    if x1 >= mu:
        raise DomainViolation(f"sigma0+({x0:g}) = {x1:g} >= mu = {mu:g}")
    down = _half_return(CompiledField.side(model, mu, "-"), x1, 0.0, 1, tol, tmax)
    if down[0] != _rk.STATUS_EVENT:
        raise DomainViolation(f"lower half orbit from x1={x1:g} does not return")
    return SectionMapResult((float(down[2][0]), 0.0), float(up[1] + down[1]), 2, True)


def p_eps(model: NormalFormModel, fn: RegularizationFn, eps: float, x0: float, mu: float,
          tol: Tolerances = DEFAULT_TOL, tmax: float = 1e3) -> SectionMapResult:
    """Return map of the regularized flow on ``{y = eps, x > 0}``.

    Raises
    ------
    FoldCapture
        If the orbit does not traverse the band ``|y| < eps`` twice.
    """
    _require_ii2(model)
    if float(model.xplus[1](x0, eps, mu)) <= 0.0:
        raise FoldCapture(f"x0={x0:g} lies below the fold threshold on y = eps")
    fld = CompiledField.regularized(model, fn, eps, mu)
    rows = event_rows((1, eps, 1, _rk.EV_TERMINAL), (1, eps, -1, _rk.EV_BREAK),
                      (1, -eps, 0, _rk.EV_RECORD))
    out = _run(fld, np.array([x0, eps]), 0.0, tmax, rows, tol, record=False)
    status, t, z = out[0], out[1], out[2]
    crossings = len(out[6])
    if status != _rk.STATUS_EVENT or crossings < 2 or not z[0] > 0:
        raise FoldCapture(f"orbit from x0={x0:g} captured in the band (crossings={crossings})")
    return SectionMapResult((float(z[0]), float(eps)), float(t), crossings, True)


def fixed_point(section_map: Callable, seed: float, tol: float = 1e-12, max_iter: int = 50) -> float:
    """Fixed point of a scalar return map by the secant method."""
    x0, x1 = seed, seed * (1.0 + 1e-3)
    g0 = section_map(x0) - x0
    g1 = section_map(x1) - x1
    for _ in range(max_iter):
        if g1 == g0:
            break
        x2 = x1 - g1 * (x1 - x0) / (g1 - g0)
        x0, g0 = x1, g1
        x1 = x2
        g1 = section_map(x1) - x1
        if abs(x1 - x0) <= tol * max(1.0, abs(x1)):
            return float(x1)
    if abs(g1) <= 1e-10:
        return float(x1)
    raise IntegrationError("fixed-point iteration did not converge")


# -- slow manifolds -----------------------------------------------------------

@dataclass(frozen=True)
class SlowManifoldArrival:
    side: str
    y_hat: float
    launch: tuple
    trajectory: Trajectory = field(repr=False)


def slow_manifold_extend(model: NormalFormModel, fn: RegularizationFn, eps: float, mu: float,
                         side: str, rho: float = DEFAULT_RHO,
                         tol: Tolerances = DEFAULT_TOL) -> SlowManifoldArrival:
    """Carry a slow manifold from ``x = -+rho`` to the section ``x = 0``.

    The attracting branch is launched at ``x = -rho`` and integrated
    forward; the repelling branch at ``x = +rho`` backward.

    Raises
    ------
    BlowupEscape
        If the orbit leaves ``|y_hat| <= 2`` before reaching ``x = 0``.
    NotSliding
        If the launch point is not on the requested branch.
    """
    if model.beta <= 0:
        raise NotSliding("slow manifolds through the two-fold require beta > 0")
    if side not in ("attracting", "repelling"):
        raise ValueError("side must be 'attracting' or 'repelling'")
    x0 = -rho if side == "attracting" else rho
    pt = critical_manifold(model, fn, x0, mu)
    if pt is None or pt.branch != side:
        raise NotSliding(f"no {side} critical manifold at x={x0:g}")
    tsign = 1.0 if side == "attracting" else -1.0
    fld = CompiledField.regularized(model, fn, eps, mu, tsign=tsign)
    evs = [Event(0, 0.0, 0, True, SECTION_HIT), Event(1, 2.0 * eps, 0, True, "escape"),
           Event(1, -2.0 * eps, 0, True, "escape")]
    traj = integrate_smooth(fld, (x0, eps * pt.y_hat), (0.0, 1e3), evs, tol)
    if not traj.terminated or traj.events[-1].kind != SECTION_HIT:
        raise BlowupEscape(f"{side} slow manifold left |y_hat| <= 2 before x = 0")
    return SlowManifoldArrival(side, traj.events[-1].state[1] / eps, (x0, pt.y_hat), traj)


def canard_gap(model: NormalFormModel, fn: RegularizationFn, eps: float, mu: float,
               rho: float = DEFAULT_RHO, tol: Tolerances = DEFAULT_TOL) -> float:
    """Signed gap ``y_hat_a - y_hat_r`` of the slow manifolds at ``x = 0``."""
    a = slow_manifold_extend(model, fn, eps, mu, "attracting", rho, tol)
    r = slow_manifold_extend(model, fn, eps, mu, "repelling", rho, tol)
    return a.y_hat - r.y_hat


# -- export -------------------------------------------------------------------

def trajectory_rows(traj: Trajectory):
    """Rows ``(t, x, y, mode, event)``; events are appended as separate rows."""
    rows = []
    modes = traj.sample_modes or [""] * len(traj.t)
    for i, (t, z) in enumerate(zip(traj.t, traj.states)):
        rows.append((float(t), float(z[0]), float(z[1]), modes[i] if i < len(modes) and modes[i] else "", ""))
    for e in traj.events:
        rows.append((e.t, e.state[0], e.state[1], "", e.kind))
    rows.sort(key=lambda r: (r[0], r[4] != ""))
    return rows


def write_trajectory_csv(traj: Trajectory, fh, header_comments=()):
    for line in header_comments:
        fh.write(f"# {line}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t", "x", "y", "mode", "event"])
    for t, x, y, m, e in trajectory_rows(traj):
        w.writerow([repr(t), repr(x), repr(y), m, e])
