"""Compiled Dormand-Prince 5(4) integrator and the polynomial field kernel.

The kernel evaluates every flow used by the package from a flat parameter
vector ``p``:

====  =====================================================================
p[0]  mode: 0 blended field, 1 upper field only, 2 lower field only,
      3 one-dimensional sliding flow on y = 0
p[1]  scale applied to y before it enters phi (1/eps, or 1 in the chart)
p[2]  augmentation: 0 none, 1 variational (Phi, dz/dmu), 2 Melnikov integrand
p[3]  D, side length of the padded bivariate coefficient blocks
p[4]  number of power coefficients of phi
p[5]  multiplier of the whole field (time direction and the 1/2 of X_eps)
====  =====================================================================

followed by the phi coefficients, four ``D*D`` blocks for X1+, X2+, X1-,
X2-, and for augmentation 1 four more blocks with their mu-derivatives, or
for augmentation 2 the constants (zeta+, zeta-, eta+, eta-, chi+, chi-,
delta, alpha, beta).  With augmentation 2 the state carries the r2- and,
optionally, the mu2-sensitivity integrands in z[2] and z[3].
"""

from __future__ import annotations

import types

import numpy as np
from numba import njit

HEADER = 6
MODE_BLEND, MODE_PLUS, MODE_MINUS, MODE_SLIDE = 0, 1, 2, 3
AUG_NONE, AUG_VAR, AUG_MELNIKOV = 0, 1, 2

EV_TERMINAL, EV_BREAK, EV_RECORD = 0, 1, 2

STATUS_DONE, STATUS_EVENT = 0, 1
STATUS_MAXSTEPS, STATUS_UNDERFLOW, STATUS_NONFINITE = -1, -2, -3

# Dormand-Prince tableau with the free 4th-order dense output
C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
A = np.zeros((6, 6))
A[1, 0] = 1 / 5
A[2, :2] = [3 / 40, 9 / 40]
A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


# -- field kernel -------------------------------------------------------------

@njit(cache=True)
def _poly2(p, off, D, x, y):
    """Value and first partials of a D*D bivariate block at (x, y)."""
    v = 0.0
    vx = 0.0
    vy = 0.0
    for ii in range(D):
        i = D - 1 - ii
        r = 0.0
        ry = 0.0
        base = off + i * D
        for jj in range(D):
            j = D - 1 - jj
            ry = ry * y + r
            r = r * y + p[base + j]
        vx = vx * x + v
        v = v * x + r
        vy = vy * x + ry
    return v, vx, vy


@njit(cache=True)
def _phi(p, s):
    n = int(p[4])
    if s >= 1.0:
        return 1.0, 0.0
    if s <= -1.0:
        return -1.0, 0.0
    v = 0.0
    dv = 0.0
    for kk in range(n):
        k = n - 1 - kk
        dv = dv * s + v
        v = v * s + p[HEADER + k]
    return v, dv


@njit(cache=True)
def model_rhs(t, z, p, out):
    mode = int(p[0])
    scale = p[1]
    aug = int(p[2])
    D = int(p[3])
    g = p[5]
    o = HEADER + int(p[4])
    DD = D * D
    if mode == MODE_SLIDE:
        x = z[0]
        a1, a1x, _ = _poly2(p, o, D, x, 0.0)
        a2, a2x, _ = _poly2(p, o + DD, D, x, 0.0)
        b1, b1x, _ = _poly2(p, o + 2 * DD, D, x, 0.0)
        b2, b2x, _ = _poly2(p, o + 3 * DD, D, x, 0.0)
        den = b2 - a2
        if den != 0.0:
            out[0] = g * (b2 * a1 - a2 * b1) / den
        else:
            out[0] = g * (b2x * a1 - a2x * b1) / (b2x - a2x)
        return
    x = z[0]
    y = z[1]
    a1, a1x, a1y = _poly2(p, o, D, x, y)
    a2, a2x, a2y = _poly2(p, o + DD, D, x, y)
    b1, b1x, b1y = _poly2(p, o + 2 * DD, D, x, y)
    b2, b2x, b2y = _poly2(p, o + 3 * DD, D, x, y)
    if mode == MODE_PLUS:
        hp, hm, dh = 1.0, 0.0, 0.0
    elif mode == MODE_MINUS:
        hp, hm, dh = 0.0, 1.0, 0.0
    else:
        ph, dph = _phi(p, y * scale)
        hp = 1.0 + ph
        hm = 1.0 - ph
        dh = dph * scale
    f1 = g * (a1 * hp + b1 * hm)
    f2 = g * (a2 * hp + b2 * hm)
    out[0] = f1
    out[1] = f2
    if aug == AUG_VAR:
        j11 = g * (a1x * hp + b1x * hm)
        j12 = g * (a1y * hp + b1y * hm + (a1 - b1) * dh)
        j21 = g * (a2x * hp + b2x * hm)
        j22 = g * (a2y * hp + b2y * hm + (a2 - b2) * dh)
        q = o + 4 * DD
        c1, _, _ = _poly2(p, q, D, x, y)
        c2, _, _ = _poly2(p, q + DD, D, x, y)
        d1, _, _ = _poly2(p, q + 2 * DD, D, x, y)
        d2, _, _ = _poly2(p, q + 3 * DD, D, x, y)
        fm1 = g * (c1 * hp + d1 * hm)
        fm2 = g * (c2 * hp + d2 * hm)
        # Phi stored row-major in z[2:6], dz/dmu in z[6:8]
        out[2] = j11 * z[2] + j12 * z[4]
        out[3] = j11 * z[3] + j12 * z[5]
        out[4] = j21 * z[2] + j22 * z[4]
        out[5] = j21 * z[3] + j22 * z[5]
        out[6] = j11 * z[6] + j12 * z[7] + fm1
        out[7] = j21 * z[6] + j22 * z[7] + fm2
    elif aug == AUG_MELNIKOV:
        q = o + 4 * DD
        zp, zm, ep, em, cp, cm = p[q], p[q + 1], p[q + 2], p[q + 3], p[q + 4], p[q + 5]
        dl, al, be = p[q + 6], p[q + 7], p[q + 8]
        hy = (dl * hp + al * hm) / (be * hm - hp)
        x2 = x * x
        out[2] = (zp * hp + zm * hm) * x2 + hy * ((ep * x2 + cp * y) * hp + (em * x2 + cm * y) * hm)
        if z.shape[0] > 3:
            out[3] = hy * be * hm


# -- integrator ---------------------------------------------------------------

@njit(cache=True)
def _dense(zold, h, Q, theta, out):
    n = zold.shape[0]
    t2 = theta * theta
    for i in range(n):
        out[i] = zold[i] + h * theta * (Q[i, 0] + theta * Q[i, 1] + t2 * Q[i, 2] + t2 * theta * Q[i, 3])


@njit(cache=True)
def _dense_comp(zold, h, Q, theta, c):
    t2 = theta * theta
    return zold[c] + h * theta * (Q[c, 0] + theta * Q[c, 1] + t2 * Q[c, 2] + t2 * theta * Q[c, 3])


@njit(cache=True)
def _locate(zold, h, Q, c, level, glo, ghi):
    """Root of component c minus level on theta in (0, 1] (Illinois method)."""
    a, b = 0.0, 1.0
    fa, fb = glo, ghi
    side = 0
    for _ in range(200):
        if fb == 0.0:
            return b
        m = (a * fb - b * fa) / (fb - fa)
        if not (a < m < b):
            m = 0.5 * (a + b)
        fm = _dense_comp(zold, h, Q, m, c) - level
        if fm == 0.0:
            return m
        if (fm > 0.0) == (fb > 0.0):
            b, fb = m, fm
            if side == 1:
                fa *= 0.5
            side = 1
        else:
            a, fa = m, fm
            if side == -1:
                fb *= 0.5
            side = -1
        if b - a <= 1e-15 or abs(fm) <= 1e-14 * (1.0 + abs(level)):
            break
    return b if abs(fb) <= abs(fa) else a


@njit(cache=True)
def _norm(err, z0, z1, rtol, atol):
    s = 0.0
    n = err.shape[0]
    for i in range(n):
        sc = atol + rtol * max(abs(z0[i]), abs(z1[i]))
        s += (err[i] / sc) ** 2
    return np.sqrt(s / n)


def _dopri_impl(p, t0, z0, t1, rtol, atol, h0, hmax, max_steps, ev, record, max_rec):
    """Adaptive integration of the global ``rhs`` with events (see module doc)."""
    n = z0.shape[0]
    direction = 1.0 if t1 >= t0 else -1.0
    K = np.zeros((7, n))
    ztmp = np.zeros(n)
    znew = np.zeros(n)
    zd = np.zeros(n)
    err = np.zeros(n)
    Q = np.zeros((n, 4))
    m = ev.shape[0]
    nrec = max_rec if record else 1
    rec_t = np.zeros(nrec)
    rec_z = np.zeros((nrec, n))
    ev_t = np.zeros(max_rec)
    ev_i = np.zeros(max_rec, dtype=np.int64)
    ev_z = np.zeros((max_rec, n))
    ext = np.zeros((2, 2))
    t = t0
    z = z0.copy()
    ext[0, 0] = z[0]
    ext[1, 0] = z[0]
    if n > 1:
        ext[0, 1] = z[1]
        ext[1, 1] = z[1]
    n_rec = 0
    n_ev = 0
    if record:
        rec_t[0] = t
        rec_z[0, :] = z
        n_rec = 1
    status = STATUS_DONE
    fired = -1
    rhs(t, z, p, K[0])
    nfev = 1
    span = abs(t1 - t0)
    if span == 0.0:
        return (status, t, z, fired, rec_t[:n_rec], rec_z[:n_rec], ev_t[:0], ev_i[:0],
                ev_z[:0], ext, 0, nfev)
    # initial step (Hairer & Wanner II.4)
    if h0 > 0.0:
        h = min(h0, span)
    else:
        d0 = 0.0
        d1 = 0.0
        for i in range(n):
            sc = atol + abs(z[i]) * rtol
            d0 += (z[i] / sc) ** 2
            d1 += (K[0, i] / sc) ** 2
        d0 = np.sqrt(d0 / n)
        d1 = np.sqrt(d1 / n)
        hh = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
        hh = min(hh, span)
        for i in range(n):
            ztmp[i] = z[i] + direction * hh * K[0, i]
        rhs(t + direction * hh, ztmp, p, K[1])
        nfev += 1
        d2 = 0.0
        for i in range(n):
            sc = atol + abs(z[i]) * rtol
            d2 += ((K[1, i] - K[0, i]) / sc) ** 2
        d2 = np.sqrt(d2 / n) / hh
        if d1 <= 1e-15 and d2 <= 1e-15:
            h1 = max(1e-6, hh * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** 0.2
        h = min(100.0 * hh, h1, span)
    h = min(h, hmax)
    steps = 0
    resized = False
    skip_break = False
    while True:
        remaining = (t1 - t) * direction
        if remaining <= 0.0:
            break
        if steps >= max_steps:
            status = STATUS_MAXSTEPS
            break
        if h > remaining:
            h = remaining
        if h < 1e-14 * max(1.0, abs(t)):
            status = STATUS_UNDERFLOW
            break
        hs = h * direction
        for s in range(1, 6):
            for i in range(n):
                acc = 0.0
                for k in range(s):
                    acc += A[s, k] * K[k, i]
                ztmp[i] = z[i] + hs * acc
            rhs(t + C[s] * hs, ztmp, p, K[s])
        for i in range(n):
            acc = 0.0
            for k in range(6):
                acc += B[k] * K[k, i]
            znew[i] = z[i] + hs * acc
        tnew = t + hs if h < remaining else t1
        rhs(tnew, znew, p, K[6])
        nfev += 6
        finite = True
        for i in range(n):
            acc = 0.0
            for k in range(7):
                acc += E[k] * K[k, i]
            err[i] = hs * acc
            if not np.isfinite(znew[i]):
                finite = False
        if not finite:
            h *= 0.25
            steps += 1
            if h < 1e-14 * max(1.0, abs(t)):
                status = STATUS_NONFINITE
                break
            continue
        en = _norm(err, z, znew, rtol, atol)
        steps += 1
        if en > 1.0:
            h *= max(0.2, 0.9 * en ** -0.2)
            continue
        # dense output coefficients
        for i in range(n):
            for j in range(4):
                acc = 0.0
                for k in range(7):
                    acc += K[k, i] * P[k, j]
                Q[i, j] = acc
        # events: earliest crossing in this step
        best = 2.0
        best_k = -1
        for k in range(m):
            c = int(ev[k, 0])
            level = ev[k, 1]
            d = ev[k, 2]
            g0 = z[c] - level
            g1 = znew[c] - level
            hit = False
            if d > 0.0:
                hit = g0 < 0.0 and g1 >= 0.0
            elif d < 0.0:
                hit = g0 > 0.0 and g1 <= 0.0
            else:
                hit = g0 != 0.0 and g0 * g1 <= 0.0
            if hit:
                th = _locate(z, hs, Q, c, level, g0, g1)
                if th < best:
                    best = th
                    best_k = k
        if (best_k >= 0 and int(ev[best_k, 3]) == EV_BREAK and 1e-6 < best < 0.999
                and not resized and not skip_break):
            # land just past the kink so the next step starts on a smooth piece;
            # a kink at the very start of a step, or one missed by the previous
            # re-sized step, is straddled instead
            h = h * best * (1.0 + 1e-8) + 1e-15
            resized = True
            continue
        skip_break = resized
        resized = False
        # record non-terminal events preceding any terminal one
        term_theta = 2.0
        term_k = -1
        for k in range(m):
            if int(ev[k, 3]) == EV_TERMINAL:
                c = int(ev[k, 0])
                level = ev[k, 1]
                d = ev[k, 2]
                g0 = z[c] - level
                g1 = znew[c] - level
                if d > 0.0:
                    hit = g0 < 0.0 and g1 >= 0.0
                elif d < 0.0:
                    hit = g0 > 0.0 and g1 <= 0.0
                else:
                    hit = g0 != 0.0 and g0 * g1 <= 0.0
                if hit:
                    th = _locate(z, hs, Q, c, level, g0, g1)
                    if th < term_theta:
                        term_theta = th
                        term_k = k
        for k in range(m):
            if int(ev[k, 3]) == EV_RECORD and n_ev < max_rec:
                c = int(ev[k, 0])
                level = ev[k, 1]
                d = ev[k, 2]
                g0 = z[c] - level
                g1 = znew[c] - level
                if d > 0.0:
                    hit = g0 < 0.0 and g1 >= 0.0
                elif d < 0.0:
                    hit = g0 > 0.0 and g1 <= 0.0
                else:
                    hit = g0 != 0.0 and g0 * g1 <= 0.0
                if hit:
                    th = _locate(z, hs, Q, c, level, g0, g1)
                    if th <= term_theta:
                        _dense(z, hs, Q, th, zd)
                        zd[c] = level
                        ev_t[n_ev] = t + th * hs
                        ev_i[n_ev] = k
                        ev_z[n_ev, :] = zd
                        n_ev += 1
        theta_end = 1.0
        if term_k >= 0:
            theta_end = term_theta
        # extrema of the first two components over the accepted piece
        for q in range(1, 5):
            th = theta_end * q / 4.0
            for c in range(min(n, 2)):
                v = _dense_comp(z, hs, Q, th, c)
                if v > ext[0, c]:
                    ext[0, c] = v
                if v < ext[1, c]:
                    ext[1, c] = v
        if term_k >= 0:
            _dense(z, hs, Q, term_theta, zd)
            zd[int(ev[term_k, 0])] = ev[term_k, 1]
            t = t + term_theta * hs
            z[:] = zd
            status = STATUS_EVENT
            fired = term_k
            if record and n_rec < nrec:
                rec_t[n_rec] = t
                rec_z[n_rec, :] = z
                n_rec += 1
            break
        t = tnew
        z[:] = znew
        K[0, :] = K[6, :]
        if record and n_rec < nrec:
            rec_t[n_rec] = t
            rec_z[n_rec, :] = z
            n_rec += 1
        fac = 10.0 if en == 0.0 else min(10.0, 0.9 * en ** -0.2)
        h = min(h * fac, hmax)
    return (status, t, z, fired, rec_t[:n_rec], rec_z[:n_rec], ev_t[:n_ev], ev_i[:n_ev],
            ev_z[:n_ev], ext, steps, nfev)


rhs = model_rhs
integrate_model = njit(cache=True, nogil=True)(_dopri_impl)


def python_integrator(field):
    """Uncompiled copy of the integrator driving ``field(t, z, p, out)``."""
    env = dict(_dopri_impl.__globals__)
    env["rhs"] = field
    return types.FunctionType(_dopri_impl.__code__, env, "_dopri_python")
