"""Assembly of the flat parameter vectors consumed by :mod:`twofold._rk`."""

from __future__ import annotations

import numpy as np

from . import _rk
from .pws import NormalFormModel
from .regularizer import RegularizationFn

_DUMMY_PHI = np.array([0.0, 1.0])


def _pad(blocks):
    D = max(max(b.shape) for b in blocks)
    out = []
    for b in blocks:
        m = np.zeros((D, D))
        m[: b.shape[0], : b.shape[1]] = b
        out.append(m.ravel())
    return D, out


def _assemble(mode, scale, aug, g, phi, blocks, extra=()):
    D, flat = _pad(blocks)
    head = np.array([mode, scale, aug, D, len(phi), g], dtype=float)
    return np.concatenate([head, np.asarray(phi, float)] + flat + [np.asarray(extra, float)])


def _phi_coeffs(fn):
    return _DUMMY_PHI if fn is None else fn.power_coefficients()


def plane_params(model: NormalFormModel, fn: RegularizationFn | None, eps: float | None,
                 mu: float, mode: int = _rk.MODE_BLEND, tsign: float = 1.0) -> np.ndarray:
    """Original coordinates (x, y): blended field ``X_eps`` or a pure ``X+-``.

    The blended field carries the factor 1/2 of the regularization; the
    pure fields and the sliding flow are the vector fields themselves.
    """
    blocks = [p.bivariate(mu) for p in (*model.xplus, *model.xminus)]
    if mode == _rk.MODE_BLEND:
        if fn is None or eps is None or eps <= 0.0:
            raise ValueError("the blended field needs phi and eps > 0")
        return _assemble(mode, 1.0 / eps, _rk.AUG_NONE, 0.5 * tsign, _phi_coeffs(fn), blocks)
    return _assemble(mode, 1.0, _rk.AUG_NONE, tsign, _phi_coeffs(fn), blocks)


def chart_blocks(model: NormalFormModel, r2: float, mu2: float, dmu: bool = False):
    """Blown-up coefficient blocks in (x2, y_hat) for X1+, X2+, X1-, X2-.

    ``x = r2 x2``, ``y = r2**2 y_hat``, ``mu = r2 mu2``; the normal
    components are divided by ``r2``.  Exact for every ``r2 >= 0``.
    """
    out = []
    for pair in (model.xplus, model.xminus):
        out.append(pair[0].bivariate(mu2, r2=r2, shift=0, dmu=dmu))
        out.append(pair[1].bivariate(mu2, r2=r2, shift=1, dmu=dmu))
    return out


def chart_params(model: NormalFormModel, fn: RegularizationFn, r2: float, mu2: float,
                 variational: bool = False, tsign: float = 1.0) -> np.ndarray:
    blocks = chart_blocks(model, r2, mu2)
    if variational:
        blocks = blocks + chart_blocks(model, r2, mu2, dmu=True)
        D, flat = _pad(blocks)
        head = np.array([_rk.MODE_BLEND, 1.0, _rk.AUG_VAR, D, len(_phi_coeffs(fn)), tsign])
        return np.concatenate([head, _phi_coeffs(fn)] + flat)
    return _assemble(_rk.MODE_BLEND, 1.0, _rk.AUG_NONE, tsign, _phi_coeffs(fn), blocks)


def melnikov_params(model: NormalFormModel, fn: RegularizationFn) -> np.ndarray:
    """Hamiltonian limit ``r2 = mu2 = 0`` with the r2-sensitivity integrand appended."""
    blocks = chart_blocks(model, 0.0, 0.0)
    extra = (model.zeta_plus, model.zeta_minus, model.eta_plus, model.eta_minus,
             model.chi_plus, model.chi_minus, model.delta, model.alpha, model.beta)
    return _assemble(_rk.MODE_BLEND, 1.0, _rk.AUG_MELNIKOV, 1.0, _phi_coeffs(fn), blocks, extra)


def no_events():
    return np.zeros((0, 4))


def events(*rows):
    """Rows ``(component, level, direction, kind)``."""
    return np.array(rows, dtype=float).reshape(-1, 4)
