"""Exact trivariate polynomials in (x, y, mu).

A :class:`Poly3` stores a dense coefficient array ``c[i, j, k]`` multiplying
``x**i * y**j * mu**k``.  Differentiation, substitution and rescaling are
exact coefficient manipulations; no finite differences are involved.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from math import comb

import numpy as np
from numpy.polynomial import polynomial as npoly

VARIABLES = ("x", "y", "mu")
_AXIS = {"x": 0, "y": 1, "mu": 2}


def _trim(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    nz = np.argwhere(c != 0.0)
    if nz.size == 0:
        return np.zeros((1, 1, 1))
    hi = nz.max(axis=0) + 1
    return c[: hi[0], : hi[1], : hi[2]].copy()


@dataclass(frozen=True, eq=False)
class Poly3:
    """Polynomial in (x, y, mu) with float coefficients.

    Parameters
    ----------
    coeffs : array_like, shape (nx, ny, nmu)
        ``coeffs[i, j, k]`` is the coefficient of ``x**i y**j mu**k``.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 3:
            raise ValueError("coefficient array must be three-dimensional")
        c = _trim(c)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_terms(cls, terms: dict) -> "Poly3":
        """Build from a mapping ``{(i, j, k): coefficient}``."""
        if not terms:
            return cls(np.zeros((1, 1, 1)))
        shape = tuple(max(key[a] for key in terms) + 1 for a in range(3))
        c = np.zeros(shape)
        for key, val in terms.items():
            c[key] += float(val)
        return cls(c)

    @classmethod
    def constant(cls, value: float) -> "Poly3":
        return cls(np.full((1, 1, 1), float(value)))

    @classmethod
    def variable(cls, name: str) -> "Poly3":
        if name == "u":
            return cls.variable("x") - cls.variable("mu")
        key = [0, 0, 0]
        key[_AXIS[name]] = 1
        return cls.from_terms({tuple(key): 1.0})

    def terms(self) -> dict:
        """Nonzero coefficients as ``{(i, j, k): value}`` in lexicographic order."""
        return {tuple(int(v) for v in idx): float(self.coeffs[tuple(idx)])
                for idx in np.argwhere(self.coeffs != 0.0)}

    @property
    def shape(self) -> tuple:
        return self.coeffs.shape

    def __call__(self, x, y=0.0, mu=0.0):
        return npoly.polyval3d(x, y, mu, self.coeffs)

    def deriv(self, var: str, m: int = 1) -> "Poly3":
        """Exact partial derivative of order ``m`` with respect to ``var``."""
        return Poly3(npoly.polyder(self.coeffs, m=m, axis=_AXIS[var]))

    def at(self, var: str, value: float = 0.0) -> float:
        """Value at the origin except for ``var``; convenience for tests."""
        args = {"x": 0.0, "y": 0.0, "mu": 0.0}
        args[var] = value
        return float(self(args["x"], args["y"], args["mu"]))

    def __eq__(self, other):
        if not isinstance(other, Poly3):
            return NotImplemented
        return self.coeffs.shape == other.coeffs.shape and bool(
            np.array_equal(self.coeffs, other.coeffs))

    def __hash__(self):
        return hash((self.coeffs.shape, self.coeffs.tobytes()))

    def _padded(self, other: "Poly3"):
        shape = tuple(max(a, b) for a, b in zip(self.shape, other.shape))
        a = np.zeros(shape)
        b = np.zeros(shape)
        a[tuple(slice(0, n) for n in self.shape)] = self.coeffs
        b[tuple(slice(0, n) for n in other.shape)] = other.coeffs
        return a, b

    def __add__(self, other):
        if not isinstance(other, Poly3):
            other = Poly3.constant(other)
        a, b = self._padded(other)
        return Poly3(a + b)

    __radd__ = __add__

    def __neg__(self):
        return Poly3(-self.coeffs)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Poly3) else -float(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Poly3):
            return Poly3(self.coeffs * float(other))
        sa, sb = self.shape, other.shape
        out = np.zeros(tuple(p + q - 1 for p, q in zip(sa, sb)))
        for idx in np.argwhere(other.coeffs != 0.0):
            i, j, k = idx
            out[i:i + sa[0], j:j + sa[1], k:k + sa[2]] += other.coeffs[i, j, k] * self.coeffs
        return Poly3(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = Poly3.constant(1.0)
        for _ in range(int(n)):
            out = out * self
        return out

    def restrict_x(self, y: float = 0.0, mu: float = 0.0) -> npoly.Polynomial:
        """Univariate polynomial in x obtained by fixing y and mu."""
        c = self.coeffs
        ypow = y ** np.arange(c.shape[1])
        mpow = mu ** np.arange(c.shape[2])
        return npoly.Polynomial(np.einsum("ijk,j,k->i", c, ypow, mpow))

    def bivariate(self, mu: float, r2: float | None = None, shift: int = 0,
                  dmu: bool = False) -> np.ndarray:
        """Coefficients in (x, y) after fixing mu, optionally blown up.

        With ``r2`` given, returns the coefficients of
        ``p(r2*x2, r2**2*yh, r2*mu2) / r2**shift`` as a polynomial in
        ``(x2, yh)`` with ``mu`` playing the role of ``mu2``.  The caller must
        ensure that every monomial has weight ``i + 2j + k >= shift``.

        With ``dmu`` the derivative with respect to mu is returned instead.
        """
        c = self.coeffs
        i, j, k = np.indices(c.shape)
        if r2 is None:
            w = c
        else:
            weight = i + 2 * j + k - shift
            if np.any((weight < 0) & (c != 0.0)):
                raise ValueError("polynomial has monomials of negative blow-up weight")
            w = np.where(c != 0.0, c * float(r2) ** np.maximum(weight, 0), 0.0)
        if dmu:
            w = w * k
            kk = np.maximum(k - 1, 0)
            mpow = np.where(k > 0, float(mu) ** kk, 0.0)
        else:
            mpow = float(mu) ** k
        return (w * mpow).sum(axis=2)


def _parse_factor(tok: str, line: int | None):
    m = re.fullmatch(r"(x|y|mu|u)(?:\^(\d+))?", tok)
    if not m:
        from .errors import ConfigError
        raise ConfigError(f"bad monomial factor {tok!r}", line)
    return m.group(1), int(m.group(2) or 1)


def parse_monomial(text: str, line: int | None = None) -> Poly3:
    """Parse ``"x^2*mu"``-style monomials; ``"1"`` is the constant.

    The symbol ``u`` abbreviates ``(x - mu)`` and is expanded exactly.
    """
    text = text.strip().replace(" ", "")
    if text in ("1", "const"):
        return Poly3.constant(1.0)
    out = Poly3.constant(1.0)
    for tok in text.split("*"):
        name, power = _parse_factor(tok, line)
        if name == "u":
            out = out * Poly3.from_terms({(power - p, 0, p): comb(power, p) * (-1.0) ** p
                                          for p in range(power + 1)})
        else:
            key = [0, 0, 0]
            key[_AXIS[name]] = power
            out = out * Poly3.from_terms({tuple(key): 1.0})
    return out


def format_monomial(key: tuple) -> str:
    parts = []
    for name, p in zip(VARIABLES, key):
        if p == 1:
            parts.append(name)
        elif p > 1:
            parts.append(f"{name}^{p}")
    return "*".join(parts) if parts else "1"
