"""Plain-text run configuration.

Grammar, one statement per line::

    line      := blank | comment | key "=" value [comment]
    comment   := "#" any-text
    key       := name ("." name)*
    value     := scalar | list | range
    list      := "[" scalar ("," scalar)* "]"
    range     := number ":" number ":" integer      (inclusive, evenly spaced)
    scalar    := number | word
    number    := decimal float or fraction "p/q"

Model coefficients are keyed by field, component and monomial, for example
``xplus.f1.x = -7`` or ``xminus.f2.u^2 = -2``.  A monomial is ``1`` or a
``*``-separated product of ``x``, ``y``, ``mu`` and ``u = x - mu`` with
optional ``^power``.  Model keys may appear in the run configuration itself
or in a separate file named by ``model = <path>``.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import ConfigError, InvalidRegularization
from .polynomial import Poly3, format_monomial, parse_monomial
from .pws import NormalFormModel, extract_coefficients
from .regularizer import KINDS, RegularizationFn

_KEY = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z0-9_^*]+)*")
_FIELD = re.compile(r"(xplus|xminus)\.(f1|f2)\.(.+)")

COMMANDS = ("classify", "analyze", "simulate", "continue")
SCALAR_KEYS = {
    "model", "eps", "r2", "out", "rtol", "atol", "max_steps", "rho", "nonunique",
    "svg", "section", "s0", "branch.max_points", "branch.ds", "branch.ds_max", "branch.ds_min",
    "branch.mu2_min", "branch.mu2_max", "branch.max_amp_x", "explosion.mu2_past",
    "explosion.enabled",
}
LIST_KEYS = {"mu", "mu2", "phi.kind", "phi.coeffs", "x0", "t_span"}


@dataclass(frozen=True)
class Entry:
    value: object
    line: int


def parse_number(text: str, line: int | None = None) -> float:
    """Decimal or ``p/q`` fraction."""
    t = text.strip()
    try:
        if "/" in t:
            return float(Fraction(t))
        v = float(t)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"not a number: {text!r}", line) from None
    if not math.isfinite(v):
        raise ConfigError(f"non-finite number: {text!r}", line)
    return v


def _parse_value(text: str, line: int):
    t = text.strip()
    if not t:
        raise ConfigError("missing value", line)
    if t.startswith("["):
        if not t.endswith("]"):
            raise ConfigError("unterminated list", line)
        items = [s.strip() for s in t[1:-1].split(",")]
        if items == [""]:
            raise ConfigError("empty list", line)
        if any(not s for s in items):
            raise ConfigError("empty list item", line)
        return [_scalar(s, line) for s in items]
    if t.count(":") == 2:
        a, b, n = t.split(":")
        lo, hi = parse_number(a, line), parse_number(b, line)
        try:
            k = int(n)
        except ValueError:
            raise ConfigError(f"range count must be an integer: {n!r}", line) from None
        if k < 1:
            raise ConfigError("empty range", line)
        return [float(v) for v in np.linspace(lo, hi, k)]
    return _scalar(t, line)


def _scalar(text: str, line: int):
    try:
        return parse_number(text, line)
    except ConfigError:
        if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_.\-/]*", text):
            return text
        raise


def parse_text(text: str) -> dict:
    """``{key: Entry}`` for every statement; duplicate keys are errors."""
    out = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        s = raw.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise ConfigError(f"expected 'key = value', got {s!r}", n)
        key, val = (p.strip() for p in s.split("=", 1))
        if not _KEY.fullmatch(key):
            raise ConfigError(f"malformed key {key!r}", n)
        if key in out:
            raise ConfigError(f"duplicate key {key!r} (first on line {out[key].line})", n)
        out[key] = Entry(_parse_value(val, n), n)
    return out


# -- models -------------------------------------------------------------------

def model_from_entries(entries: dict) -> NormalFormModel:
    """Assemble ``X+-`` from ``xplus.f1.<monomial>``-style entries."""
    comps = {(f, c): Poly3.constant(0.0) for f in ("xplus", "xminus") for c in ("f1", "f2")}
    seen = {}
    found = False
    for key, e in entries.items():
        m = _FIELD.fullmatch(key)
        if not m:
            continue
        found = True
        if not isinstance(e.value, float):
            raise ConfigError(f"coefficient of {key!r} must be a number", e.line)
        mono = parse_monomial(m.group(3), e.line)
        canon = (m.group(1), m.group(2), tuple(sorted(mono.terms().items())))
        if canon in seen:
            raise ConfigError(f"monomial {m.group(3)!r} repeats line {seen[canon]}", e.line)
        seen[canon] = e.line
        comps[m.group(1), m.group(2)] = comps[m.group(1), m.group(2)] + e.value * mono
    if not found:
        raise ConfigError("no model coefficients (xplus.f1.<monomial> = value) found")
    mu = 0.0
    if "mu" in entries and isinstance(entries["mu"].value, float):
        mu = entries["mu"].value
    return extract_coefficients((comps["xplus", "f1"], comps["xplus", "f2"]),
                                (comps["xminus", "f1"], comps["xminus", "f2"]), mu=mu)


def dump_model(model: NormalFormModel) -> str:
    """Model file text; :func:`load_model_text` reproduces the model exactly."""
    lines = []
    for name, pair in (("xplus", model.xplus), ("xminus", model.xminus)):
        for comp, poly in zip(("f1", "f2"), pair):
            for key, val in poly.terms().items():
                lines.append(f"{name}.{comp}.{format_monomial(key)} = {val!r}")
    if model.mu != 0.0:
        lines.append(f"mu = {model.mu!r}")
    return "\n".join(lines) + "\n"


def load_model_text(text: str) -> NormalFormModel:
    return model_from_entries(parse_text(text))


# -- run configuration ----------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration.

    ``mu`` holds the values of the unfolding parameter in original units and
    ``mu2`` the scaling-chart values; at most one of them is given by the
    user and the other follows from ``mu = r2 mu2``.
    """

    model: NormalFormModel
    phis: tuple
    eps: float | None
    r2: float | None
    mu: tuple
    mu2: tuple
    options: dict
    source_hash: str
    out: str | None = None
    lines: dict = field(default_factory=dict, repr=False)

    @property
    def phi(self) -> RegularizationFn | None:
        return self.phis[0] if self.phis else None

    def option(self, key: str, default=None):
        return self.options.get(key, default)


def _phis(entries) -> tuple:
    kinds = entries.get("phi.kind")
    coeffs = entries.get("phi.coeffs")
    if kinds is None and coeffs is None:
        return ()
    if coeffs is not None:
        if kinds is not None and kinds.value not in ("custom", ["custom"]):
            raise ConfigError("phi.coeffs requires phi.kind = custom or no phi.kind", coeffs.line)
        vals = coeffs.value if isinstance(coeffs.value, list) else [coeffs.value]
        if not all(isinstance(v, float) for v in vals):
            raise ConfigError("phi.coeffs must be numbers", coeffs.line)
        try:
            return (RegularizationFn.custom(vals),)
        except InvalidRegularization as exc:
            raise ConfigError(str(exc), coeffs.line) from None
    names = kinds.value if isinstance(kinds.value, list) else [kinds.value]
    out = []
    for k in names:
        if k not in KINDS or k == "custom":
            raise ConfigError(f"unknown phi.kind {k!r}; use linear, cubic, septic or phi.coeffs",
                              kinds.line)
        out.append(RegularizationFn.from_kind(k))
    return tuple(out)


def _as_list(entry) -> tuple:
    vals = entry.value if isinstance(entry.value, list) else [entry.value]
    if not all(isinstance(v, float) for v in vals):
        raise ConfigError("expected numbers", entry.line)
    return tuple(vals)


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a run configuration file.

    Raises
    ------
    ConfigError
        With the offending line number where one applies.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    text = raw.decode("utf-8")
    entries = parse_text(text)
    digest = hashlib.sha256(raw)

    if "model" in entries:
        mpath = path.parent / str(entries["model"].value)
        try:
            mraw = mpath.read_bytes()
        except OSError as exc:
            raise ConfigError(f"cannot read model file {mpath}: {exc.strerror}",
                              entries["model"].line) from None
        digest.update(mraw)
        model_entries = parse_text(mraw.decode("utf-8"))
        if any(_FIELD.fullmatch(k) for k in entries):
            raise ConfigError("model coefficients given both inline and in a model file",
                              entries["model"].line)
    else:
        model_entries = entries

    for key, e in entries.items():
        if _FIELD.fullmatch(key) or key in SCALAR_KEYS or key in LIST_KEYS:
            continue
        raise ConfigError(f"unknown key {key!r}", e.line)
    for key in SCALAR_KEYS:
        if key in entries and isinstance(entries[key].value, list):
            raise ConfigError(f"{key} takes a single value", entries[key].line)

    model = model_from_entries(model_entries)
    phis = _phis(entries)

    eps = r2 = None
    if "eps" in entries and "r2" in entries:
        raise ConfigError("give exactly one of eps and r2", entries["r2"].line)
    if "eps" in entries:
        eps = entries["eps"].value
        if not isinstance(eps, float) or eps < 0:
            raise ConfigError("eps must be a non-negative number", entries["eps"].line)
        r2 = math.sqrt(eps)
    elif "r2" in entries:
        r2 = entries["r2"].value
        if not isinstance(r2, float) or r2 < 0:
            raise ConfigError("r2 must be a non-negative number", entries["r2"].line)
        eps = r2 * r2

    mu = mu2 = ()
    if "mu" in entries and "mu2" in entries:
        raise ConfigError("give at most one of mu and mu2", entries["mu2"].line)
    if "mu" in entries:
        mu = _as_list(entries["mu"])
        mu2 = tuple(m / r2 for m in mu) if r2 else ()
    elif "mu2" in entries:
        mu2 = _as_list(entries["mu2"])
        if r2 is None:
            raise ConfigError("mu2 needs eps or r2", entries["mu2"].line)
        mu = tuple(r2 * m for m in mu2)

    options = {}
    for key in ("x0", "t_span"):
        if key in entries:
            options[key] = _as_list(entries[key])
    for key in SCALAR_KEYS - {"model", "eps", "r2"}:
        if key in entries:
            options[key] = entries[key].value
    return RunConfig(model=model, phis=phis, eps=eps, r2=r2, mu=mu, mu2=mu2, options=options,
                     source_hash=digest.hexdigest(), out=options.get("out"),
                     lines={k: e.line for k, e in entries.items()})
