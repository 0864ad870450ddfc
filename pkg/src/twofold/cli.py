"""Command-line frontend: ``twofold classify|analyze|simulate|continue``."""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .continuation import (RESOLUTION_STOP, BranchLimits, CycleBranch, continue_branch, hopf_start,
                           locate_fold, relaxation_cycle, write_branch_csv)
from .dynamics import (CompiledField, Tolerances, integrate_filippov, integrate_smooth,
                       write_trajectory_csv)
from .errors import ConfigError, InvalidRegularization, ModelError, NoFold, TwoFoldError
from .pws import Kind, classify, two_fold_report
from .scaling_chart import analyze, canard_mu2
from .svg import Figure

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _header(cfg: RunConfig, command: str) -> list:
    return [f"twofold {__version__} {command} config-sha256={cfg.source_hash}"]


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _csv_text(cfg, command, columns, rows) -> str:
    buf = io.StringIO()
    for line in _header(cfg, command):
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(getattr(v, "value", v))


# -- classify -----------------------------------------------------------------------

def cmd_classify(cfg: RunConfig, out: Path, threads: int = 1):
    mu = cfg.mu[0] if cfg.mu else cfg.model.mu
    rep = two_fold_report(cfg.model, mu)
    pseudo = {"PN": "pseudo-node", "PS": "pseudo-saddle", "x": "none"}[rep.pseudo_type]
    rows = [
        ("kind", rep.kind.value), ("visibility", rep.visibility.value),
        ("delta", rep.delta), ("alpha", rep.alpha), ("beta", rep.beta), ("Omega", rep.omega),
        ("singular_canard", rep.canard.value), ("pseudo_equilibrium_after_bifurcation", pseudo),
        ("limit_cycles", rep.limit_cycle.value), ("Delta_II2", rep.delta_ii2),
        ("Delta_VI3", rep.delta_vi3), ("mu", rep.mu),
    ]
    for k, iv in enumerate(rep.regions):
        rows.append((f"region_{k}", f"[{iv.lo!r}, {iv.hi!r}] {iv.label.value}"))
    if rep.pseudo is not None:
        rows.append(("x_ps", rep.pseudo.x_ps))
        rows.append(("pseudo_stability", rep.pseudo.stability.value))
    canard = "no canard" if rep.canard.value == "none" else f"{rep.canard.value} canard"
    summary = [f"{rep.kind.value}, Omega={rep.omega:g}"]
    if rep.kind is Kind.II2:
        summary.append(f"Delta_II2={rep.delta_ii2:g}")
    if rep.kind is Kind.VI3:
        summary.append(f"Delta_VI3={rep.delta_vi3:g}")
    summary += [canard, f"{pseudo} after bifurcation"]
    print(", ".join(summary))
    for k, v in rows:
        print(f"  {k:38s} {_num(v)}")
    _write(out / "classify.csv", _csv_text(cfg, "classify", ("quantity", "value"),
                                          [(k, _num(v)) for k, v in rows]))


# -- analyze ------------------------------------------------------------------------

ANALYZE_FIELDS = ("mu2_H", "a2", "mu2_c", "mu2_F", "y_hat_star", "y_hat_c", "phi1_H", "phi1_c",
                  "x2_star", "detA", "trA", "regime", "Delta_II2", "Delta_VI3")


def _analysis_row(cfg, fn, mu2):
    a = analyze(cfg.model, fn, mu2)
    vals = {
        "mu2_H": a.mu2_H, "a2": a.a2, "mu2_c": a.mu2_c, "mu2_F": a.mu2_F,
        "y_hat_star": a.y_hat_star, "y_hat_c": a.y_hat_c,
        "phi1_H": None if a.y_hat_star is None else float(fn(a.y_hat_star, 1)),
        "phi1_c": None if a.y_hat_c is None else float(fn(a.y_hat_c, 1)),
        "x2_star": a.x2_star, "detA": a.detA, "trA": a.trA,
        "regime": None if a.regime is None else a.regime.value,
        "Delta_II2": a.delta_II2, "Delta_VI3": a.delta_VI3,
    }
    return a, vals


def saddle_node_predicted(kind: Kind, a2: float, delta_ii2: float, delta_vi3: float) -> bool:
    """Small and large cycles of opposite stability force a fold in between.

    Large II2 cycles attract when ``Delta_II2 < 0``; large VI3 relaxation
    cycles attract when ``Delta_VI3 > 0``.  Small cycles attract when
    ``a2 < 0``.
    """
    if kind is Kind.II2:
        return a2 * delta_ii2 < 0
    if kind is Kind.VI3:
        return a2 * delta_vi3 > 0
    return False


def cmd_analyze(cfg: RunConfig, out: Path, threads: int = 1):
    if not cfg.phis:
        raise ConfigError("analyze needs phi.kind or phi.coeffs")
    mu2 = cfg.mu2[0] if cfg.mu2 else 0.0
    kind = classify(cfg.model).kind
    rows = []
    for fn in cfg.phis:
        a, vals = _analysis_row(cfg, fn, mu2)
        print(f"phi = {fn.kind}")
        for k in ANALYZE_FIELDS:
            print(f"  {k:12s} {_num(vals[k]) or '-'}")
            rows.append((fn.kind, k, _num(vals[k])))
        if a.a2 is not None and saddle_node_predicted(kind, a.a2, a.delta_II2, a.delta_VI3):
            delta = a.delta_II2 if kind is Kind.II2 else a.delta_VI3
            print(f"warning: a2*Delta = {a.a2 * delta:g} for phi = {fn.kind}: "
                  "a saddle-node of cycles is predicted", file=sys.stderr)
    _write(out / "analyze.csv", _csv_text(cfg, "analyze", ("phi", "quantity", "value"), rows))


# -- simulate -----------------------------------------------------------------------

def _tolerances(cfg) -> Tolerances:
    t = Tolerances()
    return Tolerances(rtol=float(cfg.option("rtol", t.rtol)), atol=float(cfg.option("atol", t.atol)),
                      max_steps=int(cfg.option("max_steps", t.max_steps)))


def _simulate_one(cfg, mu, x0, t_span, tol):
    if not cfg.eps:
        nonunique = cfg.option("nonunique", "raise")
        if nonunique not in ("raise", "slide"):
            raise ConfigError("nonunique must be 'raise' or 'slide'", cfg.lines.get("nonunique"))
        return integrate_filippov(cfg.model, x0, t_span, mu, tol, nonunique=nonunique)
    fld = CompiledField.regularized(cfg.model, cfg.phi, cfg.eps, mu)
    return integrate_smooth(fld, x0, t_span, tol=tol)


def cmd_simulate(cfg: RunConfig, out: Path, threads: int = 1):
    for key in ("x0", "t_span"):
        vals = cfg.option(key)
        if vals is None or len(vals) != 2:
            raise ConfigError(f"simulate needs {key} = [a, b]", cfg.lines.get(key))
    t_span = tuple(cfg.option("t_span"))
    if t_span[1] == t_span[0]:
        raise ConfigError("the time span has zero length", cfg.lines.get("t_span"))
    if cfg.eps and cfg.phi is None:
        raise ConfigError("eps > 0 needs phi.kind or phi.coeffs")
    if cfg.eps and len(cfg.phis) > 1:
        raise ConfigError("simulate takes a single phi", cfg.lines.get("phi.kind"))
    mus = cfg.mu or (cfg.model.mu,)
    x0 = np.array(cfg.option("x0"), float)
    tol = _tolerances(cfg)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        trajs = list(pool.map(lambda m: _simulate_one(cfg, m, x0, t_span, tol), mus))
    fig = Figure(title="phase portrait", xlabel="x", ylabel="y")
    for k, (mu, tr) in enumerate(zip(mus, trajs)):
        name = "trajectory.csv" if len(mus) == 1 else f"trajectory_{k:03d}.csv"
        buf = io.StringIO()
        write_trajectory_csv(tr, buf, _header(cfg, "simulate") + [f"mu={mu!r} eps={cfg.eps!r}"])
        _write(out / name, buf.getvalue())
        fig.add(tr.x, tr.y, label=f"mu={mu:.6g}")
        print(f"mu={mu:.6g}: {len(tr.t)} samples, {len(tr.events)} events, final state "
              f"({tr.final[0]:.10g}, {tr.final[1]:.10g}) -> {name}")
    if str(cfg.option("svg", "true")).lower() not in ("false", "0", "0.0", "no"):
        _write(out / "phase.svg", fig.to_svg())


# -- continue -----------------------------------------------------------------------

@dataclass
class TracedBranch:
    fn_kind: str
    branch: CycleBranch
    folds: list
    mu2_hopf: float


def _limits(cfg) -> BranchLimits:
    d = BranchLimits()
    amp = cfg.option("branch.max_amp_x")
    return BranchLimits(
        max_points=int(cfg.option("branch.max_points", d.max_points)),
        ds=float(cfg.option("branch.ds", d.ds)),
        ds_min=float(cfg.option("branch.ds_min", d.ds_min)),
        ds_max=float(cfg.option("branch.ds_max", d.ds_max)),
        mu2_min=float(cfg.option("branch.mu2_min", d.mu2_min)),
        mu2_max=float(cfg.option("branch.mu2_max", d.mu2_max)),
        max_amp_x2=math.inf if amp is None else float(amp) / cfg.r2,
    )


def trace_branch(cfg: RunConfig, fn) -> TracedBranch:
    """Hopf start, continuation and, for VI3, both sides of the canard explosion."""
    model, r2 = cfg.model, cfg.r2
    section = cfg.option("section", "below")
    if section not in ("below", "above"):
        raise ConfigError("section must be 'below' or 'above'", cfg.lines.get("section"))
    side = -1.0 if section == "below" else 1.0
    s0 = side * abs(float(cfg.option("s0", 0.02)))
    limits = _limits(cfg)
    rho = float(cfg.option("rho", 0.2))
    hs = hopf_start(model, fn, r2, s0=s0)
    small = continue_branch(hs.cycle, 1.0, limits)
    points = list(small.points)
    explosion = small.explosion
    termination = small.termination
    enabled = str(cfg.option("explosion.enabled", "true")).lower() not in ("false", "0", "0.0", "no")
    if (small.termination == RESOLUTION_STOP and enabled
            and classify(model).kind is Kind.VI3):
        edge = small.points[-1].mu2
        way = math.copysign(1.0, edge - hs.mu2_hopf)
        past = cfg.option("explosion.mu2_past")
        if past is None:
            past = edge + way * 0.1 * r2 * abs(canard_mu2(model, fn))
        big = relaxation_cycle(model, fn, r2, float(past), side, rho)
        back = continue_branch(big, -1.0, limits)
        ahead = continue_branch(big, 1.0, limits)
        points += list(reversed(back.points)) + list(ahead.points[1:])
        explosion = tuple(sorted((edge, back.points[-1].mu2)))
        termination = ahead.termination
    folds = [i for i, p in enumerate(points) if p.fold]
    branch = CycleBranch(r2, points, folds, explosion, termination)
    refined = []
    if small.folds:
        try:
            refined = locate_fold(small, model, fn)
        except (NoFold, TwoFoldError):
            refined = []
    return TracedBranch(fn.kind, branch, refined, hs.mu2_hopf)


def cmd_continue(cfg: RunConfig, out: Path, threads: int = 1):
    if not cfg.r2:
        raise ConfigError("continue needs r2 > 0 or eps > 0")
    if not cfg.phis:
        raise ConfigError("continue needs phi.kind or phi.coeffs")
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        traced = list(pool.map(lambda fn: trace_branch(cfg, fn), cfg.phis))
    kind = classify(cfg.model).kind
    use_yhat = kind is Kind.II2
    fig = Figure(title=f"{kind.value} cycles, r2 = {cfg.r2:g}", xlabel="mu2",
                 ylabel="max y_hat" if use_yhat else "max x")
    for tb in traced:
        br = tb.branch
        notes = _header(cfg, "continue") + [f"phi={tb.fn_kind} r2={cfg.r2!r} "
                                            f"mu2_hopf={tb.mu2_hopf!r}",
                                            f"termination={br.termination}"]
        for f in tb.folds:
            notes.append(f"fold mu2={f.mu2!r} amp_x={f.amp_x!r}")
        if br.explosion is not None:
            notes.append(f"explosion mu2_lo={br.explosion[0]!r} mu2_hi={br.explosion[1]!r}")
        buf = io.StringIO()
        write_branch_csv(br, buf, notes)
        _write(out / f"branch_{tb.fn_kind}.csv", buf.getvalue())
        mu = br.column("mu2")
        amp = br.column("amp_yhat" if use_yhat else "amp_x")
        fig.add(mu, amp, label=f"phi {tb.fn_kind}")
        for f in tb.folds:
            fig.mark(f.mu2, f.amp_x if not use_yhat else np.interp(f.mu2, mu, amp), "SN")
        if br.explosion is not None:
            fig.band(*br.explosion, label=f"canard explosion ({tb.fn_kind})")
        line = (f"phi={tb.fn_kind}: {len(br.points)} points, Hopf mu2={tb.mu2_hopf:.10g}, "
                f"folds={len(tb.folds)}")
        if br.explosion is not None:
            line += f", explosion in [{br.explosion[0]:.12g}, {br.explosion[1]:.12g}]"
        print(line + f" ({br.termination})")
        for f in tb.folds:
            print(f"  saddle-node at mu2={f.mu2:.10g}, max x={f.amp_x:.6g}")
    _write(out / "amplitude.svg", fig.to_svg())


# -- entry point --------------------------------------------------------------------

COMMANDS = {"classify": cmd_classify, "analyze": cmd_analyze, "simulate": cmd_simulate,
            "continue": cmd_continue}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twofold", description=__doc__)
    p.add_argument("--version", action="version", version=f"twofold {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="run configuration file")
        s.add_argument("--out", default=None, help="output directory")
        s.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        cfg = load_config(args.config)
        out = Path(args.out or cfg.out or ".")
        COMMANDS[args.command](cfg, out, args.threads)
    except (ConfigError, ModelError, InvalidRegularization) as exc:
        print(f"twofold: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TwoFoldError as exc:
        print(f"twofold: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
