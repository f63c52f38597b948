"""Command-line entry point.

Subcommands: weights, geometry, covering, solve, harnack, hoelder, growth,
liouville.  Global flags: --seed, --out, --plots, --tol-quad, --threads
(HARNACK_LAB_THREADS overrides --threads).  CSV is the output contract
(17-significant-digit floats, seed echoed, byte-identical under a fixed
seed); SVG figures are written next to the CSV when --plots is given.

Exit codes: 0 all requested assertions pass; 2 config/parse error;
3 numerical failure; 4 assertion failure in a check subcommand.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import covering as cov
from . import experiments as xp
from . import geometry as geo
from . import report as rpt
from .configio import fmt17, parse_sections, read_config
from .errors import (
    BracketFailure,
    CflViolation,
    ConfigError,
    ConstructionFailure,
    DegenerateInfimum,
    EmptyFamily,
    HarnackLabError,
    LinearSolveFailure,
    NonIntegrable,
    ResolutionTooCoarse,
)
from .solver import (
    CoefficientField,
    GridSpec,
    Problem,
    dump_binary,
    dump_csv,
    residual_field,
    solve,
)
from .weights import (
    Ball,
    BallSampler,
    WeightSpec,
    ap_characteristic,
    ball_mean,
    duality_check,
    wbmo_ball,
    weight_from_text,
)

_NUMERICAL = (NonIntegrable, BracketFailure, CflViolation, LinearSolveFailure,
              EmptyFamily, ConstructionFailure, ResolutionTooCoarse,
              DegenerateInfimum, ValueError)


def _load_weight(args) -> WeightSpec:
    if getattr(args, "weight", None):
        return weight_from_text(args.weight)
    if getattr(args, "spec", None):
        with open(args.spec, "r", encoding="utf-8") as fh:
            text = fh.read()
        if "[" in text:
            sections = parse_sections(text)
            if "weight" not in sections:
                raise ConfigError(f"{args.spec} has no [weight] section")
            return weight_from_text(sections["weight"])
        return weight_from_text(text)
    if getattr(args, "config", None):
        cfg = read_config(args.config)
        if "weight" in cfg:
            return weight_from_text(cfg["weight"])
    raise ConfigError("provide --weight 'kind=...', --spec FILE, or a "
                      "--config with a [weight] section")


def _outpath(args, name) -> str:
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _echo(args, extra=()) -> list:
    lines = [f"seed={args.seed}"]
    lines.extend(extra)
    return lines


def _ensemble(args, w, scales) -> xp.EnsembleSpec:
    """Ensemble from flags; an [ensemble] section in --config overrides them."""
    kw = dict(coeff_kind=args.coeff, nu=args.nu, count=args.count,
              seed=args.seed, r_scales=tuple(scales), nx=args.nx,
              threads=args.threads)
    if getattr(args, "config", None):
        cfg = read_config(args.config)
        ens = cfg.get("ensemble", {})
        if "count" in ens:
            kw["count"] = int(ens["count"])
        if "seed" in ens:
            kw["seed"] = int(ens["seed"])
        if "nx" in ens:
            kw["nx"] = int(ens["nx"])
        if "coeff" in ens:
            kw["coeff_kind"] = ens["coeff"]
        if "nu" in ens:
            kw["nu"] = float(ens["nu"])
        if "scales" in ens:
            kw["r_scales"] = tuple(float(v) for v in ens["scales"].split(","))
        if "weight" in cfg:
            w = weight_from_text(cfg["weight"])
    return xp.EnsembleSpec(weight=w, **kw)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_weights(args) -> int:
    w = _load_weight(args)
    sampler = BallSampler(kind=args.balls, count=args.count, seed=args.seed,
                          focus=(0.0,) * w.n)
    balls = sampler.balls(w.n)
    p = 1.0 + 1.0 / w.n
    ap = ap_characteristic(w, p, sampler)
    rows = []
    for b in balls:
        mo = ball_mean(w, b, "omega", rel_tol=args.tol_quad)
        mm = ball_mean(w, b, "mu", rel_tol=args.tol_quad)
        prod, bound = duality_check(w, b, ap)
        rows.append((" ".join(fmt17(c) for c in b.center), b.radius, mo, mm,
                     prod, wbmo_ball(w, b, rel_tol=args.tol_quad)))
    rpt.write_csv(_outpath(args, "weights.csv"),
                  ["center", "radius", "mean_omega", "mean_mu",
                   "duality_product", "wbmo"],
                  rows,
                  comments=_echo(args, [
                      f"sampler {sampler.describe()}",
                      f"ap_estimate p={fmt17(p)} value={fmt17(ap.value)} "
                      f"balls={ap.ball_count} method={ap.method}"]))
    print(f"weights: {len(rows)} balls, [omega]_Ap >= {ap.value:.8g} "
          f"({ap.method}) -> {_outpath(args, 'weights.csv')}")
    return 0


def cmd_geometry(args) -> int:
    w = _load_weight(args)
    if w.n != 1:
        raise ConfigError("geometry sweeps run on one-dimensional weights")
    rng = np.random.default_rng(args.seed)
    n = args.pairs
    box = args.box
    xs, ts = rng.uniform(-box, box, n), rng.uniform(-box, box, n)
    ys, ss = rng.uniform(-box, box, n), rng.uniform(-box, box, n)
    zs, us = rng.uniform(-box, box, n), rng.uniform(-box, box, n)
    lo_t, hi_t = np.minimum(ts, ss), np.maximum(ts, ss)
    th = geo.theta_values(w, xs, lo_t, ys, hi_t)
    rho = geo.quasi_distance_values(w, xs, lo_t, ys, hi_t)
    sandwich_ok = (th <= rho * (1.0 + 1e-9)) & (rho <= math.sqrt(2.0) * th
                                                * (1.0 + 1e-9))
    r_xy = geo.quasi_distance_values(w, xs, ts, ys, ss)
    r_yz = geo.quasi_distance_values(w, ys, ss, zs, us)
    r_xz = geo.quasi_distance_values(w, xs, ts, zs, us)
    triangle_ok = r_xz <= 2.0 * (r_xy + r_yz) * (1.0 + 1e-9)
    rows = [("sandwich", int(np.count_nonzero(sandwich_ok)), n),
            ("quasi_triangle", int(np.count_nonzero(triangle_ok)), n)]
    extra = []
    if args.cylinder:
        c = geo.parse_cylinder(args.cylinder, w)
        extra.append(f"cylinder Y=({fmt17(c.center.x[0])},{fmt17(c.center.t)}) "
                     f"r={fmt17(c.radius)} h={fmt17(c.height_fraction)} "
                     f"depth={fmt17(c.depth)} "
                     f"mu_measure={fmt17(geo.cylinder_mu_measure(c)) if c.height_fraction == 1.0 else 'n/a'}")
    rpt.write_csv(_outpath(args, "geometry.csv"),
                  ["check", "passed", "total"], rows,
                  comments=_echo(args, extra))
    ok = bool(np.all(sandwich_ok) and np.all(triangle_ok))
    print(f"geometry: sandwich {rows[0][1]}/{n}, quasi-triangle {rows[1][1]}/{n} "
          f"-> {_outpath(args, 'geometry.csv')}")
    return 0 if ok else 4


def cmd_covering(args) -> int:
    w = _load_weight(args)
    grid = cov.CellGrid(x0=-args.box, t0=-args.box, dx=2.0 * args.box / args.nx,
                        dt=2.0 * args.box / args.nt, nx=args.nx, nt=args.nt)
    if args.gamma == "random":
        gamma = cov.random_gamma(grid, args.seed, blobs=args.blobs)
    else:
        gamma = cov.gamma_from_csv(args.gamma, grid)
    if args.k0 is not None:
        K0 = args.k0
    else:
        ap = ap_characteristic(w, 1.0 + 1.0 / w.n,
                               BallSampler(kind="both", count=16,
                                           seed=args.seed, focus=(0.0,) * w.n))
        K0 = ap.value
    report = cov.build_E_and_hatE(gamma, w, args.delta0, args.k1, K0=K0)
    cols, rows = rpt.covering_rows(report)
    rpt.write_csv(_outpath(args, "covering.csv"), cols, rows,
                  comments=_echo(args, [f"gamma={args.gamma} blobs={args.blobs}"]))
    print("covering:", rpt.covering_summary(report))
    if args.plots:
        rpt.plot_covering(report, _outpath(args, "covering.svg"))
    return 0 if report.passed() else 4


def _data_profile(kind: str, rng, grid: GridSpec):
    name, _, params = kind.partition(":")
    vals = [float(v) for v in params.split(",")] if params else []

    def shape_like(x):
        x = np.asarray(x, dtype=float)
        return x if grid.n == 1 else x[..., 0]

    if name == "sin":
        return lambda x, t=0.0: np.sin(shape_like(x))
    if name == "const":
        c = vals[0] if vals else 1.0
        return lambda x, t=0.0: np.full_like(shape_like(x), c)
    if name == "bump":
        amp, ctr, sig = (vals + [1.0, 0.0, 0.2])[:3]
        return lambda x, t=0.0: amp * np.exp(-(shape_like(x) - ctr) ** 2
                                             / (2.0 * sig * sig))
    if name == "random":
        lo, hi = grid.box[0]
        prof = xp.random_positive_profile(rng, lo, hi)
        return lambda x, t=0.0: prof(shape_like(x))
    if name == "heat":
        return lambda x, t=0.0: math.exp(-t) * np.sin(shape_like(x))
    raise ConfigError(f"unknown data profile {kind!r}")


def _coeff_from_kv(kv: dict, n: int) -> CoefficientField:
    kind = kv.get("kind", "constant")
    nu = float(kv.get("nu", 0.5))
    if kind == "constant":
        return CoefficientField.constant(n)
    if kind == "checkerboard":
        return CoefficientField.checkerboard(nu, seed=int(kv.get("seed", 0)), n=n)
    if kind == "rotating":
        return CoefficientField.rotating(nu, n=n, rate=float(kv.get("rate", 1.0)))
    raise ConfigError(f"unknown coefficient kind {kind!r}")


def cmd_solve(args) -> int:
    cfg = read_config(args.problem)
    for sec in ("weight", "grid"):
        if sec not in cfg:
            raise ConfigError(f"problem file is missing [{sec}]")
    w = weight_from_text(cfg["weight"])
    gb = cfg["grid"]
    n = int(gb.get("n", w.n))
    box_vals = [float(v) for v in gb["box"].split(",")]
    box = tuple((box_vals[2 * i], box_vals[2 * i + 1]) for i in range(n))
    nx = tuple(int(v) for v in gb["nx"].split(","))
    nx = nx * n if len(nx) == 1 else nx
    grid = GridSpec(n=n, box=box, nx=nx, t0=float(gb.get("t0", 0.0)),
                    t1=float(gb["t1"]), nt=int(gb["nt"]),
                    scheme=gb.get("scheme", "explicit"))
    coeff = _coeff_from_kv(cfg.get("coefficients", {}), n)
    data = cfg.get("data", {})
    rng = np.random.default_rng(args.seed)
    u0 = _data_profile(data.get("initial", "const:0"), rng, grid)
    bnd_kind = data.get("boundary", "frozen")
    if bnd_kind == "frozen":
        g = lambda x, t: u0(x)
    else:
        g = _data_profile(bnd_kind, rng, grid)
    f_kind = data.get("f", "none")
    f = None if f_kind == "none" else _data_profile(f_kind, rng, grid)
    prob = Problem(weight=w, coeff=coeff, grid=grid, u0=u0, g=g, f=f)
    sol = solve(prob)
    dump_csv(sol, _outpath(args, "solution.csv"))
    res = residual_field(sol)
    worst = float(np.nanmax(np.abs(res)))
    if args.bin:
        dump_binary(sol, _outpath(args, "solution.bin"))
    print(f"solve: {grid.scheme} {grid.nt} steps, nodes {grid.nx}, "
          f"max interior residual {worst:.3e} -> {_outpath(args, 'solution.csv')}")
    return 0


def cmd_harnack(args) -> int:
    w = _load_weight(args)
    if args.beta_sweep:
        betas = [float(v) for v in args.beta_sweep.split(",")]
        sweep = xp.harnack_beta_sweep(betas, count=args.count, seed=args.seed,
                                      nx=args.nx, r=args.r0)
        rows = [(b, sweep[b]["wbmo"], sweep[b]["max_ratio"]) for b in betas]
        rpt.write_csv(_outpath(args, "harnack_beta_sweep.csv"),
                      ["beta", "wbmo", "max_ratio"], rows,
                      comments=_echo(args, ["ratio growth reported, no "
                                            "conclusion drawn"]))
        print(f"harnack beta sweep -> {_outpath(args, 'harnack_beta_sweep.csv')}")
        return 0
    scales = [float(v) for v in args.scales.split(",")]
    spec = _ensemble(args, w, scales)
    scales = list(spec.r_scales)
    report = xp.harnack_experiment(spec)
    cols, rows = rpt.harnack_rows(report)
    comments = _echo(args, [f"scales={args.scales} count={args.count} nx={args.nx}",
                            f"geometry {report.geometry_note}"])
    rpt.write_csv(_outpath(args, "harnack.csv"), cols, rows, comments=comments)
    if args.plots:
        rpt.plot_harnack(report, _outpath(args, "ratios.svg"))
    bad = [m for m in report.members if not math.isfinite(m.ratio) or m.floor_hit]
    spread = None
    if len(scales) >= 3:
        vals = [report.per_scale_max[s] for s in scales]
        spread = max(vals) / min(vals)
        print(f"harnack: max ratios {[round(v, 4) for v in vals]} "
              f"spread {spread:.4f}")
    else:
        print(f"harnack: max ratio {report.max_ratio():.6g}")
    print(f"-> {_outpath(args, 'harnack.csv')}")
    if bad:
        return 4
    if args.max_spread is not None and spread is not None and spread > args.max_spread:
        return 4
    return 0


def _wbmo_note(spec) -> str:
    r0 = spec.r_scales[0]
    val = wbmo_ball(spec.weight, Ball(spec.base_point.x, 2.0 * r0))
    return f"wbmo_on_B_2r0={fmt17(val)}"


def cmd_hoelder(args) -> int:
    w = _load_weight(args)
    spec = _ensemble(args, w, [args.r0])
    report = xp.hoelder_experiment(spec)
    cols, rows = rpt.hoelder_rows(report)
    rpt.write_csv(_outpath(args, "hoelder.csv"), cols, rows,
                  comments=_echo(args, [f"r0={fmt17(args.r0)} nx={args.nx}",
                                        _wbmo_note(spec)]))
    if args.plots:
        rpt.plot_decay(report, _outpath(args, "oscillation.svg"))
    ok = report.all_nonincreasing() and all(
        (m.skipped or 0.0 < m.alpha <= 1.0) for m in report.members)
    alphas = [round(m.alpha, 3) for m in report.members if not m.skipped]
    print(f"hoelder: alphas {alphas}, oscillations nonincreasing: "
          f"{report.all_nonincreasing()} -> {_outpath(args, 'hoelder.csv')}")
    return 0 if ok else 4


def cmd_growth(args) -> int:
    w = _load_weight(args)
    spec = _ensemble(args, w, [args.r0])
    deltas = [float(v) for v in args.deltas.split(",")]
    all_rows = []
    cols = None
    ok = True
    reports = []
    if args.kind in ("1", "both"):
        for d in sorted(deltas):
            rep = xp.growth1_experiment(spec, d)
            reports.append(rep)
            cols, rows = rpt.growth_rows(rep)
            all_rows.extend(rows)
            ok &= all(m.value < 1.0 for m in rep.members)
    if args.kind in ("3", "both"):
        sweep_vals = []
        for d in sorted(deltas):
            rep = xp.growth3_experiment(spec, d)
            reports.append(rep)
            cols, rows = rpt.growth_rows(rep)
            all_rows.extend(rows)
            ok &= all(m.value > 0.0 for m in rep.members)
            sweep_vals.append(min(rep.values()))
        ok &= all(b <= a * (1.0 + 1e-12)
                  for a, b in zip(sweep_vals, sweep_vals[1:]))
    if args.kind == "propup":
        rep = xp.propup_experiment(spec, h=args.h)
        cols, rows = rpt.propup_rows(rep)
        all_rows.extend(rows)
        ok &= all(math.isfinite(m.gamma_fit) and m.gamma_fit >= -1e-12
                  for m in rep.members)
    rpt.write_csv(_outpath(args, "growth.csv"), cols, all_rows,
                  comments=_echo(args, [f"kind={args.kind} deltas={args.deltas}",
                                        _wbmo_note(spec)]))
    if args.plots and reports:
        rpt.plot_growth(reports, _outpath(args, "growth.svg"))
    print(f"growth[{args.kind}]: {'pass' if ok else 'FAIL'} "
          f"-> {_outpath(args, 'growth.csv')}")
    return 0 if ok else 4


def cmd_liouville(args) -> int:
    w = _load_weight(args)
    spec = _ensemble(args, w, [args.r0])
    report = xp.liouville_experiment(spec, K=args.K)
    cols, rows = rpt.liouville_rows(report)
    rpt.write_csv(_outpath(args, "liouville.csv"), cols, rows,
                  comments=_echo(args, [f"K={args.K} r0={fmt17(args.r0)}",
                                        _wbmo_note(spec)]))
    if args.plots:
        rpt.plot_decay(report, _outpath(args, "liouville.svg"),
                       title="oscillation vs expanding scale")
    ok = all(math.isfinite(m.c_fit) and m.c_fit < 1.0 for m in report.members)
    print(f"liouville: c fits {[round(m.c_fit, 4) for m in report.members]} "
          f"-> {_outpath(args, 'liouville.csv')}")
    return 0 if ok else 4


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="harnack-lab",
        description="verification lab for weighted degenerate parabolic equations")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=".")
    common.add_argument("--plots", action="store_true")
    common.add_argument("--tol-quad", type=float, default=1e-8, dest="tol_quad")
    common.add_argument("--threads", type=int, default=0)
    common.add_argument("--weight", help="inline weight block 'kind=power beta=...'")
    common.add_argument("--spec", help="file with a weight block")
    common.add_argument("--config", help="experiment config ([weight] + [ensemble])")

    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("weights", parents=[common])
    p.add_argument("--balls", choices=["centered", "random", "both"],
                   default="centered")
    p.add_argument("--count", type=int, default=16)
    p.set_defaults(fn=cmd_weights)

    p = sub.add_parser("geometry", parents=[common])
    p.add_argument("--pairs", type=int, default=2000)
    p.add_argument("--box", type=float, default=3.0)
    p.add_argument("--cylinder", help="literal like 'Y=(0,0) r=1 h=1'")
    p.set_defaults(fn=cmd_geometry)

    p = sub.add_parser("covering", parents=[common])
    p.add_argument("--gamma", default="random", help="'random' or a cell CSV path")
    p.add_argument("--delta0", type=float, default=0.5)
    p.add_argument("--k1", type=float, default=3.0)
    p.add_argument("--k0", type=float, default=None,
                   help="override the measured A_p estimate")
    p.add_argument("--nx", type=int, default=32)
    p.add_argument("--nt", type=int, default=32)
    p.add_argument("--box", type=float, default=2.0)
    p.add_argument("--blobs", type=int, default=4)
    p.set_defaults(fn=cmd_covering)

    p = sub.add_parser("solve", parents=[common])
    p.add_argument("--problem", required=True)
    p.add_argument("--bin", action="store_true")
    p.set_defaults(fn=cmd_solve)

    def ensemble_flags(p, r0=1.0):
        p.add_argument("--count", type=int, default=8)
        p.add_argument("--nx", type=int, default=96)
        p.add_argument("--coeff", choices=["constant", "checkerboard", "rotating"],
                       default="constant")
        p.add_argument("--nu", type=float, default=0.5)
        p.add_argument("--r0", type=float, default=r0)

    p = sub.add_parser("harnack", parents=[common])
    ensemble_flags(p)
    p.add_argument("--scales", default="1.0")
    p.add_argument("--max-spread", type=float, default=None, dest="max_spread")
    p.add_argument("--beta-sweep", default=None, dest="beta_sweep",
                   help="comma list of exponents: report ratio growth only")
    p.set_defaults(fn=cmd_harnack)

    p = sub.add_parser("hoelder", parents=[common])
    ensemble_flags(p)
    p.set_defaults(fn=cmd_hoelder, nx=256)

    p = sub.add_parser("growth", parents=[common])
    ensemble_flags(p)
    p.add_argument("--kind", choices=["1", "3", "both", "propup"], default="both")
    p.add_argument("--deltas", default="0.02,0.05,0.2")
    p.add_argument("--h", type=float, default=0.25)
    p.set_defaults(fn=cmd_growth, nx=64)

    p = sub.add_parser("liouville", parents=[common])
    ensemble_flags(p, r0=0.25)
    p.add_argument("--K", type=int, default=2)
    p.set_defaults(fn=cmd_liouville, nx=192)

    return top


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except _NUMERICAL as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except HarnackLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
