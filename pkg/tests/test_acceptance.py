"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines.  Tolerances are fixed here, not calibrated elsewhere.
"""

import math
import os
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))
import _golden as g

from harnack_lab import covering as cov
from harnack_lab import experiments as xp
from harnack_lab import geometry as geo
from harnack_lab import solver as slv
from harnack_lab.weights import (
    Ball,
    BallSampler,
    WeightSpec,
    ap_characteristic,
    ball_integral,
    ball_mean,
    wbmo_ball,
)

ONE = WeightSpec.constant(1.0)


def _report(name, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" ({detail})" if detail else "")
    print(line, flush=True)
    assert ok, line


# -- 1. geometry sweeps ------------------------------------------------------


def test_criterion_1_geometry_sweeps():
    t0 = time.perf_counter()
    n = 100_000
    violations = 0
    for w in (ONE, WeightSpec.power(0.3, 0.0, n=1),
              WeightSpec.power(-0.3, 0.0, n=1)):
        rng = np.random.default_rng(101)
        xs, ys, zs = (rng.uniform(-3, 3, n) for _ in range(3))
        t1, t2, t3 = (rng.uniform(-3, 3, n) for _ in range(3))
        lo, hi = np.minimum(t1, t2), np.maximum(t1, t2)
        th = geo.theta_values(w, xs, lo, ys, hi)
        rho = geo.quasi_distance_values(w, xs, lo, ys, hi)
        violations += int(np.count_nonzero(th > rho * (1.0 + 1e-9)))
        violations += int(np.count_nonzero(
            rho > math.sqrt(2.0) * th * (1.0 + 1e-9)))
        r_xy = geo.quasi_distance_values(w, xs, t1, ys, t2)
        r_yz = geo.quasi_distance_values(w, ys, t2, zs, t3)
        r_xz = geo.quasi_distance_values(w, xs, t1, zs, t3)
        violations += int(np.count_nonzero(
            r_xz > 2.0 * (r_xy + r_yz) * (1.0 + 1e-9)))
    elapsed = time.perf_counter() - t0
    _report("criterion 1: quasi-triangle factor 2 and Theta <= rho <= sqrt2 Theta "
            f"on 3x{n} samples",
            violations == 0 and elapsed < 30.0,
            f"violations={violations}, {elapsed:.1f}s")


# -- 2. weight suite ---------------------------------------------------------


def test_criterion_2_weight_suite():
    B = Ball((0.0,), 1.0)
    ok = True
    details = []
    for beta in (0.2, -0.2, 0.5, -0.5):
        w = WeightSpec.power(beta, 0.0, n=1)
        target = 1.0 / (1.0 - beta * beta)
        closed = ball_mean(w, B, "omega", "closed") * ball_mean(w, B, "mu", "closed")
        quadp = ball_mean(w, B, "omega", "quad") * ball_mean(w, B, "mu", "quad")
        ok &= abs(closed - target) <= 1e-6 * target
        ok &= abs(quadp - target) <= 1e-4 * target
        details.append(f"beta={beta}: closed err {abs(closed-target)/target:.1e}, "
                       f"quad err {abs(quadp-target)/target:.1e}")
    ok &= wbmo_ball(ONE, B) == 0.0
    vals = [wbmo_ball(WeightSpec.power(b, 0.0, n=1), B) for b in (0.1, 0.2, 0.3)]
    ok &= vals[0] < vals[1] < vals[2]
    _report("criterion 2: duality product 1/(1-beta^2), WBMO(const)=0, "
            "WBMO strictly increasing", ok, "; ".join(details))


# -- 3. cylinder measure and inclusion ---------------------------------------


def test_criterion_3_cylinder_identity_and_inclusion():
    rng = np.random.default_rng(33)
    worst = 0.0
    for k in range(100):
        n = 2 if k % 3 == 2 else 1
        beta = float(rng.uniform(-0.5, 0.5))
        if n == 1:
            w = WeightSpec.power(beta, 0.0, n=1) if k % 2 else ONE
            y = (float(rng.uniform(-1.5, 1.5)),)
        else:
            w = WeightSpec.power(beta, (0.0, 0.0), n=2) if k % 2 \
                else WeightSpec.constant(1.0, n=2)
            y = (float(rng.uniform(-1.0, 1.0)), float(rng.uniform(-1.0, 1.0)))
        r = float(rng.uniform(0.3, 2.0))
        c = geo.make_cylinder(w, (y, 0.0), r)
        formula = geo.cylinder_mu_measure(c)
        mu_ball_quad = ball_integral(w, Ball(y, r), "mu", "quad")
        depth_quad = r * r * (mu_ball_quad / Ball(y, r).volume) ** (1.0 / n)
        direct = mu_ball_quad * depth_quad
        worst = max(worst, abs(formula - direct) / formula)
    ok_measure = worst <= 1e-5

    w = WeightSpec.power(0.5, 0.0, n=1)
    failures = 0
    tried = 0
    while tried < 10_000:
        th = float(rng.uniform(0.05, 0.95))
        r = float(rng.uniform(0.2, 2.0))
        y = float(rng.uniform(-1.0, 1.0))
        shrunk = geo.make_cylinder(w, ((y,), 0.0), (1.0 - th) * r)
        x0 = y + float(rng.uniform(-1, 1)) * (1.0 - th) * r * 0.999
        t0 = -float(rng.uniform(0.0, 0.999)) * shrunk.depth
        if not shrunk.contains((x0, t0)):
            continue
        tried += 1
        if not geo.inclusion_check(w, ((y,), 0.0), r, th, (x0, t0)):
            failures += 1
    _report("criterion 3: cylinder measure formula vs direct integration and "
            "inclusion property",
            ok_measure and failures == 0,
            f"worst rel err {worst:.1e}; inclusion failures {failures}/10000")


# -- 4. covering suite -------------------------------------------------------


def test_criterion_4_covering():
    w = WeightSpec.power(0.2, 0.0, n=1)
    K0 = ap_characteristic(w, 2.0, BallSampler(kind="both", count=16,
                                               seed=1)).value
    grid = cov.CellGrid(x0=-2.0, t0=-2.0, dx=0.125, dt=0.125, nx=32, nt=32)
    failures = 0
    columns_ok = True
    for seed in range(100):
        gamma = cov.random_gamma(grid, seed)
        rep = cov.build_E_and_hatE(gamma, w, 0.5, 3.0, K0=K0)
        if not (rep.passed_q0 and rep.passed_q1):
            failures += 1
        columns_ok &= rep.column_inequality_ok
    _report("criterion 4: mu(E) >= q0 mu(Gamma) and mu(E-hat) >= q1 mu(E) on "
            "100 seeded Gammas",
            failures == 0 and columns_ok,
            f"failures={failures}, per-column exact={columns_ok}")


# -- 5. solver suite ---------------------------------------------------------


def test_criterion_5_solver():
    # manufactured convergence
    def heat(x, t):
        return np.exp(-t) * np.sin(np.asarray(x))

    errs = []
    for nx in (16, 32, 64, 128):
        dx = math.pi / nx
        dt = 0.4 * dx * dx
        nt = int(round(0.5 / dt))
        grid = slv.GridSpec(n=1, box=((0.0, math.pi),), nx=(nx,), t0=0.0,
                            t1=nt * dt, nt=nt)
        prob = slv.Problem(ONE, slv.CoefficientField.constant(1), grid,
                           u0=lambda x: np.sin(x), g=heat)
        sol = slv.solve(prob)
        errs.append(float(np.max(np.abs(sol.values[-1]
                                        - heat(grid.nodes(), grid.t1)))))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    ok_conv = all(r >= 3.5 for r in ratios)

    # exact discrete maximum principle over 50 random problems
    rng = np.random.default_rng(55)
    violations = 0
    for k in range(50):
        beta = float(rng.uniform(-0.4, 0.4))
        w = WeightSpec.power(beta, 0.0, n=1)
        grid = slv.GridSpec(n=1, box=((-1.0, 1.0),), nx=(24,), t0=0.0,
                            t1=0.02, nt=400)
        coeff = slv.CoefficientField.checkerboard(0.5, seed=k)
        base = float(rng.uniform(0.6, 2.0))
        wob = float(rng.uniform(0.0, 0.5))

        def data(x, t=None, base=base, wob=wob):
            return -base + wob * np.sin(3.0 * np.asarray(x, dtype=float))

        rep = slv.check_max_principle(slv.solve(
            slv.Problem(w, coeff, grid, u0=data, g=data)))
        if not rep.passed or rep.max_value > 0.0:
            violations += 1

    # ABP ratio stability across three refinements
    vals = []
    for nx in (32, 64, 128):
        dx = math.pi / nx
        dt = 0.4 * dx * dx
        nt = int(round(0.25 / dt))
        grid = slv.GridSpec(n=1, box=((0.0, math.pi),), nx=(nx,), t0=0.0,
                            t1=nt * dt, nt=nt)
        prob = slv.Problem(ONE, slv.CoefficientField.constant(1), grid,
                           u0=lambda x: np.zeros_like(x),
                           g=lambda x, t: np.zeros_like(np.asarray(x)),
                           f=lambda x, t: np.exp(-((np.asarray(x) - 1.2) ** 2)
                                                 / 0.02))
        vals.append(slv.abp_report(slv.solve(prob)).ratio)
    ok_abp = max(vals) / min(vals) <= 1.10
    _report("criterion 5: convergence factor >= 3.5, exact max principle, "
            "ABP stability within 10%",
            ok_conv and violations == 0 and ok_abp,
            f"ratios {[round(r, 2) for r in ratios]}, violations={violations}, "
            f"ABP spread {max(vals)/min(vals):.4f}")


# -- 6. Harnack suite --------------------------------------------------------


def test_criterion_6_harnack():
    t0 = time.perf_counter()
    const_ratio = xp.constant_member_ratio(
        xp.EnsembleSpec(weight=ONE, count=1, seed=0, r_scales=(1.0,), nx=64))
    ok_const = const_ratio == 1.0

    discrete, exact = xp.harnack_heat_oracle(r=0.5, nx=96)
    ok_oracle = abs(discrete - exact) / exact <= 0.02

    plain, scaled = xp.rescaling_equivalence(r=0.75, nx=64, count=3, seed=5,
                                             lam=4.0)
    ok_rescale = plain == scaled

    spec = g.harnack_acceptance_spec()         # 64 members, r in {0.5, 1, 2}
    report = xp.harnack_experiment(spec)
    finite = all(math.isfinite(m.ratio) and not m.floor_hit
                 for m in report.members)
    per_scale = [report.per_scale_max[s] for s in spec.r_scales]
    spread = max(per_scale) / min(per_scale)
    ok_spread = spread <= 1.25

    import tempfile

    with tempfile.TemporaryDirectory() as d:
        out = os.path.join(d, "harnack.csv")
        g.write_harnack_acceptance(out)
        frozen = os.path.join(g.GOLDEN_DIR, "harnack_w02_seed11.csv")
        ok_golden = open(out, "rb").read() == open(frozen, "rb").read()

    elapsed = time.perf_counter() - t0
    _report("criterion 6: Harnack oracles, rescaling exact, 64-member "
            "ensemble finite, scale spread <= 25%, golden byte-exact, < 10 min",
            ok_const and ok_oracle and ok_rescale and finite and ok_spread
            and ok_golden and elapsed < 600.0,
            f"const={const_ratio}, oracle rel {abs(discrete-exact)/exact:.3%}, "
            f"spread {spread:.4f}, {elapsed:.0f}s")


# -- 7. Hoelder / Liouville --------------------------------------------------


def test_criterion_7_hoelder_liouville():
    spec = xp.EnsembleSpec(weight=WeightSpec.power(0.2, 0.0, n=1), count=6,
                           seed=7, r_scales=(1.0,), nx=256)
    rep = xp.hoelder_experiment(spec)
    ok_h = rep.all_nonincreasing() and all(
        m.skipped or 0.0 < m.alpha <= 1.0 for m in rep.members)

    lspec = xp.EnsembleSpec(weight=ONE, count=4, seed=13, r_scales=(0.25,),
                            nx=192)
    lrep = xp.liouville_experiment(lspec, K=2)
    ok_l = all(math.isfinite(m.c_fit) and m.c_fit < 1.0 for m in lrep.members)
    _report("criterion 7: oscillation decay nonincreasing, alpha in (0,1], "
            "Liouville geometric fit c < 1",
            ok_h and ok_l,
            f"alphas {[round(m.alpha, 2) for m in rep.members if not m.skipped]}, "
            f"c fits {[round(m.c_fit, 3) for m in lrep.members]}")


# -- 8. growth suite ---------------------------------------------------------


def test_criterion_8_growth():
    spec = xp.EnsembleSpec(weight=WeightSpec.power(0.1, 0.0, n=1), count=5,
                           seed=5, r_scales=(1.0,), nx=64)
    ok_g1 = True
    medians = []
    for d in (0.01, 0.05, 0.2):
        rep = xp.growth1_experiment(spec, d)
        ok_g1 &= all(0.0 <= m.value < 1.0 for m in rep.members)
        medians.append(float(np.median(rep.values())))
    ok_g1 &= all(b >= a - 1e-15 for a, b in zip(medians, medians[1:]))

    gspec = xp.EnsembleSpec(weight=WeightSpec.power(0.1, 0.0, n=1), count=4,
                            seed=5, r_scales=(1.0,), nx=64)
    sweep = xp.growth3_sweep(gspec, (0.02, 0.05, 0.1))
    betas = [sweep[d] for d in sorted(sweep)]
    ok_g3 = all(v > 0.0 for v in betas) and all(
        b <= a for a, b in zip(betas, betas[1:]))
    _report("criterion 8: growth1 contraction < 1 with nondecreasing medians, "
            "growth3 infimum > 0 nonincreasing in delta",
            ok_g1 and ok_g3,
            f"medians {[round(v, 3) for v in medians]}, "
            f"1-beta3 {[round(v, 3) for v in betas]}")
