"""Cylinders, phi, Theta, the quasi-metric, and their structural properties."""

import math

import numpy as np
import pytest

from harnack_lab.errors import BracketFailure, ConfigError
from harnack_lab.geometry import (
    BoundaryClass,
    SlantCylinder,
    SpacetimePoint,
    boundary_classify,
    cylinder_mu_measure,
    hat_cylinder,
    inclusion_check,
    make_cylinder,
    parse_cylinder,
    parse_point,
    phi,
    phi_inverse,
    phi_inverse_values,
    quasi_distance,
    quasi_distance_values,
    slant_boundary_classify,
    slant_contains,
    theta,
    theta_values,
    u_cylinder,
)
from harnack_lab.weights import Ball, WeightSpec, ball_integral, unit_ball_volume

ONE = WeightSpec.constant(1.0)
ONE2 = WeightSpec.constant(1.0, n=2)
POW_HALF = WeightSpec.power(0.5, 0.0, n=1)


class TestMakeCylinder:
    def test_constant_depth(self):
        c = make_cylinder(ONE, (0.0, 0.0), 1.0)
        assert c.depth == pytest.approx(1.0, rel=1e-12)
        assert c.t_bottom == pytest.approx(-1.0)

    def test_power_depth(self):
        # depth = r^2 (mu)_{B_1(0)}^{1/1} = 2 for omega = |x|^{1/2}
        c = make_cylinder(POW_HALF, (0.0, 0.0), 1.0)
        assert c.depth == pytest.approx(2.0, rel=1e-10)

    def test_height_fraction(self):
        c = make_cylinder(ONE, (0.0, 0.0), 1.0, h=0.5)
        assert c.depth == pytest.approx(0.5, rel=1e-12)
        assert c.full_depth == pytest.approx(1.0, rel=1e-12)

    def test_depth_invariant_both_forms(self, rng):
        # h r^2 (mu)_B^{1/n} == h sigma_n^{-1/n} r mu(B)^{1/n}
        for _ in range(20):
            beta = rng.uniform(-0.7, 0.7)
            w = WeightSpec.power(beta, 0.0, n=1)
            y, r = rng.uniform(-2, 2), rng.uniform(0.1, 2.0)
            c = make_cylinder(w, ((y,), 0.0), r)
            alt = (unit_ball_volume(1) ** -1.0 * r
                   * ball_integral(w, Ball((y,), r), "mu"))
            assert c.depth == pytest.approx(alt, rel=1e-9)

    def test_validation(self):
        with pytest.raises(ValueError):
            make_cylinder(ONE, (0.0, 0.0), -1.0)
        with pytest.raises(ValueError):
            make_cylinder(ONE, (0.0, 0.0), 1.0, h=1.5)


class TestCylinderMeasure:
    def test_constant_1d(self):
        c = make_cylinder(ONE, (0.0, 0.0), 1.0)
        # (1/2) * 1 * mu(B_1)^2 = 2, equal to area |B_1| x depth
        assert cylinder_mu_measure(c) == pytest.approx(2.0, rel=1e-12)

    def test_constant_2d(self):
        # sigma_2^{-1/2} * 1 * pi^{3/2} = pi, equal to area pi x depth 1
        c = make_cylinder(ONE2, ((0.0, 0.0), 0.0), 1.0)
        assert cylinder_mu_measure(c) == pytest.approx(math.pi, rel=1e-12)

    def test_power_1d(self):
        c = make_cylinder(POW_HALF, (0.0, 0.0), 1.0)
        # (1/2) * 1 * mu(B_1)^2 = (1/2) * 16 = 8
        assert cylinder_mu_measure(c) == pytest.approx(8.0, rel=1e-10)

    def test_formula_vs_direct_integration(self, rng):
        for _ in range(15):
            beta = rng.uniform(-0.6, 0.6)
            w = WeightSpec.power(beta, 0.0, n=1)
            y, r = rng.uniform(-1.5, 1.5), rng.uniform(0.2, 1.5)
            c = make_cylinder(w, ((y,), 0.0), r)
            direct = ball_integral(w, c.ball, "mu", "quad") * c.depth
            assert cylinder_mu_measure(c) == pytest.approx(direct, rel=1e-5)

    def test_height_fraction_rejected(self):
        c = make_cylinder(ONE, (0.0, 0.0), 1.0, h=0.5)
        with pytest.raises(ValueError):
            cylinder_mu_measure(c)


class TestPhi:
    def test_constant(self):
        assert phi(ONE, 0.0, 0.5) == pytest.approx(0.25, rel=1e-12)
        assert phi_inverse(ONE, 0.0, 0.25) == pytest.approx(0.5, rel=1e-9)

    def test_power_centered(self):
        # phi(tau) = tau^{2-beta}/(1-beta)^{1/n}: phi(1) = 2 at beta = 1/2, n=1
        assert phi(POW_HALF, 0.0, 1.0) == pytest.approx(2.0, rel=1e-10)
        assert phi_inverse(POW_HALF, 0.0, 2.0) == pytest.approx(1.0, rel=1e-9)

    def test_zero(self):
        assert phi(POW_HALF, 0.3, 0.0) == 0.0
        assert phi_inverse(POW_HALF, 0.3, 0.0) == 0.0

    def test_round_trip_bisection(self, rng):
        w = WeightSpec.power(-0.3, 0.5, n=1)
        for _ in range(10):
            y = rng.uniform(-1, 1)
            h = rng.uniform(0.01, 5.0)
            tau = phi_inverse(w, y, h, method="quad")
            assert phi(w, y, tau) == pytest.approx(h, rel=1e-6)

    def test_strictly_increasing(self, rng):
        from harnack_lab.geometry import phi_values

        w = WeightSpec.power(0.4, 0.0, n=1)
        taus = np.linspace(0.0, 3.0, 40)
        for y in (-1.0, 0.0, 0.7):
            vals = phi_values(w, y, taus)
            assert np.all(np.diff(vals) > 0.0)
            assert np.allclose(vals[1:], [phi(w, y, t) for t in taus[1:]],
                               rtol=1e-12)
        assert phi(w, 0.0, 0.0) == 0.0 and phi_values(w, 0.0, taus)[0] == 0.0

    def test_bracket_failure(self):
        # the bisection path signals an unreachable height; the closed-form
        # inverse for constant weights would just return sqrt(h)
        with pytest.raises(BracketFailure):
            phi_inverse(ONE, 0.0, 1e300, method="quad")


class TestTheta:
    def test_examples(self):
        assert theta((0.0, 0.0), (0.0, 1.0), ONE) == pytest.approx(1.0, rel=1e-9)
        assert theta((2.0, 0.0), (0.0, 1.0), ONE) == pytest.approx(2.0, rel=1e-9)
        assert theta((0.0, 0.0), (0.0, 2.0), POW_HALF) == pytest.approx(1.0, rel=1e-9)

    def test_requires_time_order(self):
        with pytest.raises(ValueError):
            theta((0.0, 2.0), (0.0, 1.0), ONE)


class TestQuasiDistance:
    def test_examples(self):
        assert quasi_distance((0.0, 0.0), (0.0, 1.0), ONE) == pytest.approx(1.0, rel=1e-9)
        assert quasi_distance((1.0, 0.0), (0.0, 1.0), ONE) == pytest.approx(
            math.sqrt(2.0), rel=1e-9)

    def test_identity(self):
        assert quasi_distance((3.0, 4.0), (3.0, 4.0), POW_HALF) == 0.0

    def test_symmetric(self, rng):
        for w in (ONE, POW_HALF):
            for _ in range(10):
                X = (rng.uniform(-2, 2), rng.uniform(-2, 2))
                Y = (rng.uniform(-2, 2), rng.uniform(-2, 2))
                assert quasi_distance(X, Y, w) == pytest.approx(
                    quasi_distance(Y, X, w), rel=1e-12)

    @pytest.mark.parametrize("w", [ONE, POW_HALF,
                                   WeightSpec.power(-0.3, 0.0, n=1)])
    def test_sandwich_property(self, w, rng):
        n = 4000
        xs, ys = rng.uniform(-3, 3, n), rng.uniform(-3, 3, n)
        t1, t2 = rng.uniform(-3, 3, n), rng.uniform(-3, 3, n)
        lo, hi = np.minimum(t1, t2), np.maximum(t1, t2)
        th = theta_values(w, xs, lo, ys, hi)
        rho = quasi_distance_values(w, xs, lo, ys, hi)
        assert np.all(th <= rho * (1.0 + 1e-9))
        assert np.all(rho <= math.sqrt(2.0) * th * (1.0 + 1e-9))

    @pytest.mark.parametrize("w", [ONE, POW_HALF,
                                   WeightSpec.power(-0.3, 0.0, n=1)])
    def test_quasi_triangle(self, w, rng):
        n = 4000
        pts = rng.uniform(-3, 3, (3, 2, n))
        r_xy = quasi_distance_values(w, pts[0, 0], pts[0, 1], pts[1, 0], pts[1, 1])
        r_yz = quasi_distance_values(w, pts[1, 0], pts[1, 1], pts[2, 0], pts[2, 1])
        r_xz = quasi_distance_values(w, pts[0, 0], pts[0, 1], pts[2, 0], pts[2, 1])
        assert np.all(r_xz <= 2.0 * (r_xy + r_yz) * (1.0 + 1e-9))

    def test_sandwich_2d_centered(self, rng):
        # 2-d power weight; the later point sits at the singular center so the
        # closed-form inverse applies, the averages go through the shell profile
        w = WeightSpec.power(0.4, (0.0, 0.0), n=2)
        for _ in range(40):
            X = ((rng.uniform(-2, 2), rng.uniform(-2, 2)), rng.uniform(-2, 0))
            Y = ((0.0, 0.0), rng.uniform(0.0, 2.0))
            th = theta(X, Y, w)
            rho = quasi_distance(X, Y, w)
            assert th <= rho * (1.0 + 1e-7)
            assert rho <= math.sqrt(2.0) * th * (1.0 + 1e-7)

    def test_quasi_triangle_2d(self, rng):
        w = WeightSpec.power(0.4, (0.0, 0.0), n=2)
        for _ in range(12):
            P = [((rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)),
                  rng.uniform(-1, 1)) for _ in range(3)]
            r_xy = quasi_distance(P[0], P[1], w)
            r_yz = quasi_distance(P[1], P[2], w)
            r_xz = quasi_distance(P[0], P[2], w)
            assert r_xz <= 2.0 * (r_xy + r_yz) * (1.0 + 1e-7)

    def test_scale_coherence_constant(self):
        # for omega = lam the metric equals the unweighted one with t -> lam t
        lam = 4.0
        w_lam = WeightSpec.constant(lam)
        for X, Y in (((0.3, -1.0), (0.0, 0.5)), ((1.0, 0.0), (-1.0, 2.0))):
            lhs = quasi_distance(X, Y, w_lam)
            rhs = quasi_distance((X[0], lam * X[1]), (Y[0], lam * Y[1]), ONE)
            assert lhs == rhs  # exact for constant weights

    def test_scale_coherence_power(self, rng):
        lam = 4.0
        w = WeightSpec.power(0.3, 0.0, n=1)
        w_lam = w.scaled(lam)
        for _ in range(15):
            X = (rng.uniform(-2, 2), rng.uniform(-2, 2))
            Y = (rng.uniform(-2, 2), rng.uniform(-2, 2))
            lhs = quasi_distance(X, Y, w_lam)
            rhs = quasi_distance((X[0], lam * X[1]), (Y[0], lam * Y[1]), w)
            assert lhs == pytest.approx(rhs, rel=1e-9)

    def test_vectorized_matches_scalar(self, rng):
        w = POW_HALF
        xs, ts = rng.uniform(-2, 2, 30), rng.uniform(-2, 2, 30)
        ys, ss = rng.uniform(-2, 2, 30), rng.uniform(-2, 2, 30)
        vec = quasi_distance_values(w, xs, ts, ys, ss)
        scal = [quasi_distance((x, t), (y, s), w)
                for x, t, y, s in zip(xs, ts, ys, ss)]
        assert np.allclose(vec, scal, rtol=1e-9)


class TestBoundaryClassify:
    @pytest.fixture
    def cyl(self):
        return make_cylinder(ONE, (0.0, 0.0), 1.0)

    def test_examples(self, cyl):
        assert boundary_classify(cyl, (0.0, -1.0)) is BoundaryClass.BOTTOM
        assert boundary_classify(cyl, (1.0, -0.5)) is BoundaryClass.LATERAL
        assert boundary_classify(cyl, (0.0, 0.0)) is BoundaryClass.TOP
        assert boundary_classify(cyl, (0.3, -0.4)) is BoundaryClass.INTERIOR
        assert boundary_classify(cyl, (2.0, -0.5)) is BoundaryClass.OUTSIDE
        assert boundary_classify(cyl, (0.5, 0.7)) is BoundaryClass.OUTSIDE

    def test_corners(self, cyl):
        # bottom face includes the closed ball; the top rim counts as top
        assert boundary_classify(cyl, (1.0, -1.0)) is BoundaryClass.BOTTOM
        assert boundary_classify(cyl, (1.0, 0.0)) is BoundaryClass.TOP

    def test_every_point_single_class(self, cyl, rng):
        for _ in range(200):
            X = (rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 0.5))
            assert boundary_classify(cyl, X) in BoundaryClass


class TestInclusion:
    def test_examples(self):
        assert inclusion_check(ONE, (0.0, 0.0), 1.0, 0.5, (0.25, -0.2))
        assert inclusion_check(ONE, (0.0, 0.0), 1.0, 0.3, (0.0, 0.0))

    def test_property_sweep(self, rng):
        # X0 in C_{(1-theta)r}(Y) implies C_{theta r}(X0) inside C_r(Y)
        w = POW_HALF
        failures = 0
        for _ in range(1000):
            th = rng.uniform(0.05, 0.95)
            r = rng.uniform(0.2, 2.0)
            y = rng.uniform(-1.0, 1.0)
            outer_shrunk = make_cylinder(w, ((y,), 0.0), (1.0 - th) * r)
            x0 = y + rng.uniform(-1, 1) * (1.0 - th) * r * 0.999
            t0 = -rng.uniform(0.0, 0.999) * outer_shrunk.depth
            if not outer_shrunk.contains((x0, t0)):
                continue
            if not inclusion_check(w, ((y,), 0.0), r, th, (x0, t0)):
                failures += 1
        assert failures == 0


class TestHatAndEnvelope:
    def test_examples(self):
        c = make_cylinder(ONE, (0.0, 0.0), 1.0)
        hc = hat_cylinder(c, 3.0)
        assert (hc.ball.radius, hc.t_lo, hc.t_hi) == (1.0, 1.0, 3.0)
        uc = u_cylinder(c, 3.0)
        assert (uc.ball.radius, uc.t_lo, uc.t_hi) == (2.0, 0.0, 3.0)

    def test_power_weight(self):
        c = make_cylinder(POW_HALF, (0.0, 0.0), 1.0)
        hc = hat_cylinder(c, 2.0)
        assert hc.t_lo == pytest.approx(2.0, rel=1e-10)
        assert hc.t_hi == pytest.approx(4.0, rel=1e-10)

    def test_hat_inside_envelope(self, rng):
        for _ in range(20):
            beta = rng.uniform(-0.5, 0.5)
            w = WeightSpec.power(beta, 0.0, n=1)
            c = make_cylinder(w, ((rng.uniform(-1, 1),), rng.uniform(-1, 1)),
                              rng.uniform(0.2, 1.5))
            K1 = rng.uniform(1.1, 5.0)
            hc, uc = hat_cylinder(c, K1), u_cylinder(c, K1)
            assert uc.t_lo <= hc.t_lo and hc.t_hi <= uc.t_hi
            assert hc.ball.radius <= uc.ball.radius

    def test_k1_validation(self):
        c = make_cylinder(ONE, (0.0, 0.0), 1.0)
        with pytest.raises(ValueError):
            hat_cylinder(c, 1.0)


class TestSlantCylinder:
    def test_straight_axis(self):
        V = SlantCylinder(SpacetimePoint((0.0,), 1.0), 0.5)
        assert slant_contains(V, (0.0, 0.5))
        assert not slant_contains(V, (0.2, 0.0))   # base is boundary
        assert not slant_contains(V, (0.0, 1.0))   # top face excluded

    def test_tilted(self):
        V = SlantCylinder(SpacetimePoint((1.0,), 1.0), 0.5)
        assert slant_contains(V, (0.5, 0.5))
        assert not slant_contains(V, (0.0, 0.99))

    def test_boundary_split(self):
        V = SlantCylinder(SpacetimePoint((1.0,), 1.0), 0.5)
        assert slant_boundary_classify(V, (0.2, 0.0)) == "base"
        assert slant_boundary_classify(V, (1.0, 0.5)) == "lateral"
        assert slant_boundary_classify(V, (1.0, 1.0)) == "top"
        assert slant_boundary_classify(V, (0.5, 0.5)) == "interior"
        assert slant_boundary_classify(V, (3.0, 0.5)) == "outside"

    def test_needs_positive_height(self):
        with pytest.raises(ValueError):
            SlantCylinder(SpacetimePoint((0.0,), -1.0), 0.5)


class TestLiterals:
    def test_point(self):
        p = parse_point("(0.5,-1)")
        assert p.x == (0.5,) and p.t == -1.0
        p2 = parse_point("(1,2,3)")
        assert p2.x == (1.0, 2.0) and p2.t == 3.0

    def test_cylinder(self):
        c = parse_cylinder("Y=(0,0) r=1 h=1", ONE)
        assert c.radius == 1.0 and c.depth == pytest.approx(1.0)
        c2 = parse_cylinder("Y=(0.5,-2) r=2 h=0.25", ONE)
        assert c2.height_fraction == 0.25

    def test_bad_literal(self):
        with pytest.raises(ConfigError):
            parse_cylinder("r=1", ONE)
        with pytest.raises(ConfigError):
            parse_point("(1)")


class TestVectorizedInverse:
    def test_matches_scalar(self, rng):
        w = WeightSpec.power(-0.25, 0.3, n=1)
        ys = rng.uniform(-1, 1, 25)
        hs = rng.uniform(0.0, 4.0, 25)
        vec = phi_inverse_values(w, ys, hs)
        scal = [phi_inverse(w, y, h) for y, h in zip(ys, hs)]
        assert np.allclose(vec, scal, rtol=1e-7, atol=1e-12)
