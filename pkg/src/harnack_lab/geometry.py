"""Weighted parabolic cylinders, slant cylinders, and the quasi-metric.

A weighted cylinder of radius r centered at Y = (y, s) is the ball B_r(y)
times the backward time interval of depth r^2 (mu)_{B_r(y)}^{1/n}.  The
height function phi_y(tau) = tau^2 (mu)_{B_tau(y)}^{1/n} is continuous and
strictly increasing with phi_y(0) = 0, so it has an inverse, from which the
entry radius Theta_Y(X) and the quasi-metric are built.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import BracketFailure, ConfigError
from .weights import (
    Ball,
    WeightSpec,
    _radial_power,
    ball_integral,
    ball_mean,
    mean_on_intervals,
    unit_ball_volume,
)

_REL_TOL = 1e-9


class BoundaryClass(enum.Enum):
    INTERIOR = "interior"
    BOTTOM = "bottom"
    LATERAL = "lateral"
    TOP = "top"
    OUTSIDE = "outside"


@dataclass(frozen=True)
class SpacetimePoint:
    x: tuple
    t: float

    def __post_init__(self):
        xs = self.x
        if np.isscalar(xs):
            object.__setattr__(self, "x", (float(xs),))
        else:
            object.__setattr__(self, "x", tuple(float(v) for v in xs))
        object.__setattr__(self, "t", float(self.t))
        if not all(math.isfinite(v) for v in self.x) or not math.isfinite(self.t):
            raise ValueError("spacetime point must have finite coordinates")

    @property
    def n(self) -> int:
        return len(self.x)


def as_point(obj) -> SpacetimePoint:
    """Coerce (x, t) pairs / flat tuples (x1..xn, t) into a SpacetimePoint."""
    if isinstance(obj, SpacetimePoint):
        return obj
    if isinstance(obj, (tuple, list)) and len(obj) == 2 and not np.isscalar(obj[0]):
        return SpacetimePoint(tuple(obj[0]), obj[1])
    if isinstance(obj, (tuple, list)) and len(obj) >= 2:
        return SpacetimePoint(tuple(obj[:-1]), obj[-1])
    raise TypeError(f"cannot interpret {obj!r} as a spacetime point")


@dataclass(frozen=True)
class WCylinder:
    """B_r(y) x (s - depth, s) with depth = h r^2 (mu)_{B_r(y)}^{1/n}."""

    center: SpacetimePoint
    radius: float
    depth: float
    height_fraction: float
    weight: WeightSpec

    @property
    def ball(self) -> Ball:
        return Ball(self.center.x, self.radius)

    @property
    def full_depth(self) -> float:
        return self.depth / self.height_fraction

    @property
    def t_top(self) -> float:
        return self.center.t

    @property
    def t_bottom(self) -> float:
        return self.center.t - self.depth

    def contains(self, X) -> bool:
        X = as_point(X)
        return (math.dist(X.x, self.center.x) < self.radius
                and self.t_bottom < X.t < self.t_top)


@dataclass(frozen=True)
class BoxRegion:
    """Ball x open time interval; used for hat cylinders and their envelopes."""

    ball: Ball
    t_lo: float
    t_hi: float

    @property
    def depth(self) -> float:
        return self.t_hi - self.t_lo

    def contains(self, X) -> bool:
        X = as_point(X)
        return (math.dist(X.x, self.ball.center) < self.ball.radius
                and self.t_lo < X.t < self.t_hi)


@dataclass(frozen=True)
class SlantCylinder:
    """{(x,t): |x - (t/s) y| < r, 0 < t < s}; the axis tilts from 0 to y."""

    center: SpacetimePoint
    radius: float

    def __post_init__(self):
        if not self.center.t > 0.0:
            raise ValueError("slant cylinder needs s > 0")
        if not self.radius > 0.0:
            raise ValueError("slant cylinder needs r > 0")

    def axis_at(self, t: float) -> tuple:
        f = t / self.center.t
        return tuple(f * v for v in self.center.x)


def make_cylinder(w: WeightSpec, Y, r: float, h: float = 1.0,
                  method: str = "auto") -> WCylinder:
    """Weighted cylinder with cached depth h r^2 (mu)_{B_r(y)}^{1/n}."""
    Y = as_point(Y)
    if Y.n != w.n:
        raise ValueError(f"point dimension {Y.n} != weight dimension {w.n}")
    if not r > 0.0:
        raise ValueError("cylinder radius must be positive")
    if not 0.0 < h <= 1.0:
        raise ValueError("height fraction must lie in (0, 1]")
    depth = h * r * r * ball_mean(w, Ball(Y.x, r), "mu", method) ** (1.0 / w.n)
    return WCylinder(center=Y, radius=r, depth=depth, height_fraction=h, weight=w)


def cylinder_mu_measure(c: WCylinder, method: str = "auto") -> float:
    """mu(C_{r,mu}(Y)) = sigma_n^{-1/n} r mu(B_r(y))^{(n+1)/n} (full-height only)."""
    if c.height_fraction != 1.0:
        raise ValueError("the measure formula applies to full-height cylinders")
    n = c.weight.n
    mu_ball = ball_integral(c.weight, c.ball, "mu", method)
    return unit_ball_volume(n) ** (-1.0 / n) * c.radius * mu_ball ** ((n + 1.0) / n)


# ---------------------------------------------------------------------------
# phi, Theta and the quasi-metric
# ---------------------------------------------------------------------------


def phi(w: WeightSpec, y, tau: float, method: str = "auto") -> float:
    """phi_y(tau) = tau^2 (mu)_{B_tau(y)}^{1/n}."""
    if tau < 0.0:
        raise ValueError("phi is defined for tau >= 0")
    if tau == 0.0:
        return 0.0
    y = (float(y),) if np.isscalar(y) else tuple(float(v) for v in y)
    return tau * tau * ball_mean(w, Ball(y, tau), "mu", method) ** (1.0 / w.n)


def _phi_closed_inverse(w: WeightSpec, y) -> "callable | None":
    """Analytic inverse for constant weights and powers centered at y."""
    rp = _radial_power(w, -float(w.n))
    if rp is None:
        return None
    coef, gamma, center = rp
    n = w.n
    if center is None:
        # (mu)_B = coef; phi = tau^2 coef^{1/n}
        scale = coef ** (1.0 / n)
        return lambda h: math.sqrt(h / scale)
    if tuple(center) != tuple(y):
        return None
    beta = -gamma / n
    # (mu)_{B_tau(y)} = coef tau^{-beta n} / (1 - beta); phi = tau^{2-beta} (coef/(1-beta))^{1/n}
    scale = (coef / (1.0 - beta)) ** (1.0 / n)
    expo = 2.0 - beta
    return lambda h: (h / scale) ** (1.0 / expo)


def phi_inverse(w: WeightSpec, y, hgt: float, method: str = "auto") -> float:
    """Inverse of phi_y by monotone bisection (closed form when available)."""
    if hgt < 0.0:
        raise ValueError("phi_inverse is defined for heights >= 0")
    if hgt == 0.0:
        return 0.0
    y = (float(y),) if np.isscalar(y) else tuple(float(v) for v in y)
    inv = _phi_closed_inverse(w, y)
    if inv is not None and method != "quad":
        return inv(hgt)
    tau_max = 1.0
    for _ in range(200):
        if phi(w, y, tau_max, method) >= hgt:
            break
        tau_max *= 2.0
    else:
        raise BracketFailure(f"phi_y never reaches height {hgt}")
    lo, hi = 0.0, tau_max
    tau_root = 1e-10 * tau_max
    while hi - lo > tau_root:
        mid = 0.5 * (lo + hi)
        if phi(w, y, mid, method) >= hgt:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def theta(X, Y, w: WeightSpec, method: str = "auto") -> float:
    """Smallest radius r with X in the closed cylinder C_{r,mu}(Y); needs t <= s."""
    X, Y = as_point(X), as_point(Y)
    if X.t > Y.t:
        raise ValueError("theta requires t <= s")
    return max(math.dist(X.x, Y.x), phi_inverse(w, Y.x, Y.t - X.t, method))


def quasi_distance(X, Y, w: WeightSpec, method: str = "auto") -> float:
    """rho_omega(X, Y); later point supplies the center of phi and the average."""
    X, Y = as_point(X), as_point(Y)
    if X.x == Y.x and X.t == Y.t:
        return 0.0
    if X.t > Y.t:
        X, Y = Y, X
    th = theta(X, Y, w, method)
    if th == 0.0:
        return 0.0
    dx = math.dist(X.x, Y.x)
    mu_mean = ball_mean(w, Ball(Y.x, th), "mu", method)
    minterm = min(dx * dx, mu_mean ** (-1.0 / w.n) * (Y.t - X.t))
    return math.sqrt(th * th + minterm)


# ---------------------------------------------------------------------------
# Classification and inclusion
# ---------------------------------------------------------------------------


def boundary_classify(c: WCylinder, X) -> BoundaryClass:
    """Classify a point against the cylinder; the top face is not part of the
    parabolic boundary but is reported as its own class."""
    X = as_point(X)
    tol_r = _REL_TOL * c.radius
    tol_t = _REL_TOL * c.depth
    dr = math.dist(X.x, c.center.x) - c.radius
    if dr > tol_r or X.t > c.t_top + tol_t or X.t < c.t_bottom - tol_t:
        return BoundaryClass.OUTSIDE
    if X.t >= c.t_top - tol_t:
        return BoundaryClass.TOP
    if X.t <= c.t_bottom + tol_t:
        return BoundaryClass.BOTTOM
    if dr >= -tol_r:
        return BoundaryClass.LATERAL
    return BoundaryClass.INTERIOR


def parabolic_boundary_classes() -> tuple:
    """The classes making up the parabolic boundary (top face excluded)."""
    return (BoundaryClass.BOTTOM, BoundaryClass.LATERAL)


def inclusion_check(w: WeightSpec, Y, r: float, theta_frac: float, X0,
                    method: str = "auto") -> bool:
    """Direct-geometry check that C_{theta r, mu}(X0) sits inside C_{r, mu}(Y)."""
    if not 0.0 < theta_frac < 1.0:
        raise ValueError("theta must lie in (0, 1)")
    Y, X0 = as_point(Y), as_point(X0)
    if math.dist(X0.x, Y.x) + theta_frac * r > r * (1.0 + _REL_TOL):
        return False
    outer = make_cylinder(w, Y, r, 1.0, method)
    slack = _REL_TOL * outer.depth
    if X0.t > Y.t + slack:
        return False
    inner = make_cylinder(w, X0, theta_frac * r, 1.0, method)
    return inner.t_bottom >= outer.t_bottom - slack


def hat_cylinder(c: WCylinder, K1: float) -> BoxRegion:
    """B_r(y) x (s + d, s + K1 d) with d the full cylinder depth."""
    if not K1 > 1.0:
        raise ValueError("hat cylinder needs K1 > 1")
    d = c.full_depth
    return BoxRegion(ball=c.ball, t_lo=c.center.t + d, t_hi=c.center.t + K1 * d)


def u_cylinder(c: WCylinder, K1: float) -> BoxRegion:
    """B_{2r}(y) x (s, s + K1 d): the envelope containing the hat cylinder."""
    if not K1 > 1.0:
        raise ValueError("envelope cylinder needs K1 > 1")
    d = c.full_depth
    return BoxRegion(ball=Ball(c.center.x, 2.0 * c.radius),
                     t_lo=c.center.t, t_hi=c.center.t + K1 * d)


def slant_contains(V: SlantCylinder, X) -> bool:
    X = as_point(X)
    s = V.center.t
    if not 0.0 < X.t < s:
        return False
    return math.dist(X.x, V.axis_at(X.t)) < V.radius


def slant_boundary_classify(V: SlantCylinder, X) -> str:
    """interior / base / lateral / top / outside; parabolic boundary = base + lateral."""
    X = as_point(X)
    s = V.center.t
    tol_t = _REL_TOL * s
    tol_r = _REL_TOL * V.radius
    dr = math.dist(X.x, V.axis_at(min(max(X.t, 0.0), s))) - V.radius
    if X.t < -tol_t or X.t > s + tol_t or dr > tol_r:
        return "outside"
    if X.t <= tol_t:
        return "base"
    if X.t >= s - tol_t:
        return "top"
    if dr >= -tol_r:
        return "lateral"
    return "interior"


# ---------------------------------------------------------------------------
# Vectorized fast paths (n = 1 closed-form weights)
# ---------------------------------------------------------------------------


def phi_values(w: WeightSpec, y: float, taus: np.ndarray) -> np.ndarray:
    """Vectorized phi_y over an array of radii (n = 1 closed-form weights)."""
    taus = np.asarray(taus, dtype=float)
    out = np.zeros_like(taus)
    pos = taus > 0.0
    if np.any(pos):
        means = mean_on_intervals(w, "mu", np.full(np.count_nonzero(pos), y), taus[pos])
        out[pos] = taus[pos] ** 2 * means ** (1.0 / w.n)
    return out


def phi_inverse_values(w: WeightSpec, ys: np.ndarray, heights: np.ndarray) -> np.ndarray:
    """Vectorized phi inverse by bracketing + bisection (n = 1)."""
    ys = np.asarray(ys, dtype=float)
    heights = np.asarray(heights, dtype=float)
    if np.any(heights < 0.0):
        raise ValueError("heights must be >= 0")
    out = np.zeros_like(heights)
    pos = heights > 0.0
    if not np.any(pos):
        return out
    y = ys[pos]
    h = heights[pos]

    def phi_of(tau):
        means = mean_on_intervals(w, "mu", y, tau)
        return tau ** 2 * means ** (1.0 / w.n)

    hi = np.ones_like(h)
    for _ in range(200):
        low = phi_of(hi) < h
        if not np.any(low):
            break
        hi[low] *= 2.0
    else:
        raise BracketFailure("vectorized phi bracketing failed")
    lo = np.zeros_like(h)
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        ge = phi_of(mid) >= h
        hi = np.where(ge, mid, hi)
        lo = np.where(ge, lo, mid)
    out[pos] = 0.5 * (lo + hi)
    return out


def quasi_distance_values(w: WeightSpec, xs, ts, ys, ss) -> np.ndarray:
    """Vectorized rho_omega between (xs, ts) and (ys, ss), n = 1."""
    xs = np.asarray(xs, dtype=float)
    ts = np.asarray(ts, dtype=float)
    ys = np.asarray(ys, dtype=float)
    ss = np.asarray(ss, dtype=float)
    swap = ts > ss
    px = np.where(swap, ys, xs)
    pt = np.where(swap, ss, ts)
    qx = np.where(swap, xs, ys)
    qt = np.where(swap, ts, ss)
    dx = np.abs(px - qx)
    th = np.maximum(dx, phi_inverse_values(w, qx, qt - pt))
    rho = np.zeros_like(th)
    pos = th > 0.0
    if np.any(pos):
        means = mean_on_intervals(w, "mu", qx[pos], th[pos])
        minterm = np.minimum(dx[pos] ** 2,
                             means ** (-1.0 / w.n) * (qt[pos] - pt[pos]))
        rho[pos] = np.sqrt(th[pos] ** 2 + minterm)
    return rho


def theta_values(w: WeightSpec, xs, ts, ys, ss) -> np.ndarray:
    """Vectorized Theta_Y(X) for t <= s pairs, n = 1."""
    xs = np.asarray(xs, dtype=float)
    ts = np.asarray(ts, dtype=float)
    ys = np.asarray(ys, dtype=float)
    ss = np.asarray(ss, dtype=float)
    if np.any(ts > ss):
        raise ValueError("theta requires t <= s")
    return np.maximum(np.abs(xs - ys), phi_inverse_values(w, ys, ss - ts))


# ---------------------------------------------------------------------------
# Text literals
# ---------------------------------------------------------------------------


def parse_point(text: str) -> SpacetimePoint:
    """Parse "(x1,...,xn,t)"; the last coordinate is time."""
    body = text.strip()
    if body.startswith("(") and body.endswith(")"):
        body = body[1:-1]
    vals = [float(v) for v in body.split(",") if v.strip() != ""]
    if len(vals) < 2:
        raise ConfigError(f"point literal needs at least (x, t): {text!r}")
    return SpacetimePoint(tuple(vals[:-1]), vals[-1])


def parse_cylinder(text: str, w: WeightSpec) -> WCylinder:
    """Parse a cylinder literal like ``Y=(0,0) r=1 h=1``."""
    kv = {}
    for tok in text.split():
        if "=" not in tok:
            raise ConfigError(f"expected key=value token in cylinder literal: {tok!r}")
        k, v = tok.split("=", 1)
        kv[k.strip()] = v.strip()
    try:
        Y = parse_point(kv["Y"])
        r = float(kv["r"])
    except KeyError as exc:
        raise ConfigError(f"cylinder literal is missing {exc}") from exc
    h = float(kv.get("h", 1.0))
    return make_cylinder(w, Y, r, h)
