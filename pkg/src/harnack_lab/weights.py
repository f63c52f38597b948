"""Weights, ball averages and Muckenhoupt diagnostics.

A weight is a nonnegative function of the spatial variable only.  Everything
downstream (cylinder depths, the quasi-metric, covering measures, solver
coefficients) consumes the operations in this module:

* ``eval_omega`` / ``eval_mu``   pointwise values with infinity sentinels,
* ``ball_mean`` / ``weighted_measure``   Lebesgue means and weighted measures,
* ``ap_characteristic``   sampled lower bound on the Muckenhoupt characteristic,
* ``duality_check``, ``wbmo_ball``, ``wbmo_sup``, ``doubling_check``.

Closed forms are used for constant and power weights (any center in 1-d,
centered in higher dimension) and for tabulated weights (segment-exact
integration of the log-linear interpolant).  Everything else goes through
adaptive open-midpoint quadrature with dyadic subdivision toward singular
points; radial integrands in dimension >= 2 are reduced to one dimension with
the shell (coarea) profile of the ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, NonIntegrable

# Relative quadrature tolerances: closed-form verified cases / adaptive fallback.
TOL_CLOSED = 1e-8
TOL_ADAPTIVE = 1e-5
# Internal target for the adaptive integrator (comfortably below TOL_ADAPTIVE).
_QUAD_TOL = 1e-8

_INF = math.inf


def unit_ball_volume(n: int) -> float:
    """Lebesgue measure of the unit ball in R^n."""
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


@dataclass(frozen=True)
class Ball:
    """Open ball B_r(center) in R^n; n is inferred from the center tuple."""

    center: tuple
    radius: float

    def __post_init__(self):
        c = self.center
        if np.isscalar(c):
            object.__setattr__(self, "center", (float(c),))
        else:
            object.__setattr__(self, "center", tuple(float(v) for v in c))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0.0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")
        if not all(math.isfinite(v) for v in self.center):
            raise ValueError("ball center must be finite")

    @property
    def n(self) -> int:
        return len(self.center)

    @property
    def volume(self) -> float:
        return unit_ball_volume(self.n) * self.radius ** self.n

    def contains_ball(self, other: "Ball") -> bool:
        d = math.dist(self.center, other.center)
        return d + other.radius <= self.radius + 1e-12 * self.radius


@dataclass(frozen=True)
class ApEstimate:
    """Sampled lower bound on [sigma]_{A_p}; never claimed to be the supremum."""

    p: float
    value: float
    ball_count: int
    method: str  # "centered-closed-form" | "sampled-sup"


@dataclass(frozen=True)
class WeightSpec:
    """Symbolic weight: constant, power |x-x0|^beta, product, or tabulated.

    The power range beta in (-n, 1) is enforced at construction; it is the
    range in which the weight lies in the A_{1+1/n} Muckenhoupt class.
    ``singular_floor`` clamps evaluation from below; integrals only honour it
    through the quadrature path (the open-midpoint rules never touch the
    singular points, so power weights need no clamp).
    """

    kind: str
    n: int = 1
    singular_floor: float = 0.0
    c: float = 1.0
    beta: float = 0.0
    center: tuple = (0.0,)
    factors: tuple = ()
    table_x: tuple = ()
    table_w: tuple = ()

    # -- constructors ------------------------------------------------------

    @staticmethod
    def constant(c: float, n: int = 1) -> "WeightSpec":
        if not (c > 0.0 and math.isfinite(c)):
            raise ValueError(f"constant weight requires c > 0, got {c}")
        return WeightSpec(kind="constant", n=n, c=float(c))

    @staticmethod
    def power(beta: float, center=0.0, n: int = 1, singular_floor: float = 0.0) -> "WeightSpec":
        beta = float(beta)
        if not (-n < beta < 1.0):
            raise ValueError(
                f"power weight requires beta in (-{n}, 1) (the A_{{1+1/n}} range), got {beta}"
            )
        ctr = (float(center),) if np.isscalar(center) else tuple(float(v) for v in center)
        if len(ctr) != n:
            raise ValueError(f"center has dimension {len(ctr)}, expected {n}")
        return WeightSpec(kind="power", n=n, beta=beta, center=ctr,
                          singular_floor=float(singular_floor))

    @staticmethod
    def product(*specs: "WeightSpec") -> "WeightSpec":
        if not specs:
            raise ValueError("product weight needs at least one factor")
        n = specs[0].n
        if any(s.n != n for s in specs):
            raise ValueError("product factors must share the dimension")
        return WeightSpec(kind="product", n=n, factors=tuple(specs))

    @staticmethod
    def tabulated(xs, ws, n: int = 1, singular_floor: float = 0.0) -> "WeightSpec":
        if n != 1:
            raise ValueError("tabulated weights are one-dimensional (two-column CSV)")
        xs = [float(v) for v in xs]
        ws = [float(v) for v in ws]
        if len(xs) != len(ws) or len(xs) < 2:
            raise ValueError("tabulated weight needs >= 2 (x, w) samples")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("tabulated sample abscissae must be strictly increasing")
        if any(w < 0.0 for w in ws):
            raise ValueError("tabulated samples must be nonnegative")
        for a, b in zip(ws, ws[1:]):
            if a == 0.0 and b == 0.0:
                raise ValueError("tabulated zeros must be isolated")
        floor = float(singular_floor)
        if floor > 0.0:
            ws = [max(w, floor) for w in ws]
        return WeightSpec(kind="tabulated", n=1, singular_floor=floor,
                          table_x=tuple(xs), table_w=tuple(ws))

    # -- structure helpers -------------------------------------------------

    def singular_points(self) -> list:
        """Centers where the weight vanishes or blows up."""
        if self.kind == "power":
            return [self.center]
        if self.kind == "product":
            out = []
            for f in self.factors:
                out.extend(f.singular_points())
            return out
        if self.kind == "tabulated":
            return [(x,) for x, w in zip(self.table_x, self.table_w) if w == 0.0]
        return []

    def scaled(self, lam: float) -> "WeightSpec":
        """The weight lam * omega."""
        if lam <= 0.0:
            raise ValueError("scaling factor must be positive")
        if self.kind == "constant":
            return WeightSpec.constant(lam * self.c, n=self.n)
        return WeightSpec.product(WeightSpec.constant(lam, n=self.n), self)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _as_points(x, n: int) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if n == 1:
        if pts.ndim >= 1 and pts.shape[-1] == 1:
            pts = pts[..., 0]
        return pts
    if pts.shape[-1] != n:
        raise ValueError(f"points must have trailing dimension {n}")
    return pts


def _dist_to(pts: np.ndarray, center, n: int) -> np.ndarray:
    if n == 1:
        return np.abs(pts - center[0])
    return np.sqrt(np.sum((pts - np.asarray(center)) ** 2, axis=-1))


def omega_values(w: WeightSpec, x) -> np.ndarray:
    """Vectorized omega(x); exact-zero distances give 0 (beta>0) or inf (beta<0)."""
    pts = _as_points(x, w.n)
    if w.kind == "constant":
        out = np.full(pts.shape if w.n == 1 else pts.shape[:-1], w.c)
    elif w.kind == "power":
        d = _dist_to(pts, w.center, w.n)
        with np.errstate(divide="ignore"):
            out = np.where(d > 0.0, d ** w.beta,
                           0.0 if w.beta > 0.0 else (_INF if w.beta < 0.0 else 1.0))
    elif w.kind == "product":
        out = np.ones(pts.shape if w.n == 1 else pts.shape[:-1])
        for f in w.factors:
            out = out * omega_values(f, x)
    elif w.kind == "tabulated":
        out = _tabulated_values(w, pts)
    else:
        raise ConfigError(f"unknown weight kind {w.kind!r}")
    if w.singular_floor > 0.0:
        out = np.maximum(out, w.singular_floor)
    return out


def _tabulated_values(w: WeightSpec, pts: np.ndarray) -> np.ndarray:
    xs = np.asarray(w.table_x)
    ws = np.asarray(w.table_w)
    pts_c = np.clip(pts, xs[0], xs[-1])
    idx = np.clip(np.searchsorted(xs, pts_c, side="right") - 1, 0, len(xs) - 2)
    x0, x1 = xs[idx], xs[idx + 1]
    w0, w1 = ws[idx], ws[idx + 1]
    t = np.where(x1 > x0, (pts_c - x0) / (x1 - x0), 0.0)
    lin = w0 + t * (w1 - w0)
    with np.errstate(divide="ignore", invalid="ignore"):
        loglin = np.exp((1.0 - t) * np.log(w0) + t * np.log(w1))
    # Positivity-preserving log-linear interpolation; fall back to linear on
    # the segments that touch an (isolated) zero sample.
    return np.where((w0 > 0.0) & (w1 > 0.0), loglin, lin)


def eval_omega(w: WeightSpec, x) -> float:
    """omega(x) with a +inf sentinel at singular points."""
    return float(omega_values(w, x))


def eval_mu(w: WeightSpec, x) -> float:
    """mu(x) = omega(x)^{-n}; sentinel pair: inf -> 0 and 0 -> inf."""
    v = eval_omega(w, x)
    if v == 0.0:
        return _INF
    if math.isinf(v):
        return 0.0
    return v ** (-w.n)


def mu_values(w: WeightSpec, x) -> np.ndarray:
    v = omega_values(w, x)
    out = np.empty_like(v)
    zero = v == 0.0
    inf = np.isinf(v)
    ok = ~(zero | inf)
    out[zero] = _INF
    out[inf] = 0.0
    out[ok] = v[ok] ** (-float(w.n))
    return out


def _field_exponent(n: int, field) -> float:
    """Exponent q so the field is omega^q."""
    if field == "omega":
        return 1.0
    if field == "mu":
        return -float(n)
    if isinstance(field, tuple) and len(field) == 2 and field[0] == "pow":
        return float(field[1])
    raise ConfigError(f"unknown field {field!r}")


def field_values(w: WeightSpec, field, x) -> np.ndarray:
    q = _field_exponent(w.n, field)
    v = omega_values(w, x)
    with np.errstate(divide="ignore"):
        out = np.where(v > 0.0, v ** q, _INF if q < 0.0 else (0.0 if q > 0.0 else 1.0))
    inf = np.isinf(v)
    if np.any(inf):
        out = np.where(inf, 0.0 if q < 0.0 else _INF, out)
    return out


# ---------------------------------------------------------------------------
# Adaptive quadrature core
# ---------------------------------------------------------------------------


def _midpoint(fn, lo: float, hi: float, m: int) -> float:
    x = lo + (np.arange(m) + 0.5) * ((hi - lo) / m)
    y = fn(x)
    if not np.all(np.isfinite(y)):
        raise NonIntegrable(f"integrand not finite inside panel [{lo}, {hi}]")
    return float(np.sum(y)) * (hi - lo) / m


def _smooth_panel(fn, lo: float, hi: float, rel_tol: float, scale: float = 0.0) -> float:
    """Composite open midpoint with Richardson stopping on a smooth panel."""
    if hi <= lo:
        return 0.0
    prev = _midpoint(fn, lo, hi, 8)
    m = 16
    for _ in range(18):
        cur = _midpoint(fn, lo, hi, m)
        est = cur + (cur - prev) / 3.0
        if abs(cur - prev) / 3.0 <= rel_tol * max(abs(est), scale, 1e-300):
            return est
        prev = cur
        m *= 2
    return cur + (cur - prev) / 3.0


def _singular_side(fn, s: float, far: float, rel_tol: float) -> float:
    """Integrate from a singular endpoint s toward far via dyadic rings.

    Rings [s + L/2^{k+1}, s + L/2^k] are each smooth; the loop stops once the
    geometric tail estimate drops below tolerance, and raises when the ring
    contributions fail to decay (a non-integrable singularity).
    """
    length = far - s
    if length < 0.0:
        length = -length

        def fn2(x):
            return fn(2.0 * s - x)
    else:
        fn2 = fn
    total = 0.0
    prev_ring = None
    qhist = []
    growth = 0
    for k in range(4000):
        hi = s + length * 2.0 ** (-k)
        lo = s + length * 2.0 ** (-k - 1)
        ring = _smooth_panel(fn2, lo, hi, rel_tol, scale=abs(total))
        total += ring
        if prev_ring is not None:
            if ring == 0.0 and prev_ring == 0.0:
                return total
            q = abs(ring) / max(abs(prev_ring), 1e-300)
            qhist.append(q)
            qmax = max(qhist[-3:])
            if qmax >= 1.0 and abs(ring) > rel_tol * max(abs(total), 1e-300):
                growth += 1
                if growth >= 8:
                    raise NonIntegrable(
                        "dyadic ring contributions do not decay; "
                        "the integrand is not integrable")
            else:
                growth = 0
            if (len(qhist) >= 2 and qmax < 1.0
                    and abs(ring) * qmax / (1.0 - qmax)
                    <= rel_tol * max(abs(total), 1e-300)):
                return total + ring * qmax / (1.0 - qmax)
        prev_ring = ring
    raise NonIntegrable("dyadic subdivision failed to converge near the singular point")


def integrate_1d(fn, a: float, b: float, rel_tol: float = _QUAD_TOL,
                 singular=(), breakpoints=()) -> float:
    """Integrate fn over [a, b]; fn may blow up (integrably) at `singular` points."""
    if b <= a:
        return 0.0
    cuts = sorted({a, b}
                  | {p for p in singular if a < p < b}
                  | {p for p in breakpoints if a < p < b})
    sing = set(singular)
    total = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        lo_sing = lo in sing
        hi_sing = hi in sing
        if lo_sing and hi_sing:
            mid = 0.5 * (lo + hi)
            total += _singular_side(fn, lo, mid, rel_tol)
            total += _singular_side(fn, hi, mid, rel_tol)
        elif lo_sing:
            total += _singular_side(fn, lo, hi, rel_tol)
        elif hi_sing:
            total += _singular_side(fn, hi, lo, rel_tol)
        else:
            total += _smooth_panel(fn, lo, hi, rel_tol)
    return total


def shell_profile(n: int, d: float, r: float):
    """(n-1)-measure of the sphere of radius rho about a point at distance d
    from the ball center, intersected with the ball of radius r (vectorized)."""
    nsig = n * unit_ball_volume(n)  # surface measure of the unit sphere

    if n == 1:
        def prof(rho):
            rho = np.asarray(rho, dtype=float)
            return (np.abs(rho - d) < r).astype(float) + (rho + d < r).astype(float)
        return prof

    if d == 0.0:
        def prof(rho):
            rho = np.asarray(rho, dtype=float)
            return np.where(rho < r, nsig * rho ** (n - 1), 0.0)
        return prof

    if n == 2:
        def prof(rho):
            rho = np.asarray(rho, dtype=float)
            out = np.zeros_like(rho)
            full = rho <= r - d
            out[full] = 2.0 * math.pi * rho[full]
            part = (~full) & (rho > abs(r - d)) & (rho < r + d)
            rp = rho[part]
            cosv = np.clip((rp ** 2 + d * d - r * r) / (2.0 * rp * d), -1.0, 1.0)
            out[part] = 2.0 * rp * np.arccos(cosv)
            return out
        return prof

    from scipy.special import betainc

    def cap_fraction(cos_theta):
        # Fraction of the unit sphere within angle theta of a pole.
        cos_theta = np.clip(cos_theta, -1.0, 1.0)
        s2 = 1.0 - cos_theta ** 2
        half = 0.5 * betainc((n - 1) / 2.0, 0.5, np.clip(s2, 0.0, 1.0))
        return np.where(cos_theta >= 0.0, half, 1.0 - half)

    def prof(rho):
        rho = np.asarray(rho, dtype=float)
        out = np.zeros_like(rho)
        full = rho <= r - d
        out[full] = nsig * rho[full] ** (n - 1)
        part = (~full) & (rho > abs(r - d)) & (rho < r + d)
        rp = rho[part]
        cosv = (rp ** 2 + d * d - r * r) / (2.0 * rp * d)
        out[part] = nsig * rp ** (n - 1) * cap_fraction(cosv)
        return out

    return prof


def integrate_radial(g, n: int, d: float, r: float, rel_tol: float = _QUAD_TOL,
                     singular_zero: bool = False, breakpoints=()) -> float:
    """Integral over B_r(y) of g(|x - x0|) where d = |y - x0|."""
    prof = shell_profile(n, d, r)
    lo = max(0.0, d - r)
    hi = d + r

    def fn(rho):
        return g(rho) * prof(rho)

    sing = [lo] if (singular_zero and lo == 0.0) else []
    cuts = set(breakpoints)
    if 0.0 < abs(r - d):
        cuts.add(abs(r - d))
    return integrate_1d(fn, lo, hi, rel_tol, singular=sing, breakpoints=cuts)


def _angle_integral(fn_xy, center, rho: float, rel_tol: float) -> float:
    """Periodic trapezoid for the angular factor of a polar integral."""
    cx, cy = center
    m = 32
    prev = None
    for _ in range(10):
        th = np.linspace(0.0, 2.0 * math.pi, m, endpoint=False)
        pts = np.stack([cx + rho * np.cos(th), cy + rho * np.sin(th)], axis=-1)
        vals = fn_xy(pts)
        bad = ~np.isfinite(vals)
        if np.any(bad):
            th2 = th[bad] + math.pi / (7.0 * m)
            pts2 = np.stack([cx + rho * np.cos(th2), cy + rho * np.sin(th2)], axis=-1)
            vals = np.where(bad, fn_xy(pts2), vals)
        cur = float(np.mean(vals)) * 2.0 * math.pi
        if prev is not None and abs(cur - prev) <= rel_tol * max(abs(cur), 1e-300):
            return cur
        prev = cur
        m *= 2
    return cur


def integrate_disk_2d(fn_xy, center, r: float, rel_tol: float = 1e-6,
                      singular_pts=()) -> float:
    """Polar-coordinate integral over a disk for genuinely 2-d integrands."""
    cx, cy = float(center[0]), float(center[1])
    radii = sorted({math.dist((cx, cy), p) for p in singular_pts if
                    math.dist((cx, cy), p) < r})

    def radial(rho_arr):
        rho_arr = np.atleast_1d(np.asarray(rho_arr, dtype=float))
        return np.array([
            _angle_integral(fn_xy, (cx, cy), rho, rel_tol) * rho for rho in rho_arr
        ])

    sing = [0.0] if any(math.dist((cx, cy), p) == 0.0 for p in singular_pts) else []
    return integrate_1d(radial, 0.0, r, rel_tol, singular=sing, breakpoints=radii)


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


def _power_interval_integral(gamma: float, a: float, b: float) -> float:
    """integral of |u|^gamma over [a, b] in singularity-centered coordinates."""
    if b < a:
        a, b = b, a
    touches = a <= 0.0 <= b
    if touches and gamma <= -1.0:
        raise NonIntegrable(f"|u|^{gamma} is not integrable across 0")
    if gamma == -1.0:
        return abs(math.log(abs(b) / abs(a)))
    e = gamma + 1.0

    def F(u):
        if u == 0.0:
            return 0.0
        return math.copysign(abs(u) ** e, u) / e

    return F(b) - F(a)


def _radial_power(w: WeightSpec, q: float):
    """(coef, gamma, center) if omega^q == coef * |x-center|^gamma, else None."""
    if w.singular_floor > 0.0 and w.kind != "constant":
        return None
    if w.kind == "constant":
        return (w.c ** q, 0.0, None)
    if w.kind == "power":
        return (1.0, w.beta * q, w.center)
    if w.kind == "product":
        coef, gamma, center = 1.0, 0.0, None
        for f in w.factors:
            sub = _radial_power(f, q)
            if sub is None:
                return None
            fc, fg, fctr = sub
            coef *= fc
            gamma += fg
            if fctr is not None:
                if center is not None and fctr != center:
                    return None
                center = fctr
        return (coef, gamma, center)
    return None


def _closed_ball_integral(w: WeightSpec, ball: Ball, q: float):
    """Exact integral of omega^q over the ball, or None when unavailable."""
    rp = _radial_power(w, q)
    n = w.n
    if rp is not None:
        coef, gamma, center = rp
        if center is None:
            return coef * ball.volume
        d = math.dist(ball.center, center)
        if n == 1:
            a = (ball.center[0] - ball.radius) - center[0]
            b = (ball.center[0] + ball.radius) - center[0]
            return coef * _power_interval_integral(gamma, a, b)
        if d == 0.0:
            if n + gamma <= 0.0:
                raise NonIntegrable(f"|x|^{gamma} is not integrable over a ball in R^{n}")
            return coef * unit_ball_volume(n) * n * ball.radius ** (n + gamma) / (n + gamma)
        return None
    if w.kind == "tabulated":
        a = ball.center[0] - ball.radius
        b = ball.center[0] + ball.radius
        return _tabulated_interval_integral(w, a, b, q)
    return None


def _tabulated_interval_integral(w: WeightSpec, a: float, b: float, q: float) -> float:
    """Segment-exact integral of the interpolant^q over [a, b] (n = 1)."""
    xs = list(w.table_x)
    ws = list(w.table_w)
    # Constant extension beyond the table range.
    if a < xs[0]:
        xs = [a] + xs
        ws = [ws[0]] + ws
    if b > xs[-1]:
        xs = xs + [b]
        ws = ws + [ws[-1]]
    total = 0.0
    for (x0, x1, w0, w1) in zip(xs, xs[1:], ws, ws[1:]):
        lo, hi = max(a, x0), min(b, x1)
        if hi <= lo:
            continue
        h = x1 - x0
        if w0 > 0.0 and w1 > 0.0:
            k = (math.log(w1) - math.log(w0)) / h if h > 0 else 0.0
            qk = q * k
            if abs(qk) < 1e-14:
                total += (w0 ** q) * (hi - lo)
            else:
                total += (w0 ** q) / qk * (
                    math.exp(qk * (hi - x0)) - math.exp(qk * (lo - x0)))
        else:
            # Linear segment through an isolated zero: integrable iff q > -1.
            slope = (w1 - w0) / h
            z = x0 if w0 == 0.0 else x1
            if q <= -1.0:
                raise NonIntegrable(
                    f"tabulated weight vanishes at x={z}; omega^{q} is not integrable")
            g = abs(slope) ** q
            d_lo, d_hi = abs(lo - z), abs(hi - z)
            total += g * abs(d_hi ** (q + 1.0) - d_lo ** (q + 1.0)) / (q + 1.0)
    return total


# ---------------------------------------------------------------------------
# Means and measures
# ---------------------------------------------------------------------------


def _quad_ball_integral(w: WeightSpec, ball: Ball, q: float, rel_tol: float) -> float:
    n = w.n
    rp = _radial_power(w, q)
    if rp is not None and rp[2] is not None:
        coef, gamma, center = rp
        d = math.dist(ball.center, center)

        def g(rho):
            rho = np.asarray(rho, dtype=float)
            return coef * rho ** gamma

        return integrate_radial(g, n, d, ball.radius, rel_tol,
                                singular_zero=(gamma != 0.0))
    sing = w.singular_points()
    if n == 1:
        def fn(x):
            return field_values(w, ("pow", q), x)

        a = ball.center[0] - ball.radius
        b = ball.center[0] + ball.radius
        return integrate_1d(fn, a, b, rel_tol, singular=[s[0] for s in sing])
    if n == 2:
        def fn(pts):
            return field_values(w, ("pow", q), pts)

        return integrate_disk_2d(fn, ball.center, ball.radius, max(rel_tol, 1e-6),
                                 singular_pts=sing)
    raise ConfigError(f"quadrature for kind {w.kind!r} is not available in R^{n}")


def ball_integral(w: WeightSpec, ball: Ball, field="omega", method: str = "auto",
                  rel_tol: float = _QUAD_TOL) -> float:
    if ball.n != w.n:
        raise ValueError(f"ball dimension {ball.n} != weight dimension {w.n}")
    q = _field_exponent(w.n, field)
    if method not in ("auto", "closed", "quad"):
        raise ConfigError(f"unknown method {method!r}")
    if method in ("auto", "closed"):
        val = _closed_ball_integral(w, ball, q)
        if val is not None:
            return val
        if method == "closed":
            raise ConfigError(f"no closed form for kind {w.kind!r} / field {field!r}")
    return _quad_ball_integral(w, ball, q, rel_tol)


def ball_mean(w: WeightSpec, ball: Ball, field="omega", method: str = "auto",
              rel_tol: float = _QUAD_TOL) -> float:
    """Lebesgue mean (f)_B of the field over the ball."""
    return ball_integral(w, ball, field, method, rel_tol) / ball.volume


def weighted_measure(w: WeightSpec, region, field="mu", method: str = "auto",
                     rel_tol: float = _QUAD_TOL) -> float:
    """integral of the field over a Ball, or over a WCylinder in dx dt.

    The weight depends on x only, so the cylinder case is the ball integral
    multiplied by the time depth.
    """
    if isinstance(region, Ball):
        return ball_integral(w, region, field, method, rel_tol)
    ball = getattr(region, "ball", None)
    depth = getattr(region, "depth", None)
    if ball is None or depth is None:
        raise TypeError("region must be a Ball or a WCylinder-like object")
    return ball_integral(w, ball, field, method, rel_tol) * depth


def interval_integral(w: WeightSpec, a: float, b: float, field="mu",
                      method: str = "auto", rel_tol: float = _QUAD_TOL) -> float:
    """Integral of the field over the interval [a, b] (n = 1 only)."""
    if w.n != 1:
        raise ValueError("interval_integral is one-dimensional")
    if b <= a:
        return 0.0
    mid = 0.5 * (a + b)
    return ball_integral(w, Ball((mid,), 0.5 * (b - a)), field, method, rel_tol)


# ---------------------------------------------------------------------------
# Samplers and Muckenhoupt diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BallSampler:
    """Explicit, seeded family of balls for sup-type estimates.

    ``centered`` places balls at `focus` with radii log-spaced over
    `decades`; ``random`` draws centers uniformly in a box of halfwidth
    `box_halfwidth` around `focus` and radii log-uniform over `decades`
    (three decades by default, per the sampling design decision).
    """

    kind: str = "centered"  # centered | random | both | explicit
    count: int = 24
    seed: int = 0
    focus: tuple = (0.0,)
    decades: tuple = (-1.5, 1.5)
    box_halfwidth: float = 4.0
    explicit: tuple = ()

    def balls(self, n: int = None) -> list:
        if self.kind == "explicit":
            return list(self.explicit)
        focus = (self.focus,) if np.isscalar(self.focus) else tuple(self.focus)
        n = len(focus) if n is None else n
        lo, hi = self.decades
        out = []
        if self.kind in ("centered", "both"):
            for e in np.linspace(lo, hi, self.count):
                out.append(Ball(focus, 10.0 ** e))
        if self.kind in ("random", "both"):
            rng = np.random.default_rng(self.seed)
            for _ in range(self.count):
                c = tuple(rng.uniform(f - self.box_halfwidth, f + self.box_halfwidth)
                          for f in focus)
                out.append(Ball(c, 10.0 ** rng.uniform(lo, hi)))
        if not out:
            raise ConfigError(f"sampler kind {self.kind!r} produced no balls")
        return out

    def describe(self) -> str:
        return (f"kind={self.kind} count={self.count} seed={self.seed} "
                f"decades={self.decades[0]}:{self.decades[1]}")


def ap_product(w: WeightSpec, ball: Ball, p: float, method: str = "auto") -> float:
    """(omega)_B * (omega^{-1/(p-1)})_B^{p-1} for one ball."""
    m1 = ball_mean(w, ball, "omega", method)
    m2 = ball_mean(w, ball, ("pow", -1.0 / (p - 1.0)), method)
    return m1 * m2 ** (p - 1.0)


def ap_characteristic(w: WeightSpec, p: float, sampler: BallSampler,
                      method: str = "auto") -> ApEstimate:
    """Sampled sup of the A_p products: a lower bound on [omega]_{A_p}."""
    if not p > 1.0:
        raise ValueError(f"A_p characteristic needs p > 1, got {p}")
    balls = sampler.balls(w.n)
    best = 1.0
    for b in balls:
        best = max(best, ap_product(w, b, p, method))
    try:
        ball_mean(w, balls[0], "omega", "closed")
        ball_mean(w, balls[0], ("pow", -1.0 / (p - 1.0)), "closed")
        closed_ok = True
    except (ConfigError, NonIntegrable):
        closed_ok = False
    how = ("centered-closed-form"
           if sampler.kind == "centered" and closed_ok else "sampled-sup")
    return ApEstimate(p=p, value=best, ball_count=len(balls), method=how)


def default_ap_sampler(w: WeightSpec, extra_balls=()) -> BallSampler:
    """Centered family about the weight's singular center plus explicit balls."""
    sing = w.singular_points()
    focus = sing[0] if sing else (0.0,) * w.n
    balls = [Ball(focus, 10.0 ** e) for e in np.linspace(-1.5, 1.5, 13)]
    balls.extend(extra_balls)
    return BallSampler(kind="explicit", explicit=tuple(balls))


def duality_check(w: WeightSpec, ball: Ball, ap: ApEstimate = None,
                  method: str = "auto"):
    """((omega)_B (mu)_B^{1/n}, bound); the caller asserts 1 <= product <= bound.

    When no characteristic estimate is supplied, one is sampled from the
    centered family about the singular center together with the queried ball,
    which dominates the single-ball product by construction.
    """
    prod = (ball_mean(w, ball, "omega", method)
            * ball_mean(w, ball, "mu", method) ** (1.0 / w.n))
    if ap is None:
        ap = ap_characteristic(w, 1.0 + 1.0 / w.n,
                               default_ap_sampler(w, extra_balls=(ball,)), method)
    return prod, ap.value


def wbmo_ball(w: WeightSpec, ball: Ball, method: str = "auto",
              rel_tol: float = _QUAD_TOL) -> float:
    """Weighted mean oscillation of omega on the ball.

    ((1/omega(B)) * integral_B |omega - (omega)_B|^{n+1} omega^{-n} dx)^{1/(n+1)}.
    In one dimension this reduces exactly to sqrt((omega)_B (mu)_B - 1).
    """
    n = w.n
    c = ball_mean(w, ball, "omega", method, rel_tol)
    if w.kind == "constant":
        return 0.0
    # The n=1 identity wbmo^2 = (omega)_B (mu)_B - 1 is exact for radial power
    # structure; elsewhere (tabulated) its cancellation amplifies to sqrt(eps),
    # so the direct oscillation integrand is used instead.
    if n == 1 and method in ("auto", "closed") and _radial_power(w, 1.0) is not None:
        try:
            m_inv = ball_mean(w, ball, ("pow", -1.0), "closed")
            val2 = c * m_inv - 1.0
            return math.sqrt(max(val2, 0.0))
        except ConfigError:
            if method == "closed":
                raise
    omega_B = c * ball.volume
    if omega_B <= 0.0:
        raise NonIntegrable("omega(B) vanished; the oscillation is undefined")

    rp = _radial_power(w, 1.0)
    if rp is not None and rp[2] is not None:
        coef, beta_eff, center = rp
        d = math.dist(ball.center, center)
        cuts = []
        if beta_eff != 0.0 and c > 0.0 and coef > 0.0:
            cuts.append((c / coef) ** (1.0 / beta_eff))

        def g(rho):
            rho = np.asarray(rho, dtype=float)
            om = coef * rho ** beta_eff
            return np.abs(om - c) ** (n + 1) * om ** (-float(n))

        intval = integrate_radial(g, n, d, ball.radius, rel_tol,
                                  singular_zero=True, breakpoints=cuts)
    elif n == 1:
        def fn(x):
            om = omega_values(w, x)
            return np.abs(om - c) ** (n + 1) * mu_values(w, x)

        a = ball.center[0] - ball.radius
        b = ball.center[0] + ball.radius
        intval = integrate_1d(fn, a, b, rel_tol,
                              singular=[s[0] for s in w.singular_points()])
    else:
        def fn(pts):
            om = omega_values(w, pts)
            return np.abs(om - c) ** (n + 1) * mu_values(w, pts)

        intval = integrate_disk_2d(fn, ball.center, ball.radius, max(rel_tol, 1e-6),
                                   singular_pts=w.singular_points())
    return (max(intval, 0.0) / omega_B) ** (1.0 / (n + 1))


def wbmo_sup(w: WeightSpec, domain: Ball, sampler: BallSampler,
             method: str = "auto") -> float:
    """Max of wbmo_ball over sampled balls contained in the domain."""
    best = 0.0
    used = 0
    for b in sampler.balls(w.n):
        if not domain.contains_ball(b):
            continue
        used += 1
        best = max(best, wbmo_ball(w, b, method))
    if used == 0:
        raise ConfigError("no sampled ball is contained in the domain")
    return best


def doubling_check(w: WeightSpec, ball: Ball, K0: float, method: str = "auto"):
    """(mu(B_{2R})/mu(B_R), 2^{n(n+1)} K0^n); the caller asserts ratio <= bound."""
    n = w.n
    mu_r = ball_integral(w, ball, "mu", method)
    mu_2r = ball_integral(w, Ball(ball.center, 2.0 * ball.radius), "mu", method)
    bound = 2.0 ** (n * (n + 1)) * K0 ** n
    return mu_2r / mu_r, bound


# ---------------------------------------------------------------------------
# Vectorized fast paths (n = 1, constant/power/same-center products)
# ---------------------------------------------------------------------------


def mean_on_intervals(w: WeightSpec, field, centers, radii) -> np.ndarray:
    """Vectorized ball means over (center_i, radius_i) pairs, n = 1 closed forms."""
    if w.n != 1:
        raise ValueError("mean_on_intervals is one-dimensional")
    q = _field_exponent(1, field)
    rp = _radial_power(w, q)
    if rp is None:
        raise ConfigError(f"no vectorized closed form for kind {w.kind!r}")
    coef, gamma, center = rp
    centers = np.asarray(centers, dtype=float)
    radii = np.asarray(radii, dtype=float)
    if center is None:
        return np.broadcast_to(np.asarray(coef), np.broadcast(centers, radii).shape).copy()
    if gamma <= -1.0:
        raise NonIntegrable(f"|u|^{gamma} is not integrable across 0")
    x0 = center[0]
    u1 = centers - radii - x0
    u2 = centers + radii - x0
    e = gamma + 1.0
    F2 = np.sign(u2) * np.abs(u2) ** e / e
    F1 = np.sign(u1) * np.abs(u1) ** e / e
    return coef * (F2 - F1) / (2.0 * radii)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def weight_to_text(w: WeightSpec) -> str:
    """Flat key=value block, e.g. ``kind=power beta=0.5 center=0 n=1``."""
    if w.kind == "constant":
        return f"kind=constant c={w.c:.17g} n={w.n}"
    if w.kind == "power":
        ctr = ",".join(f"{v:.17g}" for v in w.center)
        base = f"kind=power beta={w.beta:.17g} center={ctr} n={w.n}"
        if w.singular_floor > 0.0:
            base += f" floor={w.singular_floor:.17g}"
        return base
    if w.kind == "tabulated":
        xs = ",".join(f"{v:.17g}" for v in w.table_x)
        ws = ",".join(f"{v:.17g}" for v in w.table_w)
        return (f"kind=tabulated n=1 floor={w.singular_floor:.17g} "
                f"xs={xs} ws={ws}")
    if w.kind == "product":
        parts = [f"kind=product n={w.n} factors={len(w.factors)}"]
        for i, f in enumerate(w.factors, start=1):
            for tok in weight_to_text(f).split():
                parts.append(f"factor{i}.{tok}")
        return " ".join(parts)
    raise ConfigError(f"cannot serialize weight kind {w.kind!r}")


def _parse_kv(text: str) -> dict:
    out = {}
    for tok in text.replace("\n", " ").split():
        if "=" not in tok:
            raise ConfigError(f"expected key=value token, got {tok!r}")
        k, v = tok.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def weight_from_text(text_or_kv) -> WeightSpec:
    kv = dict(text_or_kv) if isinstance(text_or_kv, dict) else _parse_kv(text_or_kv)
    return _weight_from_kv(kv)


def _weight_from_kv(kv: dict) -> WeightSpec:
    """Build a spec from parsed keys.  Malformed text raises ConfigError;
    out-of-range parameters raise ValueError (a validation, not parse, error)."""
    try:
        kind = kv["kind"]
        n = int(kv.get("n", 1))
        if kind == "constant":
            c = float(kv.get("c", 1.0))
        elif kind == "power":
            beta = float(kv["beta"])
            ctr = [float(v) for v in str(kv.get("center", "0")).split(",")]
            floor = float(kv.get("floor", 0.0))
        elif kind == "tabulated":
            if "file" in kv:
                xs, ws = load_tabulated_csv(kv["file"])
            else:
                xs = [float(v) for v in kv["xs"].split(",")]
                ws = [float(v) for v in kv["ws"].split(",")]
            floor = float(kv.get("floor", 0.0))
        elif kind == "product":
            count = int(kv["factors"])
        else:
            raise ConfigError(f"unknown weight kind {kind!r}")
    except (KeyError, ValueError, OSError) as exc:
        raise ConfigError(f"bad weight block: {exc}") from exc
    if kind == "constant":
        return WeightSpec.constant(c, n=n)
    if kind == "power":
        return WeightSpec.power(beta, center=ctr if n > 1 else ctr[0], n=n,
                                singular_floor=floor)
    if kind == "tabulated":
        return WeightSpec.tabulated(xs, ws, n=1, singular_floor=floor)
    facs = []
    for i in range(1, count + 1):
        pre = f"factor{i}."
        sub = {k[len(pre):]: v for k, v in kv.items() if k.startswith(pre)}
        facs.append(_weight_from_kv(sub))
    return WeightSpec.product(*facs)


def load_tabulated_csv(path) -> tuple:
    """Two-column CSV (x, omega(x)); '#' comment lines are skipped."""
    xs, ws = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p for p in line.replace(",", " ").split() if p]
            if len(parts) < 2:
                raise ConfigError(f"bad tabulated CSV line: {line!r}")
            xs.append(float(parts[0]))
            ws.append(float(parts[1]))
    return xs, ws
