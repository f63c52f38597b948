"""Discrete covering construction: admissible family, Vitali selection, E and E-hat.

Given a bounded cell set Gamma on a space-time grid, the admissible family
collects candidate weighted cylinders whose mu-density of Gamma is at least
1 - delta0 (cell-exact, per the grid convention).  E is the union of the
admitted cylinders and E-hat the union of their forward-translated hat
cylinders.  The verified inequalities are

    mu(E) >= q0 mu(Gamma),   q0 = 1 + 3^{-(n+1)^2 - 1} K0^{-n-1} delta0,
    mu(E-hat) >= q1 mu(E),   q1 = (K1 - 1) / (K1 + 1),

with the second one resting on a per-column interval inequality
|E-hat(x)| >= q1 |E(x)| that is checked exactly for every grid column.
Measures are cell-exact in x and interval-exact in t, so the column
inequality transfers to the mu-measures without discretization slack.

Only n = 1 grids are implemented; the acceptance runs are one-dimensional.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EmptyFamily
from .geometry import SpacetimePoint, WCylinder, make_cylinder
from .weights import WeightSpec, mu_values


def q0(n: int, K0: float, delta0: float) -> float:
    """Measure gain of E over Gamma."""
    if not 0.0 < delta0 < 1.0:
        raise ValueError("delta0 must lie in (0, 1)")
    if not K0 >= 1.0:
        raise ValueError("K0 must be >= 1")
    return 1.0 + 3.0 ** (-(n + 1) ** 2 - 1) * K0 ** (-n - 1) * delta0


def q1(K1: float) -> float:
    """Measure gain of E-hat over E."""
    if not K1 > 1.0:
        raise ValueError("K1 must be > 1")
    return (K1 - 1.0) / (K1 + 1.0)


# ---------------------------------------------------------------------------
# Grid, cell sets, interval arithmetic
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CellGrid:
    """Uniform cell grid on [x0, x0 + nx dx] x [t0, t0 + nt dt], n = 1."""

    x0: float
    t0: float
    dx: float
    dt: float
    nx: int
    nt: int

    def __post_init__(self):
        if self.dx <= 0 or self.dt <= 0 or self.nx < 1 or self.nt < 1:
            raise ValueError("grid needs positive cell sizes and counts")

    @property
    def x_centers(self) -> np.ndarray:
        return self.x0 + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def t_centers(self) -> np.ndarray:
        return self.t0 + (np.arange(self.nt) + 0.5) * self.dt

    @property
    def x_nodes(self) -> np.ndarray:
        return self.x0 + np.arange(self.nx + 1) * self.dx

    @property
    def t_nodes(self) -> np.ndarray:
        return self.t0 + np.arange(self.nt + 1) * self.dt

    @property
    def width(self) -> float:
        return self.nx * self.dx


@dataclass(frozen=True)
class DiscreteSet:
    """Bounded measurable set realized as a union of grid cells."""

    grid: CellGrid
    cells: frozenset

    def __post_init__(self):
        g = self.grid
        for (ix, it) in self.cells:
            if not (0 <= ix < g.nx and 0 <= it < g.nt):
                raise ValueError(f"cell {(ix, it)} outside the grid")

    def mask(self) -> np.ndarray:
        out = np.zeros((self.grid.nx, self.grid.nt), dtype=bool)
        for (ix, it) in self.cells:
            out[ix, it] = True
        return out

    def mu_measure(self, w: WeightSpec) -> float:
        g = self.grid
        colw = mu_values(w, g.x_centers) * g.dx * g.dt
        m = self.mask()
        return float(np.sum(colw[:, None] * m))


def merge_intervals(intervals) -> list:
    """Union of open intervals as a sorted disjoint list."""
    ivs = sorted((a, b) for a, b in intervals if b > a)
    out = []
    for a, b in ivs:
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


def total_length(intervals) -> float:
    return sum(b - a for a, b in intervals)


def subtract_length(base, cut) -> float:
    """Length of (union of base) minus (union of cut); both merged lists."""
    base = merge_intervals(base)
    cut = merge_intervals(cut)
    rem = 0.0
    j = 0
    for a, b in base:
        seg_a = a
        while j < len(cut) and cut[j][1] <= seg_a:
            j += 1
        k = j
        pos = seg_a
        while k < len(cut) and cut[k][0] < b:
            c, d = cut[k]
            if c > pos:
                rem += min(b, c) - pos
            pos = max(pos, min(d, b))
            if d >= b:
                break
            k += 1
        if pos < b:
            rem += b - pos
    return rem


# ---------------------------------------------------------------------------
# Candidates and the admissible family
# ---------------------------------------------------------------------------


def candidate_cylinders(grid: CellGrid, w: WeightSpec, radii=None) -> list:
    """Grid-aligned centers x dyadic radii, balls kept inside the grid box."""
    if w.n != 1:
        raise ConfigError("covering candidates are implemented for n = 1")
    if radii is None:
        radii = []
        r = grid.dx
        while 2.0 * r <= grid.width:
            radii.append(r)
            r *= 2.0
        if not radii:
            radii = [grid.dx]
    out = []
    for r in radii:
        for y in grid.x_nodes:
            if y - r < grid.x0 - 1e-12 or y + r > grid.x0 + grid.width + 1e-12:
                continue
            for s in grid.t_nodes:
                out.append(make_cylinder(w, SpacetimePoint((y,), s), r))
    return out


def _cell_ranges(grid: CellGrid, cyl: WCylinder):
    """Index ranges [i0, i1) x [k0, k1) of cell centers inside the cylinder."""
    y = cyl.center.x[0]
    i0 = int(np.searchsorted(grid.x_centers, y - cyl.radius, side="right"))
    i1 = int(np.searchsorted(grid.x_centers, y + cyl.radius, side="left"))
    k0 = int(np.searchsorted(grid.t_centers, cyl.t_bottom, side="right"))
    k1 = int(np.searchsorted(grid.t_centers, cyl.t_top, side="left"))
    return i0, i1, k0, k1


def admissible_family(gamma: DiscreteSet, w: WeightSpec, delta0: float,
                      candidates) -> list:
    """Candidates whose cell-exact mu-density of Gamma is >= 1 - delta0."""
    if not 0.0 < delta0 < 1.0:
        raise ValueError("delta0 must lie in (0, 1)")
    grid = gamma.grid
    colw = mu_values(w, grid.x_centers) * grid.dx * grid.dt
    gmask = gamma.mask() * colw[:, None]
    full = np.broadcast_to(colw[:, None], gmask.shape)
    pg = np.zeros((grid.nx + 1, grid.nt + 1))
    pf = np.zeros((grid.nx + 1, grid.nt + 1))
    pg[1:, 1:] = np.cumsum(np.cumsum(gmask, axis=0), axis=1)
    pf[1:, 1:] = np.cumsum(np.cumsum(full, axis=0), axis=1)

    def boxsum(P, i0, i1, k0, k1):
        return P[i1, k1] - P[i0, k1] - P[i1, k0] + P[i0, k0]

    admitted = []
    for cyl in candidates:
        i0, i1, k0, k1 = _cell_ranges(grid, cyl)
        i0, i1 = max(i0, 0), min(i1, grid.nx)
        k0, k1 = max(k0, 0), min(k1, grid.nt)
        if i1 <= i0 or k1 <= k0:
            continue
        den = boxsum(pf, i0, i1, k0, k1)
        if den <= 0.0:
            continue
        num = boxsum(pg, i0, i1, k0, k1)
        if num >= (1.0 - delta0) * den * (1.0 - 1e-12):
            admitted.append(cyl)
    if not admitted:
        raise EmptyFamily(
            "no candidate cylinder meets the density condition; "
            "delta0 is too small for this grid resolution")
    return admitted


def _boxes_disjoint(a: WCylinder, b: WCylinder) -> bool:
    ax0, ax1 = a.center.x[0] - a.radius, a.center.x[0] + a.radius
    bx0, bx1 = b.center.x[0] - b.radius, b.center.x[0] + b.radius
    if ax1 <= bx0 or bx1 <= ax0:
        return True
    return a.t_top <= b.t_bottom or b.t_top <= a.t_bottom


def vitali_select(family) -> list:
    """Greedy disjoint subfamily: decreasing radius, ties by lexicographic center."""
    order = sorted(family,
                   key=lambda c: (-c.radius, c.center.x, c.center.t))
    selected = []
    for cyl in order:
        if all(_boxes_disjoint(cyl, s) for s in selected):
            selected.append(cyl)
    return selected


# ---------------------------------------------------------------------------
# E, E-hat and the covering report
# ---------------------------------------------------------------------------


@dataclass
class CoveringReport:
    n: int
    delta0: float
    K0: float
    K1: float
    mu_gamma: float
    mu_E: float
    mu_hatE: float
    mu_gamma_minus_E: float
    q0_required: float
    q1_required: float
    passed_q0: bool
    passed_q1: bool
    column_inequality_ok: bool
    candidate_count: int
    admitted_count: int
    selected_cylinders: list = field(default_factory=list)

    def passed(self) -> bool:
        return self.passed_q0 and self.passed_q1 and self.column_inequality_ok


def build_E_and_hatE(gamma: DiscreteSet, w: WeightSpec, delta0: float, K1: float,
                     candidates=None, K0: float = 1.0) -> CoveringReport:
    """Assemble the admitted family, measure E / E-hat, and check the inequalities."""
    grid = gamma.grid
    if candidates is None:
        candidates = candidate_cylinders(grid, w)
    family = admissible_family(gamma, w, delta0, candidates)
    q0_req = q0(w.n, K0, delta0)
    q1_req = q1(K1)

    xc = grid.x_centers
    colw = mu_values(w, xc) * grid.dx
    ys = np.array([c.center.x[0] for c in family])
    rs = np.array([c.radius for c in family])
    tops = np.array([c.t_top for c in family])
    depths = np.array([c.depth for c in family])
    covers = np.abs(xc[None, :] - ys[:, None]) < rs[:, None]  # (family, column)

    gmask = gamma.mask()
    t_nodes = grid.t_nodes
    mu_E = 0.0
    mu_hatE = 0.0
    mu_gamma = 0.0
    mu_gamma_minus_E = 0.0
    columns_ok = True
    for i in range(grid.nx):
        idx = np.nonzero(covers[:, i])[0]
        e_ivs = merge_intervals(
            (tops[j] - depths[j], tops[j]) for j in idx)
        hat_ivs = merge_intervals(
            (tops[j] + depths[j], tops[j] + K1 * depths[j]) for j in idx)
        len_e = total_length(e_ivs)
        len_hat = total_length(hat_ivs)
        if len_hat < q1_req * len_e * (1.0 - 1e-12):
            columns_ok = False
        mu_E += colw[i] * len_e
        mu_hatE += colw[i] * len_hat
        g_ivs = merge_intervals(
            (t_nodes[k], t_nodes[k + 1]) for k in np.nonzero(gmask[i])[0])
        mu_gamma += colw[i] * total_length(g_ivs)
        mu_gamma_minus_E += colw[i] * subtract_length(g_ivs, e_ivs)

    report = CoveringReport(
        n=w.n, delta0=delta0, K0=K0, K1=K1,
        mu_gamma=mu_gamma, mu_E=mu_E, mu_hatE=mu_hatE,
        mu_gamma_minus_E=mu_gamma_minus_E,
        q0_required=q0_req, q1_required=q1_req,
        passed_q0=mu_E >= q0_req * mu_gamma * (1.0 - 1e-12),
        passed_q1=mu_hatE >= q1_req * mu_E * (1.0 - 1e-12),
        column_inequality_ok=columns_ok,
        candidate_count=len(candidates),
        admitted_count=len(family),
        selected_cylinders=[(c.center, c.radius) for c in vitali_select(family)],
    )
    return report


# ---------------------------------------------------------------------------
# Gamma generation and I/O
# ---------------------------------------------------------------------------


def random_gamma(grid: CellGrid, seed: int, blobs: int = 4,
                 min_frac: float = 0.15) -> DiscreteSet:
    """Seeded union of grid-aligned rectangles (blobby by construction)."""
    rng = np.random.default_rng(seed)
    cells = set()
    for _ in range(blobs):
        wx = rng.integers(max(2, int(min_frac * grid.nx)), max(3, grid.nx // 2) + 1)
        wt = rng.integers(max(2, int(min_frac * grid.nt)), max(3, grid.nt // 2) + 1)
        ix = rng.integers(0, grid.nx - wx + 1)
        it = rng.integers(0, grid.nt - wt + 1)
        for i in range(ix, ix + wx):
            for k in range(it, it + wt):
                cells.add((int(i), int(k)))
    return DiscreteSet(grid=grid, cells=frozenset(cells))


def gamma_from_csv(path, grid: CellGrid) -> DiscreteSet:
    """Cell indices from CSV rows ``ix,it``."""
    cells = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.replace(",", " ").split()
            if len(parts) < 2:
                raise ConfigError(f"bad Gamma CSV line: {line!r}")
            cells.add((int(parts[0]), int(parts[1])))
    return DiscreteSet(grid=grid, cells=frozenset(cells))


def gamma_to_csv(gamma: DiscreteSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# ix,it\n")
        for (ix, it) in sorted(gamma.cells):
            fh.write(f"{ix},{it}\n")
