"""Monotone finite differences for u_t - omega(x) a_ij(x,t) D_ij u = f.

Nodes are cell-centered (half-integer multiples of the cell size) so the
singular point of a power weight never coincides with a node.  The explicit
scheme is forward Euler with centered second differences and, in two
dimensions, the seven-point cross-derivative stencil whose diagonal branch
follows the sign of a_12; written in difference form

    u_new = u + dt*omega(x) * sum_dir c_dir (u_dir - u),   c_dir >= 0,

it is monotone under the step bound, which makes the discrete maximum and
comparison principles exact (not just up to rounding) with the default step
safety factor.  The implicit scheme is backward Euler with the same spatial
stencil, solved sparsely per step.

The right-hand side f exists for manufactured-solution testing only.
Dimensions n in {1, 2}.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import CflViolation, ConfigError, LinearSolveFailure
from .geometry import WCylinder
from .weights import WeightSpec, mu_values, omega_values

_IMPLICIT_TOL = 1e-10
_BIN_MAGIC = b"HLAB"
_BIN_VERSION = 1


# ---------------------------------------------------------------------------
# Coefficients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoefficientField:
    """Symmetric elliptic coefficients with two-sided bound nu.

    ``eval`` returns (a11,) in 1-d and (a11, a22, a12) in 2-d as arrays over
    the supplied nodes.  Generator kinds keep the seven-point stencil
    monotone by construction; user fields are accepted and validated at
    solve time (flagged when non-monotone, max-principle checks then skip).
    """

    nu: float
    kind: str = "constant"
    n: int = 1
    matrix: tuple = ()
    seed: int = 0
    cells: int = 8
    box: tuple = ()
    fn: object = None
    time_dependent: bool = False
    rate: float = 1.0

    @staticmethod
    def constant(n: int = 1, matrix=None, nu: float = None) -> "CoefficientField":
        if matrix is None:
            matrix = np.eye(n)
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (n, n) or not np.allclose(matrix, matrix.T):
            raise ConfigError("constant coefficients need a symmetric n x n matrix")
        eigs = np.linalg.eigvalsh(matrix)
        bound = max(np.max(np.abs(matrix)), eigs[-1])
        nu_eff = min(eigs[0], 1.0 / bound)
        if nu_eff <= 0.0:
            raise ConfigError("constant coefficient matrix is not elliptic")
        return CoefficientField(nu=float(nu if nu is not None else nu_eff),
                                kind="constant", n=n,
                                matrix=tuple(matrix.ravel()))

    @staticmethod
    def checkerboard(nu: float, seed: int, n: int = 1, cells: int = 8,
                     box=None) -> "CoefficientField":
        if not 0.0 < nu < 1.0:
            raise ConfigError("checkerboard coefficients need nu in (0, 1)")
        if box is None:
            box = ((-4.0, 4.0),) * n
        return CoefficientField(nu=float(nu), kind="checkerboard", n=n,
                                seed=int(seed), cells=int(cells),
                                box=tuple(tuple(b) for b in box))

    @staticmethod
    def rotating(nu: float, n: int = 2, rate: float = 1.0) -> "CoefficientField":
        if not 0.0 < nu < 1.0:
            raise ConfigError("rotating coefficients need nu in (0, 1)")
        return CoefficientField(nu=float(nu), kind="rotating", n=n,
                                rate=float(rate), time_dependent=True)

    @staticmethod
    def user(fn, nu: float, n: int = 1, time_dependent: bool = True) -> "CoefficientField":
        return CoefficientField(nu=float(nu), kind="user", n=n, fn=fn,
                                time_dependent=time_dependent)

    def _checker_index(self, pts_axis: np.ndarray, axis: int) -> np.ndarray:
        lo, hi = self.box[axis]
        f = np.clip((pts_axis - lo) / (hi - lo), 0.0, 1.0 - 1e-12)
        return (f * self.cells).astype(int)

    def eval(self, pts, t: float):
        """Coefficient arrays at the nodes; pts is x (1-d) or (..., 2) (2-d)."""
        if self.kind == "constant":
            m = np.asarray(self.matrix).reshape(self.n, self.n)
            shape = np.shape(pts)[:-1] if self.n == 2 else np.shape(pts)
            if self.n == 1:
                return (np.full(shape, m[0, 0]),)
            return (np.full(shape, m[0, 0]), np.full(shape, m[1, 1]),
                    np.full(shape, m[0, 1]))
        if self.kind == "checkerboard":
            rng = np.random.default_rng(self.seed)
            vals = rng.uniform(self.nu, 1.0 / self.nu,
                               size=(self.cells,) * self.n + (self.n,))
            if self.n == 1:
                idx = self._checker_index(np.asarray(pts), 0)
                return (vals[idx, 0],)
            i = self._checker_index(np.asarray(pts)[..., 0], 0)
            j = self._checker_index(np.asarray(pts)[..., 1], 1)
            return (vals[i, j, 0], vals[i, j, 1], np.zeros_like(vals[i, j, 0]))
        if self.kind == "rotating":
            lam1 = min(1.0 / self.nu, 1.25)
            lam2 = max(self.nu, 0.8)
            if self.n == 1:
                x = np.asarray(pts)
                mid = 0.5 * (lam1 + lam2)
                amp = 0.5 * (lam1 - lam2)
                return (mid + amp * np.sin(self.rate * (x + t)),)
            x = np.asarray(pts)[..., 0]
            y = np.asarray(pts)[..., 1]
            th = self.rate * (t + x + y)
            c, s = np.cos(th), np.sin(th)
            a11 = lam1 * c * c + lam2 * s * s
            a22 = lam1 * s * s + lam2 * c * c
            a12 = (lam1 - lam2) * s * c
            return (a11, a22, a12)
        if self.kind == "user":
            return self.fn(pts, t)
        raise ConfigError(f"unknown coefficient kind {self.kind!r}")

    def lambda_max(self, pts, t: float) -> np.ndarray:
        a = self.eval(pts, t)
        if self.n == 1:
            return np.abs(a[0])
        a11, a22, a12 = a
        h = 0.5 * (a11 + a22)
        return h + np.sqrt((0.5 * (a11 - a22)) ** 2 + a12 ** 2)


# ---------------------------------------------------------------------------
# Grid and problem
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Cell-centered space-time grid; nodes at x0 + (i + 1/2) dx."""

    n: int
    box: tuple            # ((x0, x1),) or ((x0, x1), (y0, y1))
    nx: tuple             # nodes per axis
    t0: float
    t1: float
    nt: int
    scheme: str = "explicit"

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ConfigError("the solver supports n in {1, 2}")
        if self.scheme not in ("explicit", "implicit"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if len(self.box) != self.n or len(self.nx) != self.n:
            raise ConfigError("grid box/nx must match the dimension")
        if self.nt < 1 or any(m < 3 for m in self.nx):
            raise ConfigError("grid too small")

    @property
    def dx(self) -> tuple:
        return tuple((b[1] - b[0]) / m for b, m in zip(self.box, self.nx))

    @property
    def dt(self) -> float:
        return (self.t1 - self.t0) / self.nt

    def axis_nodes(self, axis: int) -> np.ndarray:
        lo, _ = self.box[axis]
        h = self.dx[axis]
        return lo + (np.arange(self.nx[axis]) + 0.5) * h

    def nodes(self):
        """Node coordinates: 1-d array (n=1) or (N1, N2, 2) array (n=2)."""
        if self.n == 1:
            return self.axis_nodes(0)
        X, Y = np.meshgrid(self.axis_nodes(0), self.axis_nodes(1), indexing="ij")
        return np.stack([X, Y], axis=-1)

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.nt + 1) * self.dt


@dataclass
class Problem:
    weight: WeightSpec
    coeff: CoefficientField
    grid: GridSpec
    u0: object                   # u0(x) -> array
    g: object                    # g(x, t) -> array, lateral data
    f: object = None             # f(x, t) -> array, manufactured tests only
    inside: object = None        # inside(x) -> bool array (sub-domain mask)
    static_data: bool = False    # g and f do not depend on t (evaluated once)


@dataclass
class Solution:
    grid: GridSpec
    values: np.ndarray           # (nt + 1, *nx)
    problem: Problem = None
    interior: np.ndarray = None  # spatial mask of evolved nodes
    meta: dict = field(default_factory=dict)

    @property
    def scheme(self) -> str:
        return self.grid.scheme

    @staticmethod
    def from_function(grid: GridSpec, fn, problem: Problem = None) -> "Solution":
        pts = grid.nodes()
        vals = np.stack([np.asarray(fn(pts, t), dtype=float) for t in grid.times()])
        interior = _interior_mask(grid, problem.inside if problem else None)
        return Solution(grid=grid, values=vals, problem=problem, interior=interior)


def _interior_mask(grid: GridSpec, inside=None) -> np.ndarray:
    """Evolved nodes: off the outer node layer and inside the sub-domain mask.
    Stencil neighbours outside the mask are data nodes holding boundary values."""
    if grid.n == 1:
        m = np.zeros(grid.nx[0], dtype=bool)
        m[1:-1] = True
    else:
        m = np.zeros(grid.nx, dtype=bool)
        m[1:-1, 1:-1] = True
    if inside is not None:
        pts = grid.nodes()
        m &= np.asarray(inside(pts), dtype=bool)
    return m


def cfl_max_dt(w: WeightSpec, coeff: CoefficientField, grid: GridSpec,
               sample_times: int = 5) -> float:
    """Largest stable explicit step: 1 / (sup(omega Lambda_max) Sum 2/dx_i^2)."""
    pts = grid.nodes()
    om = omega_values(w, pts)
    worst = 0.0
    ts = np.linspace(grid.t0, grid.t1, sample_times) if coeff.time_dependent \
        else [grid.t0]
    for t in ts:
        worst = max(worst, float(np.max(om * coeff.lambda_max(pts, t))))
    if not math.isfinite(worst) or worst <= 0.0:
        raise CflViolation("omega * Lambda_max is not finite and positive on the grid")
    return 1.0 / (worst * sum(2.0 / h ** 2 for h in grid.dx))


# ---------------------------------------------------------------------------
# Spatial operator (difference form)
# ---------------------------------------------------------------------------


def _spatial_delta_1d(u: np.ndarray, a11: np.ndarray, h: float) -> np.ndarray:
    """a u_xx on interior nodes, as a nonnegative combination of differences."""
    out = np.zeros_like(u)
    c = a11[1:-1] / (h * h)
    out[1:-1] = c * ((u[2:] - u[1:-1]) + (u[:-2] - u[1:-1]))
    return out


def _spatial_delta_2d(u, a11, a22, a12, h1, h2):
    """a_ij D_ij u with the monotone seven-point stencil, difference form."""
    out = np.zeros_like(u)
    u0 = u[1:-1, 1:-1]
    ax1 = (u[2:, 1:-1] - u0) + (u[:-2, 1:-1] - u0)
    ax2 = (u[1:-1, 2:] - u0) + (u[1:-1, :-2] - u0)
    dpp = (u[2:, 2:] - u0) + (u[:-2, :-2] - u0)
    dpm = (u[2:, :-2] - u0) + (u[:-2, 2:] - u0)
    a11c = a11[1:-1, 1:-1]
    a22c = a22[1:-1, 1:-1]
    a12c = a12[1:-1, 1:-1]
    cross = np.abs(a12c) / (h1 * h2)
    c1 = a11c / (h1 * h1) - cross
    c2 = a22c / (h2 * h2) - cross
    diag = np.where(a12c >= 0.0, dpp, dpm)
    out[1:-1, 1:-1] = c1 * ax1 + c2 * ax2 + cross * diag
    return out


def _monotone_ok(coeff: CoefficientField, pts, t: float, dx) -> bool:
    if coeff.n == 1:
        a = coeff.eval(pts, t)[0]
        return bool(np.all(a > 0.0))
    a11, a22, a12 = coeff.eval(pts, t)
    h1, h2 = dx
    cross = np.abs(a12)
    return bool(np.all(a11 * h2 / h1 >= cross - 1e-15)
                and np.all(a22 * h1 / h2 >= cross - 1e-15))


def spatial_operator(u_level: np.ndarray, w_nodes: np.ndarray,
                     coeff_arrays, dx) -> np.ndarray:
    """omega a_ij D_ij u at one time level (zero on the node-layer boundary)."""
    if len(dx) == 1:
        return w_nodes * _spatial_delta_1d(u_level, coeff_arrays[0], dx[0])
    return w_nodes * _spatial_delta_2d(u_level, *coeff_arrays, dx[0], dx[1])


# ---------------------------------------------------------------------------
# Solve
# ---------------------------------------------------------------------------


def solve(problem: Problem) -> Solution:
    """March the scheme over the grid, prescribing data on the discrete
    parabolic boundary (bottom and lateral; never the top face)."""
    grid = problem.grid
    w = problem.weight
    if w.n != grid.n:
        raise ConfigError("weight and grid dimensions differ")
    pts = grid.nodes()
    om = omega_values(w, pts)
    if not np.all(np.isfinite(om)):
        raise ConfigError("omega is not finite at a node; offset the grid")
    interior = _interior_mask(grid, problem.inside)
    data_mask = ~interior
    dt = grid.dt

    monotone = _monotone_ok(problem.coeff, pts, grid.t0, grid.dx)
    if not monotone and problem.coeff.kind != "user":
        raise ConfigError("generated coefficient field lost stencil monotonicity")

    if grid.scheme == "explicit":
        limit = cfl_max_dt(w, problem.coeff, grid)
        if dt > limit * (1.0 + 1e-12):
            raise CflViolation(
                f"dt={dt:.3e} exceeds the stability bound {limit:.3e}")
        return _solve_explicit(problem, pts, om, interior, data_mask, monotone)
    return _solve_implicit(problem, pts, om, interior, data_mask, monotone)


def _eval_data(fn, pts, t):
    return np.asarray(fn(pts, t), dtype=float)


def _solve_explicit(problem, pts, om, interior, data_mask, monotone) -> Solution:
    grid = problem.grid
    dt = grid.dt
    dt_om = dt * om
    vals = np.empty((grid.nt + 1,) + om.shape)
    u = np.asarray(problem.u0(pts), dtype=float).copy()
    vals[0] = u
    coeff = problem.coeff
    arrays = coeff.eval(pts, grid.t0)
    static = problem.static_data
    bdata = _eval_data(problem.g, pts, grid.t0)[data_mask] if static else None
    fdata = (dt * _eval_data(problem.f, pts, grid.t0)
             if (static and problem.f is not None) else None)
    for m in range(grid.nt):
        t = grid.t0 + m * dt
        if coeff.time_dependent:
            arrays = coeff.eval(pts, t)
        upd = u + dt_om * (_spatial_delta_1d(u, arrays[0], grid.dx[0])
                           if grid.n == 1 else
                           _spatial_delta_2d(u, *arrays, grid.dx[0], grid.dx[1]))
        if problem.f is not None:
            upd = upd + (fdata if static else dt * _eval_data(problem.f, pts, t))
        u_new = np.where(interior, upd, u)
        u_new[data_mask] = bdata if static else \
            _eval_data(problem.g, pts, t + dt)[data_mask]
        u = u_new
        vals[m + 1] = u
    return Solution(grid=grid, values=vals, problem=problem, interior=interior,
                    meta={"scheme": "explicit", "monotone": monotone})


def _solve_implicit(problem, pts, om, interior, data_mask, monotone) -> Solution:
    grid = problem.grid
    dt = grid.dt
    vals = np.empty((grid.nt + 1,) + om.shape)
    u = np.asarray(problem.u0(pts), dtype=float).copy()
    vals[0] = u
    coeff = problem.coeff
    factor = None
    static = problem.static_data
    bdata = _eval_data(problem.g, pts, grid.t0).ravel() if static else None
    fdata = (dt * _eval_data(problem.f, pts, grid.t0).ravel() * interior.ravel()
             if (static and problem.f is not None) else None)
    dmask = data_mask.ravel()
    for m in range(grid.nt):
        t_new = grid.t0 + (m + 1) * dt
        if factor is None or coeff.time_dependent:
            A = _assemble_backward_euler(grid, om, coeff, pts, t_new,
                                         interior, dt)
            try:
                factor = spla.splu(A.tocsc())
            except RuntimeError as exc:
                raise LinearSolveFailure(f"sparse factorization failed: {exc}") from exc
            A_csr = A.tocsr()
        rhs = u.ravel().copy()
        if problem.f is not None:
            rhs += fdata if static else \
                dt * _eval_data(problem.f, pts, t_new).ravel() * interior.ravel()
        bvals = bdata if static else _eval_data(problem.g, pts, t_new).ravel()
        rhs[dmask] = bvals[dmask]
        x = factor.solve(rhs)
        res = np.max(np.abs(A_csr @ x - rhs))
        if not np.isfinite(res) or res > _IMPLICIT_TOL * (1.0 + np.max(np.abs(rhs))):
            raise LinearSolveFailure(f"implicit step residual {res:.2e} above tolerance")
        u = x.reshape(om.shape)
        vals[m + 1] = u
    return Solution(grid=grid, values=vals, problem=problem, interior=interior,
                    meta={"scheme": "implicit", "monotone": monotone})


def _assemble_backward_euler(grid, om, coeff, pts, t, interior, dt):
    """(I - dt omega SpatialOp) with identity rows for data nodes."""
    size = int(np.prod(grid.nx))
    rows, cols, data = [], [], []
    diag = np.ones(size)
    arrays = coeff.eval(pts, t)
    s = (dt * om).ravel()
    inter = interior.ravel()
    if grid.n == 1:
        h = grid.dx[0]
        a = arrays[0].ravel()
        c = s * a / (h * h)
        idx = np.nonzero(inter)[0]
        for off in (-1, 1):
            rows.append(idx)
            cols.append(idx + off)
            data.append(-c[idx])
        diag[idx] += 2.0 * c[idx]
    else:
        N1, N2 = grid.nx
        h1, h2 = grid.dx
        a11 = arrays[0].ravel()
        a22 = arrays[1].ravel()
        a12 = arrays[2].ravel()
        cross = np.abs(a12)
        c1 = s * (a11 / (h1 * h1) - cross / (h1 * h2))
        c2 = s * (a22 / (h2 * h2) - cross / (h1 * h2))
        cd = s * cross / (h1 * h2)
        pos = a12 >= 0.0
        idx = np.nonzero(inter)[0]
        for off, cvals in (((-1, 0), c1), ((1, 0), c1), ((0, -1), c2), ((0, 1), c2)):
            j = idx + off[0] * N2 + off[1]
            rows.append(idx)
            cols.append(j)
            data.append(-cvals[idx])
            diag[idx] += cvals[idx]
        for sign_mask, offs in ((pos.ravel(), ((1, 1), (-1, -1))),
                                (~pos.ravel(), ((1, -1), (-1, 1)))):
            sel = idx[sign_mask[idx]]
            for off in offs:
                j = sel + off[0] * N2 + off[1]
                rows.append(sel)
                cols.append(j)
                data.append(-cd[sel])
                diag[sel] += cd[sel]
    rows.append(np.arange(size))
    cols.append(np.arange(size))
    data.append(diag)
    A = sp.coo_matrix((np.concatenate(data),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(size, size))
    return A


# ---------------------------------------------------------------------------
# Residuals, maximum principle, ABP
# ---------------------------------------------------------------------------


def discrete_L(sol: Solution, node, f=None) -> float:
    """Residual L_h u - f at an interior node (m, i[, j]).

    Forward time difference from level m; the spatial stencil is applied at
    level m for the explicit scheme and at level m+1 for backward Euler, so
    solver output has zero residual at machine precision.
    """
    grid = sol.grid
    m = node[0]
    if not 0 <= m < grid.nt:
        raise ValueError("time index out of range for a forward difference")
    pts = grid.nodes()
    om = omega_values(sol.problem.weight if sol.problem else
                      WeightSpec.constant(1.0, grid.n), pts)
    lvl = m if grid.scheme == "explicit" else m + 1
    t_sp = grid.t0 + lvl * grid.dt
    coeff = sol.problem.coeff if sol.problem else CoefficientField.constant(grid.n)
    arrays = coeff.eval(pts, t_sp)
    spat = spatial_operator(sol.values[lvl], om, arrays, grid.dx)
    ut = (sol.values[m + 1] - sol.values[m]) / grid.dt
    res = ut - spat
    if f is None and sol.problem is not None:
        f = sol.problem.f
    if f is not None:
        t_f = grid.t0 + lvl * grid.dt
        res = res - _eval_data(f, pts, t_f)
    ij = tuple(node[1:])
    if grid.n == 1:
        return float(res[ij[0]])
    return float(res[ij])


def residual_field(sol: Solution, include_f: bool = True) -> np.ndarray:
    """Residuals at every interior node and step: shape (nt, *nx); data nodes NaN."""
    grid = sol.grid
    pts = grid.nodes()
    w = sol.problem.weight if sol.problem else WeightSpec.constant(1.0, grid.n)
    om = omega_values(w, pts)
    coeff = sol.problem.coeff if sol.problem else CoefficientField.constant(grid.n)
    out = np.full((grid.nt,) + sol.values.shape[1:], np.nan)
    arrays = None
    for m in range(grid.nt):
        lvl = m if grid.scheme == "explicit" else m + 1
        t_sp = grid.t0 + lvl * grid.dt
        if arrays is None or coeff.time_dependent:
            arrays = coeff.eval(pts, t_sp)
        spat = spatial_operator(sol.values[lvl], om, arrays, grid.dx)
        res = (sol.values[m + 1] - sol.values[m]) / grid.dt - spat
        if include_f and sol.problem is not None and sol.problem.f is not None:
            res = res - _eval_data(sol.problem.f, pts, t_sp)
        out[m][sol.interior] = res[sol.interior]
    return out


@dataclass
class MaxPrincipleReport:
    passed: bool
    max_value: float
    worst_node: tuple
    tolerance: float
    premise_ok: bool
    monotone: bool


def check_max_principle(sol: Solution, tol: float = None) -> MaxPrincipleReport:
    """For a subsolution (L_h u <= 0, u <= 0 on the discrete parabolic
    boundary) assert max over all nodes <= tolerance."""
    grid = sol.grid
    monotone = bool(sol.meta.get("monotone", True))
    if tol is None:
        tol = 0.0 if (grid.scheme == "explicit" and monotone) else 1e-10
    scale = float(np.max(np.abs(sol.values))) or 1.0
    res = residual_field(sol)
    res_ok = bool(np.nanmax(res) <= 1e-9 * scale) if res.size else True
    bdry = sol.values.copy()
    bdry[1:, sol.interior] = -np.inf     # keep bottom level + lateral data only
    premise_ok = res_ok and bool(np.max(bdry) <= tol + 1e-15 * scale)
    worst_flat = int(np.argmax(sol.values))
    worst = np.unravel_index(worst_flat, sol.values.shape)
    max_val = float(sol.values[worst])
    passed = premise_ok and max_val <= tol
    return MaxPrincipleReport(passed=passed, max_value=max_val,
                              worst_node=tuple(int(v) for v in worst),
                              tolerance=tol, premise_ok=premise_ok,
                              monotone=monotone)


@dataclass
class AbpReport:
    sup_u_plus: float
    rhs_factor: float

    @property
    def ratio(self) -> float:
        if self.rhs_factor == 0.0:
            return 0.0 if self.sup_u_plus == 0.0 else math.inf
        return self.sup_u_plus / self.rhs_factor


def abp_report(sol: Solution, f=None, R: float = None) -> AbpReport:
    """(sup u^+, R^{n/(n+1)} ||f^+||_{L^{n+1}(Omega^+, mu)}).

    The ratio of the two is bounded by a generic constant; tests assert its
    stability across refinements rather than any absolute value.
    """
    grid = sol.grid
    n = grid.n
    if f is None:
        f = sol.problem.f if sol.problem else None
    if R is None:
        # radius of the origin-centered ball containing the spatial box
        extents = [max(abs(b[0]), abs(b[1])) for b in grid.box]
        R = extents[0] if n == 1 else math.hypot(*extents)
    pts = grid.nodes()
    w = sol.problem.weight if sol.problem else WeightSpec.constant(1.0, n)
    mu = mu_values(w, pts)
    sup_up = float(max(0.0, np.max(sol.values)))
    if f is None:
        norm = 0.0
    else:
        cellvol = float(np.prod(grid.dx)) * grid.dt
        acc = 0.0
        for m in range(grid.nt):
            t = grid.t0 + m * grid.dt
            fv = np.maximum(_eval_data(f, pts, t), 0.0)
            pos = sol.values[m + 1] > 0.0
            acc += float(np.sum((fv ** (n + 1) * mu)[pos & sol.interior]))
        norm = (acc * cellvol) ** (1.0 / (n + 1))
    return AbpReport(sup_u_plus=sup_up, rhs_factor=R ** (n / (n + 1.0)) * norm)


# ---------------------------------------------------------------------------
# Barriers (analytic sub/supersolution oracles)
# ---------------------------------------------------------------------------


def quadratic_barrier(w: WeightSpec, cyl: WCylinder):
    """b(x,t) = r^{-2}(|x-y|^2 - (mu)_{B_r(y)}^{-1/n}(t-s)); L b < 0 always,
    and the discrete operator reproduces L b exactly (quadratic in x, linear in t)."""
    from .weights import ball_mean, Ball

    y = np.asarray(cyl.center.x)
    s = cyl.center.t
    r = cyl.radius
    mu_inv = ball_mean(w, Ball(cyl.center.x, r), "mu") ** (-1.0 / w.n)

    def b(pts, t):
        if w.n == 1:
            d2 = (np.asarray(pts) - y[0]) ** 2
        else:
            d2 = np.sum((np.asarray(pts) - y) ** 2, axis=-1)
        return (d2 - mu_inv * (t - s)) / (r * r)

    return b


def slant_barrier(V, lam: float):
    """v(x,t) = e^{-lam t} (r^2 - |x - t l|^2)^2 on the slant cylinder."""
    y = np.asarray(V.center.x)
    s = V.center.t
    r = V.radius
    ell = y / s

    def v(pts, t):
        if len(y) == 1:
            w_ = r * r - (np.asarray(pts) - t * ell[0]) ** 2
        else:
            w_ = r * r - np.sum((np.asarray(pts) - t * ell) ** 2, axis=-1)
        return np.exp(-lam * t) * w_ * w_

    return v


def slant_barrier_rate(w: WeightSpec, V, coeff: CoefficientField, K: float,
                       R: float, y0) -> float:
    """Decay rate lam = N1 K^2 (omega)_{B_R(y0)} / r^2 with N1 = N0^2/(16 nu)
    and the concrete stencil bound N0 = 12 + 4n/nu."""
    from .weights import ball_mean, Ball

    n = w.n
    N0 = 12.0 + 4.0 * n / coeff.nu
    N1 = N0 * N0 / (16.0 * coeff.nu)
    om_mean = ball_mean(w, Ball(y0 if not np.isscalar(y0) else (y0,), R), "omega")
    return N1 * K * K * om_mean / (V.radius ** 2)


def slant_barrier_L(V, w: WeightSpec, coeff: CoefficientField, lam: float):
    """Analytic L v for the slant barrier (used to validate discrete_L)."""
    y = np.asarray(V.center.x)
    s = V.center.t
    r = V.radius
    ell = y / s
    n = len(y)

    def Lv(pts, t):
        pts = np.asarray(pts, dtype=float)
        if n == 1:
            z = pts - t * ell[0]
            w_ = r * r - z ** 2
            dw = -2.0 * z
            ell_dot = ell[0] * z
            a = coeff.eval(pts, t)
            quad = a[0] * dw * dw
            tra = a[0]
        else:
            z = pts - t * ell
            w_ = r * r - np.sum(z ** 2, axis=-1)
            ell_dot = np.sum(ell * z, axis=-1)
            a11, a22, a12 = coeff.eval(pts, t)
            dw1, dw2 = -2.0 * z[..., 0], -2.0 * z[..., 1]
            quad = a11 * dw1 * dw1 + 2.0 * a12 * dw1 * dw2 + a22 * dw2 * dw2
            tra = a11 + a22
        om = omega_values(w, pts)
        vt = np.exp(-lam * t) * (-lam * w_ * w_ + 4.0 * ell_dot * w_)
        lap = 2.0 * np.exp(-lam * t) * (quad - 2.0 * w_ * tra)
        return vt - om * lap

    return Lv


# ---------------------------------------------------------------------------
# Dumps and problem files
# ---------------------------------------------------------------------------


def dump_csv(sol: Solution, path) -> None:
    from .configio import fmt17

    grid = sol.grid
    pts = grid.nodes()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        cols = "x,t,value" if grid.n == 1 else "x1,x2,t,value"
        fh.write(cols + "\n")
        for m, t in enumerate(grid.times()):
            if grid.n == 1:
                for i, x in enumerate(pts):
                    fh.write(f"{fmt17(x)},{fmt17(t)},{fmt17(sol.values[m, i])}\n")
            else:
                for i in range(grid.nx[0]):
                    for j in range(grid.nx[1]):
                        fh.write(f"{fmt17(pts[i, j, 0])},{fmt17(pts[i, j, 1])},"
                                 f"{fmt17(t)},{fmt17(sol.values[m, i, j])}\n")


def dump_binary(sol: Solution, path) -> None:
    """16-byte header (magic HLAB, version, n, Nt as little-endian u32) followed
    by the per-axis node counts (u32 each) and the row-major float64 values."""
    grid = sol.grid
    with open(path, "wb") as fh:
        fh.write(_BIN_MAGIC)
        fh.write(struct.pack("<III", _BIN_VERSION, grid.n, grid.nt))
        for m in grid.nx:
            fh.write(struct.pack("<I", m))
        fh.write(np.ascontiguousarray(sol.values, dtype="<f8").tobytes())


def load_binary(path):
    """Returns (version, n, nt, nx, values)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _BIN_MAGIC:
            raise ConfigError(f"bad magic {magic!r} in solution dump")
        version, n, nt = struct.unpack("<III", fh.read(12))
        nx = struct.unpack("<" + "I" * n, fh.read(4 * n))
        raw = fh.read()
    values = np.frombuffer(raw, dtype="<f8").reshape((nt + 1,) + tuple(nx)).copy()
    return version, n, nt, nx, values
