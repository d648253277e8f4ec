"""Finite-difference solve of the obstacle problem for U and derived fields.

U solves the variational inequality

    max{ L U, 1 - U } = 0  on [0,T) x (0, x_max),    L = d_t + (sigma^2/2) d_xx + mu d_x - r,

with terminal data U(T, .) = 1, the creation (Robin) condition
U_x(t,0) + lam U(t,0) = 0 discretized through a ghost node, and U = 1
imposed at the truncation level x_max.  The dividend value follows by
integration: V(t,x) = int_0^x U(t,y) dy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import (
    DomainError,
    GridMismatchError,
    NonMonotoneBeyondCellError,
    PsorDivergedError,
    TrivialProblemError,
    XmaxTooSmallError,
)
from .model import Boundary, ModelParams, SpaceGrid, TimeGrid
from .report import VerificationReport

SCHEMES = ("implicit-projected", "crank-nicolson-projected")

#: number of damped backward-Euler start-up steps for the CN scheme
_RANNACHER_STEPS = 2


@dataclass(frozen=True)
class ValueSurface:
    """U or V sampled on a time x space grid (time along axis 0)."""

    time_grid: TimeGrid
    space_grid: SpaceGrid
    values: np.ndarray
    kind: str

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if self.kind not in ("U", "V"):
            raise DomainError(f"kind must be 'U' or 'V', got {self.kind!r}")
        if values.shape != (self.time_grid.count, self.space_grid.count):
            raise DomainError("values shape must be (time count, space count)")

    def at(self, t: float, x: float) -> float:
        """Bilinear interpolation of the surface."""
        tn, xn = self.time_grid.nodes, self.space_grid.nodes
        k = int(np.clip(np.searchsorted(tn, t) - 1, 0, tn.size - 2))
        wt = (t - tn[k]) / (tn[k + 1] - tn[k])
        wt = min(max(wt, 0.0), 1.0)
        row = (1.0 - wt) * self.values[k] + wt * self.values[k + 1]
        return float(np.interp(x, xn, row))


@dataclass(frozen=True)
class PdeConfig:
    time_grid: TimeGrid
    space_grid: SpaceGrid
    scheme: str = "crank-nicolson-projected"
    psor_tol: float = 1e-8
    psor_max_iters: int = 0
    boundary_extract_tol: float = 1e-4

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown scheme {self.scheme!r}")
        if not (self.psor_tol > 0.0 and self.boundary_extract_tol > 0.0):
            raise DomainError("tolerances must be positive")
        if self.psor_max_iters < 0:
            raise DomainError("psor_max_iters must be >= 0")


def default_pde_config(params: ModelParams, nt: int = 401, nx: int = 801,
                       x_max: float | None = None) -> PdeConfig:
    """Desk-scale default grids on [0,T] x [0, 4 sigma sqrt(T)]."""
    if x_max is None:
        x_max = 4.0 * params.sigma * np.sqrt(params.horizon_T)
    return PdeConfig(
        time_grid=TimeGrid.uniform(params.horizon_T, nt),
        space_grid=SpaceGrid.uniform(x_max, nx),
    )


def _operator_rows(params: ModelParams, xg: np.ndarray):
    """Tridiagonal rows of A = (sigma^2/2) D_xx + mu D_x - r with the Robin
    ghost-node row at x = 0.  Row j couples (U[j-1], U[j], U[j+1])."""
    dx = xg[1] - xg[0]
    n = xg.size
    s2 = 0.5 * params.sigma**2
    lam = params.lam
    lower = np.zeros(n)
    main = np.zeros(n)
    upper = np.zeros(n)
    lower[1:-1] = s2 / dx**2 - params.mu / (2.0 * dx)
    main[1:-1] = -2.0 * s2 / dx**2 - params.r
    upper[1:-1] = s2 / dx**2 + params.mu / (2.0 * dx)
    # ghost node: U[-1] = U[1] + 2 dx lam U[0], substituted into row 0
    main[0] = -params.sigma**2 / dx**2 + params.sigma**2 * lam / dx \
        - params.mu * lam - params.r
    upper[0] = params.sigma**2 / dx**2
    return lower, main, upper


def _apply_tridiag(lower, main, upper, u):
    out = main * u
    out[:-1] += upper[:-1] * u[1:]
    out[1:] += lower[1:] * u[:-1]
    return out


def _projected_solve(sub, diag, sup, rhs, obstacle):
    """Solve the tridiagonal LCP  min(M x - rhs, x - obstacle) = 0 by
    elimination from the right and projected substitution from the left.
    Exact when the active set is contiguous at the right end, which holds
    here: the stopping region is x >= b(t)."""
    n = rhs.size
    d = diag.copy()
    g = rhs.copy()
    for j in range(n - 2, -1, -1):
        m = sup[j] / d[j + 1]
        d[j] -= m * sub[j + 1]
        g[j] -= m * g[j + 1]
    x = np.empty(n)
    x[0] = max(g[0] / d[0], obstacle[0])
    for j in range(1, n):
        x[j] = max((g[j] - sub[j] * x[j - 1]) / d[j], obstacle[j])
    return x


def _psor_refine(sub, diag, sup, rhs, x0, obstacle, tol, max_iters, omega=1.2):
    """Projected SOR sweeps on the same LCP, starting from x0."""
    x = x0.copy()
    n = x.size
    for _ in range(max_iters):
        delta = 0.0
        for j in range(n):
            acc = rhs[j]
            if j > 0:
                acc -= sub[j] * x[j - 1]
            if j < n - 1:
                acc -= sup[j] * x[j + 1]
            new = max(x[j] + omega * (acc / diag[j] - x[j]), obstacle[j])
            delta = max(delta, abs(new - x[j]))
            x[j] = new
        if delta < tol:
            return x
    raise PsorDivergedError(
        f"projected SOR did not reach tol={tol:g} in {max_iters} iterations"
    )


def solve_U(params: ModelParams, cfg: PdeConfig) -> ValueSurface:
    """Backward sweep for the stopping value U on the configured grids.

    Uses backward Euler ('implicit-projected') or Crank-Nicolson with two
    damped start-up steps ('crank-nicolson-projected'); each step solves
    the obstacle complementarity problem exactly via projected
    elimination, with optional projected-SOR refinement.
    """
    if params.mu <= 0.0:
        raise TrivialProblemError(
            "mu <= 0: V = x and U has no non-trivial continuation region"
        )
    tg, xg = cfg.time_grid.nodes, cfg.space_grid.nodes
    if abs(tg[-1] - params.horizon_T) > 1e-12:
        raise DomainError("time grid must end at horizon_T")
    nt, nx = tg.size, xg.size
    lower, main, upper = _operator_rows(params, xg)
    U = np.ones((nt, nx))
    obstacle = np.ones(nx)
    for k in range(nt - 2, -1, -1):
        dt = tg[k + 1] - tg[k]
        steps_done = nt - 2 - k
        implicit = (cfg.scheme == "implicit-projected"
                    or steps_done < _RANNACHER_STEPS)
        theta = 1.0 if implicit else 0.5
        uo = U[k + 1]
        rhs = uo + (1.0 - theta) * dt * _apply_tridiag(lower, main, upper, uo)
        sub = -theta * dt * lower
        diag = 1.0 - theta * dt * main
        sup = -theta * dt * upper
        # Dirichlet U = 1 at x_max (deep stopping region)
        sub[-1] = 0.0
        sup[-1] = 0.0
        diag[-1] = 1.0
        rhs[-1] = 1.0
        sol = _projected_solve(sub, diag, sup, rhs, obstacle)
        if cfg.psor_max_iters > 0:
            sol = _psor_refine(sub, diag, sup, rhs, sol, obstacle,
                               cfg.psor_tol, cfg.psor_max_iters)
        U[k] = sol
    surface = ValueSurface(cfg.time_grid, cfg.space_grid, U, "U")
    check_xmax(surface, cfg.boundary_extract_tol)
    return surface


def check_xmax(U: ValueSurface, tol: float) -> None:
    """Raise if the continuation region reaches the space truncation."""
    if np.any(U.values[:, -2] > 1.0 + tol):
        raise XmaxTooSmallError(
            f"continuation region touches x_max = {U.space_grid.x_max:g}; "
            "enlarge the space grid"
        )


def extract_boundary(U: ValueSurface, params: ModelParams,
                     boundary_extract_tol: float = 1e-4) -> Boundary:
    """Free boundary from the level set {U = 1 + tol}, smooth-fit corrected.

    U leaves the flat obstacle quadratically, U - 1 ~ (r/sigma^2)(x-b)^2,
    so the linear-interpolated crossing of the threshold is shifted by the
    known offset sqrt(tol * sigma^2 / r).  Monotonicity violations up to
    one space cell are removed by isotonic projection; larger ones raise.
    """
    if U.kind != "U":
        raise DomainError("extract_boundary expects a U surface")
    xg = U.space_grid.nodes
    dx = xg[1] - xg[0]
    theta = boundary_extract_tol
    offset = np.sqrt(theta * params.sigma**2 / params.r) if params.r > 0 else 0.0
    nt = U.time_grid.count
    vals = np.zeros(nt)
    for k in range(nt - 1, -1, -1):
        row = U.values[k]
        above = np.flatnonzero(row > 1.0 + theta)
        if above.size == 0:
            if k == nt - 1:
                vals[k] = 0.0
            else:
                # threshold not reached on an under-resolved near-T row;
                # fall back to the machine-level continuation extent
                above = np.flatnonzero(row > 1.0 + 1e-12)
                vals[k] = xg[above[-1]] if above.size else vals[k + 1]
            continue
        j = above[-1]
        if j < xg.size - 1 and row[j] > row[j + 1]:
            crossing = xg[j] + (row[j] - (1.0 + theta)) / (row[j] - row[j + 1]) * dx
        else:
            crossing = xg[j]
        vals[k] = min(crossing + offset, U.space_grid.x_max)
    rises = np.diff(vals)
    if np.any(rises > dx):
        raise NonMonotoneBeyondCellError(
            f"extracted boundary rises by {rises.max():.3g} > one cell {dx:.3g}"
        )
    vals = np.minimum.accumulate(vals)
    boundary = Boundary(U.time_grid, vals)
    boundary.validate()
    return boundary


def integrate_V(U: ValueSurface) -> ValueSurface:
    """Dividend value V(t,x) = int_0^x U(t,y) dy by cumulative trapezoid."""
    if U.kind != "U":
        raise DomainError("integrate_V expects a U surface")
    V = cumulative_trapezoid(U.values, U.space_grid.nodes, axis=1, initial=0.0)
    return ValueSurface(U.time_grid, U.space_grid, V, "V")


def trivial_value(params: ModelParams, t: float, x: float) -> float:
    """Value for mu <= 0: pay everything immediately, V(t, x) = x."""
    if params.mu > 0.0:
        raise DomainError("trivial_value requires mu <= 0")
    if x < 0.0:
        raise DomainError("x must be >= 0")
    return float(x)


def _discrete_LV(V: ValueSurface, params: ModelParams):
    """Forward-in-time, centered-in-space discrete L applied to V.

    Returned array has shape (nt - 1, nx - 2) for interior space nodes.
    """
    tg, xg, vals = V.time_grid.nodes, V.space_grid.nodes, V.values
    dx = xg[1] - xg[0]
    dts = np.diff(tg)[:, None]
    v_t = (vals[1:, 1:-1] - vals[:-1, 1:-1]) / dts
    v_x = (vals[:-1, 2:] - vals[:-1, :-2]) / (2.0 * dx)
    v_xx = (vals[:-1, 2:] - 2.0 * vals[:-1, 1:-1] + vals[:-1, :-2]) / dx**2
    return (v_t + 0.5 * params.sigma**2 * v_xx + params.mu * v_x
            - params.r * vals[:-1, 1:-1])


def verification_residuals(
    V: ValueSurface,
    b: Boundary,
    params: ModelParams,
    tol_pde: float = 0.05,
    collar_cells: int = 2,
    time_exclude_frac: float = 0.05,
) -> VerificationReport:
    """Numerical check of the verification-theorem conditions.

    (i)   max{LV, 1 - V_x} ~ 0 away from the boundary collar;
    (ii)  V(t, 0) = 0 exactly;
    (iii) V(T, x) = x exactly;
    (iv)  LV ~ 0 in the continuation region;
    (v)   V_x ~ 1 in the stopping region.

    ``tol_pde`` bounds the discrete-operator residuals (iv) and (i); it is
    scheme- and grid-dependent and is calibrated by refinement studies in
    the acceptance suite.
    """
    if V.kind != "V":
        raise DomainError("verification_residuals expects a V surface")
    if V.time_grid.nodes.shape != b.grid.nodes.shape or np.any(
        V.time_grid.nodes != b.grid.nodes
    ):
        raise GridMismatchError("V and b must share the same time grid")
    tg, xg, vals = V.time_grid.nodes, V.space_grid.nodes, V.values
    dx = xg[1] - xg[0]
    T = params.horizon_T
    tol_slope = 5.0 * dx

    report = VerificationReport()
    report.add("cond_ii_V_at_0", np.abs(vals[:, 0]).max(), 1e-12)
    report.add("cond_iii_terminal", np.abs(vals[-1] - xg).max(), 1e-12)

    LV = _discrete_LV(V, params)
    v_x = (vals[:, 2:] - vals[:, :-2]) / (2.0 * dx)
    x_int = xg[1:-1]
    b_rows = b.values[:-1, None]
    t_ok = (tg[:-1] <= (1.0 - time_exclude_frac) * T)[:, None]
    collar = collar_cells * dx

    cont = t_ok & (x_int[None, :] < b_rows - collar) & (x_int[None, :] > 0.0)
    stop = t_ok & (x_int[None, :] > b_rows + collar) & (
        x_int[None, :] < xg[-1] - collar
    )
    cond_iv = np.abs(LV[cont]).max() if cont.any() else 0.0
    cond_v = np.abs(v_x[:-1][stop] - 1.0).max() if stop.any() else 0.0
    both = t_ok & (x_int[None, :] > 0.0) \
        & (np.abs(x_int[None, :] - b_rows) > collar) \
        & (x_int[None, :] < xg[-1] - collar)
    cond_i = np.abs(np.maximum(LV, 1.0 - v_x[:-1]))[both].max() if both.any() else 0.0

    report.add("cond_iv_LV_continuation", cond_iv, tol_pde)
    report.add("cond_v_Vx_stopping", cond_v, tol_slope)
    report.add("cond_i_hjb", cond_i, max(tol_pde, tol_slope))
    return report


def smooth_fit_residual(U: ValueSurface, b: Boundary) -> np.ndarray:
    """One-sided (left) discrete U_x at the discrete free-boundary node.

    The node used is the last one where U exceeds the obstacle; under
    smooth fit the one-sided derivative there is O(dx) and non-positive
    (U decreases onto the obstacle).  Rows whose continuation region is
    within one cell of the domain edges (the degenerate terminal stretch)
    are NaN.
    """
    if U.kind != "U":
        raise DomainError("smooth_fit_residual expects a U surface")
    xg = U.space_grid.nodes
    dx = xg[1] - xg[0]
    out = np.full(U.time_grid.count, np.nan)
    for k in range(U.time_grid.count):
        above = np.flatnonzero(U.values[k] > 1.0 + 1e-12)
        if above.size == 0:
            continue
        j = above[-1]
        if j < 1 or j > xg.size - 2:
            continue
        out[k] = (U.values[k, j] - U.values[k, j - 1]) / dx
    return out


def creation_residual(U: ValueSurface, params: ModelParams) -> np.ndarray:
    """Discrete U_x(t,0) + lam U(t,0) per time node (second-order one-sided)."""
    if U.kind != "U":
        raise DomainError("creation_residual expects a U surface")
    dx = U.space_grid.nodes[1] - U.space_grid.nodes[0]
    u = U.values
    ux0 = (-3.0 * u[:, 0] + 4.0 * u[:, 1] - u[:, 2]) / (2.0 * dx)
    return ux0 + params.lam * u[:, 0]
