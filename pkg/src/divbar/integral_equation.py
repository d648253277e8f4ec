"""Backward-marching solver for the boundary's integral equation.

The optimal barrier solves, for each t < T with tau = T - t,

    1 = exp(-r tau) E[exp(lam (max(b(t), S_tau) - b(t)))]
        + r * int_0^tau exp(-r s) P(X^{b(t)}_s >= b(t+s)) ds,

and is the unique continuous positive solution.  Marching from b(T) = 0
towards t = 0 turns each node into a one-dimensional root find: at node
t_i the boundary is already known on (t_i, T] and only the scalar b(t_i)
is unknown.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NoBracketError, NonMonotoneError, TrivialProblemError
from .model import Boundary, ModelParams, TimeGrid, exp_max_moment, reflected_survival

#: residual magnitude below which a clamped (bracket-edge) node is accepted
_CLAMP_SLACK = 1e-3


def default_b_max(params: ModelParams) -> float:
    """Upper search bound for the barrier: max(5 sigma sqrt(T), 10 mu T)."""
    return max(5.0 * params.sigma * np.sqrt(params.horizon_T),
               10.0 * params.mu * params.horizon_T)


@dataclass(frozen=True)
class IeSolverConfig:
    """Discretization and root-finding controls for the integral equation.

    ``tail_patch_cells`` > 0 replaces root-finding on that many nodes
    adjacent to T with the near-horizon asymptote.  The default is 0:
    the discrete equation is solvable all the way to the last interior
    node, while the leading-order asymptote sits well below the discrete
    solution there and would perturb neighbouring nodes.
    """

    time_grid: TimeGrid
    root_tol: float = 1e-6
    max_root_iters: int = 200
    quad_subdivisions: int = 24
    tail_patch_cells: int = 0
    b_max: float | None = None

    def __post_init__(self) -> None:
        if not (self.root_tol > 0.0):
            raise DomainError("root_tol must be > 0")
        if self.max_root_iters < 1:
            raise DomainError("max_root_iters must be >= 1")
        if self.quad_subdivisions < 1:
            raise DomainError("quad_subdivisions must be >= 1")
        if not (0 <= self.tail_patch_cells < self.time_grid.count):
            raise DomainError("tail_patch_cells must be in [0, grid count)")


def boundary_asymptote(t, params: ModelParams):
    """Leading-order barrier level sigma*sqrt((T-t)*ln(1/(T-t))) near T.

    Valid for 0 < T - t < 1 so the logarithm is positive.
    """
    t = np.asarray(t, dtype=float)
    tau = params.horizon_T - t
    if np.any(tau <= 0.0) or np.any(tau >= 1.0):
        raise DomainError("boundary_asymptote requires 0 < T - t < 1")
    val = params.sigma * np.sqrt(tau * np.log(1.0 / tau))
    if val.ndim == 0:
        return float(val)
    return val


def _s_quadrature_nodes(t: float, future_times: np.ndarray, nsub: int) -> np.ndarray:
    """Quadrature abscissae for the s-integral: the future grid offsets plus
    a geometric refinement of the first cell (the integrand has a kink at
    s = 0 where the process starts on the trial barrier)."""
    offsets = future_times - t
    first = offsets[0]
    sub = first * 0.5 ** np.arange(1, nsub)
    return np.unique(np.concatenate([offsets, sub]))


def _residual_given_future(
    c: float,
    t: float,
    future_times: np.ndarray,
    future_values: np.ndarray,
    params: ModelParams,
    nsub: int,
) -> float:
    """Integral-equation residual (right side minus one) for trial level c
    at time t, with the boundary known at future_times."""
    tau = params.horizon_T - t
    term1 = np.exp(-params.r * tau) * exp_max_moment(tau, c, params)
    s = _s_quadrature_nodes(t, future_times, nsub)
    b_at = np.interp(
        t + s,
        np.concatenate([[t], future_times]),
        np.concatenate([[c], future_values]),
    )
    f = np.exp(-params.r * s) * reflected_survival(s, c, b_at, params)
    # constant extrapolation over the (geometrically small) leading subinterval
    s_full = np.concatenate([[0.0], s])
    f_full = np.concatenate([[f[0]], f])
    term2 = params.r * np.trapezoid(f_full, s_full)
    return term1 + term2 - 1.0


def ie_residual(b: Boundary, t: float, params: ModelParams,
                quad_subdivisions: int = 24) -> float:
    """Residual of the integral equation at time t for a given boundary.

    Signed as (expectation term + integral term) - 1: positive when the
    trial boundary lies below the solution, negative when above.
    """
    T = params.horizon_T
    if not (0.0 <= t < T):
        raise DomainError("t must lie in [0, T)")
    nodes = b.grid.nodes
    future = nodes[nodes > t]
    if future.size == 0:
        raise DomainError("boundary grid has no nodes beyond t")
    fvals = b.values[nodes > t]
    return _residual_given_future(float(b(t)), t, future, fvals, params,
                                  quad_subdivisions)


def solve_integral_equation(params: ModelParams, cfg: IeSolverConfig) -> Boundary:
    """Solve for the optimal barrier by backward marching with bisection.

    Each interior node is bracketed in [b(t_{i+1}), b_max] and bisected to
    ``root_tol``; the terminal node is pinned at zero.  Raises
    ``NoBracketError`` when the upper bound is too small and
    ``NonMonotoneError`` when the root falls materially below the
    previously solved value.
    """
    if params.mu <= 0.0:
        raise TrivialProblemError(
            "mu <= 0: immediate full payout is optimal (V = x); no boundary solve"
        )
    tg = cfg.time_grid
    if abs(tg.horizon - params.horizon_T) > 1e-12:
        raise DomainError("time grid must end at horizon_T")
    n = tg.count
    t_nodes = tg.nodes
    b = np.zeros(n)
    b_max = cfg.b_max if cfg.b_max is not None else default_b_max(params)

    patch = cfg.tail_patch_cells
    for j in range(1, patch + 1):
        b[n - 1 - j] = boundary_asymptote(t_nodes[n - 1 - j], params)

    for i in range(n - 2 - patch, -1, -1):
        future_t = t_nodes[i + 1:]
        future_b = b[i + 1:]

        def resid(c: float) -> float:
            return _residual_given_future(c, t_nodes[i], future_t, future_b,
                                          params, cfg.quad_subdivisions)

        lo, hi = b[i + 1], b_max
        f_lo, f_hi = resid(lo), resid(hi)
        if f_hi > 0.0:
            raise NoBracketError(
                f"residual still positive at b_max={b_max:g} (node {i}); "
                "increase b_max"
            )
        if f_lo <= 0.0:
            # root sits at or below the previous node's level
            if f_lo >= -_CLAMP_SLACK:
                b[i] = lo  # flat clamp within quadrature noise
                continue
            raise NonMonotoneError(
                f"root at node {i} lies below b(t_{i + 1}) "
                f"(residual {f_lo:.3e}); quadrature failure"
            )
        mid = 0.5 * (lo + hi)
        for _ in range(cfg.max_root_iters):
            mid = 0.5 * (lo + hi)
            f_mid = resid(mid)
            if f_mid > 0.0:
                lo = mid
            else:
                hi = mid
            if hi - lo < cfg.root_tol and abs(f_mid) <= 10.0 * cfg.root_tol:
                break
        b[i] = mid

    boundary = Boundary(tg, b)
    boundary.validate()
    return boundary
