"""Problem parameters, grids, and probability kernels.

The driving path is Y_s = -mu*s + sigma*B_s with running maximum
S_t = sup_{s<=t} Y_s.  The process X^x_t = max(x, S_t) - Y_t is a Brownian
motion with drift +mu and variance sigma^2 reflected at zero, and
L^0_t = max(x, S_t) - x is its local time at zero.  All kernels below are
closed forms built from the reflection principle; each one is
cross-checked in the test suite against an independent quadrature or
Monte Carlo oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_ndtr, ndtr

from .errors import DomainError, KernelOverflowError

_SQRT_2PI = np.sqrt(2.0 * np.pi)
_EXP_CAP = 700.0  # exp() overflows float64 slightly above 709


def _phi(u):
    return np.exp(-0.5 * u * u) / _SQRT_2PI


def _exp_guarded(arg):
    """exp() that raises instead of silently returning inf."""
    if np.any(np.asarray(arg) > _EXP_CAP):
        raise KernelOverflowError(
            f"exponent {np.max(arg):.1f} exceeds representable range"
        )
    return np.exp(arg)


@dataclass(frozen=True)
class ModelParams:
    """Constants of the dividend problem.

    Parameters
    ----------
    mu : float
        Drift of the uncontrolled fund per unit time.
    sigma : float
        Volatility per square-root unit time, > 0.
    r : float
        Discount rate, >= 0.
    horizon_T : float
        Terminal time, > 0.

    The creation rate ``lam = 2*mu/sigma**2`` is derived on construction.
    ``mu <= 0`` is allowed here (the value function is then trivially x);
    solver entry points reject it separately.
    """

    mu: float
    sigma: float
    r: float
    horizon_T: float
    lam: float = field(init=False)

    def __post_init__(self) -> None:
        if not (self.sigma > 0.0):
            raise DomainError(f"sigma must be > 0, got {self.sigma}")
        if not (self.horizon_T > 0.0):
            raise DomainError(f"horizon_T must be > 0, got {self.horizon_T}")
        if self.r < 0.0:
            raise DomainError(f"r must be >= 0, got {self.r}")
        object.__setattr__(self, "lam", 2.0 * self.mu / self.sigma**2)


def lambda_of(params: ModelParams) -> float:
    """Creation rate 2*mu/sigma^2 of the reflected stopping problem."""
    return params.lam


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing time nodes from 0 to the horizon."""

    nodes: np.ndarray

    def __post_init__(self) -> None:
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < 3:
            raise DomainError("time grid needs at least 3 nodes")
        if nodes[0] != 0.0:
            raise DomainError("time grid must start at 0")
        if np.any(np.diff(nodes) <= 0.0):
            raise DomainError("time grid must be strictly increasing")

    @classmethod
    def uniform(cls, horizon_T: float, count: int) -> "TimeGrid":
        return cls(np.linspace(0.0, horizon_T, count))

    @property
    def count(self) -> int:
        return self.nodes.size

    @property
    def horizon(self) -> float:
        return float(self.nodes[-1])


@dataclass(frozen=True)
class SpaceGrid:
    """Strictly increasing fund levels from 0 to x_max."""

    nodes: np.ndarray

    def __post_init__(self) -> None:
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < 3:
            raise DomainError("space grid needs at least 3 nodes")
        if nodes[0] != 0.0:
            raise DomainError("space grid must start at 0")
        if np.any(np.diff(nodes) <= 0.0):
            raise DomainError("space grid must be strictly increasing")

    @classmethod
    def uniform(cls, x_max: float, count: int) -> "SpaceGrid":
        return cls(np.linspace(0.0, x_max, count))

    @property
    def count(self) -> int:
        return self.nodes.size

    @property
    def x_max(self) -> float:
        return float(self.nodes[-1])


@dataclass(frozen=True)
class Boundary:
    """A barrier level b(t) sampled on a time grid, piecewise linear in t.

    Construction checks shape, finiteness and non-negativity only;
    ``validate()`` enforces the full solution invariants (non-increasing,
    b(T) = 0, positive before T) and is called on solver output.
    """

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != self.grid.nodes.shape:
            raise DomainError("boundary values must match the time grid")
        if not np.all(np.isfinite(values)):
            raise DomainError("boundary values must be finite")
        if np.any(values < 0.0):
            raise DomainError("boundary values must be non-negative")

    def __call__(self, t):
        return np.interp(t, self.grid.nodes, self.values)

    @classmethod
    def constant(cls, grid: TimeGrid, level: float) -> "Boundary":
        return cls(grid, np.full(grid.count, float(level)))

    def validate(self, mono_tol: float = 1e-9) -> None:
        if np.any(np.diff(self.values) > mono_tol):
            raise DomainError("boundary is not non-increasing in time")
        if self.values[-1] != 0.0:
            raise DomainError("boundary must vanish at the horizon")
        if np.any(self.values[:-1] <= 0.0):
            raise DomainError("boundary must be positive before the horizon")


# ---------------------------------------------------------------------------
# Kernels for S_t = sup_{s<=t} (-mu*s + sigma*B_s)
# ---------------------------------------------------------------------------

def running_max_tail(t, z, params: ModelParams):
    """P(S_t >= z), two-term Gaussian closed form.

    Reflection principle for a Brownian motion with drift -mu:
    P(S_t >= z) = Phi(-(z + mu t)/(sigma sqrt t))
                + exp(-lam z) * Phi(-(z - mu t)/(sigma sqrt t)).
    """
    t = np.asarray(t, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(t < 0.0):
        raise DomainError("t must be >= 0")
    if np.any(z < 0.0):
        raise DomainError("z must be >= 0")
    mu, sigma, lam = params.mu, params.sigma, params.lam
    with np.errstate(divide="ignore", invalid="ignore"):
        v = sigma * np.sqrt(t)
        tail = ndtr(-(z + mu * t) / v) + np.exp(-lam * z) * ndtr(-(z - mu * t) / v)
    # t == 0: S_0 = 0, so the tail is the indicator {z <= 0}
    tail = np.where(t == 0.0, (z <= 0.0).astype(float), tail)
    if tail.ndim == 0:
        return float(tail)
    return tail


def running_max_tail_integral(t: float, z: float, params: ModelParams) -> float:
    """P(S_t >= z) as a first-passage time integral.

    Integrates z/(sigma sqrt(2 pi s^3)) * exp(-(z + mu s)^2 / (2 sigma^2 s))
    over s in (0, t].  Slower than the closed form; retained as an
    independent evaluation route.
    """
    from scipy.integrate import quad

    if t < 0.0 or z < 0.0:
        raise DomainError("t and z must be >= 0")
    if t == 0.0:
        return 1.0 if z <= 0.0 else 0.0
    if z == 0.0:
        return 1.0
    mu, sigma = params.mu, params.sigma

    def integrand(s: float) -> float:
        return z / (sigma * np.sqrt(2.0 * np.pi * s**3)) * np.exp(
            -((z + mu * s) ** 2) / (2.0 * sigma**2 * s)
        )

    val, _ = quad(integrand, 0.0, t, limit=200, epsabs=1e-12, epsrel=1e-10)
    return float(val)


def running_max_atom(t, params: ModelParams) -> float:
    """P(S_t = 0): one at t = 0, zero for t > 0 (zero is regular)."""
    if t < 0.0:
        raise DomainError("t must be >= 0")
    return 1.0 if t == 0.0 else 0.0


def running_max_density(t, z, params: ModelParams):
    """Density of S_t at z > 0.

    Differentiating the tail and collapsing the Girsanov factor gives
    f(z) = 2 phi((z + mu t)/v)/v + lam exp(-lam z) Phi(-(z - mu t)/v)
    with v = sigma sqrt(t).  The atom at zero is exposed separately by
    ``running_max_atom``.
    """
    t = np.asarray(t, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(t <= 0.0):
        raise DomainError("t must be > 0")
    if np.any(z < 0.0):
        raise DomainError("z must be >= 0")
    mu, sigma, lam = params.mu, params.sigma, params.lam
    v = sigma * np.sqrt(t)
    dens = 2.0 * _phi((z + mu * t) / v) / v + lam * np.exp(-lam * z) * ndtr(
        -(z - mu * t) / v
    )
    if dens.ndim == 0:
        return float(dens)
    return dens


def exp_max_moment(t, x, params: ModelParams):
    """E[exp(lam * (max(x, S_t) - x))].

    Splitting at {S_t <= x} and integrating the density against
    exp(lam(z - x)) in closed form (the drift lam = 2 mu / sigma^2 makes
    the Girsanov exponents cancel) yields

        Phi((x + mu t)/v)
        + exp(-lam x) * [Phi(-u0) (1 - lam v u0) + lam v phi(u0)],

    with v = sigma sqrt(t) and u0 = (x - mu t)/v.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(t < 0.0):
        raise DomainError("t must be >= 0")
    if np.any(x < 0.0):
        raise DomainError("x must be >= 0")
    mu, sigma, lam = params.mu, params.sigma, params.lam
    with np.errstate(divide="ignore", invalid="ignore"):
        v = sigma * np.sqrt(t)
        u0 = (x - mu * t) / v
        damp = _exp_guarded(np.minimum(-lam * x, _EXP_CAP))
        val = ndtr((x + mu * t) / v) + damp * (
            ndtr(-u0) * (1.0 - lam * v * u0) + lam * v * _phi(u0)
        )
    val = np.where(t == 0.0, 1.0, val)
    if val.ndim == 0:
        return float(val)
    return val


def reflected_survival(s, x, c, params: ModelParams):
    """P(X^x_s >= c) for the zero-reflected process X^x_s = max(x,S_s) - Y_s.

    Splitting at {S_s <= x} (no reflection yet) and {S_s > x} and applying
    the reflection principle to the joint law of (S_s, Y_s) collapses to

        Phi((x - c + mu s)/v) + exp(lam c) Phi(-(x + c + mu s)/v),

    v = sigma sqrt(s) -- the transition law of Brownian motion with drift
    +mu reflected at the origin.  The second term is evaluated in
    log-space so large lam*c cannot overflow.
    """
    s = np.asarray(s, dtype=float)
    x = np.asarray(x, dtype=float)
    c = np.asarray(c, dtype=float)
    if np.any(s < 0.0):
        raise DomainError("s must be >= 0")
    if np.any(x < 0.0):
        raise DomainError("x must be >= 0")
    if np.any(c < 0.0):
        raise DomainError("c must be >= 0")
    mu, sigma, lam = params.mu, params.sigma, params.lam
    with np.errstate(divide="ignore", invalid="ignore"):
        v = sigma * np.sqrt(s)
        term2 = _exp_guarded(lam * c + log_ndtr(-(x + c + mu * s) / v))
        val = ndtr((x - c + mu * s) / v) + term2
    val = np.where(s == 0.0, (x >= c).astype(float), val)
    val = np.clip(val, 0.0, 1.0)
    if val.ndim == 0:
        return float(val)
    return val
