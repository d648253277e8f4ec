"""Seeded Monte Carlo engines for the dividend strategy and the stopping problem.

Two simulations share the same driver increments:

* the controlled fund X^D under the barrier strategy
  D_s = sup_{u <= s} (x + mu*u + sigma*B_u - b(t+u))^+, absorbed at 0,
  valued by the discounted dividend stream;
* the reflected stopping problem X^x = max(x, S) - Y with payoff
  exp(lam * (max(x, S_tau) - x) - r*tau) at the barrier hitting time.

Both use exact Gaussian increments and optional Brownian-bridge corrections
for within-step running maxima, barrier crossings, and absorption.  The RNG
is counter-based (Philox) keyed by (seed, block index), so estimates are
reproducible and independent of how blocks are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError
from .model import Boundary, ModelParams

#: paths simulated per RNG block; fixes the (seed, block) -> draws mapping
BLOCK_SIZE = 50_000


@dataclass(frozen=True)
class McConfig:
    """Simulation controls.

    Parameters
    ----------
    n_paths : int
        Total number of payoff samples, >= 1.
    dt : float
        Target time step; the horizon is divided into an integer number of
        equal steps no longer than this.  Must satisfy dt <= T/10.
    seed : int
        64-bit RNG seed.
    bridge_correction : bool
        Brownian-bridge refinement of running maxima, barrier crossings
        and absorption between grid points.
    antithetic : bool
        Pair each path with its sign-flipped driver.
    """

    n_paths: int = 200_000
    dt: float = 1e-3
    seed: int = 0
    bridge_correction: bool = True
    antithetic: bool = True

    def __post_init__(self) -> None:
        if self.n_paths < 1:
            raise DomainError("n_paths must be >= 1")
        if not (self.dt > 0.0):
            raise DomainError("dt must be > 0")
        if self.seed < 0:
            raise DomainError("seed must be >= 0")

    def check_against(self, params: ModelParams) -> None:
        if self.dt > params.horizon_T / 10.0:
            raise DomainError("dt must be <= T/10")


@dataclass(frozen=True)
class McEstimate:
    """Sample mean with its standard error and 95% confidence interval."""

    mean: float
    std_error: float
    ci95: tuple[float, float]
    n_paths: int
    seed: int

    @classmethod
    def from_samples(cls, samples: np.ndarray, seed: int) -> "McEstimate":
        n = samples.size
        mean = float(samples.mean())
        se = float(samples.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        return cls(mean, se, (mean - 1.96 * se, mean + 1.96 * se), n, seed)

    @classmethod
    def exact(cls, value: float, n_paths: int, seed: int) -> "McEstimate":
        return cls(float(value), 0.0, (float(value), float(value)), n_paths, seed)


@dataclass(frozen=True)
class PathRecord:
    """One simulated dividend path, for diagnostics.

    ``fund`` is the post-dividend fund X^D at the grid times, frozen after
    absorption; ``dividends`` is the cumulative payout including the
    initial lump; ``absorption_time`` is NaN when the path survives.
    """

    times: np.ndarray
    fund: np.ndarray
    dividends: np.ndarray
    absorbed: bool
    absorption_time: float


@dataclass(frozen=True)
class StoppingPathRecord:
    """One reflected path of the stopping problem, for diagnostics."""

    times: np.ndarray
    fund: np.ndarray
    local_time: np.ndarray


def _steps_for(horizon: float, dt: float) -> tuple[int, float]:
    n_steps = max(1, int(np.ceil(horizon / dt - 1e-12)))
    return n_steps, horizon / n_steps


def _block_sizes(cfg: McConfig) -> list[int]:
    n_draw = (cfg.n_paths + 1) // 2 if cfg.antithetic else cfg.n_paths
    sizes = []
    while n_draw > 0:
        sizes.append(min(BLOCK_SIZE, n_draw))
        n_draw -= sizes[-1]
    return sizes


def _bridge_max(y0: np.ndarray, y1: np.ndarray, u: np.ndarray,
                sigma: float, dt: float) -> np.ndarray:
    """Running maximum of a Brownian bridge between y0 and y1 (inverse CDF)."""
    return 0.5 * (y0 + y1 + np.sqrt((y1 - y0) ** 2 - 2.0 * sigma**2 * dt * np.log(u)))


def _duplicate(arr: np.ndarray, antithetic: bool, sign: bool = False) -> np.ndarray:
    if not antithetic:
        return arr
    return np.concatenate([arr, -arr]) if sign else np.concatenate([arr, arr])


# ---------------------------------------------------------------------------
# Stopping problem
# ---------------------------------------------------------------------------

def _stopping_samples(params: ModelParams, b: Boundary, t: float, x: float,
                      cfg: McConfig, ux_payoff: bool) -> np.ndarray:
    mu, sigma, lam, r = params.mu, params.sigma, params.lam, params.r
    horizon = params.horizon_T - t
    n_steps, dt = _steps_for(horizon, cfg.dt)
    sqdt = np.sqrt(dt)
    samples = []

    def payoff_at(s_max: np.ndarray, tau: float | np.ndarray) -> np.ndarray:
        gain = np.maximum(x, s_max) - x
        base = np.exp(lam * gain - r * tau)
        if ux_payoff:
            return -lam * (s_max > x) * base
        return base

    for bidx, m in enumerate(_block_sizes(cfg)):
        rng = np.random.Generator(np.random.Philox(key=[cfg.seed, bidx]))
        mm = 2 * m if cfg.antithetic else m
        y = np.zeros(mm)
        s = np.zeros(mm)
        payoff = np.zeros(mm)
        alive = np.ones(mm, bool)
        for k in range(n_steps):
            z = _duplicate(rng.standard_normal(m), cfg.antithetic, sign=True)
            ynew = y - mu * dt + sigma * sqdt * z
            if cfg.bridge_correction:
                u = _duplicate(rng.random(m), cfg.antithetic)
                snew = np.maximum(s, _bridge_max(y, ynew, u, sigma, dt))
            else:
                snew = np.maximum(s, ynew)
            tk1 = t + (k + 1) * dt
            X = np.maximum(x, snew) - ynew
            bk1 = b(tk1)
            hit = alive & (X >= bk1)
            payoff[hit] = payoff_at(snew[hit], (k + 1) * dt)
            alive &= ~hit
            if cfg.bridge_correction:
                # crossing between nodes: bridge hitting probability of the
                # (locally linear) barrier gap G = b - X
                uc = _duplicate(rng.random(m), cfg.antithetic)
                g0 = np.maximum(b(t + k * dt) - (np.maximum(x, s) - y), 0.0)
                g1 = np.maximum(bk1 - X, 0.0)
                p = np.exp(-2.0 * g0 * g1 / (sigma**2 * dt))
                hit2 = alive & (uc < p)
                # local time at step start, crossing time mid-step
                payoff[hit2] = payoff_at(s[hit2], (k + 0.5) * dt)
                alive &= ~hit2
            y, s = ynew, snew
            if not alive.any():
                break
        payoff[alive] = payoff_at(s[alive], horizon)
        samples.append(payoff)
    return np.concatenate(samples)


def simulate_stopping_value(params: ModelParams, b: Boundary, t: float,
                            x: float, cfg: McConfig) -> McEstimate:
    """Estimate U(t,x) = E[exp(lam (max(x,S_tau) - x) - r tau)] under the
    hitting rule tau = inf{s : X^x_s >= b(t+s)} truncated at T - t."""
    _check_point(params, cfg, t, x)
    if t >= params.horizon_T or x >= b(t):
        return McEstimate.exact(1.0, cfg.n_paths, cfg.seed)
    samples = _stopping_samples(params, b, t, x, cfg, ux_payoff=False)
    return McEstimate.from_samples(samples, cfg.seed)


def ux_representation_estimate(params: ModelParams, b: Boundary, t: float,
                               x: float, cfg: McConfig) -> McEstimate:
    """Estimate -lam * E[1{S_tau* > x} exp(lam (S_tau* - x) - r tau*)],
    the probabilistic representation of U_x(t, x)."""
    _check_point(params, cfg, t, x)
    if t >= params.horizon_T or x >= b(t):
        # tau* = 0 and S_0 = 0, so the indicator never fires
        return McEstimate.exact(0.0, cfg.n_paths, cfg.seed)
    samples = _stopping_samples(params, b, t, x, cfg, ux_payoff=True)
    return McEstimate.from_samples(samples, cfg.seed)


# ---------------------------------------------------------------------------
# Dividend strategy
# ---------------------------------------------------------------------------

def _dividend_samples(params: ModelParams, barrier: Callable, t: float,
                      x: float, cfg: McConfig,
                      recorder: list | None = None,
                      n_record: int = 0) -> np.ndarray:
    mu, sigma, r = params.mu, params.sigma, params.r
    horizon = params.horizon_T - t
    n_steps, dt = _steps_for(horizon, cfg.dt)
    sqdt = np.sqrt(dt)
    samples = []
    for bidx, m in enumerate(_block_sizes(cfg)):
        rng = np.random.Generator(np.random.Philox(key=[cfg.seed, bidx]))
        mm = 2 * m if cfg.antithetic else m
        b0 = float(barrier(t))
        D = np.full(mm, max(x - b0, 0.0))
        pv = D.copy()  # initial lump paid at s = 0
        R = np.full(mm, float(x))  # uncontrolled fund, frozen after ruin
        alive = (x - D) > 0.0
        record = recorder is not None and bidx == 0
        if record:
            nrec = min(n_record, mm)
            rec_fund = np.empty((n_steps + 1, nrec))
            rec_div = np.empty((n_steps + 1, nrec))
            rec_fund[0] = (R - D)[:nrec]
            rec_div[0] = D[:nrec]
            rec_death = np.full(nrec, np.nan)
            rec_death[~alive[:nrec]] = 0.0
        for k in range(n_steps):
            z = _duplicate(rng.standard_normal(m), cfg.antithetic, sign=True)
            u1 = _duplicate(rng.random(m), cfg.antithetic)
            u2 = _duplicate(rng.random(m), cfg.antithetic)
            Rnew = R + mu * dt + sigma * sqdt * z
            bk0 = barrier(t + k * dt)
            bk1 = barrier(t + (k + 1) * dt)
            if cfg.bridge_correction:
                # running max of the gap G = R - b; subtracting the
                # (locally linear) barrier preserves the bridge law
                mstep = _bridge_max(R - bk0, Rnew - bk1, u1, sigma, dt)
            else:
                mstep = Rnew - bk1
            Dnew = np.maximum(D, mstep)
            inc = np.where(alive, Dnew - D, 0.0)
            pv += np.exp(-r * (k + 1) * dt) * inc
            D = np.where(alive, Dnew, D)
            Xold = R - D
            Xnew = Rnew - D
            dead_node = Xnew <= 0.0
            if cfg.bridge_correction:
                p_hit = np.exp(np.minimum(
                    0.0,
                    -2.0 * np.maximum(Xold, 0.0) * np.maximum(Xnew, 0.0)
                    / (sigma**2 * dt),
                ))
                newly_dead = alive & (dead_node | (u2 < p_hit))
            else:
                newly_dead = alive & dead_node
            alive &= ~newly_dead
            R = np.where(alive, Rnew, R)
            if record:
                rec_fund[k + 1] = np.maximum((R - D)[:nrec], 0.0)
                rec_div[k + 1] = D[:nrec]
                died = newly_dead[:nrec] & np.isnan(rec_death)
                rec_death[died] = (k + 1) * dt
            if not alive.any() and not record:
                break
        if record:
            times = t + dt * np.arange(n_steps + 1)
            for j in range(nrec):
                recorder.append(PathRecord(
                    times=times,
                    fund=rec_fund[:, j].copy(),
                    dividends=rec_div[:, j].copy(),
                    absorbed=bool(np.isfinite(rec_death[j])),
                    absorption_time=float(t + rec_death[j])
                    if np.isfinite(rec_death[j]) else float("nan"),
                ))
        samples.append(pv)
    return np.concatenate(samples)


def simulate_dividend_value(params: ModelParams, b: Boundary, t: float,
                            x: float, cfg: McConfig) -> McEstimate:
    """Estimate the discounted dividend value of the barrier strategy D^b
    started at (t, x), including the initial lump (x - b(t))^+."""
    _check_point(params, cfg, t, x)
    if t >= params.horizon_T:
        return McEstimate.exact(x, cfg.n_paths, cfg.seed)
    if min(x, float(b(t))) <= 0.0:
        # immediate ruin: only the lump (x - b(t))^+ is ever paid
        return McEstimate.exact(max(x - float(b(t)), 0.0), cfg.n_paths, cfg.seed)
    b.validate()
    samples = _dividend_samples(params, b, t, x, cfg)
    return McEstimate.from_samples(samples, cfg.seed)


def simulate_suboptimal(params: ModelParams, c: float, t: float, x: float,
                        cfg: McConfig) -> McEstimate:
    """Dividend value of the constant barrier b(.) = c (truncated at T)."""
    _check_point(params, cfg, t, x)
    if c < 0.0:
        raise DomainError("constant barrier level must be >= 0")
    if t >= params.horizon_T or min(x, c) <= 0.0:
        return McEstimate.exact(max(x - c, 0.0) if c > 0.0 else x,
                                cfg.n_paths, cfg.seed)
    samples = _dividend_samples(params, lambda s: c, t, x, cfg)
    return McEstimate.from_samples(samples, cfg.seed)


def record_dividend_paths(params: ModelParams, b: Boundary, t: float, x: float,
                          cfg: McConfig, n_record: int = 10) -> list[PathRecord]:
    """Simulate and return the first ``n_record`` dividend paths."""
    _check_point(params, cfg, t, x)
    recorder: list[PathRecord] = []
    _dividend_samples(params, b, t, x, cfg, recorder=recorder, n_record=n_record)
    return recorder


def record_stopping_paths(params: ModelParams, t: float, x: float,
                          cfg: McConfig,
                          n_record: int = 10) -> list[StoppingPathRecord]:
    """Reflected paths X^x = max(x,S) - Y with their local time, to the
    horizon (no stopping), for checking the reflection identity."""
    _check_point(params, cfg, t, x)
    mu, sigma = params.mu, params.sigma
    horizon = params.horizon_T - t
    n_steps, dt = _steps_for(horizon, cfg.dt)
    rng = np.random.Generator(np.random.Philox(key=[cfg.seed, 0]))
    m = n_record
    y = np.zeros((n_steps + 1, m))
    for k in range(n_steps):
        y[k + 1] = y[k] - mu * dt + sigma * np.sqrt(dt) * rng.standard_normal(m)
    s = np.maximum.accumulate(y, axis=0)
    fund = np.maximum(x, s) - y
    local = np.maximum(x, s) - x
    times = t + dt * np.arange(n_steps + 1)
    return [StoppingPathRecord(times, fund[:, j].copy(), local[:, j].copy())
            for j in range(m)]


def _check_point(params: ModelParams, cfg: McConfig, t: float, x: float) -> None:
    cfg.check_against(params)
    if not (0.0 <= t <= params.horizon_T):
        raise DomainError("t must lie in [0, T]")
    if x < 0.0:
        raise DomainError("x must be >= 0")
