"""Shared fixtures: benchmark parameters and the expensive solves, computed
once per session and reused across unit and acceptance tests."""

import numpy as np
import pytest

import divbar as d

BENCH = dict(mu=0.5, sigma=1.0, r=0.05, horizon_T=1.0)


@pytest.fixture(scope="session")
def params():
    return d.ModelParams(**BENCH)


@pytest.fixture(scope="session")
def ie_boundary(params):
    """Integral-equation boundary on the default 401-node grid."""
    tg = d.TimeGrid.uniform(params.horizon_T, 401)
    return d.solve_integral_equation(params, d.IeSolverConfig(time_grid=tg))


@pytest.fixture(scope="session")
def ie_boundary_fine(params):
    """Integral-equation boundary with time step halved."""
    tg = d.TimeGrid.uniform(params.horizon_T, 801)
    return d.solve_integral_equation(params, d.IeSolverConfig(time_grid=tg))


@pytest.fixture(scope="session")
def pde_solution(params):
    """Default-grid PDE solve: (U, V, extracted boundary)."""
    cfg = d.default_pde_config(params, 401, 801)
    U = d.solve_U(params, cfg)
    V = d.integrate_V(U)
    b = d.extract_boundary(U, params, cfg.boundary_extract_tol)
    return U, V, b


@pytest.fixture(scope="session")
def pde_solution_be(params):
    """Default-grid solve with the monotone implicit scheme, whose discrete
    solution satisfies the shape invariants to machine precision."""
    cfg = d.default_pde_config(params, 401, 801)
    cfg = d.PdeConfig(time_grid=cfg.time_grid, space_grid=cfg.space_grid,
                      scheme="implicit-projected")
    U = d.solve_U(params, cfg)
    V = d.integrate_V(U)
    b = d.extract_boundary(U, params, cfg.boundary_extract_tol)
    return U, V, b


@pytest.fixture(scope="session")
def pde_solution_fine(params):
    """PDE solve with both steps halved, for self-convergence checks."""
    cfg = d.default_pde_config(params, 801, 1601)
    U = d.solve_U(params, cfg)
    V = d.integrate_V(U)
    b = d.extract_boundary(U, params, cfg.boundary_extract_tol)
    return U, V, b


def z_score(est, reference):
    """Deviation of an McEstimate from a reference, in standard errors."""
    if est.std_error == 0.0:
        return 0.0 if est.mean == reference else np.inf
    return (est.mean - reference) / est.std_error
