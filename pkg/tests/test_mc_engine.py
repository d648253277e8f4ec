"""Monte Carlo engines: reproducibility, trivial cases, path invariants,
variance reduction, and internal consistency."""

import numpy as np
import pytest

import divbar as d


MC_SMALL = d.McConfig(n_paths=20_000, dt=5e-3, seed=11)


def test_config_validation(params):
    with pytest.raises(d.DomainError):
        d.McConfig(n_paths=0)
    with pytest.raises(d.DomainError):
        d.McConfig(dt=0.0)
    with pytest.raises(d.DomainError):
        d.McConfig(dt=0.5).check_against(params)  # dt > T/10


def test_estimate_invariants():
    est = d.McEstimate.from_samples(np.array([1.0, 2.0, 3.0, 4.0]), seed=5)
    assert est.std_error >= 0.0
    assert est.ci95[0] == pytest.approx(est.mean - 1.96 * est.std_error)
    assert est.ci95[1] == pytest.approx(est.mean + 1.96 * est.std_error)
    assert est.n_paths == 4 and est.seed == 5


def test_reproducibility(params, ie_boundary):
    a = d.simulate_stopping_value(params, ie_boundary, 0.0, 0.5, MC_SMALL)
    b = d.simulate_stopping_value(params, ie_boundary, 0.0, 0.5, MC_SMALL)
    assert a == b
    a = d.simulate_dividend_value(params, ie_boundary, 0.0, 0.5, MC_SMALL)
    b = d.simulate_dividend_value(params, ie_boundary, 0.0, 0.5, MC_SMALL)
    assert a == b


def test_stopping_trivial_cases(params, ie_boundary):
    est = d.simulate_stopping_value(params, ie_boundary, 1.0, 0.5, MC_SMALL)
    assert est.mean == 1.0 and est.std_error == 0.0
    est = d.simulate_stopping_value(params, ie_boundary, 0.0, 3.5, MC_SMALL)
    assert est.mean == 1.0 and est.std_error == 0.0


def test_stopping_respects_lower_bound(params, ie_boundary):
    est = d.simulate_stopping_value(params, ie_boundary, 0.25, 0.7, MC_SMALL)
    assert est.mean >= 1.0 - 3.0 * est.std_error


def test_dividend_trivial_cases(params, ie_boundary):
    grid = ie_boundary.grid
    zero_barrier = d.Boundary.constant(grid, 0.0)
    est = d.simulate_dividend_value(params, zero_barrier, 0.0, 0.8, MC_SMALL)
    assert est.mean == 0.8 and est.std_error == 0.0
    # x = 0 is absorbed immediately
    est = d.simulate_dividend_value(params, ie_boundary, 0.0, 0.0, MC_SMALL)
    assert est.mean == 0.0 and est.std_error == 0.0
    # t = T pays out everything
    est = d.simulate_dividend_value(params, ie_boundary, 1.0, 0.7, MC_SMALL)
    assert est.mean == 0.7 and est.std_error == 0.0


def test_suboptimal_trivial_and_domain(params):
    est = d.simulate_suboptimal(params, 0.0, 0.0, 0.9, MC_SMALL)
    assert est.mean == 0.9 and est.std_error == 0.0
    with pytest.raises(d.DomainError):
        d.simulate_suboptimal(params, -0.5, 0.0, 0.9, MC_SMALL)
    with pytest.raises(d.DomainError):
        d.simulate_suboptimal(params, 0.5, -0.1, 0.9, MC_SMALL)


def test_antithetic_reduces_std_error(params, ie_boundary):
    plain = d.McConfig(n_paths=40_000, dt=5e-3, seed=11, antithetic=False)
    anti = d.McConfig(n_paths=40_000, dt=5e-3, seed=11, antithetic=True)
    e_plain = d.simulate_stopping_value(params, ie_boundary, 0.0, 0.5, plain)
    e_anti = d.simulate_stopping_value(params, ie_boundary, 0.0, 0.5, anti)
    assert e_anti.std_error < e_plain.std_error
    combined = np.hypot(e_plain.std_error, e_anti.std_error)
    assert abs(e_plain.mean - e_anti.mean) <= 3.0 * combined


def test_dt_refinement_stability(params, ie_boundary):
    coarse = d.McConfig(n_paths=40_000, dt=1e-2, seed=17)
    fine = d.McConfig(n_paths=40_000, dt=5e-3, seed=17)
    for sim in (d.simulate_stopping_value, d.simulate_dividend_value):
        e1 = sim(params, ie_boundary, 0.0, 0.5, coarse)
        e2 = sim(params, ie_boundary, 0.0, 0.5, fine)
        combined = np.hypot(e1.std_error, e2.std_error)
        assert abs(e1.mean - e2.mean) <= 2.0 * combined


def test_path_record_invariants(params, ie_boundary):
    cfg = d.McConfig(n_paths=64, dt=5e-3, seed=3, bridge_correction=False,
                     antithetic=False)
    paths = d.record_dividend_paths(params, ie_boundary, 0.0, 0.5, cfg,
                                    n_record=64)
    assert len(paths) == 64
    absorbed_seen = False
    for p in paths:
        assert np.all(np.diff(p.dividends) >= -1e-12)  # D non-decreasing
        assert np.all(p.fund >= -1e-12)
        # admissibility: each increment bounded by the pre-jump fund value
        inc = np.diff(p.dividends)
        pre = p.fund[:-1] + inc  # fund just before the payout
        assert np.all(inc <= pre + 1e-9)
        if p.absorbed:
            absorbed_seen = True
            assert 0.0 <= p.absorption_time <= params.horizon_T
            k = np.searchsorted(p.times, p.absorption_time)
            # frozen after absorption
            assert np.ptp(p.dividends[k:]) == 0.0
        else:
            assert np.isnan(p.absorption_time)
    assert absorbed_seen  # at x=0.5 some paths must hit ruin within T


def test_reflection_identity_on_paths(params):
    cfg = d.McConfig(n_paths=32, dt=1e-3, seed=9)
    paths = d.record_stopping_paths(params, 0.0, 0.4, cfg, n_record=32)
    step_scale = params.sigma * np.sqrt(cfg.dt)
    for p in paths:
        inc = np.diff(p.local_time)
        assert np.all(inc >= -1e-12)  # local time non-decreasing
        # increases only when the reflected path is at 0 (one-step slack)
        grows = inc > 1e-12
        near_zero = np.minimum(p.fund[:-1], p.fund[1:]) <= 4.0 * step_scale
        assert np.all(near_zero[grows])
        assert np.all(p.fund >= -1e-12)


def test_ux_representation_consistency(params, ie_boundary, pde_solution):
    U, _, _ = pde_solution
    # t = T and deep stopping region: exactly zero
    est = d.ux_representation_estimate(params, ie_boundary, 1.0, 0.5, MC_SMALL)
    assert est.mean == 0.0 and est.std_error == 0.0
    est = d.ux_representation_estimate(params, ie_boundary, 0.0, 3.9, MC_SMALL)
    assert est.mean == 0.0
    # at x = 0: U_x(t,0) = -lam U(t,0)
    e_ux = d.ux_representation_estimate(params, ie_boundary, 0.0, 0.0, MC_SMALL)
    e_u = d.simulate_stopping_value(params, ie_boundary, 0.0, 0.0, MC_SMALL)
    combined = params.lam * np.hypot(e_ux.std_error / params.lam,
                                     e_u.std_error)
    assert abs(e_ux.mean + params.lam * e_u.mean) <= 3.0 * combined
    # bounded by the exponential-moment envelope
    env = params.lam * d.exp_max_moment(params.horizon_T, 0.5, params)
    e_mid = d.ux_representation_estimate(params, ie_boundary, 0.0, 0.5, MC_SMALL)
    assert -env <= e_mid.mean <= 0.0


def test_ux_matches_pde_slope(params, ie_boundary, pde_solution):
    U, _, _ = pde_solution
    dx = np.diff(U.space_grid.nodes)[0]
    for t, x in ((0.0, 0.5), (0.0, 1.0), (0.5, 0.25)):
        est = d.ux_representation_estimate(params, ie_boundary, t, x, MC_SMALL)
        k = int(round(t / np.diff(U.time_grid.nodes)[0]))
        j = int(round(x / dx))
        slope = (U.values[k, j + 1] - U.values[k, j - 1]) / (2.0 * dx)
        tol = max(3.0 * est.std_error, 5.0 * dx)
        assert abs(est.mean - slope) <= tol


def test_point_validation(params, ie_boundary):
    with pytest.raises(d.DomainError):
        d.simulate_stopping_value(params, ie_boundary, -0.1, 0.5, MC_SMALL)
    with pytest.raises(d.DomainError):
        d.simulate_dividend_value(params, ie_boundary, 0.0, -0.5, MC_SMALL)
