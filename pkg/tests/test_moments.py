from dataclasses import replace

import numpy as np
import pytest

from alphameu import moments, ode, returns, stochastic
from alphameu.equilibrium import constants_from_theta
from alphameu.errors import GridMismatch
from alphameu.params import MeanRevertingQuadratic, table_config

from conftest import solved_pipeline

TAB = dict(lam=0.2232, omega_bar=0.0662, nu=0.1546)


def density_for(sol):
    return stochastic.stationary_density(
        MeanRevertingQuadratic(**TAB), sol.grid
    )


def test_rho_zero_premium_exact():
    cfg = table_config(gamma=5.0, rho=0.0)
    eq = constants_from_theta(cfg, -0.1)
    sol = ode.solve_prices(cfg, eq)
    um = moments.unconditional_moments(cfg, eq, sol, density_for(sol))
    assert um.premium == pytest.approx(5 * 0.0286**2 + 0.1 * 0.0286, rel=1e-10)


def test_grid_mismatch_rejected():
    cfg, eq, sol = solved_pipeline(5.0, 0.0)
    den = stochastic.stationary_density(MeanRevertingQuadratic(**TAB), ode.Grid.uniform(1000))
    with pytest.raises(GridMismatch):
        moments.unconditional_moments(cfg, eq, sol, den)


def test_sd_log_pd_invariant_under_price_scaling():
    cfg, eq, sol = solved_pipeline(5.0, 0.0)
    den = density_for(sol)
    um = moments.unconditional_moments(cfg, eq, sol, den)
    scaled = replace(
        sol, phi_s=3.0 * sol.phi_s, d_phi_s=3.0 * sol.d_phi_s, d2_phi_s=3.0 * sol.d2_phi_s
    )
    um2 = moments.unconditional_moments(cfg, eq, scaled, den)
    assert um2.sd_log_pd == pytest.approx(um.sd_log_pd, rel=1e-9)
    assert um2.pd == pytest.approx(3.0 * um.pd, rel=1e-12)


def test_premium_decreasing_in_theta_table_dynamics():
    for gamma in (1.0, 5.0, 10.0):
        vals = []
        for theta in (-0.2, 0.0, 0.2):
            cfg, eq, sol = solved_pipeline(gamma, theta)
            vals.append(moments.unconditional_moments(cfg, eq, sol, density_for(sol)).premium)
        assert vals[0] > vals[1] > vals[2]


def test_ergodic_consistency_with_time_averages():
    cfg, eq, sol = solved_pipeline(1.0, 0.0)
    den = density_for(sol)
    um = moments.unconditional_moments(cfg, eq, sol, den)

    share = MeanRevertingQuadratic(**TAB)
    edges, counts = stochastic.long_run_share_histogram(
        share, total_years=200_000.0, dt=1 / 52, n_paths=500, burn_in_years=50.0, seed=29
    )
    centers = np.clip(0.5 * (edges[:-1] + edges[1:]), sol.grid.points[0], sol.grid.points[-1])
    weights = counts / counts.sum()
    elast = np.interp(centers, sol.grid.points, sol.d_phi_s / sol.phi_s)
    phis = np.interp(centers, sol.grid.points, sol.phi_s)
    sig_w = share.sigma(centers)
    e = cfg.endowment

    prem_ta = float(
        (weights * (1.0 * e.sigma_c**2 + 1.0 * cfg.rho * e.sigma_c * sig_w * elast)).sum()
    ) - e.sigma_c * eq.theta_star
    vol2_ta = float(
        (weights * (e.sigma_c**2 + 2 * cfg.rho * e.sigma_c * sig_w * elast + (sig_w * elast) ** 2)).sum()
    )
    lnpd_ta = float((weights * np.log(phis / centers)).sum())

    n_eff = 200_000 * 2 * TAB["lam"]
    assert abs(prem_ta - um.premium) < 3 * 2e-4 / np.sqrt(n_eff) + 2e-6
    assert abs(np.sqrt(vol2_ta) - um.vol) < 3e-4
    assert abs(lnpd_ta - np.log(um.pd)) < 5e-3


def test_gamma_one_vol_identity_with_closed_form():
    cfg, eq, sol = solved_pipeline(1.0, 0.0)
    den = density_for(sol)
    um = moments.unconditional_moments(cfg, eq, sol, den)
    share = MeanRevertingQuadratic(**TAB)
    e = cfg.endowment
    sig_e = lambda x: share.sigma(x) * ode.closed_form_elasticity(
        TAB["lam"], TAB["omega_bar"], eq.delta, x
    )
    vol2 = (
        e.sigma_c**2
        + stochastic.density_moments(den, lambda x: sig_e(x) ** 2)
        + 2 * cfg.rho * e.sigma_c * stochastic.density_moments(den, sig_e)
    )
    assert um.vol == pytest.approx(np.sqrt(vol2), rel=1e-6)


def test_approx_premium_rho_zero_is_exact():
    cfg = table_config(gamma=5.0, rho=0.0)
    eq = constants_from_theta(cfg, -0.1)
    sm = moments.ShareMoments(mean=0.0662, mean_w_1mw=0.06, mean_w2_1mw=0.004)
    got = moments.approx_premium(cfg.endowment, 0.0, cfg.share, sm, 5.0, eq.delta, -0.1)
    assert got == pytest.approx(5 * 0.0286**2 + 0.1 * 0.0286, rel=1e-14)


def test_approx_pd_at_long_run_mean():
    share = MeanRevertingQuadratic(**TAB)
    sm = moments.ShareMoments(mean=TAB["omega_bar"], mean_w_1mw=0.06, mean_w2_1mw=0.004)
    assert moments.approx_pd_ratio(share, sm, 0.25) == pytest.approx(4.0)
    assert moments.approx_pd_ratio(share, sm, 0.0984) == pytest.approx(1 / 0.0984)


def test_approx_vs_exact_across_calibrated_rows():
    from alphameu import calibration as cal

    grid = ode.Grid.uniform(2000)
    share = MeanRevertingQuadratic(**TAB)
    den = stochastic.stationary_density(share, grid)
    sm = moments.ShareMoments.from_density(den)
    targets = cal.CalibrationTargets(premium_target=0.039, pd_target=21.1)
    cfg0 = table_config()
    for theta in (0.0, -0.3, -0.6):
        mr = cal.match_preferences(targets, theta, cfg0.endowment, share, sm, rho=cfg0.rho)
        cfg = table_config(gamma=mr.gamma, phi=mr.phi)
        eq = constants_from_theta(cfg, theta)
        sol = ode.solve_prices(cfg, eq, grid)
        um = moments.unconditional_moments(cfg, eq, sol, den)
        assert abs(um.premium - 0.039) < 0.0015  # approx within 0.15pp of exact
        assert abs(um.pd - moments.approx_pd_ratio(share, sm, eq.delta)) / um.pd < 0.25


def test_moments_match_conditional_returns_at_dirac_density():
    # quadrature against a density collapsed near one point reproduces the
    # conditional values there
    cfg, eq, sol = solved_pipeline(5.0, 0.0)
    x = sol.grid.points
    p = np.exp(-0.5 * ((x - 0.3) / 1e-3) ** 2)
    p /= np.trapezoid(p, x)
    den = stochastic.StationaryDensity(grid=sol.grid, p=p, normalization=1.0)
    um = moments.unconditional_moments(cfg, eq, sol, den)
    ret = returns.conditional_returns(cfg, eq, sol, 0.3)
    assert um.premium == pytest.approx(ret.premium, rel=1e-4)
    assert um.vol == pytest.approx(ret.vol_norm, rel=1e-4)
    assert um.pd == pytest.approx(ret.pd_ratio, rel=1e-4)
