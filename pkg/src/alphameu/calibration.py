"""Data ingestion, parameter estimation, and preference matching.

The estimation pipeline mirrors how the structural parameters are meant to
be read off annual macro data:

* consumption block: deflate nominal consumption by the price index,
  divide by population, and fit the log growth of the result.  The drift
  convention is a documented toggle: with ``drift_correction`` (default)
  the reported mu_c is the arithmetic drift  mean(dlog) + sigma^2/2  so the
  GBM log drift matches the sample mean; without it mu_c is the raw mean
  log growth.

* share block: the dividend-endowment share is a fixed payout ratio times
  earnings over consumption.  (lam, omega_bar, nu) maximize the Euler
  pseudo-likelihood of the annual transitions

      d_omega_t ~ Normal( lam*(omega_bar - omega_t), nu^2 omega_t^2 (1-omega_t)^2 ),

  by Nelder-Mead simplex from several spread starting points (best of
  restarts); rho is the sample correlation between the standardized share
  residuals and the standardized log-consumption innovations.  Annual
  Euler fitting has a known mean-reversion bias of order lam^2 (the fitted
  slope estimates 1-exp(-lam), not 1-lam); the synthetic round-trip tests
  quantify it.

* ambiguity radius: the drift of the endowment is estimated with standard
  error sigma_c/sqrt(T), so a 95% band for the drift is mu_c +-
  (1.96/sqrt(T)) sigma_c.  Because the ambiguity set tilts the drift by
  theta*sigma_c with |theta| <= kappa, the band maps to the
  volatility-normalized radius  kappa = 1.96/sqrt(T)  (the drift-unit half
  width 1.96*sigma_c/sqrt(T) is also reported).

* preference matching: given a drift tilt theta_star and targets for the
  unconditional premium and price-dividend ratio, solve the 2x2 system in
  (gamma, phi) built from the closed-form proxies in
  :mod:`alphameu.moments`.  The solver is a damped Newton iteration with a
  finite-difference Jacobian, seeded by (and falling back to) the nested
  closed form: the pd proxy depends on (gamma, phi) only through delta, so
  it pins delta; the premium proxy is then linear in gamma; phi unwinds
  from delta.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from . import _rng
from .errors import (
    GapError,
    InsufficientData,
    NonpositiveError,
    NoRoot,
    OptimizerDiverged,
    ParseError,
)
from .moments import ShareMoments, approx_pd_ratio, approx_premium
from .params import EndowmentParams, MeanRevertingQuadratic

CSV_COLUMNS = ("year", "nominal_consumption", "pce_index", "population", "corporate_earnings")
DEFAULT_PAYOUT_RATIO = 0.5


@dataclass(frozen=True)
class AnnualSeries:
    year: np.ndarray
    nominal_consumption: np.ndarray
    pce_index: np.ndarray
    population: np.ndarray
    corporate_earnings: np.ndarray

    @property
    def n(self) -> int:
        return int(self.year.size)


@dataclass(frozen=True)
class DerivedSeries:
    year: np.ndarray
    real_pc_consumption: np.ndarray
    log_growth: np.ndarray
    omega: np.ndarray


@dataclass(frozen=True)
class CalibrationTargets:
    premium_target: float
    pd_target: float
    rf_target: float | None = None
    vol_target: float | None = None

    def __post_init__(self):
        if not self.premium_target > 0:
            raise NoRoot(f"premium target must be positive, got {self.premium_target}")
        if not self.pd_target > 0:
            raise NoRoot(f"pd target must be positive, got {self.pd_target}")


@dataclass(frozen=True)
class ShareEstimate:
    lam: float
    omega_bar: float
    nu: float
    rho: float
    loglik: float


@dataclass(frozen=True)
class KappaEstimate:
    multiplier: float
    drift_half_width: float
    kappa: float


@dataclass(frozen=True)
class MatchResult:
    gamma: float
    phi: float
    delta: float
    residual_premium: float
    residual_pd: float
    iterations: int
    method: str


def ingest_csv(path) -> AnnualSeries:
    """Read and validate an annual series file.

    The file must have exactly the columns year, nominal_consumption,
    pce_index, population, corporate_earnings; years must be consecutive
    and every value positive.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ParseError(f"{path} is empty")
    header = [c.strip() for c in rows[0]]
    if sorted(header) != sorted(CSV_COLUMNS):
        raise ParseError(f"expected columns {CSV_COLUMNS}, got {tuple(header)}")
    idx = {name: header.index(name) for name in CSV_COLUMNS}

    data = {name: [] for name in CSV_COLUMNS}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        for name in CSV_COLUMNS:
            raw = row[idx[name]].strip()
            try:
                val = int(raw) if name == "year" else float(raw)
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: bad {name} value {raw!r}") from exc
            data[name].append(val)

    years = np.asarray(data["year"], dtype=int)
    if years.size == 0:
        raise ParseError(f"{path} has a header but no rows")
    if np.any(np.diff(years) <= 0):
        raise GapError("years must be strictly increasing")
    gaps = np.nonzero(np.diff(years) != 1)[0]
    if gaps.size:
        raise GapError(f"missing year(s) after {years[gaps[0]]}")
    series = AnnualSeries(
        year=years,
        nominal_consumption=np.asarray(data["nominal_consumption"], dtype=float),
        pce_index=np.asarray(data["pce_index"], dtype=float),
        population=np.asarray(data["population"], dtype=float),
        corporate_earnings=np.asarray(data["corporate_earnings"], dtype=float),
    )
    for name in CSV_COLUMNS[1:]:
        vals = getattr(series, name)
        if np.any(vals <= 0):
            bad = int(years[np.argmax(vals <= 0)])
            raise NonpositiveError(f"{name} must be positive (first violation in {bad})")
    return series


def derive_series(series: AnnualSeries, payout_ratio: float = DEFAULT_PAYOUT_RATIO) -> DerivedSeries:
    """Real per-capita consumption, its log growth, and the dividend share."""
    if not 0 < payout_ratio <= 1:
        raise NonpositiveError(f"payout ratio must lie in (0,1], got {payout_ratio}")
    real_pc = series.nominal_consumption / series.pce_index / series.population
    omega = payout_ratio * series.corporate_earnings / series.nominal_consumption
    if np.any(omega >= 1.0):
        raise NonpositiveError("dividend share reached 1; check units or payout ratio")
    return DerivedSeries(
        year=series.year,
        real_pc_consumption=real_pc,
        log_growth=np.diff(np.log(real_pc)),
        omega=omega,
    )


def estimate_endowment(
    derived: DerivedSeries, drift_correction: bool = True
) -> tuple[float, float]:
    """(mu_c, sigma_c) from the log growth of real per-capita consumption."""
    g = derived.log_growth
    if g.size < 2:
        raise InsufficientData("need at least 2 growth observations")
    sigma_c = float(np.std(g, ddof=1))
    mu_c = float(np.mean(g))
    if drift_correction:
        mu_c += 0.5 * sigma_c**2
    return mu_c, sigma_c


def _euler_negloglik(params: np.ndarray, omega: np.ndarray) -> float:
    lam, wbar, nu = params
    if lam <= 0 or nu <= 0 or not 0 < wbar < 1:
        return 1e18
    w = omega[:-1]
    resid = np.diff(omega) - lam * (wbar - w)
    scale = nu * w * (1.0 - w)
    return float(
        0.5 * np.sum(resid**2 / scale**2) + np.sum(np.log(scale)) + 0.5 * w.size * math.log(2 * math.pi)
    )


def estimate_share_dynamics(derived: DerivedSeries, n_starts: int = 8) -> ShareEstimate:
    """MLE of (lam, omega_bar, nu) plus residual-correlation rho."""
    omega = derived.omega
    if omega.size < 10:
        raise InsufficientData("need at least 10 share observations")
    w = omega[:-1]
    d = np.diff(omega)
    wbar0 = float(np.mean(omega))
    nu0 = float(np.sqrt(np.mean((d / (w * (1.0 - w))) ** 2)))
    starts = [
        np.array([lam, wb, nu])
        for lam in (0.05, 0.15, 0.4, 0.8)
        for wb, nu in ((wbar0, 0.7 * nu0), (wbar0, 1.3 * nu0))
    ][:n_starts]

    best = None
    for start in starts:
        res = scipy.optimize.minimize(
            _euler_negloglik,
            start,
            args=(omega,),
            method="Nelder-Mead",
            options={"maxiter": 4000, "xatol": 1e-10, "fatol": 1e-12},
        )
        if np.isfinite(res.fun) and (best is None or res.fun < best.fun):
            best = res
    if best is None or not np.isfinite(best.fun) or best.fun >= 1e17:
        raise OptimizerDiverged("all simplex restarts failed")

    lam, wbar, nu = (float(v) for v in best.x)
    scale = nu * w * (1.0 - w)
    share_resid = (d - lam * (wbar - w)) / scale
    g = derived.log_growth
    cons_innov = (g - g.mean()) / g.std(ddof=1)
    rho = float(np.corrcoef(share_resid, cons_innov)[0, 1])
    return ShareEstimate(lam=lam, omega_bar=wbar, nu=nu, rho=rho, loglik=-float(best.fun))


def kappa_from_stderr(sigma_c: float, t_years: float, round_to: float | None = None) -> KappaEstimate:
    """Ambiguity radius from the drift-estimation confidence band.

    ``multiplier`` = 1.96/sqrt(T) is the radius in per-unit-volatility
    terms (the model's kappa); ``drift_half_width`` = 1.96*sigma_c/sqrt(T)
    is the same band in drift units.  ``round_to`` optionally snaps the
    headline kappa to a coarser step (e.g. 0.1).
    """
    if t_years < 1:
        raise InsufficientData(f"t_years must be at least 1, got {t_years}")
    mult = 1.96 / math.sqrt(t_years)
    kappa = mult if round_to is None else round(mult / round_to) * round_to
    return KappaEstimate(
        multiplier=mult, drift_half_width=mult * sigma_c, kappa=float(kappa)
    )


def _delta_of(gamma: float, phi: float, theta_star: float, endowment: EndowmentParams) -> float:
    return phi - (1.0 - gamma) * (
        endowment.mu_c + theta_star * endowment.sigma_c - 0.5 * gamma * endowment.sigma_c**2
    )


def _phi_of(gamma: float, delta: float, theta_star: float, endowment: EndowmentParams) -> float:
    return delta + (1.0 - gamma) * (
        endowment.mu_c + theta_star * endowment.sigma_c - 0.5 * gamma * endowment.sigma_c**2
    )


def match_preferences(
    targets: CalibrationTargets,
    theta_star: float,
    endowment: EndowmentParams,
    share: MeanRevertingQuadratic,
    share_moments: ShareMoments,
    rho: float = 1.0,
    rel_tol: float = 1e-12,
    max_iter: int = 60,
) -> MatchResult:
    """Solve {premium proxy = target, pd proxy = target} for (gamma, phi).

    ``rho`` is the endowment-share correlation entering the premium proxy.
    Damped Newton with a finite-difference Jacobian, seeded by the nested
    closed form; falls back to the nested solution if Newton stalls.
    """

    def residuals(gamma: float, phi: float) -> np.ndarray:
        delta = _delta_of(gamma, phi, theta_star, endowment)
        if delta <= 0:
            return np.array([np.inf, np.inf])
        return np.array(
            [
                approx_premium(endowment, rho, share, share_moments, gamma, delta, theta_star)
                - targets.premium_target,
                approx_pd_ratio(share, share_moments, delta) - targets.pd_target,
            ]
        )

    def scaled_norm(r: np.ndarray) -> float:
        return max(
            abs(r[0]) / max(1.0, abs(targets.premium_target)),
            abs(r[1]) / max(1.0, abs(targets.pd_target)),
        )

    gamma, phi, _ = _nested_solution_corr(targets, theta_star, endowment, share, share_moments, rho)
    r = residuals(gamma, phi)
    method = "newton"
    iterations = 0
    for iterations in range(1, max_iter + 1):
        if scaled_norm(r) <= rel_tol:
            break
        jac = np.empty((2, 2))
        hg = 1e-7 * max(1.0, abs(gamma))
        hp = 1e-7 * max(0.01, abs(phi))
        jac[:, 0] = (residuals(gamma + hg, phi) - residuals(gamma - hg, phi)) / (2 * hg)
        jac[:, 1] = (residuals(gamma, phi + hp) - residuals(gamma, phi - hp)) / (2 * hp)
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise NoRoot(f"singular Jacobian at gamma={gamma:.6g}, phi={phi:.6g}") from exc
        lam_damp = 1.0
        for _ in range(40):
            cand = residuals(gamma + lam_damp * step[0], phi + lam_damp * step[1])
            if np.all(np.isfinite(cand)) and scaled_norm(cand) < scaled_norm(r):
                gamma += lam_damp * step[0]
                phi += lam_damp * step[1]
                r = cand
                break
            lam_damp *= 0.5
        else:
            break
    if scaled_norm(r) > rel_tol:
        raise NoRoot(
            "Newton failed to reach tolerance",
            {
                "gamma": gamma,
                "phi": phi,
                "residual_premium": float(r[0]),
                "residual_pd": float(r[1]),
            },
        )
    delta = _delta_of(gamma, phi, theta_star, endowment)
    return MatchResult(
        gamma=float(gamma),
        phi=float(phi),
        delta=float(delta),
        residual_premium=float(r[0]),
        residual_pd=float(r[1]),
        iterations=iterations,
        method=method,
    )


def _nested_solution_corr(targets, theta_star, endowment, share, share_moments, rho):
    """Nested solve with the correlation folded into the premium slope."""
    lo, hi = 1e-6, 10.0

    def pd_gap(dd):
        return approx_pd_ratio(share, share_moments, dd) - targets.pd_target

    if pd_gap(lo) < 0 or pd_gap(hi) > 0:
        raise NoRoot(
            "pd proxy does not bracket the target on delta in [1e-6, 10]",
            {
                "pd_at_delta_lo": approx_pd_ratio(share, share_moments, lo),
                "pd_at_delta_hi": approx_pd_ratio(share, share_moments, hi),
            },
        )
    delta = float(scipy.optimize.brentq(pd_gap, lo, hi, xtol=1e-15, rtol=8.9e-16))
    unit = approx_premium(endowment, rho, share, share_moments, 1.0, delta, 0.0)
    if unit <= 0:
        raise NoRoot(
            "premium proxy has nonpositive slope in gamma",
            {"unit_premium": unit, "delta": delta},
        )
    gamma = (targets.premium_target + endowment.sigma_c * theta_star) / unit
    if gamma <= 0:
        raise NoRoot(
            "matched risk aversion is nonpositive (premium target below the tilt term)",
            {"gamma": gamma, "delta": delta, "theta_star": theta_star},
        )
    return gamma, _phi_of(gamma, delta, theta_star, endowment), delta


def synthesize_annual_data(
    endowment: EndowmentParams,
    share: MeanRevertingQuadratic,
    rho: float,
    years: int,
    seed: int,
    payout_ratio: float = DEFAULT_PAYOUT_RATIO,
    start_year: int = 1933,
    substeps: int = 12,
    pce_growth: float = 0.03,
    pop_growth: float = 0.011,
    base_consumption: float = 700.0,
    base_pce: float = 10.0,
    base_population: float = 1.26e8,
) -> AnnualSeries:
    """Generate a synthetic annual file consistent with the model.

    Paths are simulated at ``substeps`` per year and sampled annually, so
    the annual transitions carry the true (not Euler-coarsened) dynamics
    up to the fine-step discretization; ``substeps=1`` generates exactly
    the annual Euler model the estimators assume.  Deflator and population
    follow deterministic exponential paths; they cancel exactly in
    derivation but overflow float64 on multi-millennium horizons, so long
    series should set the growth rates to zero.
    """
    log_level_growth = endowment.mu_c + pce_growth + pop_growth
    if log_level_growth * years > 600.0:
        raise NonpositiveError(
            "nominal levels would overflow; use zero pce/pop growth for long series"
        )
    n_steps = years * substeps
    dt = 1.0 / substeps
    sqdt = math.sqrt(dt)
    rho_c = math.sqrt(max(0.0, 1.0 - rho * rho))
    # one stream, all pair-states precomputed: state of pair k is s0 + 2k*GAMMA
    s0 = _rng.path_states(seed, 1)[0]
    pair_states = s0 + np.uint64(2) * np.arange(n_steps, dtype=np.uint64) * _rng._GOLDEN
    _, z1s, z2s = _rng.normal_pair(pair_states)
    log_c = math.log(base_consumption)
    omega = share.omega_bar
    log_c_annual = [log_c]
    omega_annual = [omega]
    lam, wbar, nu = share.lam, share.omega_bar, share.nu
    drift_c = (endowment.mu_c - 0.5 * endowment.sigma_c**2) * dt
    for k in range(n_steps):
        db1 = z1s[k] * sqdt
        db2 = (rho * z1s[k] + rho_c * z2s[k]) * sqdt
        log_c += drift_c + endowment.sigma_c * db1
        omega += lam * (wbar - omega) * dt + nu * omega * (1.0 - omega) * db2
        omega = min(max(omega, 1e-8), 1.0 - 1e-8)
        if (k + 1) % substeps == 0:
            log_c_annual.append(log_c)
            omega_annual.append(omega)

    yrs = np.arange(start_year, start_year + years + 1)
    real_pc = np.exp(np.asarray(log_c_annual))
    t = np.arange(years + 1)
    pce = base_pce * np.exp(pce_growth * t)
    pop = base_population * np.exp(pop_growth * t)
    nominal = real_pc * pce * pop
    omega_arr = np.asarray(omega_annual)
    earnings = omega_arr * nominal / payout_ratio
    return AnnualSeries(
        year=yrs,
        nominal_consumption=nominal,
        pce_index=pce,
        population=pop,
        corporate_earnings=earnings,
    )


def write_csv(series: AnnualSeries, path) -> None:
    """Write an annual series in the ingestible format."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for i in range(series.n):
            writer.writerow(
                [
                    int(series.year[i]),
                    f"{series.nominal_consumption[i]:.10g}",
                    f"{series.pce_index[i]:.10g}",
                    f"{series.population[i]:.10g}",
                    f"{series.corporate_earnings[i]:.10g}",
                ]
            )
