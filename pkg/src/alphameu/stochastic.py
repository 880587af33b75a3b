"""Path simulation, the discounted-integral Monte-Carlo oracle, and the
stationary share density.

Three independent numerical routes live here:

* Euler-Maruyama simulation of (log endowment, share) under any constant
  drift tilt theta in [-kappa, kappa]; the tilt moves only the endowment
  drift, from mu_c to mu_c + theta*sigma_c.

* A Monte-Carlo oracle for the pricing equation: the bounded classical
  solution has the probabilistic representation

      f(x) = E int_0^inf exp(-delta t) X_t dt,   X_0 = x,

  where X follows the share dynamics with the pricing drift
  mu(x) + shift*sigma(x).  Estimates truncate at a finite horizon and
  report the hard bias bound exp(-delta T)/delta (the integrand is below
  1).  Sub-horizon steps whose discount weight can no longer change the
  double-precision accumulator are skipped; the reported bound covers the
  realized stopping time.

* The stationary density of the share via its speed measure,

      p(x) ∝ sigma(x)^-2 exp( int 2 mu/sigma^2 ),

  evaluated in log space with the inner integral accumulated outward from
  the long-run mean (the integrand blows up at both boundaries; outward
  accumulation keeps the running sums small where the density is alive,
  and the blowup only drives log p to -inf where mass vanishes).  The
  stationary forward-equation residual is checked in integrated (flux)
  form per cell.

Randomness: every path owns a counter-based stream keyed by (seed, path
index) — see :mod:`alphameu._rng` — so results do not depend on chunking
or the number of threads, and a fixed seed reproduces results bit for bit
run over run.  The hot kernels are numba-compiled when the share dynamics
are the canonical mean-reverting quadratic; a vectorized numpy twin of the
same stream/scheme covers custom dynamics and serves as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _rng
from .equilibrium import EquilibriumConstants
from .errors import (
    ConfigError,
    NormalizationFailure,
    TruncationTooLarge,
)
from .ode import Grid
from .params import MeanRevertingQuadratic, ModelConfig, ShareDynamics

CLAMP_EPS = 1e-8
DEFAULT_DT = 1.0 / 252.0
FK_HORIZON_MULTIPLE = 60.0
FK_MAX_BIAS = 1e-4
# once exp(-delta t) drops below this, further increments round to nothing
DISCOUNT_CUTOFF = 1e-18

try:
    import numba as nb

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    nb = None
    HAS_NUMBA = False


@dataclass(frozen=True)
class PathBundle:
    """Simulated (share, log endowment) paths plus the inputs that made them."""

    dt: float
    horizon: float
    omega_paths: np.ndarray
    log_c_paths: np.ndarray
    theta: float
    seed: int
    clamp_events: int


@dataclass(frozen=True)
class FkEstimate:
    estimate: float
    std_error: float
    bias_bound: float


@dataclass(frozen=True)
class StationaryDensity:
    grid: Grid
    p: np.ndarray
    normalization: float

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "p", p)


def simulate_paths(
    config: ModelConfig,
    theta: float,
    n_paths: int,
    dt: float,
    horizon: float,
    seed: int,
) -> PathBundle:
    """Euler-Maruyama paths of (log endowment, share) under the tilted prior.

    Increments are correlated Gaussians (correlation rho); the share is
    clamped to [CLAMP_EPS, 1-CLAMP_EPS] after every step and clamp events
    are counted — for admissible dynamics they do not occur in practice.
    """
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    if n_paths < 1:
        raise ConfigError(f"n_paths must be at least 1, got {n_paths}")
    if abs(theta) > config.ambiguity.kappa + 1e-12:
        raise ConfigError(
            f"|theta| = {abs(theta):.6g} exceeds the ambiguity radius {config.ambiguity.kappa}"
        )
    e = config.endowment
    share = config.share
    n_steps = int(round(horizon / dt))
    sqdt = math.sqrt(dt)
    rho = config.rho
    rho_c = math.sqrt(max(0.0, 1.0 - rho * rho))
    drift_c = (e.mu_c + theta * e.sigma_c - 0.5 * e.sigma_c**2) * dt

    omega = np.full(n_paths, share.omega_bar if isinstance(share, MeanRevertingQuadratic) else 0.5)
    log_c = np.zeros(n_paths)
    omega_paths = np.empty((n_paths, n_steps + 1))
    log_c_paths = np.empty((n_paths, n_steps + 1))
    omega_paths[:, 0] = omega
    log_c_paths[:, 0] = log_c

    states = _rng.path_states(seed, n_paths)
    clamps = 0
    for k in range(n_steps):
        states, z1, z2 = _rng.normal_pair(states)
        db1 = z1 * sqdt
        db2 = (rho * z1 + rho_c * z2) * sqdt
        log_c = log_c + drift_c + e.sigma_c * db1
        omega = omega + np.asarray(share.mu(omega)) * dt + np.asarray(share.sigma(omega)) * db2
        low = omega < CLAMP_EPS
        high = omega > 1.0 - CLAMP_EPS
        clamps += int(np.count_nonzero(low) + np.count_nonzero(high))
        if clamps:
            omega = np.clip(omega, CLAMP_EPS, 1.0 - CLAMP_EPS)
        omega_paths[:, k + 1] = omega
        log_c_paths[:, k + 1] = log_c

    return PathBundle(
        dt=dt,
        horizon=n_steps * dt,
        omega_paths=omega_paths,
        log_c_paths=log_c_paths,
        theta=theta,
        seed=seed,
        clamp_events=clamps,
    )


# --- discounted-integral Monte Carlo -----------------------------------------

if HAS_NUMBA:

    @nb.njit(inline="always")
    def _sm_next(s):
        s = s + np.uint64(0x9E3779B97F4A7C15)
        z = s
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return s, z ^ (z >> np.uint64(31))

    @nb.njit(cache=True, parallel=True)
    def _fk_kernel(x0s, lam, wbar, nu, shift, delta, dt, n_steps, n_paths, seed):
        m = x0s.shape[0]
        out = np.empty((n_paths, m))
        sqdt = np.sqrt(dt)
        inv64 = 1.0 / 18446744073709551616.0
        edt = np.exp(-delta * dt)
        two_pi = 6.283185307179586
        for p in nb.prange(n_paths):
            s = np.uint64(seed) ^ (np.uint64(p) * np.uint64(0xD1B54A32D192ED03))
            x = x0s.copy()
            acc = np.zeros(m)
            disc = 1.0
            cached = 0.0
            have = False
            for k in range(n_steps):
                if have:
                    z = cached
                    have = False
                else:
                    s, u1 = _sm_next(s)
                    s, u2 = _sm_next(s)
                    f1 = (u1 + np.uint64(1)) * inv64
                    f2 = u2 * inv64
                    r = np.sqrt(-2.0 * np.log(f1))
                    ang = two_pi * f2
                    z = r * np.cos(ang)
                    cached = r * np.sin(ang)
                    have = True
                dw = z * sqdt
                w0 = 0.5 * disc * dt
                disc *= edt
                w1 = 0.5 * disc * dt
                for j in range(m):
                    xx = x[j]
                    sg = nu * xx * (1.0 - xx)
                    acc[j] += w0 * xx
                    xx += (lam * (wbar - xx) + shift * sg) * dt + sg * dw
                    if xx < 1e-8:
                        xx = 1e-8
                    elif xx > 1.0 - 1e-8:
                        xx = 1.0 - 1e-8
                    x[j] = xx
                    acc[j] += w1 * xx
                if disc < 1e-18:
                    break
            for j in range(m):
                out[p, j] = acc[j]
        return out


def _fk_numpy(share, x0s, shift, delta, dt, n_steps, n_paths, seed):
    """Vectorized twin of the numba kernel (same streams, same scheme)."""
    m = x0s.shape[0]
    sqdt = math.sqrt(dt)
    edt = math.exp(-delta * dt)
    states = _rng.path_states(seed, n_paths)
    x = np.repeat(x0s[None, :], n_paths, axis=0)
    acc = np.zeros((n_paths, m))
    disc = 1.0
    cached = None
    for k in range(n_steps):
        if cached is None:
            states, z, cached = _rng.normal_pair(states)
        else:
            z, cached = cached, None
        dw = (z * sqdt)[:, None]
        w0 = 0.5 * disc * dt
        disc *= edt
        w1 = 0.5 * disc * dt
        sg = np.asarray(share.sigma(x))
        acc += w0 * x
        x = x + (np.asarray(share.mu(x)) + shift * sg) * dt + sg * dw
        np.clip(x, CLAMP_EPS, 1.0 - CLAMP_EPS, out=x)
        acc += w1 * x
        if disc < DISCOUNT_CUTOFF:
            break
    return acc


def feynman_kac_curve(
    config: ModelConfig,
    constants: EquilibriumConstants,
    omega0s,
    n_paths: int = 100_000,
    dt: float = DEFAULT_DT,
    horizon: float | None = None,
    seed: int = 0,
    max_truncation_bias: float = FK_MAX_BIAS,
    engine: str = "auto",
) -> list[FkEstimate]:
    """Monte-Carlo estimates of the stock ratio at several starting shares.

    All starting points ride the same per-path increments (common random
    numbers), so estimates are comparable across the curve; each one is an
    ordinary n_paths-sample mean with its own standard error.
    """
    x0s = np.atleast_1d(np.asarray(omega0s, dtype=float))
    if np.any(x0s <= 0.0) or np.any(x0s >= 1.0):
        raise ConfigError("starting shares must lie strictly inside (0,1)")
    delta = constants.delta
    if horizon is None:
        horizon = FK_HORIZON_MULTIPLE / delta
    bias_bound = math.exp(-delta * horizon) / delta
    if bias_bound > max_truncation_bias:
        raise TruncationTooLarge(
            f"horizon {horizon:.3g} leaves bias bound {bias_bound:.3e} "
            f"above {max_truncation_bias:.1e}"
        )
    n_steps = int(round(horizon / dt))
    # steps beyond the discount cutoff cannot move the accumulator
    k_stop = min(n_steps, int(math.ceil(-math.log(DISCOUNT_CUTOFF) / (delta * dt))))
    realized_bound = math.exp(-delta * (k_stop * dt)) / delta
    bias_bound = max(bias_bound, min(realized_bound, 1.0 / delta))

    shift = config.drift_shift
    share = config.share
    use_numba = HAS_NUMBA and isinstance(share, MeanRevertingQuadratic) and engine in (
        "auto",
        "numba",
    )
    if engine == "numba" and not use_numba:
        raise ConfigError("numba engine requires MeanRevertingQuadratic dynamics and numba")
    if use_numba:
        out = _fk_kernel(
            x0s,
            share.lam,
            share.omega_bar,
            share.nu,
            shift,
            delta,
            dt,
            n_steps,
            n_paths,
            seed,
        )
    else:
        out = _fk_numpy(share, x0s, shift, delta, dt, n_steps, n_paths, seed)

    ests = out.mean(axis=0)
    ses = out.std(axis=0, ddof=1) / math.sqrt(n_paths)
    return [
        FkEstimate(estimate=float(ests[j]), std_error=float(ses[j]), bias_bound=bias_bound)
        for j in range(x0s.size)
    ]


def feynman_kac_estimate(
    config: ModelConfig,
    constants: EquilibriumConstants,
    omega0: float,
    n_paths: int = 100_000,
    dt: float = DEFAULT_DT,
    horizon: float | None = None,
    seed: int = 0,
    max_truncation_bias: float = FK_MAX_BIAS,
    engine: str = "auto",
) -> FkEstimate:
    """Single-point version of :func:`feynman_kac_curve`."""
    return feynman_kac_curve(
        config,
        constants,
        [omega0],
        n_paths=n_paths,
        dt=dt,
        horizon=horizon,
        seed=seed,
        max_truncation_bias=max_truncation_bias,
        engine=engine,
    )[0]


# --- stationary density -------------------------------------------------------


def _cell_integrals(share: ShareDynamics, x: np.ndarray, panels: int = 8) -> np.ndarray:
    """Composite-Simpson integrals of 2 mu/sigma^2 over each grid cell.

    ``panels`` panels per cell, refined once where the two resolutions
    disagree; disagreement only happens in the outermost cells where the
    integrand blows up and the density is already vanishing.
    """

    def integrand(t):
        sig = np.asarray(share.sigma(t), dtype=float)
        return 2.0 * np.asarray(share.mu(t), dtype=float) / sig**2

    def simpson(lo, hi, k):
        t = np.linspace(0.0, 1.0, 2 * k + 1)
        nodes = lo[:, None] + (hi - lo)[:, None] * t[None, :]
        vals = integrand(nodes)
        w = np.ones(2 * k + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return ((hi - lo) / (6.0 * k)) * (vals * w).sum(axis=1)

    lo, hi = x[:-1], x[1:]
    coarse = simpson(lo, hi, panels)
    fine = simpson(lo, hi, 2 * panels)
    bad = np.abs(fine - coarse) > 1e-10 * (1.0 + np.abs(fine))
    if np.any(bad):
        fine[bad] = simpson(lo[bad], hi[bad], 8 * panels)
    return fine


def stationary_density(share: ShareDynamics, grid: Grid | None = None) -> StationaryDensity:
    """Normalized invariant density of the share process on the grid."""
    grid = grid or Grid.uniform()
    x = grid.points
    sig = np.asarray(share.sigma(x), dtype=float)
    if np.any(sig <= 0):
        raise NormalizationFailure("sigma must be positive on the grid")

    cells = _cell_integrals(share, x)
    anchor = (
        int(np.argmin(np.abs(x - share.omega_bar)))
        if isinstance(share, MeanRevertingQuadratic)
        else int(np.argmax(sig))
    )
    inner = np.zeros(x.size)
    inner[anchor:] = np.concatenate([[0.0], np.cumsum(cells[anchor:])])
    inner[:anchor] = -np.cumsum(cells[:anchor][::-1])[::-1]

    log_m = -2.0 * np.log(sig) + inner
    log_m -= log_m.max()
    m = np.exp(log_m)
    mass = float(np.trapezoid(m, x))
    if not (np.isfinite(mass) and mass > 0):
        raise NormalizationFailure(f"density mass {mass!r} is not a positive number")
    p = m / mass
    return StationaryDensity(grid=grid, p=p, normalization=float(np.trapezoid(p, x)))


def fpe_weak_residual(share: ShareDynamics, density: StationaryDensity) -> np.ndarray:
    """Per-cell integrated residual of the stationary forward equation.

    Integrating  -(mu p)' + (sigma^2 p)''/2  over a cell gives the
    difference of the probability flux  J = mu p - (sigma^2 p)'/2  at the
    cell faces; the exact stationary density has J = 0 everywhere.
    """
    x = density.grid.points
    p = density.p
    mu_p = np.asarray(share.mu(x), dtype=float) * p
    s2p = np.asarray(share.sigma(x), dtype=float) ** 2 * p
    h = np.diff(x)
    flux_mid = 0.5 * (mu_p[1:] + mu_p[:-1]) - 0.5 * np.diff(s2p) / h
    return np.diff(flux_mid)


def density_moments(density: StationaryDensity, f) -> float:
    """Quadrature of f against the stationary density on its grid."""
    x = density.grid.points
    vals = np.asarray(f(x), dtype=float)
    return float(np.trapezoid(vals * density.p, x))


# --- long-run histogram oracle ------------------------------------------------

if HAS_NUMBA:

    @nb.njit(cache=True, parallel=True)
    def _hist_kernel(lam, wbar, nu, dt, n_steps, burn_steps, n_paths, n_bins, seed):
        counts = np.zeros((n_paths, n_bins), dtype=np.int64)
        sqdt = np.sqrt(dt)
        inv64 = 1.0 / 18446744073709551616.0
        two_pi = 6.283185307179586
        for p in nb.prange(n_paths):
            s = np.uint64(seed) ^ (np.uint64(p) * np.uint64(0xD1B54A32D192ED03))
            x = wbar
            cached = 0.0
            have = False
            for k in range(n_steps):
                if have:
                    z = cached
                    have = False
                else:
                    s, u1 = _sm_next(s)
                    s, u2 = _sm_next(s)
                    f1 = (u1 + np.uint64(1)) * inv64
                    f2 = u2 * inv64
                    r = np.sqrt(-2.0 * np.log(f1))
                    ang = two_pi * f2
                    z = r * np.cos(ang)
                    cached = r * np.sin(ang)
                    have = True
                sg = nu * x * (1.0 - x)
                x += lam * (wbar - x) * dt + sg * z * sqdt
                if x < 1e-8:
                    x = 1e-8
                elif x > 1.0 - 1e-8:
                    x = 1.0 - 1e-8
                if k >= burn_steps:
                    b = int(x * n_bins)
                    if b >= n_bins:
                        b = n_bins - 1
                    counts[p, b] += 1
        return counts


def long_run_share_histogram(
    share: MeanRevertingQuadratic,
    total_years: float,
    dt: float = DEFAULT_DT,
    n_paths: int = 2000,
    burn_in_years: float = 50.0,
    n_bins: int = 2000,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Occupation histogram of the share over many simulated years.

    Splits the requested years over ``n_paths`` ergodic paths (each with
    its own burn-in) and bins every post-burn-in step into ``n_bins``
    uniform bins on (0,1).  Returns (bin edges, counts).
    """
    if not HAS_NUMBA:
        raise ConfigError("long_run_share_histogram requires numba")
    years_per_path = total_years / n_paths
    n_steps = int(round((years_per_path + burn_in_years) / dt))
    burn_steps = int(round(burn_in_years / dt))
    counts = _hist_kernel(
        share.lam, share.omega_bar, share.nu, dt, n_steps, burn_steps, n_paths, n_bins, seed
    )
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    return edges, counts.sum(axis=0)
