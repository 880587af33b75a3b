"""Degenerate two-point boundary-value solver for the price-endowment ratio.

The stock price-endowment ratio f solves, on (0,1),

    1/2 * sigma(x)^2 f''(x) + [mu(x) + shift * sigma(x)] f'(x) - delta f(x) + x = 0,

with shift = (1-gamma)*rho*sigma_c.  The diffusion coefficient vanishes at
both endpoints, so the equation is not uniformly elliptic and no boundary
values can be imposed; instead the equation itself degenerates to the
first-order relation  mu(x) f'(x) - delta f(x) + x = 0  as sigma -> 0, and
that relation closes the discrete system at the first and last grid points.

Discretization (uniform interior grid x_i = i*h, h = 1/(n+1)):

* f'' by central second differences everywhere;
* f' by central differences where the cell Peclet number |b| h / a is at
  most 2 (a = sigma^2/2, b the full drift), switching to first-order
  upwinding where diffusion is too weak to stabilize the central stencil
  (an O(sqrt(h))-wide band at each end);
* boundary rows use second-order one-sided differences in the degenerate
  relation.

The upwind band keeps the scheme monotone where the central stencil would
carry a persistent odd-even mode (second-order one-sided stencils are no
cure: they introduce a parasitic root near 3).  The price is that global
convergence on problems with curvature inside the band is O(h^1.5)-ish,
about a factor 2.9 per halving; in the diffusion-dominated interior the
scheme is genuinely second order, which is what the convergence checks
measure on a manufactured solution that is linear inside the bands.

The matrix has bandwidth two (tridiagonal plus the two closure rows), so a
direct banded solve is O(n) and deterministic.  Reported first and second
derivatives reuse the solve stencils, which makes the post-solve residual
check an assembly/consistency check rather than a rediscretization.

The human-capital ratio is the reflection  phi_h = 1/delta - phi_s  and is
verified against its own equation (source 1-x) at the same tolerance.  For
shift = 0 with mean-reverting-quadratic dynamics the exact solution

    phi_s(x) = x/(lam+delta) + lam*omega_bar/(delta*(lam+delta))

is linear, every stencil above is exact on it, and the solver reproduces it
to rounding error; that closed form is exported as the oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .equilibrium import EquilibriumConstants
from .errors import ConfigError, OutOfRange, ResidualTooLarge, SingularSystem
from .params import ModelConfig, ShareDynamics

DEFAULT_GRID_N = 2000
DEFAULT_RESIDUAL_TOL = 1e-8
# switch f' to upwinding when |b| h / (sigma^2/2) exceeds this
PECLET_LIMIT = 2.0


@dataclass(frozen=True)
class Grid:
    """Strictly increasing interior points of (0,1)."""

    points: np.ndarray
    kind: str = "uniform"

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)  # copy: freezing must not touch caller arrays
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if pts.ndim != 1 or pts.size < 16:
            raise ConfigError("grid needs at least 16 interior points")
        if pts[0] <= 0.0 or pts[-1] >= 1.0:
            raise ConfigError("grid points must lie strictly inside (0,1)")
        if not np.all(np.diff(pts) > 0):
            raise ConfigError("grid points must be strictly increasing")

    @property
    def n(self) -> int:
        return int(self.points.size)

    @property
    def h(self) -> float:
        return float(self.points[1] - self.points[0])

    @property
    def is_uniform(self) -> bool:
        d = np.diff(self.points)
        return bool(np.allclose(d, d[0], rtol=1e-12, atol=0.0))

    @classmethod
    def uniform(cls, n: int = DEFAULT_GRID_N) -> "Grid":
        h = 1.0 / (n + 1)
        return cls(points=h * np.arange(1, n + 1), kind="uniform")


@dataclass(frozen=True)
class PriceSolution:
    """Grid-sampled price-endowment ratios and their solve-stencil derivatives.

    Arrays are frozen after construction; instances are safe to share.
    """

    grid: Grid
    phi_s: np.ndarray
    d_phi_s: np.ndarray
    d2_phi_s: np.ndarray
    delta: float
    max_residual: float
    phi_h: np.ndarray | None = None

    def __post_init__(self):
        for name in ("phi_s", "d_phi_s", "d2_phi_s", "phi_h"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.array(arr, dtype=float)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    def _interp(self, values: np.ndarray, omega) -> np.ndarray | float:
        om = np.asarray(omega, dtype=float)
        pts = self.grid.points
        if np.any(om < pts[0]) or np.any(om > pts[-1]):
            raise OutOfRange(
                f"omega outside grid hull [{pts[0]:.6g}, {pts[-1]:.6g}]"
            )
        out = np.interp(om, pts, values)
        return float(out) if np.isscalar(omega) else out

    def phi_s_at(self, omega):
        return self._interp(self.phi_s, omega)

    def phi_h_at(self, omega):
        if self.phi_h is None:
            raise ConfigError("phi_h not populated; call phi_h_from_phi_s first")
        return self._interp(self.phi_h, omega)

    def d_phi_s_at(self, omega):
        return self._interp(self.d_phi_s, omega)

    def d2_phi_s_at(self, omega):
        return self._interp(self.d2_phi_s, omega)


def solve_linear_ratio(
    share: ShareDynamics,
    delta: float,
    drift_shift: float,
    grid: Grid,
    source: np.ndarray | None = None,
    residual_tol: float = DEFAULT_RESIDUAL_TOL,
    check_bounds: bool = True,
) -> PriceSolution:
    """Solve  a f'' + b f' - delta f + source = 0  with degenerate closure rows.

    ``source`` defaults to the stock cash-flow share (the grid points
    themselves).  ``check_bounds`` enforces 0 < f < 1/delta, which is the
    theoretical envelope when the source is a share in (0,1); manufactured
    sources used in convergence studies switch it off.
    """
    if not delta > 0:
        raise ConfigError(f"delta must be positive, got {delta}")
    if not grid.is_uniform:
        raise ConfigError("the banded discretization requires a uniform grid")
    x = grid.points
    n = grid.n
    h = grid.h
    src = x.copy() if source is None else np.asarray(source, dtype=float)
    if src.shape != x.shape:
        raise ConfigError("source must match the grid shape")

    sig = np.asarray(share.sigma(x), dtype=float)
    a = 0.5 * sig**2
    b = np.asarray(share.mu(x), dtype=float) + drift_shift * sig
    mu_only = np.asarray(share.mu(x), dtype=float)

    # f' stencil weights per row over offsets (-1, 0, +1): central by
    # default, first-order one-sided against the drift in drift-dominated cells
    upwind = np.abs(b) * h > PECLET_LIMIT * a
    w_lo = np.where(upwind, np.where(b > 0, 0.0, -1.0 / h), -0.5 / h)
    w_di = np.where(upwind, np.where(b > 0, -1.0 / h, 1.0 / h), 0.0)
    w_up = np.where(upwind, np.where(b > 0, 1.0 / h, 0.0), 0.5 / h)

    lo = a / h**2 + b * w_lo
    di = -2.0 * a / h**2 + b * w_di - delta
    up = a / h**2 + b * w_up

    ab = np.zeros((5, n))
    rhs = -src
    ab[3, 0 : n - 2] = lo[1 : n - 1]
    ab[2, 1 : n - 1] = di[1 : n - 1]
    ab[1, 2:n] = up[1 : n - 1]
    # degenerate closure rows: mu f' - delta f + source = 0, one-sided second order
    c0 = mu_only[0] / (2.0 * h)
    ab[2, 0] = -3.0 * c0 - delta
    ab[1, 1] = 4.0 * c0
    ab[0, 2] = -c0
    cn = mu_only[-1] / (2.0 * h)
    ab[2, n - 1] = 3.0 * cn - delta
    ab[3, n - 2] = -4.0 * cn
    ab[4, n - 3] = cn

    try:
        f = scipy.linalg.solve_banded((2, 2), ab, rhs)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SingularSystem(f"banded solve failed: {exc}") from exc
    if not np.all(np.isfinite(f)):
        raise SingularSystem("banded solve produced non-finite values")

    d1 = np.empty(n)
    d1[1 : n - 1] = (
        w_lo[1 : n - 1] * f[0 : n - 2]
        + w_di[1 : n - 1] * f[1 : n - 1]
        + w_up[1 : n - 1] * f[2:n]
    )
    d1[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
    d1[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * h)

    d2 = np.empty(n)
    d2[1 : n - 1] = (f[0 : n - 2] - 2.0 * f[1 : n - 1] + f[2:n]) / h**2
    d2[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h**2
    d2[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / h**2

    resid = a * d2 + b * d1 - delta * f + src
    resid[0] = mu_only[0] * d1[0] - delta * f[0] + src[0]
    resid[-1] = mu_only[-1] * d1[-1] - delta * f[-1] + src[-1]
    scale = max(1.0, delta * float(np.max(np.abs(f))))
    max_resid = float(np.max(np.abs(resid)))
    if max_resid > residual_tol * scale:
        raise ResidualTooLarge(
            f"max residual {max_resid:.3e} exceeds {residual_tol:.1e} * {scale:.3g}"
        )
    if check_bounds and (f.min() <= 0.0 or f.max() >= 1.0 / delta):
        raise ResidualTooLarge(
            f"solution violates the (0, 1/delta) envelope: range "
            f"[{f.min():.6g}, {f.max():.6g}] with 1/delta = {1.0 / delta:.6g}"
        )

    return PriceSolution(
        grid=grid, phi_s=f, d_phi_s=d1, d2_phi_s=d2, delta=delta, max_residual=max_resid
    )


def solve_phi_s(
    config: ModelConfig,
    constants: EquilibriumConstants,
    grid: Grid | None = None,
    residual_tol: float = DEFAULT_RESIDUAL_TOL,
) -> PriceSolution:
    """Stock price-endowment ratio for a validated configuration."""
    grid = grid or Grid.uniform()
    return solve_linear_ratio(
        config.share, constants.delta, config.drift_shift, grid, residual_tol=residual_tol
    )


def phi_h_from_phi_s(
    config: ModelConfig,
    solution: PriceSolution,
    residual_tol: float = DEFAULT_RESIDUAL_TOL,
) -> PriceSolution:
    """Complete the human-capital ratio and verify it solves its own equation."""
    x = solution.grid.points
    n = solution.grid.n
    delta = solution.delta
    phi_h = 1.0 / delta - solution.phi_s

    sig = np.asarray(config.share.sigma(x), dtype=float)
    a = 0.5 * sig**2
    b = np.asarray(config.share.mu(x), dtype=float) + config.drift_shift * sig
    mu_only = np.asarray(config.share.mu(x), dtype=float)
    d1 = -solution.d_phi_s
    d2 = -solution.d2_phi_s
    resid = a * d2 + b * d1 - delta * phi_h + (1.0 - x)
    resid[0] = mu_only[0] * d1[0] - delta * phi_h[0] + (1.0 - x[0])
    resid[-1] = mu_only[-1] * d1[-1] - delta * phi_h[-1] + (1.0 - x[-1])
    scale = max(1.0, delta * float(np.max(np.abs(phi_h))))
    if float(np.max(np.abs(resid))) > residual_tol * scale:
        raise ResidualTooLarge(
            f"phi_h residual {np.max(np.abs(resid)):.3e} exceeds tolerance"
        )
    if phi_h.min() <= 0.0 or phi_h.max() >= 1.0 / delta:
        raise ResidualTooLarge("phi_h violates the (0, 1/delta) envelope")
    return replace(solution, phi_h=phi_h)


def solve_prices(
    config: ModelConfig,
    constants: EquilibriumConstants,
    grid: Grid | None = None,
    residual_tol: float = DEFAULT_RESIDUAL_TOL,
) -> PriceSolution:
    """Both ratios in one call."""
    sol = solve_phi_s(config, constants, grid, residual_tol)
    return phi_h_from_phi_s(config, sol, residual_tol)


def closed_form_phi_s(lam: float, omega_bar: float, delta: float, omega):
    """Exact stock ratio when the drift shift vanishes (gamma = 1 or rho = 0)."""
    om = np.asarray(omega, dtype=float)
    out = om / (lam + delta) + lam * omega_bar / (delta * (lam + delta))
    return float(out) if np.isscalar(omega) else out


def closed_form_phi_h(lam: float, omega_bar: float, delta: float, omega):
    """Exact human-capital ratio in the same special case."""
    om = np.asarray(omega, dtype=float)
    out = (1.0 - om) / (lam + delta) + lam * (1.0 - omega_bar) / (delta * (lam + delta))
    return float(out) if np.isscalar(omega) else out


def closed_form_elasticity(lam: float, omega_bar: float, delta: float, omega):
    """Exact elasticity phi_s'/phi_s = 1 / (omega + omega_bar*lam/delta)."""
    om = np.asarray(omega, dtype=float)
    out = 1.0 / (om + omega_bar * lam / delta)
    return float(out) if np.isscalar(omega) else out


def elasticity(solution: PriceSolution, omega):
    """Interpolated phi_s'/phi_s at omega (inside the grid hull)."""
    ratio = solution.d_phi_s / solution.phi_s
    return solution._interp(ratio, omega)
