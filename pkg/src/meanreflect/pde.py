"""Explicit monotone finite-difference backend for the nonlinear heat equation.

Solves u_t + G(u_xx) = 0 backward from terminal data, where G is the
band generator. Under dt <= dx^2 / sigma_high^2 every update is a convex
combination of neighbors, so the scheme is monotone and stable. Linear tails
are exact (G(0) = 0), which justifies the zero-curvature boundary columns.

Used to cross-validate the lattice engine, not to feed it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidParameterError, StabilityError
from .gexpectation import g_function_array
from .lattice import VolatilityBand

# half-widths below this many terminal standard deviations trigger a warning
_DOMAIN_STDS = 4.0


@dataclass(frozen=True)
class SpaceGrid:
    """Symmetric grid on [-half_width, half_width] with spacing dx; 0 is a node."""

    half_width: float
    dx: float

    def __post_init__(self):
        if not (self.dx > 0.0 and self.half_width >= self.dx):
            raise InvalidParameterError(
                f"need 0 < dx <= half_width, got dx={self.dx}, half_width={self.half_width}"
            )

    @property
    def n_half(self) -> int:
        return int(round(self.half_width / self.dx))

    @property
    def xs(self) -> np.ndarray:
        n = self.n_half
        return np.arange(-n, n + 1) * self.dx

    @property
    def origin_index(self) -> int:
        return self.n_half


@dataclass(frozen=True)
class HeatSolution:
    xs: np.ndarray
    u: np.ndarray
    value_at_origin: float
    dt: float
    n_time_steps: int


def default_space_grid(band: VolatilityBand, horizon: float, dx: float = 0.02,
                       stds: float = 6.0) -> SpaceGrid:
    """Domain wide enough that boundary influence at the origin is negligible."""
    half = stds * band.sigma_high * math.sqrt(horizon)
    return SpaceGrid(half_width=max(half, dx), dx=dx)


def _resolve_dt(space: SpaceGrid, band: VolatilityBand, horizon: float,
                dt: float | None) -> tuple[float, int]:
    bound = space.dx**2 / band.sigma_high_sq
    if dt is None:
        n = max(1, math.ceil(horizon / bound - 1e-12))
        return horizon / n, n
    if dt <= 0.0:
        raise InvalidParameterError(f"dt must be positive, got {dt}")
    if dt > bound * (1.0 + 1e-12):
        raise StabilityError(
            f"explicit step dt={dt} violates the stability bound "
            f"dx^2/sigma_high_sq={bound}"
        )
    n = max(1, math.ceil(horizon / dt - 1e-12))
    return horizon / n, n


def _march_backward(u: np.ndarray, band: VolatilityBand, dx: float, dt: float,
                    n_steps: int) -> np.ndarray:
    inv_dx2 = 1.0 / (dx * dx)
    curvature = np.zeros_like(u)
    for _ in range(n_steps):
        curvature[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) * inv_dx2
        # boundary columns keep zero curvature: linear tails are exact solutions
        u = u + dt * g_function_array(curvature, band)
    return u


def solve_nonlinear_heat(
    terminal: Callable[[np.ndarray], np.ndarray],
    band: VolatilityBand,
    space: SpaceGrid,
    horizon: float,
    dt: float | None = None,
) -> HeatSolution:
    """March u_t + G(u_xx) = 0 from terminal data at ``horizon`` back to 0.

    ``terminal`` must map an array of grid points to payoff values. dt=None
    picks the largest stable step that divides the horizon evenly.
    """
    if horizon <= 0.0:
        raise InvalidParameterError(f"horizon must be positive, got {horizon}")
    if space.half_width < _DOMAIN_STDS * band.sigma_high * math.sqrt(horizon):
        warnings.warn(
            f"space grid half_width={space.half_width} is below "
            f"{_DOMAIN_STDS} terminal standard deviations; terminal influence "
            "may reach the boundary",
            stacklevel=2,
        )
    dt, n = _resolve_dt(space, band, horizon, dt)
    xs = space.xs
    u = np.asarray(terminal(xs), dtype=float)
    if u.shape != xs.shape:
        raise InvalidParameterError("terminal payoff must map the grid to one value per node")
    u = _march_backward(u, band, space.dx, dt, n)
    return HeatSolution(xs=xs, u=u, value_at_origin=float(u[space.origin_index]),
                        dt=dt, n_time_steps=n)


def _interp_with_linear_tails(x: np.ndarray, xp: np.ndarray, fp: np.ndarray) -> np.ndarray:
    """np.interp plus straight-line extrapolation from the end segments."""
    out = np.interp(x, xp, fp)
    left = x < xp[0]
    if left.any():
        slope = (fp[1] - fp[0]) / (xp[1] - xp[0])
        out[left] = fp[0] + slope * (x[left] - xp[0])
    right = x > xp[-1]
    if right.any():
        slope = (fp[-1] - fp[-2]) / (xp[-1] - xp[-2])
        out[right] = fp[-1] + slope * (x[right] - xp[-1])
    return out


def nested_expectation_pde(
    payoff: Callable[[float, np.ndarray], np.ndarray],
    band: VolatilityBand,
    space: SpaceGrid,
    t1: float,
    horizon: float,
    dt: float | None = None,
    n_inner: int = 65,
    inner_stds: float = 4.0,
) -> float:
    """Two-monitoring-time expectation of payoff(B_{t1}, B_T) via the PDE recursion.

    The inner equation is solved on [t1, horizon] once per first-argument value
    on a coarse grid of ``n_inner`` points spanning ``inner_stds`` standard
    deviations of B_{t1}; its diagonal becomes the outer terminal condition.
    """
    if not 0.0 < t1 < horizon:
        raise InvalidParameterError(
            f"monitoring time must satisfy 0 < t1 < horizon, got t1={t1}, horizon={horizon}"
        )
    if n_inner < 3:
        raise InvalidParameterError("n_inner must be at least 3")
    if space.half_width < _DOMAIN_STDS * band.sigma_high * math.sqrt(horizon):
        warnings.warn(
            f"space grid half_width={space.half_width} is below "
            f"{_DOMAIN_STDS} terminal standard deviations; terminal influence "
            "may reach the boundary",
            stacklevel=2,
        )
    xs = space.xs
    x1_half = inner_stds * band.sigma_high * math.sqrt(t1)
    x1_grid = np.linspace(-x1_half, x1_half, n_inner)
    diag = np.empty(n_inner)
    inner_span = horizon - t1
    dt_inner, n_steps_inner = _resolve_dt(space, band, inner_span, dt)
    for i, x1 in enumerate(x1_grid):
        u = np.asarray(payoff(float(x1), xs), dtype=float)
        u = _march_backward(u, band, space.dx, dt_inner, n_steps_inner)
        diag[i] = np.interp(x1, xs, u)
    outer_terminal = _interp_with_linear_tails(xs, x1_grid, diag)
    dt_outer, n_steps_outer = _resolve_dt(space, band, t1, dt)
    u = _march_backward(outer_terminal, band, space.dx, dt_outer, n_steps_outer)
    return float(u[space.origin_index])
