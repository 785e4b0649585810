"""Kelvin inversion and the moving-sphere weight ingredients."""

from __future__ import annotations

import numpy as np

from src.models.exponents import MovingSphereProbe
from src.tools.grid_tools import Grid2D, GridFunction, evaluate
from src.utils.errors import OutOfRangeError, ParameterError, SingularPointError
from src.utils.logging_config import logger

TAIL_SHELL = 0.8


def _center_height(center) -> float:
    if np.ndim(center) == 0:
        return float(center)
    rho, z = (float(v) for v in center)
    if rho != 0.0:
        raise ParameterError("Kelvin center must lie on the symmetry axis")
    return z


def tail_coefficients(u: GridFunction, shell: float = TAIL_SHELL) -> np.ndarray:
    """Per-ray constants C(theta) of the decay model u ~ C(theta) |x|^{1-N}.

    Median of u r^{N-1} over interior nodes of the outer shell on each ray.
    """
    grid = u.grid
    rows = (grid.r >= shell * grid.rmax) & (grid.r < grid.rmax)
    if not np.any(rows):
        rows = grid.r >= shell * grid.rmax
    scaled = u.values[rows] * grid.r[rows, None] ** (grid.N - 1)
    return np.median(scaled, axis=0)


def _tail_model(u: GridFunction, rho: np.ndarray, z: np.ndarray) -> np.ndarray:
    grid = u.grid
    coefficients = tail_coefficients(u)
    zeta = z - grid.alpha * rho**2
    r = np.hypot(rho, zeta)
    theta = np.arctan2(rho, zeta)
    upper = zeta >= 0.0
    values = np.interp(theta, grid.theta, coefficients) * np.where(r > 0, r, 1.0) ** (1 - grid.N)
    return np.where(upper, values, 0.0)


def kelvin_transform(
    u: GridFunction,
    center,
    radius: float,
    target: Grid2D | None = None,
) -> GridFunction:
    """y -> (radius / |y - c|)^{N-2} u(c + radius^2 (y - c) / |y - c|^2).

    center is a height on the symmetry axis (or an axis point (0, z)).
    Inverted points beyond the source grid use the fitted |x|^{1-N} tail;
    points below the boundary give 0.
    """
    if radius <= 0.0:
        raise ParameterError(f"Kelvin radius must be positive, got {radius}")
    grid = target or u.grid
    height = _center_height(center)
    N = u.grid.N

    rho = grid.rho
    dz = grid.z - height
    dist_sq = rho**2 + dz**2
    singular = dist_sq == 0.0
    if np.any(singular & ~grid.dirichlet):
        raise SingularPointError("Kelvin transform evaluated at its center")

    safe = np.where(singular, 1.0, dist_sq)
    scale = radius**2 / safe
    rho_inv = scale * rho
    z_inv = height + scale * dz

    values = evaluate(u, rho_inv, z_inv, fill=np.nan)
    outside = np.isnan(values)
    if np.any(outside):
        values[outside] = _tail_model(u, rho_inv[outside], z_inv[outside])
        logger.debug("Kelvin transform: %d points extrapolated by the decay model", int(outside.sum()))

    result = scale ** ((N - 2) / 2.0) * values
    result[singular] = 0.0
    return GridFunction(grid, result)


# ----------------------------------------------------------------------
# Moving spheres
# ----------------------------------------------------------------------
def _sphere_denominator(sphere: MovingSphereProbe, mu) -> np.ndarray:
    """|x_R + mu theta|^2 = mu^2 - 2 mu R theta_N + R^2."""
    mu = np.asarray(mu, dtype=float)
    return mu * mu - 2.0 * mu * sphere.R * sphere.theta[-1] + sphere.R**2


def _check_range(sphere: MovingSphereProbe, mu) -> None:
    if np.any(np.asarray(mu) <= sphere.mu1):
        raise OutOfRangeError(f"mu must exceed mu1 = {sphere.mu1}")


def moving_sphere_weight(sphere: MovingSphereProbe, mu):
    """eta(mu) = mu^2 / |x_R + mu theta|^2."""
    _check_range(sphere, mu)
    mu_arr = np.asarray(mu, dtype=float)
    eta = mu_arr**2 / _sphere_denominator(sphere, mu_arr)
    return float(eta) if eta.ndim == 0 else eta


def moving_sphere_weight_derivative(sphere: MovingSphereProbe, mu):
    """eta'(mu) = 2 mu R theta_N (mu1 - mu) / |x_R + mu theta|^4."""
    _check_range(sphere, mu)
    mu_arr = np.asarray(mu, dtype=float)
    deriv = 2.0 * mu_arr * sphere.R * sphere.theta[-1] * (sphere.mu1 - mu_arr) / _sphere_denominator(sphere, mu_arr) ** 2
    return float(deriv) if deriv.ndim == 0 else deriv


def sphere_weight_comparison(y: np.ndarray, R: float, sphere_radius: float, s: float) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of the reflected-weight inequality at points y (n, N).

    lhs = (lam / |y - x_R|)^{2s} |x_R + lam^2 (y - x_R) / |y - x_R|^2|^{-s},
    rhs = |y|^{-s}, with x_R = (0, ..., 0, -R) and lam = sphere_radius.
    lhs <= rhs for y in the ball B_lam(x_R) above the boundary plane.
    """
    y = np.atleast_2d(np.asarray(y, dtype=float))
    x_R = np.zeros(y.shape[1])
    x_R[-1] = -R
    offset = y - x_R
    dist_sq = np.sum(offset**2, axis=1)
    reflected = x_R + sphere_radius**2 * offset / dist_sq[:, None]
    lhs = (sphere_radius**2 / dist_sq) ** s * np.linalg.norm(reflected, axis=1) ** (-s)
    rhs = np.linalg.norm(y, axis=1) ** (-s)
    return lhs, rhs
