"""Meridian grids, quadrature and discrete operators for axisymmetric fields.

Fields depend on (rho, z) = (|x'|, x_N). The meridian quarter plane is
discretized in polar coordinates (r, theta) of the flattened chart:

    r_i = rmax (i / n_r)^gamma,   theta_j = (pi/2) j / n_theta,
    rho = r sin(theta),  zeta = r cos(theta),  z = zeta + alpha rho^2.

theta = 0 is the symmetry axis and theta = pi/2 the (flat or curved)
boundary, so the boundary is represented exactly. The Dirichlet nodes are
the boundary column, the outer arc r = rmax and the origin.

Energies use P1 triangles on the logical (r, theta) lattice with centroid
quadrature of the axisymmetric measure |S^{N-2}| rho^{N-2} d rho dz.
Strong-form residuals use finite differences on the same nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy import sparse
from scipy.integrate import simpson
from scipy.interpolate import RectBivariateSpline
from scipy.sparse.linalg import splu
from scipy.special import gamma as gamma_fn

from src.models.domain import AxisymmetricDomain, BoundaryGraph
from src.models.problem import ProblemSpec
from src.utils.errors import ChartError, IntegrabilityError, ParameterError

MIN_INTERVALS = 8


def sphere_area(k: int) -> float:
    """Surface area of the unit sphere S^k in R^{k+1}."""
    return 2.0 * math.pi ** ((k + 1) / 2) / float(gamma_fn((k + 1) / 2))


class _Triangles(NamedTuple):
    nodes: np.ndarray  # (T, 3) flat node indices
    r: np.ndarray  # centroid radius
    theta: np.ndarray  # centroid angle
    area: np.ndarray  # logical (r, theta) area
    grad_r: sparse.csr_matrix  # (T, n) d/dr on each triangle
    grad_theta: sparse.csr_matrix  # (T, n) d/dtheta on each triangle


@dataclass(frozen=True, eq=False)
class Grid2D:
    """Graded polar grid on the meridian section of an axisymmetric domain.

    Node (i, j) sits at radius r[i] and polar angle theta[j]; nodal arrays
    have shape (n_r + 1, n_theta + 1) and flatten row-major.
    """

    domain: AxisymmetricDomain
    r: np.ndarray
    theta: np.ndarray
    gamma: float

    # ------------------------------------------------------------------
    # Shape
    # ------------------------------------------------------------------
    @property
    def N(self) -> int:
        return self.domain.N

    @property
    def alpha(self) -> float:
        return self.domain.alpha

    @property
    def rmax(self) -> float:
        return float(self.r[-1])

    @property
    def n_r(self) -> int:
        return len(self.r) - 1

    @property
    def n_theta(self) -> int:
        return len(self.theta) - 1

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.r), len(self.theta))

    @property
    def size(self) -> int:
        return len(self.r) * len(self.theta)

    @property
    def dtheta(self) -> float:
        return float(self.theta[1] - self.theta[0])

    @property
    def h(self) -> float:
        """Refinement parameter 1 / n_r used in convergence fits."""
        return 1.0 / self.n_r

    # ------------------------------------------------------------------
    # Coordinates
    # ------------------------------------------------------------------
    @cached_property
    def rho(self) -> np.ndarray:
        return np.outer(self.r, np.sin(self.theta))

    @cached_property
    def zeta(self) -> np.ndarray:
        zeta = np.outer(self.r, np.cos(self.theta))
        zeta[:, -1] = 0.0
        return zeta

    @cached_property
    def z(self) -> np.ndarray:
        return self.zeta + self.alpha * self.rho**2

    @cached_property
    def radius(self) -> np.ndarray:
        """Physical distance |x| of every node from the boundary origin."""
        return np.hypot(self.rho, self.z)

    @cached_property
    def dirichlet(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[0, :] = True
        mask[-1, :] = True
        mask[:, -1] = True
        mask.setflags(write=False)
        return mask

    @cached_property
    def free_index(self) -> np.ndarray:
        return np.flatnonzero(~self.dirichlet.ravel())

    # ------------------------------------------------------------------
    # P1 assembly
    # ------------------------------------------------------------------
    @cached_property
    def _triangles(self) -> _Triangles:
        n_t = self.n_theta + 1
        I, J = np.meshgrid(np.arange(self.n_r), np.arange(self.n_theta), indexing="ij")
        I, J = I.ravel(), J.ravel()
        a = I * n_t + J
        b = (I + 1) * n_t + J
        c = (I + 1) * n_t + J + 1
        d = I * n_t + J + 1

        dr = self.r[I + 1] - self.r[I]
        dth = self.dtheta
        m = len(I)

        nodes = np.concatenate([np.stack([a, b, c], axis=1), np.stack([a, c, d], axis=1)])
        r_c = np.concatenate([(self.r[I] + 2.0 * self.r[I + 1]) / 3.0, (2.0 * self.r[I] + self.r[I + 1]) / 3.0])
        theta_c = np.concatenate([self.theta[J] + dth / 3.0, self.theta[J] + 2.0 * dth / 3.0])
        area = np.concatenate([dr, dr]) * dth / 2.0

        rows = np.arange(2 * m)
        lower, upper = rows[:m], rows[m:]
        # lower triangle (a, b, c): d/dr along a->b, d/dtheta along b->c
        # upper triangle (a, c, d): d/dr along d->c, d/dtheta along a->d
        gr_rows = np.concatenate([lower, lower, upper, upper])
        gr_cols = np.concatenate([b, a, c, d])
        gr_data = np.concatenate([1.0 / dr, -1.0 / dr, 1.0 / dr, -1.0 / dr])
        gt_rows = np.concatenate([lower, lower, upper, upper])
        gt_cols = np.concatenate([c, b, d, a])
        gt_data = np.full(4 * m, 1.0 / dth) * np.repeat([1.0, -1.0, 1.0, -1.0], m)

        shape = (2 * m, self.size)
        grad_r = sparse.csr_matrix((gr_data, (gr_rows, gr_cols)), shape=shape)
        grad_theta = sparse.csr_matrix((gt_data, (gt_rows, gt_cols)), shape=shape)
        return _Triangles(nodes, r_c, theta_c, area, grad_r, grad_theta)

    @cached_property
    def cell_rho(self) -> np.ndarray:
        t = self._triangles
        return t.r * np.sin(t.theta)

    @cached_property
    def cell_z(self) -> np.ndarray:
        t = self._triangles
        return t.r * np.cos(t.theta) + self.alpha * self.cell_rho**2

    @cached_property
    def cell_weights(self) -> np.ndarray:
        """Centroid quadrature weight |S^{N-2}| rho^{N-2} r dr dtheta / 2 per triangle."""
        t = self._triangles
        return sphere_area(self.N - 2) * self.cell_rho ** (self.N - 2) * t.r * t.area

    @cached_property
    def averaging(self) -> sparse.csr_matrix:
        """(T, n) matrix taking nodal values to triangle means."""
        nodes = self._triangles.nodes
        rows = np.repeat(np.arange(len(nodes)), 3)
        data = np.full(nodes.size, 1.0 / 3.0)
        return sparse.csr_matrix((data, (rows, nodes.ravel())), shape=(len(nodes), self.size))

    @cached_property
    def gradient_operators(self) -> tuple[sparse.csr_matrix, sparse.csr_matrix]:
        """(d/drho, d/dz) of a P1 field on each triangle, physical coordinates."""
        t = self._triangles
        s, c = np.sin(t.theta), np.cos(t.theta)
        rho, a = self.cell_rho, self.alpha
        d_rho = sparse.diags(s - 2.0 * a * rho * c) @ t.grad_r + sparse.diags((c + 2.0 * a * rho * s) / t.r) @ t.grad_theta
        d_z = sparse.diags(c) @ t.grad_r - sparse.diags(s / t.r) @ t.grad_theta
        return d_rho.tocsr(), d_z.tocsr()

    @cached_property
    def stiffness(self) -> sparse.csr_matrix:
        d_rho, d_z = self.gradient_operators
        W = sparse.diags(self.cell_weights)
        return (d_rho.T @ W @ d_rho + d_z.T @ W @ d_z).tocsr()

    @cached_property
    def stiffness_factor(self):
        """Sparse LU factor of the stiffness matrix restricted to free nodes."""
        free = self.free_index
        return splu(self.stiffness[free][:, free].tocsc())

    @cached_property
    def node_measure(self) -> np.ndarray:
        """Lumped nodal measure; sums to the total cell weight."""
        return np.asarray(self.averaging.T @ self.cell_weights).reshape(self.shape)

    def pole_weights(self, s: float, height: float = 0.0) -> np.ndarray:
        """Cell weights multiplied by |x_c - P|^{-s} for a pole at (0, height)."""
        if s == 0.0:
            return self.cell_weights
        distance = np.hypot(self.cell_rho, self.cell_z - height)
        return self.cell_weights * distance ** (-s)

    def measure(self) -> float:
        return float(self.cell_weights.sum())


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Scalar field sampled at the nodes of a Grid2D.

    Values are stored read-only. Dirichlet values are carried as data so
    closed-form reference fields keep their boundary values;
    ``apply_dirichlet`` zeroes them.
    """

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.shape:
            if values.size != self.grid.size:
                raise ParameterError(f"field of size {values.size} does not fit grid {self.grid.shape}")
            values = values.reshape(self.grid.shape)
        if not np.all(np.isfinite(values)):
            raise ParameterError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: Grid2D) -> "GridFunction":
        return cls(grid, np.zeros(grid.shape))

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    @property
    def boundary_mask(self) -> np.ndarray:
        return self.grid.dirichlet

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.grid, values)

    def apply_dirichlet(self) -> "GridFunction":
        return self.with_values(np.where(self.grid.dirichlet, 0.0, self.values))

    def positive_part(self) -> "GridFunction":
        return self.with_values(np.maximum(self.values, 0.0))

    def maximum(self) -> tuple[float, tuple[float, float]]:
        """(max value, physical (rho, z) of the maximizing node)."""
        index = np.unravel_index(int(np.argmax(self.values)), self.grid.shape)
        return float(self.values[index]), (float(self.grid.rho[index]), float(self.grid.z[index]))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    @cached_property
    def spline(self) -> RectBivariateSpline:
        return RectBivariateSpline(self.grid.r, self.grid.theta, self.values, kx=3, ky=3, s=0)


# ----------------------------------------------------------------------
# Construction and charts
# ----------------------------------------------------------------------
def build_grid(domain: AxisymmetricDomain, n_r: int, n_theta: int, gamma: float) -> Grid2D:
    """Graded grid with radial nodes rmax (i / n_r)^gamma and uniform angles."""
    if not isinstance(domain, AxisymmetricDomain):
        raise ParameterError(f"expected an AxisymmetricDomain, got {type(domain).__name__}")
    if n_r < MIN_INTERVALS or n_theta < MIN_INTERVALS:
        raise ParameterError(f"grid needs at least {MIN_INTERVALS} intervals per direction, got {n_r}x{n_theta}")
    if gamma < 1.0:
        raise ParameterError(f"grading exponent must be >= 1, got {gamma}")

    r = domain.rmax * np.linspace(0.0, 1.0, n_r + 1) ** gamma
    r[-1] = domain.rmax
    theta = np.linspace(0.0, 0.5 * math.pi, n_theta + 1)
    r.setflags(write=False)
    theta.setflags(write=False)
    return Grid2D(domain=domain, r=r, theta=theta, gamma=float(gamma))


def refine(grid: Grid2D, factor: int = 2) -> Grid2D:
    """Same domain and grading with every interval count multiplied by factor."""
    return build_grid(grid.domain, grid.n_r * factor, grid.n_theta * factor, grid.gamma)


def flattening_map(x, graph: BoundaryGraph, *, inverse: bool = False) -> np.ndarray:
    """phi(x) = (x', x_N - alpha |x'|^2), or its inverse.

    Accepts a single point of length N or an array of points (..., N).
    """
    x = np.asarray(x, dtype=float)
    tangential_sq = np.sum(x[..., :-1] ** 2, axis=-1)
    if np.any(tangential_sq >= graph.cutoff_radius**2):
        raise ChartError(f"point outside the flattening chart |x'| < {graph.cutoff_radius}")
    out = x.copy()
    shift = graph.alpha * tangential_sq
    out[..., -1] = x[..., -1] + shift if inverse else x[..., -1] - shift
    return out


def mean_curvature(graph: BoundaryGraph, N: int) -> float:
    """H(0) = (sum_i alpha_i) / (N - 1), which equals alpha for equal coefficients.

    This is half the classical mean curvature (trace of the second
    fundamental form over N - 1 for the graph x_N = alpha |x'|^2 is 2 alpha);
    see docs/CURVATURE_CONVENTION.md.
    """
    coefficients = np.full(N - 1, graph.alpha)
    return float(coefficients.sum() / (N - 1))


def classical_mean_curvature(graph: BoundaryGraph, N: int) -> float:
    return 2.0 * mean_curvature(graph, N)


def evaluate(u: GridFunction, rho, z, *, fill: float = 0.0) -> np.ndarray:
    """Cubic-spline value of u at physical points; points outside get fill."""
    grid = u.grid
    rho = np.abs(np.asarray(rho, dtype=float))
    z = np.asarray(z, dtype=float)
    rho, z = np.broadcast_arrays(rho, z)
    zeta = z - grid.alpha * rho**2
    r = np.hypot(rho, zeta)
    theta = np.arctan2(rho, zeta)

    slack = 1e-12 * grid.rmax
    inside = (zeta >= -slack) & (r <= grid.rmax + slack)
    out = np.full(rho.shape, fill, dtype=float)
    if np.any(inside):
        out[inside] = u.spline.ev(
            np.clip(r[inside], 0.0, grid.rmax),
            np.clip(theta[inside], 0.0, 0.5 * math.pi),
        )
    return out


# ----------------------------------------------------------------------
# Quadrature
# ----------------------------------------------------------------------
def _pole_height(pole) -> float:
    if np.ndim(pole) == 0:
        return float(pole)
    rho, z = (float(v) for v in pole)
    if rho != 0.0:
        raise ParameterError("axisymmetric fields only admit poles on the symmetry axis")
    return z


def weighted_integral(f: GridFunction, s: float, pole=0.0) -> float:
    """Quadrature of f / |x - pole|^s with the axisymmetric measure.

    pole is the height on the symmetry axis or a (rho, z) point with rho = 0.
    """
    height = _pole_height(pole)
    if s < 0.0:
        raise ParameterError(f"weight exponent must be >= 0, got {s}")
    if s >= f.grid.N:
        raise IntegrabilityError(f"|x|^-{s} is not integrable in dimension {f.grid.N}")
    if s > 2.0:
        raise IntegrabilityError(f"weight exponent {s} exceeds the Hardy exponent 2")
    weights = f.grid.pole_weights(s, height)
    return float(weights @ (f.grid.averaging @ f.flat))


def dirichlet_energy(u: GridFunction) -> float:
    """Integral of |grad u|^2 for the P1 interpolant of u."""
    v = u.flat
    return float(v @ (u.grid.stiffness @ v))


def dirichlet_form(u: GridFunction, w: GridFunction) -> float:
    """Bilinear form behind dirichlet_energy."""
    return float(u.flat @ (u.grid.stiffness @ w.flat))


# ----------------------------------------------------------------------
# Finite differences
# ----------------------------------------------------------------------
def _d_theta(F: np.ndarray, dtheta: float) -> np.ndarray:
    """First theta-derivative of a field even across the axis."""
    out = np.empty_like(F)
    out[:, 1:-1] = (F[:, 2:] - F[:, :-2]) / (2.0 * dtheta)
    out[:, 0] = 0.0
    out[:, -1] = (3.0 * F[:, -1] - 4.0 * F[:, -2] + F[:, -3]) / (2.0 * dtheta)
    return out


def _d_r(F: np.ndarray, r: np.ndarray) -> np.ndarray:
    return np.gradient(F, r, axis=0, edge_order=2)


def _chart_z_derivative(F: np.ndarray, grid: Grid2D) -> np.ndarray:
    """d/dzeta of a field even across the axis, at every node."""
    Fr = _d_r(F, grid.r)
    Ft = _d_theta(F, grid.dtheta)
    out = np.empty_like(F)
    r = grid.r[1:, None]
    out[1:] = np.cos(grid.theta) * Fr[1:] - np.sin(grid.theta) * Ft[1:] / r
    # at the origin the axis ray is the zeta direction
    out[0] = Fr[0, 0]
    return out


def laplacian(u: GridFunction) -> np.ndarray:
    """Strong-form Laplacian at nodes with 0 < r < rmax (zero elsewhere).

    Flat part u_rr + (N-1)/r u_r + (u_tt + (N-2) cot(t) u_t) / r^2, with the
    axis limit (N-1) u_tt / r^2. For curved caps the shear adds
    4 a^2 rho^2 U_zz - 4 a rho U_rz - 2 a (N-1) U_z in chart derivatives.
    """
    grid = u.grid
    U = u.values
    N, r, dth = grid.N, grid.r, grid.dtheta

    hm = (r[1:-1] - r[:-2])[:, None]
    hp = (r[2:] - r[1:-1])[:, None]
    Um, U0, Up = U[:-2], U[1:-1], U[2:]
    U_rr = 2.0 * (Um / (hm * (hm + hp)) - U0 / (hm * hp) + Up / (hp * (hm + hp)))
    U_r = -hp / (hm * (hm + hp)) * Um + (hp - hm) / (hm * hp) * U0 + hm / (hp * (hm + hp)) * Up

    U_tt = np.empty_like(U0)
    U_tt[:, 1:-1] = (U0[:, 2:] - 2.0 * U0[:, 1:-1] + U0[:, :-2]) / dth**2
    U_tt[:, 0] = 2.0 * (U0[:, 1] - U0[:, 0]) / dth**2
    U_tt[:, -1] = 0.0
    U_t = _d_theta(U0, dth)

    angular = np.empty_like(U0)
    theta = grid.theta[1:-1]
    angular[:, 1:-1] = U_tt[:, 1:-1] + (N - 2) * (np.cos(theta) / np.sin(theta)) * U_t[:, 1:-1]
    angular[:, 0] = (N - 1) * U_tt[:, 0]
    angular[:, -1] = 0.0

    r_in = r[1:-1, None]
    lap = np.zeros_like(U)
    lap[1:-1] = U_rr + (N - 1) / r_in * U_r + angular / r_in**2

    a = grid.alpha
    if a != 0.0:
        U_z = _chart_z_derivative(U, grid)
        V_r = _d_r(U_z, r)
        V_t = _d_theta(U_z, dth)
        s, c = np.sin(grid.theta), np.cos(grid.theta)
        U_zz = c * V_r[1:-1] - s * V_t[1:-1] / r_in
        U_rz = s * V_r[1:-1] + c * V_t[1:-1] / r_in
        rho = grid.rho[1:-1]
        lap[1:-1] += 4.0 * a * a * rho**2 * U_zz - 4.0 * a * rho * U_rz - 2.0 * a * (N - 1) * U_z[1:-1]

    lap[grid.dirichlet] = 0.0
    return lap


def nodal_source(u: GridFunction, spec: ProblemSpec) -> np.ndarray:
    """sum_i c_i (u+)^{q_i} / |x - P_i|^{s_i} at every node (0 at a pole node)."""
    grid = u.grid
    positive = np.maximum(u.values, 0.0)
    source = np.zeros(grid.shape)
    for pole, q in zip(spec.poles, spec.exponents()):
        if pole.s == 0.0:
            weight = np.ones(grid.shape)
        else:
            distance = np.hypot(grid.rho, grid.z - pole.location)
            weight = np.divide(1.0, distance**pole.s, out=np.zeros(grid.shape), where=distance > 0.0)
        source += pole.coefficient * positive**q * weight
    return source


def discrete_pde_residual(u: GridFunction, spec: ProblemSpec) -> GridFunction:
    """Node-wise residual Delta u + sum_i c_i (u+)^{q_i} / |x - P_i|^{s_i}.

    Dirichlet nodes and nodes sitting on a pole carry 0.
    """
    residual = laplacian(u) + nodal_source(u, spec)
    residual[u.grid.dirichlet] = 0.0
    return u.with_values(residual)


def boundary_flux(u: GridFunction) -> tuple[float, bool]:
    """(1/2) boundary integral of (x . nu) |grad u|^2 and a star-shapedness flag.

    The boundary column theta = pi/2 is parametrized by r, where
    (x . nu)|dX| = a r^2 dr; the outer arc r = rmax by theta, where
    (x . nu)|dX| = (R^2 - a R^3 sin^2 cos) dtheta. Normal derivatives use
    second-order one-sided differences.
    """
    grid = u.grid
    U = u.values
    N, r, a = grid.N, grid.r, grid.alpha
    U_r = _d_r(U, r)
    U_t = _d_theta(U, grid.dtheta)

    # boundary graph, theta = pi/2
    rho = r
    inv_r = np.divide(1.0, r, out=np.zeros_like(r), where=r > 0)
    grad_rho = U_r[:, -1] + 2.0 * a * rho * U_t[:, -1] * inv_r
    grad_z = -U_t[:, -1] * inv_r
    support_graph = a * r**2
    flux_graph = simpson(support_graph * (grad_rho**2 + grad_z**2) * rho ** (N - 2), x=r)

    # outer arc, r = R
    R = grid.rmax
    s, c = np.sin(grid.theta), np.cos(grid.theta)
    rho = R * s
    grad_rho = (s - 2.0 * a * rho * c) * U_r[-1] + (c + 2.0 * a * rho * s) * U_t[-1] / R
    grad_z = c * U_r[-1] - s * U_t[-1] / R
    support_arc = R**2 - a * R**3 * s**2 * c
    flux_arc = simpson(support_arc * (grad_rho**2 + grad_z**2) * rho ** (N - 2), x=grid.theta)

    value = 0.5 * sphere_area(N - 2) * (flux_graph + flux_arc)
    star_shaped = bool(np.all(support_graph >= 0.0) and np.all(support_arc >= 0.0))
    return float(value), star_shaped


def residual_norm(field: GridFunction, *, exclusion_radius: float = 0.0) -> float:
    """Weighted L2 norm over nodes with |x| >= exclusion_radius."""
    grid = field.grid
    keep = grid.radius >= exclusion_radius
    return float(np.sqrt(np.sum(grid.node_measure[keep] * field.values[keep] ** 2)))
