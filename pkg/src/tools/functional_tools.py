"""Energy functional, weak gradient, Nehari scaling and identity checks.

The functional of a ProblemSpec on a grid is

    Phi(u) = A/2 - sum_i c_i B_i / (q_i + 1),
    A = int |grad u|^2,   B_i = int (u+)^{q_i + 1} / |x - P_i|^{s_i},

with the weighted terms evaluated on triangle means of u+.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.optimize import brentq

from src.models.problem import ProblemSpec
from src.models.reports import ConcentrationBookkeeping, EnergyBreakdown, PohozaevCheck
from src.tools.exponent_tools import critical_exponent
from src.tools.grid_tools import Grid2D, GridFunction, boundary_flux
from src.utils.errors import InvariantViolationError, NoMaximumError, ParameterError
from src.utils.logging_config import logger

RAY_SCAN_POINTS = 200
RAY_BRACKET_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class DiscreteFunctional:
    """Assembled functional of one spec on one grid, acting on flat nodal vectors."""

    spec: ProblemSpec
    grid: Grid2D
    coefficients: np.ndarray
    exponents: np.ndarray
    weights: tuple[np.ndarray, ...]

    @classmethod
    def from_spec(cls, spec: ProblemSpec, grid: Grid2D) -> "DiscreteFunctional":
        if grid.domain != spec.domain:
            raise ParameterError("field grid and problem domain differ")
        weights = tuple(grid.pole_weights(p.s, p.location) for p in spec.poles)
        return cls(
            spec=spec,
            grid=grid,
            coefficients=np.asarray(spec.coefficients(), dtype=float),
            exponents=np.asarray(spec.exponents(), dtype=float),
            weights=weights,
        )

    def terms(self, v: np.ndarray) -> tuple[float, np.ndarray]:
        """(A, B) for the flat nodal vector v."""
        A = float(v @ (self.grid.stiffness @ v))
        mean = self.grid.averaging @ np.maximum(v, 0.0)
        B = np.array([w @ mean ** (q + 1.0) for w, q in zip(self.weights, self.exponents)])
        return A, B

    def phi_from_terms(self, A: float, B: np.ndarray) -> float:
        return float(0.5 * A - np.sum(self.coefficients * B / (self.exponents + 1.0)))

    def phi(self, v: np.ndarray) -> float:
        return self.phi_from_terms(*self.terms(v))

    def gradient(self, v: np.ndarray) -> np.ndarray:
        """Weak gradient K v - sum_i c_i P^T(w_i mean^{q_i}) on u > 0; 0 on Dirichlet nodes."""
        grid = self.grid
        mean = grid.averaging @ np.maximum(v, 0.0)
        load = np.zeros_like(mean)
        for c, w, q in zip(self.coefficients, self.weights, self.exponents):
            load += c * w * mean**q
        g = grid.stiffness @ v - (grid.averaging.T @ load) * (v > 0.0)
        g[grid.dirichlet.ravel()] = 0.0
        return g

    def ray_terms(self, B: np.ndarray) -> list[tuple[float, float, float]]:
        return list(zip(self.coefficients.tolist(), B.tolist(), self.exponents.tolist()))

    def ray_scale(self, v: np.ndarray) -> float:
        A, B = self.terms(v)
        return ray_maximum(A, self.ray_terms(B))


def ray_maximum(A: float, terms: Iterable[tuple[float, float, float]]) -> float:
    """Unique t* > 0 with A t = sum_i c_i B_i t^{q_i}.

    terms holds (c_i, B_i, q_i). The root is bracketed by a log-spaced scan
    and refined with brentq; more than one sign change on the scan raises
    InvariantViolationError.
    """
    active = [(c, B, q) for c, B, q in terms if c != 0.0 and B != 0.0]
    if not A > 0.0:
        raise NoMaximumError("ray has no maximum: Dirichlet term vanishes")
    if not active:
        raise NoMaximumError("ray has no maximum: no active power term")

    q_top = max(q for _, _, q in active)
    lead = sum(c * B for c, B, q in active if math.isclose(q, q_top, rel_tol=1e-14))
    if lead <= 0.0:
        raise NoMaximumError("ray has no maximum: the highest power term is not positive")

    def g(t):
        return A - sum(c * B * t ** (q - 1.0) for c, B, q in active)

    hi = 1.0
    while g(hi) > 0.0:
        hi *= 2.0
        if hi > RAY_BRACKET_LIMIT:
            raise NoMaximumError("ray maximum escapes to infinity")
    lo = 1.0
    while g(lo) <= 0.0:
        lo *= 0.5
        if lo < 1.0 / RAY_BRACKET_LIMIT:
            raise NoMaximumError("derivative of t -> Phi(t u) is not positive near t = 0")

    ts = np.geomspace(lo, hi * 64.0, RAY_SCAN_POINTS)
    signs = np.sign(g(ts))
    changes = np.flatnonzero(signs[:-1] != signs[1:])
    if len(changes) != 1:
        raise InvariantViolationError(
            f"t -> Phi(t u) has {len(changes)} critical points on the scan; maximum is not unique"
        )
    k = int(changes[0])
    return float(brentq(g, ts[k], ts[k + 1], xtol=1e-15, rtol=4.0 * np.finfo(float).eps))


def energy(u: GridFunction, spec: ProblemSpec) -> EnergyBreakdown:
    """Dirichlet term, weighted terms, Phi, Nehari and Pohozaev residuals."""
    functional = DiscreteFunctional.from_spec(spec, u.grid)
    A, B = functional.terms(u.flat)
    return EnergyBreakdown(
        A=A,
        B=tuple(B.tolist()),
        coefficients=tuple(functional.coefficients.tolist()),
        exponents=tuple(functional.exponents.tolist()),
        phi=functional.phi_from_terms(A, B),
        nehari=float(A - np.sum(functional.coefficients * B)),
        pohozaev=pohozaev_residual(u, spec).residual,
    )


def gradient(u: GridFunction, spec: ProblemSpec) -> GridFunction:
    functional = DiscreteFunctional.from_spec(spec, u.grid)
    return u.with_values(functional.gradient(u.flat))


def nehari_scale(u: GridFunction, spec: ProblemSpec) -> float:
    """Scale t* putting t* u on the Nehari manifold."""
    if not np.any(u.values > 0.0):
        raise ParameterError("Nehari scaling needs a field with a positive part")
    functional = DiscreteFunctional.from_spec(spec, u.grid)
    return functional.ray_scale(u.flat)


def pohozaev_residual(u: GridFunction, spec: ProblemSpec) -> PohozaevCheck:
    """(N-2)/2 A - sum_i c_i/(q_i+1) int div(x |x-P_i|^{-s_i}) (u+)^{q_i+1} + flux.

    div(x |x-P|^{-s}) = N |x-P|^{-s} - s |x-P|^{-s-2} (x-P).x, which is
    (N - s)|x|^{-s} for the boundary pole.
    """
    grid = u.grid
    N = spec.N
    mean = grid.averaging @ np.maximum(u.flat, 0.0)
    rho, z = grid.cell_rho, grid.cell_z

    A = float(u.flat @ (grid.stiffness @ u.flat))
    volume = 0.5 * (N - 2) * A
    for pole, q in zip(spec.poles, spec.exponents()):
        if pole.s == 0.0:
            divergence = np.full_like(rho, float(N))
        else:
            dz = z - pole.location
            d2 = rho**2 + dz**2
            divergence = N * d2 ** (-0.5 * pole.s) - pole.s * d2 ** (-0.5 * pole.s - 1.0) * (rho**2 + dz * z)
        volume -= pole.coefficient / (q + 1.0) * float(np.sum(grid.cell_weights * divergence * mean ** (q + 1.0)))

    flux, star_shaped = boundary_flux(u)
    if not star_shaped:
        logger.warning("Pohozaev residual on a domain that is not star-shaped about the origin")
    return PohozaevCheck(
        residual=volume + flux,
        volume_term=volume,
        boundary_term=flux,
        star_shaped=star_shaped,
    )


def c_formula(A: float, B, coefficients, exponents) -> float:
    """Level expressed through the Nehari identity:

    (1/2 - 1/(q1+1)) A + sum_i c_i B_i (1/(q1+1) - 1/(q_i+1)).
    """
    B = np.asarray(B, dtype=float)
    c = np.asarray(coefficients, dtype=float)
    q = np.asarray(exponents, dtype=float)
    ref = 1.0 / (q[0] + 1.0)
    return float((0.5 - ref) * A + np.sum(c * B * (ref - 1.0 / (q + 1.0))))


def energy_identities(u: GridFunction, spec: ProblemSpec, c_level: float) -> tuple[float, float, float]:
    """(|Phi(u) - c_level|, |Nehari(u)|, level from the Nehari identity)."""
    functional = DiscreteFunctional.from_spec(spec, u.grid)
    A, B = functional.terms(u.flat)
    res1 = abs(functional.phi_from_terms(A, B) - c_level)
    res2 = abs(float(A - np.sum(functional.coefficients * B)))
    return res1, res2, c_formula(A, B, functional.coefficients, functional.exponents)


def concentration_bookkeeping(u: GridFunction, spec: ProblemSpec) -> ConcentrationBookkeeping:
    """A, B, C, D integrals of a field for the perturbed problem.

    A is the Dirichlet term, B the Hardy term (negative coefficient), C the
    critical Sobolev term and D the fixed-power perturbation (0 when absent).
    The identity level is A/2 + B/2*(s) - (N-2)C/(2N), valid when D vanishes
    and C = A + B.
    """
    hardy = [i for i, p in enumerate(spec.poles) if p.coefficient < 0.0 and p.exponent is None]
    critical = [i for i, p in enumerate(spec.poles) if p.coefficient > 0.0 and p.s == 0.0 and p.exponent is None]
    perturbation = [i for i, p in enumerate(spec.poles) if p.exponent is not None]
    if len(hardy) != 1 or len(critical) != 1:
        raise ParameterError("bookkeeping needs one Hardy pole and one critical Sobolev term")

    functional = DiscreteFunctional.from_spec(spec, u.grid)
    A, Bs = functional.terms(u.flat)
    B = float(Bs[hardy[0]])
    C = float(Bs[critical[0]])
    D = float(sum(Bs[i] for i in perturbation))

    N = spec.N
    two_star_s = critical_exponent(N, spec.poles[hardy[0]].s)
    level = functional.phi_from_terms(A, Bs)
    level_from_identity = 0.5 * A + B / two_star_s - (N - 2) * C / (2.0 * N)
    scale = max(abs(C), abs(A + B), np.finfo(float).tiny)
    return ConcentrationBookkeeping(
        A=A,
        B=B,
        C=C,
        D=D,
        level=level,
        level_from_identity=level_from_identity,
        identity_gap=abs(C - (A + B)) / scale,
    )
