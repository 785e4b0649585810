"""Identity suite graph: closed-form laws and discrete consistency checks.

Each check draws its own reproducible random stream from the run seed and
returns one row with the number of samples, the worst error seen and the
number of samples past tolerance.
"""

from __future__ import annotations

import math

import numpy as np
from langgraph.graph import StateGraph

from src.graphs.base_graph import BaseGraph, _merged, _with_state, record_checks
from src.models.domain import AxisymmetricDomain, BoundaryGraph
from src.models.exponents import MovingSphereProbe
from src.models.problem import ProblemSpec
from src.state import ScenarioState
from src.tools.exponent_tools import blowup_scale, critical_exponent, exponent_offset, intermediate_scale
from src.tools.functional_tools import DiscreteFunctional, c_formula
from src.tools.grid_tools import GridFunction, build_grid
from src.tools.oracle_tools import bubble
from src.tools.solver_tools import initial_guess
from src.tools.transform_tools import (
    kelvin_transform,
    moving_sphere_weight,
    moving_sphere_weight_derivative,
    sphere_weight_comparison,
)

SCALE_TOL = 1e-12
KELVIN_TOL = 2e-2
WEIGHT_TOL = 1e-12
FD_TOL = 1e-6
RAY_TOL = 1e-12
C_FORMULA_TOL = 1e-10


def _row(check: str, errors, tolerance: float) -> dict[str, object]:
    errors = np.asarray(errors, dtype=float)
    return {
        "check": check,
        "samples": int(errors.size),
        "max_error": float(errors.max()) if errors.size else 0.0,
        "tolerance": tolerance,
        "violations": int(np.count_nonzero(errors > tolerance)),
    }


def _stream(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


# ----------------------------------------------------------------------
# Closed-form laws
# ----------------------------------------------------------------------
def scale_law_errors(seed: int, draws: int) -> list[float]:
    """Relative gap between the defining and closed forms of the k_eps exponent."""
    rng = _stream(seed, 0)
    errors = []
    for _ in range(draws):
        N = int(rng.integers(3, 9))
        s1 = rng.uniform(0.05, 1.95)
        s2 = rng.uniform(0.0, s1)
        epsilon = rng.uniform(0.0, 0.5) * 2.0 * (2.0 - s1) / (N - 2)
        m = 10.0 ** rng.uniform(0.0, 6.0)

        k = blowup_scale(m, N, s1, s2, epsilon)
        p2_eps = critical_exponent(N, s2) - 1.0 - exponent_offset(s2, s1, epsilon)
        defining = -(p2_eps - 1.0) / (2.0 - s2)
        closed = -2.0 / (N - 2) + epsilon / (2.0 - s1)
        errors.append(abs(defining - closed) / max(1.0, abs(closed)))
        # r_eps sits between k_eps and |x_eps| when k < |x|
        absx = k * rng.uniform(1.0, 10.0)
        r = intermediate_scale(absx, k, s2)
        if not k * (1.0 - SCALE_TOL) <= r <= absx * (1.0 + SCALE_TOL):
            errors[-1] = math.inf
    return errors


def pohozaev_exponent_errors(seed: int, draws: int) -> list[float]:
    """(N - s) / 2*(s) = (N - 2) / 2, the algebra that leaves only boundary flux."""
    rng = _stream(seed, 1)
    errors = []
    for _ in range(draws):
        N = int(rng.integers(3, 9))
        s = rng.uniform(0.0, 2.0)
        errors.append(abs((N - s) / critical_exponent(N, s) - 0.5 * (N - 2)))
    return errors


def moving_sphere_errors(seed: int, samples: int, N: int) -> tuple[list[float], list[float]]:
    """eta'(mu) <= 0 on (mu1, mu_max] and agreement of eta' with a difference quotient."""
    rng = _stream(seed, 2)
    sign_errors, derivative_errors = [], []
    for _ in range(samples):
        direction = rng.normal(size=N)
        direction[-1] = abs(direction[-1]) + 0.05
        theta = direction / np.linalg.norm(direction)
        R = rng.uniform(0.5, 2.0)
        sphere_radius = R / math.sqrt(theta[-1]) * rng.uniform(1.01, 2.0)
        sphere = MovingSphereProbe(R=R, sphere_radius=sphere_radius, theta=tuple(theta.tolist()))
        mu = rng.uniform(sphere.mu1, sphere.mu_max)
        deriv = moving_sphere_weight_derivative(sphere, mu)
        sign_errors.append(max(deriv, 0.0))

        h = 1e-6 * mu
        if mu - h > sphere.mu1:
            quotient = (moving_sphere_weight(sphere, mu + h) - moving_sphere_weight(sphere, mu - h)) / (2.0 * h)
            derivative_errors.append(abs(quotient - deriv) / max(1.0, abs(deriv)))
    return sign_errors, derivative_errors


def weight_inequality_errors(seed: int, samples: int, N: int, s: float = 1.0) -> list[float]:
    """Relative excess of the reflected weight over |y|^{-s} inside B_lam(x_R) above the plane."""
    rng = _stream(seed, 3)
    errors = []
    while len(errors) < samples:
        R = rng.uniform(0.5, 2.0)
        radius = R * rng.uniform(1.01, 3.0)
        direction = rng.normal(size=N)
        point = direction / np.linalg.norm(direction) * radius * rng.uniform() ** (1.0 / N)
        point[-1] -= R
        if point[-1] <= 0.0:
            continue
        lhs, rhs = sphere_weight_comparison(point[None, :], R, radius, s)
        errors.append(max(float((lhs[0] - rhs[0]) / rhs[0]), 0.0))
    return errors


# ----------------------------------------------------------------------
# Discrete checks
# ----------------------------------------------------------------------
def kelvin_involution_errors(seed: int, fields: int, N: int, n_r: int, n_theta: int) -> list[float]:
    """sup |K(K u) - u| / sup |u| on 1/2 <= |y| <= 2 for bubbles above the origin."""
    rng = _stream(seed, 4)
    grid = build_grid(AxisymmetricDomain.truncated_half_space(N, 4.0), n_r, n_theta, 1.0)
    annulus = (grid.radius >= 0.5) & (grid.radius <= 2.0)
    errors = []
    for _ in range(fields):
        u = bubble(N, rng.uniform(0.5, 2.0), rng.uniform(0.5, 1.5), grid)
        twice = kelvin_transform(kelvin_transform(u, 0.0, 1.0), 0.0, 1.0)
        scale = float(np.max(np.abs(u.values[annulus])))
        errors.append(float(np.max(np.abs(twice.values[annulus] - u.values[annulus]))) / scale)
    return errors


def _check_specs(N: int) -> list[ProblemSpec]:
    flat = AxisymmetricDomain.half_ball_flat(N, 1.0)
    cap = AxisymmetricDomain.curved_cap(N, BoundaryGraph(alpha=-0.5, cutoff_radius=0.9), 0.9)
    return [ProblemSpec.two_pole(N, 1.5, 0.5, -1.0, domain, 0.1) for domain in (flat, cap)]


def _random_direction(rng: np.random.Generator, u: GridFunction) -> np.ndarray:
    w = rng.normal(size=u.grid.size)
    w[u.grid.dirichlet.ravel()] = 0.0
    return w / np.linalg.norm(w)


def variational_errors(seed: int, fields: int, N: int, n_r: int, n_theta: int) -> dict[str, list[float]]:
    """Gradient against central differences, ray maximum against a scan, Phi against c_formula.

    The difference check passes when the error is below FD_TOL or falls by
    at least 2.5x when the step halves (second order).
    """
    rng = _stream(seed, 5)
    specs = _check_specs(N)
    out: dict[str, list[float]] = {"gradient": [], "ray_maximum": [], "c_formula": []}
    for index in range(fields):
        spec = specs[index % len(specs)]
        grid = build_grid(spec.domain, n_r, n_theta, 1.5)
        functional = DiscreteFunctional.from_spec(spec, grid)
        u = initial_guess(grid, seed=int(rng.integers(2**31)))
        v = u.flat
        w = _random_direction(rng, u)

        slope = float(functional.gradient(v) @ w)
        scale = max(abs(slope), 1.0)
        h = 1e-3 * float(np.max(v))
        fd = [
            (functional.phi(v + step * w) - functional.phi(v - step * w)) / (2.0 * step) for step in (h, h / 2.0)
        ]
        coarse, fine = (abs(d - slope) / scale for d in fd)
        out["gradient"].append(0.0 if fine * 2.5 <= coarse else fine)

        t_star = functional.ray_scale(v)
        ts = np.geomspace(t_star / 100.0, 100.0 * t_star, 200)
        scan = max(functional.phi(t * v) for t in ts)
        top = functional.phi(t_star * v)
        out["ray_maximum"].append(max(scan - top, 0.0) / abs(top))

        A, B = functional.terms(t_star * v)
        level = c_formula(A, B, functional.coefficients, functional.exponents)
        out["c_formula"].append(abs(level - top) / abs(top))
    return out


class IdentitiesGraph(BaseGraph):
    """Closed-form identities and discrete consistency over random draws."""

    name = "identities-suite"

    def build_graph(self) -> StateGraph:
        graph = StateGraph(ScenarioState)
        self.add_nodes(
            graph,
            ("closed_form_laws", self.node_closed_form_laws),
            ("moving_spheres", self.node_moving_spheres),
            ("kelvin_involution", self.node_kelvin_involution),
            ("variational_checks", self.node_variational_checks),
            ("summarize", self.node_summarize),
        )
        self.add_output_tail(graph, after="summarize")
        return graph

    def _add_rows(self, state: ScenarioState, *rows: dict) -> ScenarioState:
        objects = _merged(state, "objects", rows=[*state.get("objects", {}).get("rows", []), *rows])
        return _with_state(state, objects=objects)

    def node_closed_form_laws(self, state: ScenarioState) -> ScenarioState:
        params, seed = state["params"], state["seed"]
        return self._add_rows(
            state,
            _row("blowup_scale_dual_formula", scale_law_errors(seed, params.draws), SCALE_TOL),
            _row("pohozaev_exponent_algebra", pohozaev_exponent_errors(seed, params.draws), SCALE_TOL),
        )

    def node_moving_spheres(self, state: ScenarioState) -> ScenarioState:
        params, seed = state["params"], state["seed"]
        sign_errors, derivative_errors = moving_sphere_errors(seed, params.samples, params.N)
        return self._add_rows(
            state,
            _row("moving_sphere_monotone", sign_errors, 0.0),
            _row("moving_sphere_derivative", derivative_errors, 1e-6),
            _row("reflected_weight_inequality", weight_inequality_errors(seed, params.samples, params.N), WEIGHT_TOL),
        )

    def node_kelvin_involution(self, state: ScenarioState) -> ScenarioState:
        params = state["params"]
        errors = kelvin_involution_errors(state["seed"], params.kelvin_fields, params.N, params.n_r, params.n_theta)
        return self._add_rows(state, _row("kelvin_involution", errors, KELVIN_TOL))

    def node_variational_checks(self, state: ScenarioState) -> ScenarioState:
        params = state["params"]
        errors = variational_errors(state["seed"], params.gradient_fields, params.N, params.n_r, params.n_theta)
        return self._add_rows(
            state,
            _row("gradient_finite_difference", errors["gradient"], FD_TOL),
            _row("ray_maximum_scan", errors["ray_maximum"], RAY_TOL),
            _row("nehari_level_formula", errors["c_formula"], C_FORMULA_TOL),
        )

    def node_summarize(self, state: ScenarioState) -> ScenarioState:
        """One check per identity; any sample past tolerance is a violation."""

        rows = state["objects"]["rows"]
        outcomes = [
            (row["check"], row["violations"] == 0, f"{row['violations']} of {row['samples']} samples past tolerance")
            for row in rows
        ]
        document = {row["check"]: {k: v for k, v in row.items() if k != "check"} for row in rows}
        self.logger.info("Identity suite: %d checks, %d failing", len(rows), sum(not ok for _, ok, _ in outcomes))
        return _with_state(
            state,
            **record_checks(state, outcomes),
            tables=_merged(state, "tables", **{"identities.csv": rows}),
            documents=_merged(state, "documents", **{"identities.json": document}),
        )


def create_identities_graph():
    """Build and compile the identity suite graph."""

    return IdentitiesGraph().compile()
