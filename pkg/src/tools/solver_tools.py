"""Least-energy solver, epsilon continuation and blow-up rescaling.

The least-energy level is inf over u >= 0 of max_t Phi(t u). The solver
descends the ray-reduced energy E(u) = Phi(t*(u) u) with Sobolev (H^1)
gradient steps d = K^{-1} grad Phi, projects onto u >= 0, rescales onto the
Nehari manifold and accepts a step by an Armijo backtracking rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.config import config
from src.models.domain import AxisymmetricDomain
from src.models.problem import ProblemSpec
from src.models.reports import ContinuationStep, SolveReport, Verdict
from src.tools.exponent_tools import blowup_scale, intermediate_scale
from src.tools.functional_tools import DiscreteFunctional, energy
from src.tools.grid_tools import Grid2D, GridFunction, build_grid, evaluate
from src.utils.errors import (
    DiagnosticsError,
    InvariantViolationError,
    NoMaximumError,
    ParameterError,
    ScaleError,
)
from src.utils.logging_config import logger

MIN_SCALE = 1e-12


class SolverOptions(BaseModel):
    """Descent and continuation settings; defaults come from the lab config."""

    model_config = ConfigDict(frozen=True)

    tol: float = Field(default_factory=lambda: config.SOLVER_TOL, gt=0.0)
    max_iter: int = Field(default_factory=lambda: config.SOLVER_MAX_ITER, ge=1)
    step: float = Field(default=1.0, gt=0.0)
    armijo: float = Field(default_factory=lambda: config.SOLVER_ARMIJO, gt=0.0, lt=0.5)
    min_step: float = Field(default_factory=lambda: config.SOLVER_MIN_STEP, gt=0.0)
    blowup_factor: float = Field(default_factory=lambda: config.BLOWUP_FACTOR, gt=1.0)
    blowup_steps: int = Field(default_factory=lambda: config.BLOWUP_STEPS, ge=2)
    compact_tol: float = Field(default_factory=lambda: config.COMPACT_TOL, gt=0.0)
    allow_critical: bool = False
    n_r: int = Field(default_factory=lambda: config.GRID_N_R, ge=8)
    n_theta: int = Field(default_factory=lambda: config.GRID_N_THETA, ge=8)
    gamma: float = Field(default_factory=lambda: config.GRID_GRADING, ge=1.0)


def default_grid(spec: ProblemSpec, opts: SolverOptions) -> Grid2D:
    return build_grid(spec.domain, opts.n_r, opts.n_theta, opts.gamma)


def initial_guess(
    grid: Grid2D,
    *,
    depth_fraction: float = 0.25,
    width_fraction: float = 0.25,
    seed: int | None = None,
) -> GridFunction:
    """Truncated bubble centered on the axis at depth_fraction * rmax.

    With a seed, depth and width are drawn around the defaults and a
    smooth random modulation is applied.
    """
    rng = np.random.default_rng(seed) if seed is not None else None
    if rng is not None:
        depth_fraction = rng.uniform(0.15, 0.5)
        width_fraction = width_fraction * rng.uniform(0.5, 2.0)

    N = grid.N
    center = depth_fraction * grid.rmax
    width = width_fraction * grid.rmax
    dist_sq = grid.rho**2 + (grid.z - center) ** 2
    values = (1.0 / (1.0 + dist_sq / width**2)) ** ((N - 2) / 2.0)
    values *= np.clip(1.0 - grid.radius / grid.rmax, 0.0, None)
    if rng is not None:
        phase = rng.uniform(0.0, 2.0 * math.pi, size=2)
        values *= 1.0 + 0.2 * np.sin(3.0 * grid.radius / grid.rmax + phase[0]) * np.cos(2.0 * grid.theta[None, :] + phase[1])
    values[grid.dirichlet] = 0.0
    return GridFunction(grid, values)


def _rescale(functional: DiscreteFunctional, v: np.ndarray) -> tuple[np.ndarray, float]:
    t = functional.ray_scale(v)
    w = t * v
    return w, functional.phi(w)


def _report(
    u: GridFunction,
    spec: ProblemSpec,
    level: float,
    iterations: int,
    grad_norm: float,
    converged: bool,
) -> SolveReport:
    m, argmax = u.maximum()
    s1, s2 = spec.scale_exponents()
    k = blowup_scale(m, spec.N, s1, s2, spec.epsilon) if m > 0 else 0.0
    return SolveReport(
        c_level=level,
        iterations=iterations,
        grad_norm=grad_norm,
        m=m,
        argmax=argmax,
        k=k,
        converged=converged,
        epsilon=spec.epsilon,
        energy=energy(u, spec),
    )


def minimize(
    spec: ProblemSpec,
    init: GridFunction,
    opts: SolverOptions | None = None,
) -> tuple[GridFunction, SolveReport]:
    """Nehari-normalized Sobolev-gradient descent toward the least-energy level.

    Returns the final field and its report; hitting the iteration cap or a
    stalled line search yields converged=False.
    """
    opts = opts or SolverOptions()
    if spec.epsilon <= 0.0 and not opts.allow_critical:
        raise ParameterError("minimize needs epsilon > 0 (set allow_critical for critical exponents)")

    grid = init.grid
    functional = DiscreteFunctional.from_spec(spec, grid)
    free = grid.free_index
    factor = grid.stiffness_factor

    v = np.maximum(init.flat, 0.0)
    v[grid.dirichlet.ravel()] = 0.0
    if not np.any(v > 0.0):
        raise ParameterError("initial field must be nonnegative and not identically zero")

    u, level = _rescale(functional, v)
    tau = opts.step
    iterations = 0
    grad_norm = math.inf
    converged = False

    for _ in range(opts.max_iter):
        g = functional.gradient(u)[free]
        d = factor.solve(g)
        slope = float(g @ d)
        A = float(u @ (grid.stiffness @ u))
        grad_norm = math.sqrt(max(slope, 0.0) / A)
        if grad_norm <= opts.tol:
            converged = True
            break

        accepted = False
        while tau >= opts.min_step:
            trial = u.copy()
            trial[free] -= tau * d
            np.maximum(trial, 0.0, out=trial)
            if np.any(trial > 0.0):
                try:
                    candidate, candidate_level = _rescale(functional, trial)
                except NoMaximumError:
                    candidate_level = math.inf
                if candidate_level <= level - opts.armijo * tau * slope:
                    accepted = True
                    break
            tau *= 0.5

        if not accepted:
            logger.info("Line search stalled after %d iterations (grad_norm=%.3e)", iterations, grad_norm)
            break
        if candidate_level > level:
            raise InvariantViolationError(f"accepted step increased the energy: {level!r} -> {candidate_level!r}")
        if candidate_level < 0.0:
            raise DiagnosticsError(f"energy became negative ({candidate_level:.6g}); descent ran away")

        u, level = candidate, candidate_level
        iterations += 1
        tau = min(2.0 * tau, opts.step)
        if iterations % 25 == 0:
            logger.debug("iter=%d level=%.12g grad_norm=%.3e tau=%.3g", iterations, level, grad_norm, tau)

    field_out = GridFunction(grid, u)
    report = _report(field_out, spec, level, iterations, grad_norm, converged)
    if converged and report.c_level <= 0.0:
        raise InvariantViolationError(f"converged level {report.c_level!r} is not positive")
    logger.info(
        "Solve eps=%g: level=%.10g iterations=%d grad_norm=%.2e converged=%s",
        spec.epsilon,
        report.c_level,
        iterations,
        grad_norm,
        converged,
    )
    return field_out, report


# ----------------------------------------------------------------------
# Continuation
# ----------------------------------------------------------------------
@dataclass
class ContinuationTrace:
    """Warm-started solves along a decreasing epsilon schedule."""

    schedule: tuple[float, ...]
    steps: list[ContinuationStep]
    verdict: Verdict
    fields: list[GridFunction] = field(default_factory=list, repr=False)
    concentrates_at_origin: bool = False

    def rows(self) -> list[dict[str, object]]:
        return [step.to_row(self.verdict) for step in self.steps]

    @property
    def levels(self) -> list[float]:
        return [step.report.c_level for step in self.steps]


def _approaches_origin(steps: Sequence[ContinuationStep]) -> bool:
    """|x_eps| non-increasing along the steps and strictly smaller at the end."""
    distances = [step.abs_x for step in steps]
    if len(distances) < 2:
        return False
    return all(b <= a for a, b in zip(distances, distances[1:])) and distances[-1] < distances[0]


def _classify(steps: Sequence[ContinuationStep], opts: SolverOptions) -> Verdict:
    if len(steps) < 2 or not all(step.report.converged for step in steps):
        return "Inconclusive"
    ms = [step.report.m for step in steps]
    tail = ms[-opts.blowup_steps:]
    increasing = len(tail) == opts.blowup_steps and all(b > a for a, b in zip(tail, tail[1:]))
    if increasing and ms[-1] > opts.blowup_factor * ms[0]:
        # growth without concentration at the boundary origin is not a blow-up
        return "BlowUp" if _approaches_origin(steps[-opts.blowup_steps:]) else "Inconclusive"
    levels = [step.report.c_level for step in steps]
    change = abs(levels[-1] - levels[-2]) / abs(levels[-1])
    if max(ms) <= opts.blowup_factor * ms[0] and change <= opts.compact_tol:
        return "Compact"
    return "Inconclusive"


def continuation(
    spec: ProblemSpec,
    schedule: Sequence[float],
    opts: SolverOptions | None = None,
    *,
    grid: Grid2D | None = None,
    init: GridFunction | None = None,
) -> ContinuationTrace:
    """Solve along a strictly decreasing epsilon schedule with warm starts."""
    opts = opts or SolverOptions()
    schedule = tuple(float(e) for e in schedule)
    if not schedule:
        raise ParameterError("continuation needs a non-empty schedule")
    if any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise ParameterError(f"schedule must be strictly decreasing: {schedule}")
    if schedule[-1] <= 0.0:
        raise ParameterError("schedule floor must be positive")

    grid = grid or default_grid(spec, opts)
    current = init or initial_guess(grid)
    steps: list[ContinuationStep] = []
    fields: list[GridFunction] = []

    for eps in schedule:
        step_spec = spec.with_epsilon(eps)
        current, report = minimize(step_spec, current, opts)
        _, s2 = step_spec.scale_exponents()
        abs_x = report.abs_x
        ratio = abs_x / report.k if report.k > 0 else math.inf
        r_scale = intermediate_scale(abs_x, report.k, s2) if abs_x > 0 and report.k > 0 else 0.0
        steps.append(ContinuationStep(epsilon=eps, report=report, abs_x=abs_x, ratio=ratio, r_scale=r_scale))
        fields.append(current)

    verdict = _classify(steps, opts)
    logger.info(
        "Continuation over %d steps: verdict=%s, max u from %.4g to %.4g",
        len(steps),
        verdict,
        steps[0].report.m,
        steps[-1].report.m,
    )
    return ContinuationTrace(
        schedule=schedule,
        steps=steps,
        verdict=verdict,
        fields=fields,
        concentrates_at_origin=_approaches_origin(steps),
    )


def warm_start_check(
    spec: ProblemSpec,
    trace: ContinuationTrace,
    index: int,
    opts: SolverOptions | None = None,
) -> float:
    """|c_cold - c_warm| at one schedule point, warning past 10 tol."""
    opts = opts or SolverOptions()
    step = trace.steps[index]
    grid = trace.fields[index].grid
    _, cold = minimize(spec.with_epsilon(step.epsilon), initial_guess(grid), opts)
    difference = abs(cold.c_level - step.report.c_level)
    if difference > 10.0 * opts.tol * abs(step.report.c_level):
        logger.warning(
            "Warm and cold starts disagree at eps=%g: %.10g vs %.10g",
            step.epsilon,
            step.report.c_level,
            cold.c_level,
        )
    return difference


# ----------------------------------------------------------------------
# Blow-up rescaling
# ----------------------------------------------------------------------
def blowup_rescale(
    u: GridFunction,
    report: SolveReport,
    spec: ProblemSpec,
    reference: Grid2D | None = None,
) -> GridFunction:
    """v(y) = m^{-1} u(x_eps + k y) about the maximizer, v(0) = 1.

    x_eps is taken on the axis at the height of the argmax node. The profile
    is sampled on the half-ball {y_N >= 0} of the reference grid, by default
    a flat half-ball of radius (rmax - height) / k graded toward y = 0.
    Points leaving the domain of u get 0.
    """
    m, k = report.m, report.k
    if not m > 0.0:
        raise ParameterError("blow-up rescaling needs m > 0")
    if not math.isfinite(k) or k < MIN_SCALE:
        raise ScaleError(f"blow-up scale k={k!r} underflows")

    grid = u.grid
    height = float(report.argmax[1])
    if reference is None:
        reach = (grid.rmax - height) / k
        if reach <= 0.0:
            raise ScaleError(f"maximizer at height {height:g} leaves no room for the rescaled profile")
        domain = AxisymmetricDomain.truncated_half_space(spec.N, reach)
        reference = build_grid(domain, grid.n_r, grid.n_theta, grid.gamma)

    rho = k * reference.rho
    z = height + k * reference.z
    return GridFunction(reference, evaluate(u, rho, z) / m)


def rescaled_cauchy(profiles: Sequence[GridFunction], radius: float) -> list[float]:
    """Sup differences of successive rescaled profiles on |y| <= radius.

    Each pair is compared on the nodes of the earlier profile's grid.
    """
    gaps = []
    for first, second in zip(profiles, profiles[1:]):
        grid = first.grid
        inside = grid.radius <= radius
        other = evaluate(second, grid.rho[inside], grid.z[inside])
        gaps.append(float(np.max(np.abs(first.values[inside] - other))) if np.any(inside) else 0.0)
    return gaps
