"""Scenario configuration models.

A scenario file is INI with a [run] section and one section named after the
scenario. Every section is validated with extra="forbid" so misspelled keys
are rejected instead of silently defaulted.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.config import config

ScenarioName = Literal[
    "thm11-curved-existence",
    "thm12-halfspace",
    "thm13-nonexistence-probe",
    "thm51-perturbed",
    "oracle-certify",
    "identities-suite",
]


def _split(value):
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class RunSection(_Section):
    """[run] section: which scenario, seed, output options."""

    scenario: ScenarioName
    seed: int = Field(default_factory=lambda: config.DEFAULT_SEED)
    out: str | None = None
    plots: bool = False


class GridSection(_Section):
    """Discretization and solver keys shared by the solving scenarios."""

    n_r: int = Field(default_factory=lambda: config.GRID_N_R, ge=8)
    n_theta: int = Field(default_factory=lambda: config.GRID_N_THETA, ge=8)
    gamma: float = Field(default_factory=lambda: config.GRID_GRADING, ge=1.0)
    tol: float = Field(default_factory=lambda: config.SOLVER_TOL, gt=0.0)
    max_iter: int = Field(default_factory=lambda: config.SOLVER_MAX_ITER, ge=1)

    def solver_options(self) -> dict[str, object]:
        return {
            "n_r": self.n_r,
            "n_theta": self.n_theta,
            "gamma": self.gamma,
            "tol": self.tol,
            "max_iter": self.max_iter,
        }


class TwoPoleSection(GridSection):
    """Dimension, weight exponents and lambda of the two-pole problem.

    CKN weights (a, b) may replace lam and s1; they are mapped with
    lambda = a(N-2-a), s = (b-a) q.
    """

    N: int = Field(default=3, ge=3)
    s1: float = Field(default=1.5, ge=0.0, le=2.0)
    s2: float = Field(default=0.5, ge=0.0, le=2.0)
    lam: float = -1.0
    ckn_a: float | None = None
    ckn_b: float | None = None

    @model_validator(mode="after")
    def _check_pair(self):
        if (self.ckn_a is None) != (self.ckn_b is None):
            raise ValueError("ckn_a and ckn_b must be given together")
        return self


class _Schedule(_Section):
    schedule: list[float] = Field(default_factory=lambda: [0.2, 0.1, 0.05, 0.025])

    @field_validator("schedule", mode="before")
    @classmethod
    def _parse_schedule(cls, value):
        return _split(value)


class CurvedExistenceSection(TwoPoleSection, _Schedule):
    """[thm11-curved-existence]"""

    alpha: float = -0.5
    r0: float = Field(default=0.9, gt=0.0)
    entire_rmax: float = Field(default=20.0, gt=0.0)
    ladder_depth: int = Field(default=4, ge=4)


class HalfspaceSection(TwoPoleSection):
    """[thm12-halfspace]"""

    rmax: float = Field(default=20.0, gt=0.0)
    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4])
    rmax_doubling: bool = True

    @field_validator("seeds", mode="before")
    @classmethod
    def _parse_seeds(cls, value):
        return _split(value)


class NonexistenceSection(TwoPoleSection, _Schedule):
    """[thm13-nonexistence-probe]"""

    s1: float = Field(default=1.0, ge=0.0, le=2.0)
    s2: float = Field(default=0.0, ge=0.0, le=2.0)
    rmax: float = Field(default=1.0, gt=0.0)
    pohozaev_tol: float = Field(default=0.05, gt=0.0)
    level_tol: float = Field(default=0.03, gt=0.0)


class PerturbedSection(GridSection, _Schedule):
    """[thm51-perturbed]"""

    N: int = Field(default=4, ge=3)
    s: float = Field(default=1.0, ge=0.0, lt=2.0)
    p: float | None = None
    rmax: float = Field(default=1.0, gt=0.0)
    center: float = Field(default=0.5, gt=0.0)
    cutoff_radius: float = Field(default=0.45, gt=0.0)
    mu_list: list[float] = Field(default_factory=lambda: [4.0, 8.0, 16.0, 32.0])
    solve: bool = True
    bookkeeping_tol: float = Field(default=0.02, gt=0.0)

    @field_validator("mu_list", mode="before")
    @classmethod
    def _parse_mu(cls, value):
        return _split(value)

    def exponent(self) -> float:
        """p, defaulting to the midpoint of (2*(s) - 1, (N+2)/(N-2))."""
        if self.p is not None:
            return self.p
        low = 2.0 * (self.N - self.s) / (self.N - 2) - 1.0
        high = (self.N + 2) / (self.N - 2)
        return 0.5 * (low + high)


class OracleSection(_Section):
    """[oracle-certify]"""

    dimensions: list[int] = Field(default_factory=lambda: [3, 4])
    s_values: list[float] = Field(default_factory=lambda: [1.0])

    @field_validator("dimensions", "s_values", mode="before")
    @classmethod
    def _parse_lists(cls, value):
        return _split(value)


class IdentitiesSection(_Section):
    """[identities-suite]"""

    N: int = Field(default=4, ge=3)
    draws: int = Field(default=1000, ge=1)
    samples: int = Field(default=10000, ge=1)
    kelvin_fields: int = Field(default=100, ge=1)
    gradient_fields: int = Field(default=100, ge=1)
    n_r: int = Field(default=24, ge=8)
    n_theta: int = Field(default=16, ge=8)


SECTION_MODELS: dict[str, type[BaseModel]] = {
    "thm11-curved-existence": CurvedExistenceSection,
    "thm12-halfspace": HalfspaceSection,
    "thm13-nonexistence-probe": NonexistenceSection,
    "thm51-perturbed": PerturbedSection,
    "oracle-certify": OracleSection,
    "identities-suite": IdentitiesSection,
}


class ScenarioConfig(BaseModel):
    """A parsed scenario: the [run] section plus the scenario's own section."""

    model_config = ConfigDict(frozen=True)

    run: RunSection
    params: BaseModel

    @property
    def name(self) -> str:
        return self.run.scenario

    def resolved(self) -> dict[str, object]:
        return {"run": self.run.model_dump(), self.name: self.params.model_dump()}
