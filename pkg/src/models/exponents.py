"""Exponent and parameter records for the Hardy-Sobolev problems."""

from __future__ import annotations

import math

from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator


class ExponentSet(BaseModel):
    """Critical and subcritical exponents for a two-pole problem.

    Attributes:
        two_star_1, two_star_2: Hardy-Sobolev exponents 2*(s1), 2*(s2).
        p1, p2: critical powers 2*(s_i) - 1.
        p1_eps, p2_eps: subcritical powers at offset epsilon.
    """

    model_config = ConfigDict(frozen=True)

    N: int = Field(..., ge=3)
    s1: float
    s2: float
    epsilon: float = Field(default=0.0, ge=0.0)
    two_star_1: float
    two_star_2: float
    p1: float
    p2: float
    p1_eps: float
    p2_eps: float


class CKNParams(BaseModel):
    """Caffarelli-Kohn-Nirenberg weight exponents (a, b)."""

    model_config = ConfigDict(frozen=True)

    a: float
    b: float

    @model_validator(mode="after")
    def _check_order(self) -> "CKNParams":
        if not self.a <= self.b <= self.a + 1:
            raise ValueError(f"CKN parameters need a <= b <= a + 1, got a={self.a}, b={self.b}")
        return self

    def q(self, N: int) -> float:
        """Lebesgue exponent q = 2N / (N - 2 + 2(b - a))."""
        return 2.0 * N / (N - 2 + 2.0 * (self.b - self.a))


class MovingSphereProbe(BaseModel):
    """A ray from the reflected center x_R = (0, ..., 0, -R) in direction theta."""

    model_config = ConfigDict(frozen=True)

    R: float = Field(..., gt=0.0)
    sphere_radius: float
    theta: tuple[float, ...] = Field(..., min_length=2)

    @model_validator(mode="after")
    def _check_geometry(self) -> "MovingSphereProbe":
        if self.sphere_radius <= self.R:
            raise ValueError("sphere_radius must exceed R")
        norm = math.sqrt(sum(t * t for t in self.theta))
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"theta must be a unit vector, |theta| = {norm}")
        if self.theta[-1] <= 0:
            raise ValueError("theta must point into the upper half-space (theta_N > 0)")
        return self

    @computed_field  # type: ignore[prop-decorator]
    @property
    def mu1(self) -> float:
        """Distance along theta at which the ray from x_R crosses the boundary plane."""
        return self.R / self.theta[-1]

    @property
    def mu_max(self) -> float:
        """Upper end sphere_radius**2 / R of the monotonicity range."""
        return self.sphere_radius**2 / self.R

    @property
    def dimension(self) -> int:
        return len(self.theta)
