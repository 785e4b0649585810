"""Axisymmetric domains with the singular point at the boundary origin.

Every domain is described in the flattened chart, where it is the half ball
{|y| < rmax, y_N > 0}. A curved cap is the preimage of that half ball under
the flattening map y = (x', x_N - alpha |x'|^2); the shear has unit Jacobian
so chart and physical volumes coincide.
"""

from __future__ import annotations

import math
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import gamma as gamma_fn


class DomainKind(str, Enum):
    TRUNCATED_HALF_SPACE = "truncated_half_space"
    CURVED_CAP = "curved_cap"
    HALF_BALL_FLAT = "half_ball_flat"


class BoundaryGraph(BaseModel):
    """Quadratic boundary graph x_N = alpha |x'|^2 near the origin.

    Attributes:
        alpha: Common coefficient of the quadratic form (equal alpha_i).
        cutoff_radius: Radius r0 of the flattening chart.
    """

    model_config = ConfigDict(frozen=True)

    alpha: float
    cutoff_radius: float = Field(..., gt=0.0)

    @model_validator(mode="after")
    def _check_chart(self) -> "BoundaryGraph":
        if abs(self.alpha) * self.cutoff_radius >= 0.5:
            raise ValueError(
                f"chart is not a diffeomorphism: |alpha| * r0 = "
                f"{abs(self.alpha) * self.cutoff_radius:.4g} >= 0.5"
            )
        return self

    def height(self, rho):
        """Graph height alpha * rho**2 over axial distance rho."""
        return self.alpha * rho**2


class AxisymmetricDomain(BaseModel):
    """One of the three domain kinds, truncated at radius rmax in the chart."""

    model_config = ConfigDict(frozen=True)

    kind: DomainKind
    N: int = Field(..., ge=3)
    rmax: float = Field(..., gt=0.0)
    graph: BoundaryGraph | None = None

    @model_validator(mode="after")
    def _check_kind(self) -> "AxisymmetricDomain":
        if self.kind is DomainKind.CURVED_CAP:
            if self.graph is None:
                raise ValueError("curved_cap needs a boundary graph")
            if self.rmax > self.graph.cutoff_radius:
                raise ValueError("curved_cap must fit inside the flattening chart (rmax <= r0)")
        elif self.graph is not None and self.graph.alpha != 0.0:
            raise ValueError(f"{self.kind.value} has a flat boundary; alpha must be 0")
        return self

    @classmethod
    def truncated_half_space(cls, N: int, rmax: float) -> "AxisymmetricDomain":
        return cls(kind=DomainKind.TRUNCATED_HALF_SPACE, N=N, rmax=rmax)

    @classmethod
    def half_ball_flat(cls, N: int, rmax: float = 1.0) -> "AxisymmetricDomain":
        return cls(kind=DomainKind.HALF_BALL_FLAT, N=N, rmax=rmax)

    @classmethod
    def curved_cap(cls, N: int, graph: BoundaryGraph, rmax: float) -> "AxisymmetricDomain":
        return cls(kind=DomainKind.CURVED_CAP, N=N, rmax=rmax, graph=graph)

    @property
    def alpha(self) -> float:
        return self.graph.alpha if self.graph is not None else 0.0

    @property
    def star_shaped(self) -> bool:
        """Star-shaped about the origin (x . nu >= 0 on the whole boundary)."""
        return self.alpha >= 0.0

    def measure(self) -> float:
        """Closed-form volume |S^{N-1}| rmax^N / (2N) of the (sheared) half ball."""
        sphere = 2.0 * math.pi ** (self.N / 2) / float(gamma_fn(self.N / 2))
        return sphere * self.rmax**self.N / (2.0 * self.N)
