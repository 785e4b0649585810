"""Problem specification: dimension, signed poles, subcritical offset, domain.

The PDE is

    Delta u + sum_i c_i (u+)^{q_i} / |x - P_i|^{s_i} = 0,

with q_i = 2*(s_i) - 1 - offset_i(epsilon) unless a pole fixes its own power.
A pure power term is a pole with s = 0.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.models.domain import AxisymmetricDomain, DomainKind
from src.tools.exponent_tools import critical_exponent, exponent_offset
from src.utils.errors import ParameterError


class Pole(BaseModel):
    """One weighted power term.

    Attributes:
        coefficient: Signed coefficient c_i (lambda for the first pole).
        s: Weight exponent in [0, 2].
        location: Height of the pole on the symmetry axis (0 = boundary origin).
            A meridian point (rho, z) is accepted when rho = 0; poles off the
            axis are not axisymmetric and are rejected.
        exponent: Fixed power q_i; None means the (sub)critical power.
    """

    model_config = ConfigDict(frozen=True)

    coefficient: float
    s: float = Field(..., ge=0.0, le=2.0)
    location: float = Field(default=0.0, ge=0.0)
    exponent: float | None = Field(default=None, gt=1.0)

    @field_validator("location", mode="before")
    @classmethod
    def _axis_height(cls, value):
        return axis_height(value)


def axis_height(point) -> float:
    """Height of a pole given as a height or as a meridian point (rho, z)."""
    if isinstance(point, (tuple, list)):
        if len(point) != 2:
            raise ParameterError(f"pole must be a height or a (rho, z) point, got {point!r}")
        rho, z = (float(v) for v in point)
        if rho != 0.0:
            raise ParameterError(f"pole {point!r} is off the symmetry axis; only axis poles are axisymmetric")
        return z
    return float(point)


class ProblemSpec(BaseModel):
    """Complete description of one boundary-value problem."""

    model_config = ConfigDict(frozen=True)

    N: int = Field(..., ge=3)
    poles: tuple[Pole, ...] = Field(..., min_length=1)
    epsilon: float = Field(default=0.0, ge=0.0)
    domain: AxisymmetricDomain

    @model_validator(mode="after")
    def _check_consistency(self) -> "ProblemSpec":
        if self.domain.N != self.N:
            raise ValueError(f"domain dimension {self.domain.N} differs from N={self.N}")
        for pole in self.poles:
            if pole.location > self.domain.rmax or (
                pole.location == self.domain.rmax and self.domain.kind is DomainKind.TRUNCATED_HALF_SPACE
            ):
                raise ValueError(f"pole at height {pole.location} lies outside the domain")
        for pole, q in zip(self.poles, self.exponents()):
            linear_hardy = pole.s == 2.0 and self.epsilon == 0.0 and pole.exponent is None
            if q <= 1.0 and not linear_hardy:
                raise ValueError(
                    f"effective exponent {q:.6g} of pole s={pole.s} must stay > 1; "
                    f"epsilon={self.epsilon} is too large"
                )
        return self

    # ------------------------------------------------------------------
    # Constructors
    # ------------------------------------------------------------------
    @classmethod
    def two_pole(
        cls,
        N: int,
        s1: float,
        s2: float,
        lam: float,
        domain: AxisymmetricDomain,
        epsilon: float = 0.0,
    ) -> "ProblemSpec":
        """Main problem Delta u + lam u^{p1}/|x|^{s1} + u^{p2}/|x|^{s2} = 0."""
        if not s2 < s1:
            raise ValueError(f"two-pole problem needs s2 < s1, got s1={s1}, s2={s2}")
        return cls(
            N=N,
            poles=(Pole(coefficient=lam, s=s1), Pole(coefficient=1.0, s=s2)),
            epsilon=epsilon,
            domain=domain,
        )

    @classmethod
    def perturbed(cls, N: int, s: float, p: float, domain: AxisymmetricDomain) -> "ProblemSpec":
        """Perturbed problem Delta u - u^{2*(s)-1}/|x|^s + u^p + u^{(N+2)/(N-2)} = 0."""
        return cls(
            N=N,
            poles=(
                Pole(coefficient=-1.0, s=s),
                Pole(coefficient=1.0, s=0.0, exponent=p),
                Pole(coefficient=1.0, s=0.0),
            ),
            domain=domain,
        )

    @classmethod
    def multi_pole(
        cls,
        N: int,
        hardy_terms: list[tuple[float, object]],
        domain: AxisymmetricDomain,
    ) -> "ProblemSpec":
        """Delta u - sum_i u^{2*(s_i)-1}/|x - P_i|^{s_i} + u^{(N+2)/(N-2)} = 0.

        hardy_terms holds (s_i, P_i) with P_i a height on the axis or a
        meridian point (0, z). The boundary points on the axis are the origin
        and, for bounded domains, the top of the outer sphere (0, rmax);
        heights in between give interior poles.
        """
        poles = tuple(Pole(coefficient=-1.0, s=s, location=axis_height(P)) for s, P in hardy_terms)
        return cls(N=N, poles=poles + (Pole(coefficient=1.0, s=0.0),), domain=domain)

    def on_boundary(self, pole: Pole) -> bool:
        """Whether the pole sits on the physical boundary of the domain."""
        if pole.location == 0.0:
            return True
        bounded = self.domain.kind is not DomainKind.TRUNCATED_HALF_SPACE
        return bounded and pole.location == self.domain.rmax

    def with_epsilon(self, epsilon: float) -> "ProblemSpec":
        return ProblemSpec(N=self.N, poles=self.poles, epsilon=epsilon, domain=self.domain)

    def with_domain(self, domain: AxisymmetricDomain) -> "ProblemSpec":
        return ProblemSpec(N=self.N, poles=self.poles, epsilon=self.epsilon, domain=domain)

    # ------------------------------------------------------------------
    # Exponents
    # ------------------------------------------------------------------
    def scale_exponents(self) -> tuple[float, float]:
        """(s1, s2): largest and smallest s among the critical-power poles."""
        critical = [p.s for p in self.poles if p.exponent is None]
        if not critical:
            critical = [p.s for p in self.poles]
        return max(critical), min(critical)

    def exponents(self) -> tuple[float, ...]:
        """Effective power q_i of each pole at this epsilon."""
        s_ref, _ = self.scale_exponents()
        out = []
        for pole in self.poles:
            if pole.exponent is not None:
                out.append(pole.exponent)
            else:
                offset = exponent_offset(pole.s, s_ref, self.epsilon) if self.epsilon else 0.0
                out.append(critical_exponent(self.N, pole.s) - 1.0 - offset)
        return tuple(out)

    def coefficients(self) -> tuple[float, ...]:
        return tuple(p.coefficient for p in self.poles)

    @property
    def lam(self) -> float:
        """Coefficient of the first pole (lambda of the two-pole problem)."""
        return self.poles[0].coefficient
