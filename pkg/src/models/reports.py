"""Report records produced by the numerical tools.

Every record serializes to a flat JSON-friendly dict through ``to_record``
or ``model_dump`` so graphs can write it straight into CSV/JSON artifacts.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

Verdict = Literal["Compact", "BlowUp", "Inconclusive"]


class PohozaevCheck(BaseModel):
    """Pohozaev residual split into its volume and boundary-flux parts."""

    model_config = ConfigDict(frozen=True)

    residual: float
    volume_term: float
    boundary_term: float
    star_shaped: bool


class EnergyBreakdown(BaseModel):
    """Dirichlet term, weighted power terms and the derived scalars.

    Attributes:
        A: Dirichlet integral of |grad u|^2.
        B: Weighted power integral per pole.
        coefficients: Signed pole coefficients c_i.
        exponents: Effective powers q_i.
        phi: A/2 - sum c_i B_i / (q_i + 1).
        nehari: A - sum c_i B_i.
        pohozaev: Pohozaev residual (volume + boundary flux).
    """

    model_config = ConfigDict(frozen=True)

    A: float = Field(..., ge=0.0)
    B: tuple[float, ...]
    coefficients: tuple[float, ...]
    exponents: tuple[float, ...]
    phi: float
    nehari: float
    pohozaev: float = 0.0

    def to_record(self) -> dict[str, float]:
        """Flat record with keys A, B1, B2, ..., phi, nehari, pohozaev."""
        record: dict[str, float] = {"A": self.A}
        for i, value in enumerate(self.B, start=1):
            record[f"B{i}"] = value
        record.update(phi=self.phi, nehari=self.nehari, pohozaev=self.pohozaev)
        return record


class SolveReport(BaseModel):
    """Outcome of one least-energy descent."""

    model_config = ConfigDict(frozen=True)

    c_level: float
    iterations: int = Field(..., ge=0)
    grad_norm: float
    m: float = Field(..., ge=0.0)
    argmax: tuple[float, float]
    k: float
    converged: bool
    epsilon: float
    energy: EnergyBreakdown

    @property
    def abs_x(self) -> float:
        rho, z = self.argmax
        return float((rho * rho + z * z) ** 0.5)


class ContinuationStep(BaseModel):
    """One row of an epsilon continuation."""

    model_config = ConfigDict(frozen=True)

    epsilon: float
    report: SolveReport
    abs_x: float
    ratio: float
    r_scale: float

    def to_row(self, verdict: str) -> dict[str, object]:
        return {
            "epsilon": self.epsilon,
            "c_level": self.report.c_level,
            "m": self.report.m,
            "abs_x": self.abs_x,
            "k": self.report.k,
            "abs_x_over_k": self.ratio,
            "r_eps": self.r_scale,
            "grad_norm": self.report.grad_norm,
            "converged": self.report.converged,
            "verdict": verdict,
        }


class DecayFit(BaseModel):
    """Least-squares power-law fit v ~ C |y|^exponent on the outer shell."""

    model_config = ConfigDict(frozen=True)

    constant: float
    exponent: float
    residual: float
    accepted: bool
    inconclusive: bool


class Certification(BaseModel):
    """Residual norms at successive resolutions and the fitted order."""

    model_config = ConfigDict(frozen=True)

    residuals: tuple[float, ...]
    resolutions: tuple[int, ...]
    order: float
    certified: bool


class OracleConstants(BaseModel):
    """Computed reference constants for one dimension."""

    model_config = ConfigDict(frozen=True)

    N: int
    S_N: float
    S_N_closed_form: float
    C_N: float
    threshold: float
    hardy_sobolev_norm: dict[str, float] = Field(default_factory=dict)
    certification_orders: dict[str, float] = Field(default_factory=dict)


class SweepResult(BaseModel):
    """Maximum of t -> Phi(t u) over a ray."""

    model_config = ConfigDict(frozen=True)

    max_phi: float
    t_at_max: float


class GapRecord(BaseModel):
    """Energy gap of the curved-cap test function at one concentration scale."""

    model_config = ConfigDict(frozen=True)

    epsilon: float
    max_phi: float
    t_at_max: float
    gap: float
    phi_at_unit_t: float
    gap_at_unit_t: float


class GapFit(BaseModel):
    """Gap records plus the fitted and predicted epsilon-slopes.

    predicted_slope is -convention_factor * H(0) * K1, with the factor
    pinned from the measured expansion shifts.
    """

    model_config = ConfigDict(frozen=True)

    records: tuple[GapRecord, ...]
    c1: float
    mean_curvature: float
    K1: float
    slope: float
    slope_at_unit_t: float
    predicted_slope: float
    convention_factor: float = 1.0
    counterexamples: tuple[GapRecord, ...] = ()


class ExpansionShift(BaseModel):
    """Measured first-order shift of one integral against its prediction."""

    model_config = ConfigDict(frozen=True)

    term: str
    epsilon: float
    measured: float
    predicted: float

    @property
    def relative_error(self) -> float:
        if self.predicted == 0.0:
            return abs(self.measured)
        return abs(self.measured - self.predicted) / abs(self.predicted)

    def scaled(self, factor: float) -> "ExpansionShift":
        """Same measurement against factor times the prediction."""
        return self.model_copy(update={"predicted": factor * self.predicted})


class CurvatureConvention(BaseModel):
    """Measured H(0) over the lab value alpha, and the factor it pins (1 or 2)."""

    model_config = ConfigDict(frozen=True)

    ratio: float
    factor: float

    def consistent(self, rtol: float) -> bool:
        return abs(self.ratio - self.factor) <= rtol * self.factor


class BubbleRecord(BaseModel):
    """Supremum of the perturbed functional along one bubble ray."""

    model_config = ConfigDict(frozen=True)

    mu: float
    sup_phi: float
    t_at_max: float
    threshold: float
    margin: float
    below_threshold: bool
    inconclusive: bool


class ConcentrationBookkeeping(BaseModel):
    """Integrals A (Dirichlet), B (Hardy), C (critical), D (u^p) of a field."""

    model_config = ConfigDict(frozen=True)

    A: float
    B: float
    C: float
    D: float
    level: float
    level_from_identity: float
    identity_gap: float


class RegimeReport(BaseModel):
    """Dry-run classification of a scenario's parameters."""

    scenario: str
    parameters: dict[str, object]
    regimes: list[str] = Field(default_factory=list)
    violations: list[str] = Field(default_factory=list)
    notes: list[str] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations
