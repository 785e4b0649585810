"""Exponent algebra and closed-form scales for the doubly-critical problems.

All functions are pure and validate their inputs, raising ParameterError on
values outside the admissible domain.
"""

from __future__ import annotations

import math

from src.models.exponents import CKNParams, ExponentSet
from src.utils.errors import ExcludedCaseError, InvariantViolationError, ParameterError
from src.utils.logging_config import logger

SCALE_IDENTITY_RTOL = 1e-12


def _check_dimension(N: int) -> None:
    if int(N) != N or N < 3:
        raise ParameterError(f"dimension N must be an integer >= 3, got {N}")


def _check_s(s: float) -> None:
    if not 0.0 <= s <= 2.0:
        raise ParameterError(f"Hardy exponent s must lie in [0, 2], got {s}")


def critical_exponent(N: int, s: float) -> float:
    """Hardy-Sobolev exponent 2*(s) = 2(N - s) / (N - 2)."""
    _check_dimension(N)
    _check_s(s)
    return 2.0 * (N - s) / (N - 2)


def exponent_offset(s: float, s_ref: float, epsilon: float) -> float:
    """Offset epsilon (2 - s) / (2 - s_ref) subtracted from a critical power.

    The pole with s = s_ref loses exactly epsilon; the others lose the amount
    that keeps the blow-up scale common to every term.
    """
    if epsilon == 0.0:
        return 0.0
    if s_ref >= 2.0:
        raise ParameterError("a subcritical offset needs s1 < 2")
    return epsilon * (2.0 - s) / (2.0 - s_ref)


def subcritical_exponents(N: int, s1: float, s2: float, epsilon: float) -> tuple[float, float]:
    """Subcritical powers (p1(eps), p2(eps)) of the two-pole problem."""
    _check_dimension(N)
    _check_s(s1)
    _check_s(s2)
    if not s1 > s2:
        raise ParameterError(f"need s1 > s2, got s1={s1}, s2={s2}")
    if epsilon < 0:
        raise ParameterError(f"epsilon must be >= 0, got {epsilon}")

    p1 = critical_exponent(N, s1) - 1.0 - exponent_offset(s1, s1, epsilon)
    p2 = critical_exponent(N, s2) - 1.0 - exponent_offset(s2, s1, epsilon)
    if p1 <= 1.0 or p2 <= 1.0:
        raise ParameterError(
            f"epsilon={epsilon} too large: exponents ({p1:.6g}, {p2:.6g}) must stay > 1"
        )
    return p1, p2


def exponent_set(N: int, s1: float, s2: float, epsilon: float = 0.0) -> ExponentSet:
    """All exponents of the two-pole problem in one record."""
    p1_eps, p2_eps = subcritical_exponents(N, s1, s2, epsilon)
    two_star_1 = critical_exponent(N, s1)
    two_star_2 = critical_exponent(N, s2)
    return ExponentSet(
        N=N,
        s1=s1,
        s2=s2,
        epsilon=epsilon,
        two_star_1=two_star_1,
        two_star_2=two_star_2,
        p1=two_star_1 - 1.0,
        p2=two_star_2 - 1.0,
        p1_eps=p1_eps,
        p2_eps=p2_eps,
    )


def blowup_scale(m: float, N: int, s1: float, s2: float, epsilon: float) -> float:
    """Concentration length k = m^{-(p2(eps) - 1) / (2 - s2)}.

    The exponent is cross-checked against the equivalent closed form
    -2/(N-2) + eps/(2-s1); a mismatch raises InvariantViolationError.
    """
    _check_dimension(N)
    _check_s(s1)
    _check_s(s2)
    if not m > 0 or not math.isfinite(m):
        raise ParameterError(f"blow-up scale needs a finite m > 0, got {m}")
    if s2 >= 2.0:
        raise ParameterError("blow-up scale needs s2 < 2")

    p2_eps = critical_exponent(N, s2) - 1.0 - exponent_offset(s2, s1, epsilon)
    defining = -(p2_eps - 1.0) / (2.0 - s2)
    closed = -2.0 / (N - 2) + (epsilon / (2.0 - s1) if epsilon else 0.0)
    if abs(defining - closed) > SCALE_IDENTITY_RTOL * max(1.0, abs(closed)):
        raise InvariantViolationError(
            f"scale exponents disagree: {defining!r} vs {closed!r}"
        )
    return m**defining


def intermediate_scale(absx: float, k: float, s2: float) -> float:
    """Intermediate length r = |x|^{s2/2} k^{(2 - s2)/2}."""
    if not absx > 0 or not k > 0:
        raise ParameterError(f"intermediate scale needs |x| > 0 and k > 0, got {absx}, {k}")
    _check_s(s2)
    return absx ** (s2 / 2.0) * k ** ((2.0 - s2) / 2.0)


def ckn_to_hardy(params: CKNParams, N: int) -> tuple[float, float]:
    """Map CKN weights (a, b) to the Hardy data (lambda, s).

    Returns lambda = a(N - 2 - a) and s = (b - a) q.
    """
    _check_dimension(N)
    if math.isclose(params.b, params.a + 1.0, rel_tol=0.0, abs_tol=1e-14):
        raise ExcludedCaseError("the CKN map excludes b = a + 1")
    if params.a >= (N - 2) / 2:
        # a = (N-2)/2 is the Hardy endpoint; lambda is still well defined
        logger.warning(
            "CKN parameter a=%s is not below (N-2)/2=%s; lambda=%s is at or past its maximum",
            params.a,
            (N - 2) / 2,
            params.a * (N - 2 - params.a),
        )
    lam = params.a * (N - 2 - params.a)
    s = (params.b - params.a) * params.q(N)
    return lam, s
