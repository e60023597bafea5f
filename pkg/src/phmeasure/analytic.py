"""Closed-form exponents, the cos-theta sign classifier, and analytic brackets.

Three independent sources of truth for the critical exponent alpha(p, N):

* closed forms at p = 2 (Poisson kernel), N = 2 (planar formula), and p = N
  (conformal case) -- exact oracles for the shooting solver;
* the affine-in-t expression Lambda(t) = alpha_coeff * t + beta_coeff * k^2
  (t = tan^2 theta) whose sign on t >= 0 decides whether r^k cos(theta) is
  p-super- or p-subharmonic;
* the four-regime exponent brackets that confine alpha between
  (N-1)/(p-1) and (p+N-3)/(2p-3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

__all__ = [
    "SignVerdict",
    "LambdaCoefficients",
    "known_exponent",
    "planar_exponent",
    "lambda_coefficients",
    "lambda_eval",
    "classify_cos_test",
    "exponent_bounds",
]

#: Both coefficients this close to zero count as exactly zero (float inputs
#: reach the algebraic zeros only up to roundoff).
HARMONIC_TOL = 1e-12


class SignVerdict(Enum):
    SUPERHARMONIC = "superharmonic"
    SUBHARMONIC = "subharmonic"
    HARMONIC = "harmonic"
    INDEFINITE = "indefinite"


@dataclass(frozen=True)
class LambdaCoefficients:
    """Coefficients of Lambda(t) = alpha_coeff * t + beta_coeff * k^2, t >= 0.

    alpha_coeff = (2p-3)k^2 + (N-p)k + 3-N-p   (zeros -(p+N-3)/(2p-3) and 1)
    beta_coeff  = (p-1)k^2  + (N-p)k + 1-N     (zeros -(N-1)/(p-1) and 1)
    """

    alpha_coeff: float
    beta_coeff: float


def _validate(p: float, N: int) -> None:
    if not p > 1.0:
        raise ValueError(f"p must exceed 1, got {p!r}")
    if int(N) != N or N < 2:
        raise ValueError(f"N must be an integer >= 2, got {N!r}")


def planar_exponent(p: float) -> float:
    """alpha(p, 2) = (3 - p + 2*sqrt(p^2 - 3p + 3)) / (3(p-1))."""
    return (3.0 - p + 2.0 * math.sqrt(p * p - 3.0 * p + 3.0)) / (3.0 * (p - 1.0))


def known_exponent(p: float, N: int) -> float | None:
    """Closed-form alpha(p, N) where one exists, else None.

    p = 2 gives N - 1 (Poisson kernel r^{-(N-1)} cos theta), N = 2 the planar
    formula, and p = N gives 1 (conformal case).  The three agree wherever
    they overlap.
    """
    _validate(p, N)
    if p == 2.0:
        return float(N - 1)
    if N == 2:
        return planar_exponent(p)
    if p == float(N):
        return 1.0
    return None


def lambda_coefficients(p: float, N: int, k: float) -> LambdaCoefficients:
    """Exact polynomial evaluation of both sign coefficients."""
    _validate(p, N)
    return LambdaCoefficients(
        alpha_coeff=(2.0 * p - 3.0) * k * k + (N - p) * k + 3.0 - N - p,
        beta_coeff=(p - 1.0) * k * k + (N - p) * k + 1.0 - N,
    )


def lambda_eval(p: float, N: int, k: float, t: float) -> float:
    """Lambda(t) = alpha_coeff * t + beta_coeff * k^2 for t = tan^2 theta."""
    c = lambda_coefficients(p, N, k)
    return c.alpha_coeff * t + c.beta_coeff * k * k


def classify_cos_test(p: float, N: int, k: float) -> SignVerdict:
    """Sign of the quasiradial expression for the test profile f = cos theta.

    Both coefficients <= 0 makes r^k cos(theta) p-superharmonic, both >= 0
    p-subharmonic, both zero p-harmonic; mixed signs are indefinite.
    """
    c = lambda_coefficients(p, N, k)
    a_zero = abs(c.alpha_coeff) <= HARMONIC_TOL
    b_zero = abs(c.beta_coeff) <= HARMONIC_TOL
    if a_zero and b_zero:
        return SignVerdict.HARMONIC
    if c.alpha_coeff <= HARMONIC_TOL and c.beta_coeff <= HARMONIC_TOL:
        return SignVerdict.SUPERHARMONIC
    if c.alpha_coeff >= -HARMONIC_TOL and c.beta_coeff >= -HARMONIC_TOL:
        return SignVerdict.SUBHARMONIC
    return SignVerdict.INDEFINITE


def exponent_bounds(p: float, N: int) -> tuple[float, float]:
    """Closed interval [lower, upper] confining alpha(p, N).

    With b1 = (N-1)/(p-1) and b2 = (p+N-3)/(2p-3): [b1, inf) for p <= 3/2
    (no finite upper bound exists there), [b1, b2] for 3/2 < p <= 2,
    [b2, b1] for 2 <= p <= N, and [b1, b2] for p >= N.  An upper measure
    bound delta^a forces alpha >= a; a lower one forces alpha <= a.
    """
    _validate(p, N)
    b1 = (N - 1.0) / (p - 1.0)
    if p <= 1.5:
        return b1, math.inf
    b2 = (p + N - 3.0) / (2.0 * p - 3.0)
    if p <= 2.0:
        return b1, b2
    if p <= N:
        return b2, b1
    return b1, b2
