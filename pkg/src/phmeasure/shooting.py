"""Topological shooting for the critical homogeneity exponent k(p, N).

For each admissible k < 0 the log-derivative H of the profile decreases from
H(0) = 0 and either stays finite through pi/2 (k above critical: undershoot)
or escapes to -infinity at some x_k < pi/2 (k below critical: overshoot).
The critical k(p, N) is the single crossing between the two regimes, so a
bracketing bisection converges to it; the bracket is seeded from the analytic
exponent bounds.

Admissibility: k < 0, and additionally k < (N-p)/(1-p) when 1 < p < N (at
that value H'(0) = 0 and the decreasing-H argument no longer applies).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .analytic import exponent_bounds
from .core_ode import ProblemParams, _h_rhs, series_start
from .rk45 import StepUnderflowError, integrate_scalar

__all__ = [
    "Classification",
    "ShotKind",
    "ShotOutcome",
    "ExponentResult",
    "BracketFailureError",
    "NonMonotoneBracketError",
    "StepUnderflowError",
    "shooting_ceiling",
    "integrate_h",
    "classify_k",
    "initial_bracket",
    "solve_exponent",
]

HALF_PI = math.pi / 2.0

#: Hard cap on the adaptive step; keeps the smooth phase well resolved.
MAX_STEP = math.pi / 100.0

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-10
DEFAULT_BLOWUP_THRESHOLD = 1e8
DEFAULT_SERIES_X0 = 1e-6


class BracketFailureError(RuntimeError):
    """Geometric expansion exhausted without producing a valid bracket."""


class NonMonotoneBracketError(RuntimeError):
    """A bisection iterate contradicted the overshoot/undershoot ordering."""


class Classification(Enum):
    UNDERSHOOT = "undershoot"
    OVERSHOOT = "overshoot"


class ShotKind(Enum):
    REACHED_HALF_PI = "reached_half_pi"
    BLEW_UP = "blew_up"


@dataclass(frozen=True)
class ShotOutcome:
    """Result of one shot: H at pi/2, or the localized blow-up angle."""

    kind: ShotKind
    h_at_end: float | None = None
    x_blowup: float | None = None

    def __post_init__(self):
        if self.kind is ShotKind.REACHED_HALF_PI:
            if self.h_at_end is None or self.x_blowup is not None:
                raise ValueError("REACHED_HALF_PI carries h_at_end only")
        else:
            if self.x_blowup is None or self.h_at_end is not None:
                raise ValueError("BLEW_UP carries x_blowup only")
            if not 0.0 < self.x_blowup < HALF_PI:
                raise ValueError(
                    f"x_blowup must lie in (0, pi/2), got {self.x_blowup!r}"
                )


@dataclass(frozen=True)
class ExponentResult:
    """Converged critical exponent with bracket diagnostics."""

    p: float
    N: int
    k_star: float
    alpha: float
    bracket_lo: float
    bracket_hi: float
    iterations: int
    tol: float
    residual_max: float


def shooting_ceiling(p: float, N: int) -> float:
    """Supremum of admissible shooting k: (N-p)/(1-p) for p < N, else 0."""
    return (N - p) / (1.0 - p) if p < N else 0.0


def _validate_shot_args(params, rtol, atol, blowup_threshold):
    if not params.k < 0.0:
        raise ValueError(f"shooting requires k < 0, got k={params.k!r}")
    ceiling = shooting_ceiling(params.p, params.N)
    if params.p < params.N and not params.k < ceiling:
        raise ValueError(
            f"shooting with 1 < p < N requires k < (N-p)/(1-p) = {ceiling!r}, "
            f"got k={params.k!r}"
        )
    for name, val in (("rtol", rtol), ("atol", atol)):
        if not 1e-14 <= val <= 1e-6:
            raise ValueError(f"{name} must lie in [1e-14, 1e-6], got {val!r}")
    if not blowup_threshold >= 1e6:
        raise ValueError(
            f"blowup_threshold must be >= 1e6, got {blowup_threshold!r}"
        )


def integrate_h(params: ProblemParams, *, rtol: float = DEFAULT_RTOL,
                atol: float = DEFAULT_ATOL,
                blowup_threshold: float = DEFAULT_BLOWUP_THRESHOLD,
                series_x0: float = DEFAULT_SERIES_X0,
                on_step=None) -> ShotOutcome:
    """Shoot the H equation from a series start toward pi/2.

    Declares blow-up when H <= -blowup_threshold; the crossing is localized
    to a bracket narrower than 1e-9 by step halving.  Raises
    StepUnderflowError if the controller stalls before either terminal
    condition (never swallowed).
    """
    _validate_shot_args(params, rtol, atol, blowup_threshold)
    h_state, _, _ = series_start(params, series_x0)
    p, N, k = params.p, float(params.N), params.k
    floor = -blowup_threshold

    def rhs(x, H):
        return _h_rhs(p, N, k, x, H)

    status, x, H = integrate_scalar(
        rhs, series_x0, h_state.H, HALF_PI, rtol=rtol, atol=atol,
        max_step=MAX_STEP, escape=lambda v: v <= floor, escape_tol=1e-9,
        on_step=on_step,
    )
    if status == "end":
        return ShotOutcome(ShotKind.REACHED_HALF_PI, h_at_end=H)
    return ShotOutcome(ShotKind.BLEW_UP, x_blowup=x)


def classify_k(params: ProblemParams, *, rtol: float = DEFAULT_RTOL,
               atol: float = DEFAULT_ATOL,
               blowup_threshold: float = DEFAULT_BLOWUP_THRESHOLD,
               series_x0: float = DEFAULT_SERIES_X0) -> Classification:
    """Undershoot iff the shot reaches pi/2 with H still finite."""
    outcome = integrate_h(params, rtol=rtol, atol=atol,
                          blowup_threshold=blowup_threshold,
                          series_x0=series_x0)
    if outcome.kind is ShotKind.REACHED_HALF_PI:
        return Classification.UNDERSHOOT
    return Classification.OVERSHOOT


def initial_bracket(p: float, N: int, *, rtol: float = DEFAULT_RTOL,
                    atol: float = DEFAULT_ATOL,
                    blowup_threshold: float = DEFAULT_BLOWUP_THRESHOLD,
                    max_expansions: int = 60) -> tuple[float, float]:
    """Bracket [k_lo, k_hi] with classify(k_lo) overshoot, classify(k_hi)
    undershoot.

    Seeds from the exponent bounds b1 = (N-1)/(p-1), b2 = (p+N-3)/(2p-3)
    with a 10% margin; for p <= 3/2 (where b2 degenerates) only the upper
    seed exists and the low end starts at -2*b1.  Endpoints are kept
    strictly below the admissible ceiling, and each side is expanded
    geometrically (low end doubling away, high end halving its gap to the
    ceiling) until its classification is correct or the expansion budget is
    spent.
    """
    if not p > 1.0:
        raise ValueError(f"p must exceed 1, got {p!r}")
    if int(N) != N or N < 2:
        raise ValueError(f"N must be an integer >= 2, got {N!r}")
    ceiling = shooting_ceiling(p, N)
    hi_cap = ceiling - 1e-3 * (1.0 + abs(ceiling))
    b1 = (N - 1.0) / (p - 1.0)
    if p > 1.5:
        b2 = (p + N - 3.0) / (2.0 * p - 3.0)
        margin = 0.1 * abs(b1 - b2) + 1e-3
        k_lo = -max(b1, b2) - margin
        k_hi = min(-min(b1, b2) + margin, hi_cap)
    else:
        k_lo = -2.0 * b1
        k_hi = min(-b1 + 1e-3, hi_cap)

    def cls(k):
        return classify_k(ProblemParams(p, N, k), rtol=rtol, atol=atol,
                          blowup_threshold=blowup_threshold)

    for _ in range(max_expansions + 1):
        if cls(k_hi) is Classification.UNDERSHOOT:
            break
        k_hi = 0.5 * (k_hi + ceiling)
    else:
        raise BracketFailureError(
            f"no undershoot endpoint found below the ceiling for p={p}, N={N}"
        )
    for _ in range(max_expansions + 1):
        if cls(k_lo) is Classification.OVERSHOOT:
            break
        k_lo *= 2.0
    else:
        raise BracketFailureError(
            f"no overshoot endpoint found down to k={k_lo!r} for p={p}, N={N}"
        )
    return k_lo, k_hi


def solve_exponent(p: float, N: int, tol: float = 1e-10, *,
                   rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
                   blowup_threshold: float = DEFAULT_BLOWUP_THRESHOLD,
                   residual_points: int = 1000,
                   recheck_every: int = 0) -> ExponentResult:
    """Bisect to the critical k(p, N) and report alpha = -k.

    Maintains classify(k_lo) = overshoot, classify(k_hi) = undershoot until
    the bracket is narrower than tol; k_star is the final midpoint.  The
    residual figure reconstructs the profile at k_star and takes the maximum
    normalized residual of the full equation over residual_points interior
    samples.  recheck_every > 0 re-classifies the current endpoints every
    that many iterations and raises NonMonotoneBracketError on any
    contradiction (a tripwire for classification noise near the boundary).
    """
    if not 1e-12 <= tol <= 1e-4:
        raise ValueError(f"tol must lie in [1e-12, 1e-4], got {tol!r}")
    k_lo, k_hi = initial_bracket(p, N, rtol=rtol, atol=atol,
                                 blowup_threshold=blowup_threshold)

    def cls(k):
        return classify_k(ProblemParams(p, N, k), rtol=rtol, atol=atol,
                          blowup_threshold=blowup_threshold)

    iterations = 0
    while k_hi - k_lo > tol:
        mid = 0.5 * (k_lo + k_hi)
        if not k_lo < mid < k_hi:
            break  # bracket already at float resolution
        iterations += 1
        if cls(mid) is Classification.OVERSHOOT:
            k_lo = mid
        else:
            k_hi = mid
        if recheck_every and iterations % recheck_every == 0:
            if (cls(k_lo) is not Classification.OVERSHOOT
                    or cls(k_hi) is not Classification.UNDERSHOOT):
                raise NonMonotoneBracketError(
                    f"bracket [{k_lo!r}, {k_hi!r}] lost its classification "
                    f"ordering after {iterations} iterations"
                )
    k_star = 0.5 * (k_lo + k_hi)

    from .profile import compute_profile, normalized_residual
    prof = compute_profile(p, N, k_star, n_points=residual_points + 4,
                           rtol=rtol, atol=atol)
    residual_max = float(abs(normalized_residual(prof)).max())
    return ExponentResult(
        p=p, N=N, k_star=k_star, alpha=-k_star, bracket_lo=k_lo,
        bracket_hi=k_hi, iterations=iterations, tol=tol,
        residual_max=residual_max,
    )
