"""Right-hand sides, residuals, and series starts for the quasiradial profile ODEs.

A function of the form u = r^k f(theta) on the upper half-space (r = |x|,
theta = azimuth from the vertical axis) is p-harmonic exactly when f solves a
second-order ODE on [0, pi/2] with f(0) = 1, f'(0) = 0.  Three equivalent
first-order formulations are used downstream:

* the log-derivative equation for H = f'/f, whose escape to -infinity is the
  clean signal that f is about to vanish (used by the shooting solver),
* the (y, y') system for y = f itself, which stays regular through
  theta = pi/2 (used to reconstruct converged profiles),
* the normalized slope U = H/k together with its parameter sensitivity
  W = dU/dk (used by the monotonicity audit that underpins uniqueness).

theta = 0 is a regular singular point (the cot term), so trajectories are
launched from a first-order Taylor start at a small x0 rather than from 0.

All angles are radians; everything here is a pure function of its inputs and
safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ProblemParams",
    "HState",
    "YState",
    "UWState",
    "DegenerateStateError",
    "h_rhs",
    "h_initial_slope",
    "y_rhs",
    "u_rhs",
    "u_initial_slope",
    "w_rhs",
    "w_initial_slope",
    "full_residual",
    "series_start",
]

#: Largest angle accepted by a series start (beyond this the Taylor truncation
#: would no longer sit below the integration tolerances).
SERIES_START_MAX_X0 = 1e-4


class DegenerateStateError(ValueError):
    """Profile state with y and y' both (numerically) zero: the identically
    zero branch, on which the equation degenerates."""


@dataclass(frozen=True)
class ProblemParams:
    """One ODE instance: exponent p > 1, dimension N >= 2, homogeneity k.

    k < 0 is required by the shooting machinery; k = 1 and k = -(N-1) also
    appear in classification-only checks, so k is not restricted here.
    """

    p: float
    N: int
    k: float

    def __post_init__(self):
        if not (math.isfinite(self.p) and self.p > 1.0):
            raise ValueError(f"p must exceed 1, got {self.p!r}")
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N!r}")
        if not math.isfinite(self.k):
            raise ValueError(f"k must be finite, got {self.k!r}")


@dataclass(frozen=True)
class HState:
    """Angle x and log-derivative H = y'(x)/y(x)."""

    x: float
    H: float


@dataclass(frozen=True)
class YState:
    """Angle x, profile value y, and derivative y'."""

    x: float
    y: float
    yp: float


@dataclass(frozen=True)
class UWState:
    """Angle x, normalized slope U = H/k, and sensitivity W = dU/dk."""

    x: float
    U: float
    W: float


def _check_angle(x: float) -> None:
    # cot x is singular at 0 and pi; callers start from a series start instead.
    if not 0.0 < x < math.pi:
        raise ValueError(f"angle must lie in (0, pi), got {x!r}")


def _cot(x: float) -> float:
    return math.cos(x) / math.sin(x)


# -- H system -----------------------------------------------------------------

def _h_rhs(p: float, N: float, k: float, x: float, H: float) -> float:
    s = H * H + k * k
    num = s * s * (1.0 - p) + s * (k * (p - N) + (2.0 - N) * H * _cot(x))
    return num / ((p - 1.0) * H * H + k * k)


def h_rhs(params: ProblemParams, state: HState) -> float:
    """dH/dx for the log-derivative equation.

    The denominator (p-1)H^2 + k^2 is strictly positive for every real H
    whenever k != 0 and p > 1.
    """
    _check_angle(state.x)
    return _h_rhs(params.p, params.N, params.k, state.x, state.H)


def h_initial_slope(params: ProblemParams) -> float:
    """H'(0) = k(1-p)/(N-1) * (k - (N-p)/(1-p)).

    Negative for every k < (N-p)/(1-p) when 1 < p < N, and for every k < 0
    when p >= N; zero exactly at k = (N-p)/(1-p).
    """
    p, N, k = params.p, params.N, params.k
    return k * (1.0 - p) / (N - 1.0) * (k - (N - p) / (1.0 - p))


# -- y system -----------------------------------------------------------------

def _y_pp(p: float, N: float, k: float, x: float, y: float, yp: float) -> float:
    den = (p - 1.0) * yp * yp + k * k * y * y
    num = (
        ((3.0 - 2.0 * p) * k + p - N) * k * y * yp * yp
        + (k * (1.0 - p) + p - N) * k ** 3 * y ** 3
        + (2.0 - N) * yp * _cot(x) * (yp * yp + k * k * y * y)
    )
    return num / den


def y_rhs(params: ProblemParams, state: YState) -> tuple[float, float]:
    """(dy/dx, dy'/dx) for the profile equation solved for y''."""
    _check_angle(state.x)
    if abs(state.y) < 1e-14 and abs(state.yp) < 1e-14:
        raise DegenerateStateError(
            f"y and y' both below 1e-14 at x={state.x!r}: identically zero branch"
        )
    return state.yp, _y_pp(params.p, params.N, params.k, state.x, state.y, state.yp)


# -- U / W system -------------------------------------------------------------

def _u_rhs(p: float, N: float, k: float, x: float, U: float) -> float:
    s = U * U + 1.0
    num = s * s * k * (1.0 - p) + s * (p - N + (2.0 - N) * U * _cot(x))
    return num / ((p - 1.0) * U * U + 1.0)


def u_rhs(params: ProblemParams, state: UWState) -> float:
    """dU/dx for the normalized slope U = H/k; denominator is >= 1 always."""
    _check_angle(state.x)
    return _u_rhs(params.p, params.N, params.k, state.x, state.U)


def u_initial_slope(params: ProblemParams) -> float:
    """U'(0) = ((1-p)k + p - N)/(N-1)."""
    p, N, k = params.p, params.N, params.k
    return ((1.0 - p) * k + p - N) / (N - 1.0)


def w_initial_slope(params: ProblemParams) -> float:
    """W'(0) = (1-p)/(N-1), the k-derivative of U'(0)."""
    return (1.0 - params.p) / (params.N - 1.0)


def _w_rhs(p: float, N: float, k: float, x: float, U: float, W: float,
           uprime: float) -> float:
    den = (p - 1.0) * U * U + 1.0
    s = U * U + 1.0
    Q = (
        (1.0 - p) * (2.0 * U * uprime + 4.0 * (U ** 3 + U) * k)
        + 2.0 * U * (p - N)
        + (3.0 * U * U + 1.0) * (2.0 - N) * _cot(x)
    ) / den
    return Q * W + (1.0 - p) * s * s / den


def w_rhs(params: ProblemParams, state: UWState, uprime: float) -> float:
    """dW/dx for the sensitivity W = dU/dk.

    uprime must be the concurrently evaluated u_rhs value at the same state;
    the forcing term (1-p)(U^2+1)^2 / ((p-1)U^2+1) is negative for p > 1,
    which is what drives W below zero.
    """
    _check_angle(state.x)
    return _w_rhs(params.p, params.N, params.k, state.x, state.U, state.W, uprime)


# -- full residual ------------------------------------------------------------

def full_residual(params: ProblemParams, theta, f, fp, fpp):
    """Value of the full quasiradial expression at a sampled (f, f', f'').

    Zero (to tolerance) exactly when the sample lies on a p-harmonic
    quasiradial profile.  Accepts scalars or numpy arrays; theta must lie in
    (0, pi/2) componentwise (cot theta is evaluated directly).
    """
    p, N, k = params.p, params.N, params.k
    theta = np.asarray(theta, dtype=float)
    f = np.asarray(f, dtype=float)
    fp = np.asarray(fp, dtype=float)
    fpp = np.asarray(fpp, dtype=float)
    grad2 = fp * fp + k * k * f * f
    out = (
        ((p - 1.0) * fp * fp + k * k * f * f) * fpp
        + k * ((2.0 * p - 3.0) * k + N - p) * f * fp * fp
        + k ** 3 * (k * (p - 1.0) + N - p) * f ** 3
        + (N - 2.0) * grad2 * fp * (np.cos(theta) / np.sin(theta))
    )
    return out if out.ndim else float(out)


# -- series start -------------------------------------------------------------

def series_start(params: ProblemParams, x0: float) -> tuple[HState, UWState, YState]:
    """First-order Taylor start for every system at the small angle x0.

    H(x0) = H'(0) x0, U(x0) = U'(0) x0, W(x0) = W'(0) x0,
    y(x0) = 1 + H'(0) x0^2 / 2, y'(x0) = H'(0) x0.
    Relative truncation is O(x0^2) (O(x0^3) for y), far below integration
    tolerance at the default x0 = 1e-6.
    """
    if not 0.0 < x0 <= SERIES_START_MAX_X0:
        raise ValueError(
            f"series start requires 0 < x0 <= {SERIES_START_MAX_X0}, got {x0!r}"
        )
    hp0 = h_initial_slope(params)
    up0 = u_initial_slope(params)
    wp0 = w_initial_slope(params)
    return (
        HState(x0, hp0 * x0),
        UWState(x0, up0 * x0, wp0 * x0),
        YState(x0, 1.0 + 0.5 * hp0 * x0 * x0, hp0 * x0),
    )
