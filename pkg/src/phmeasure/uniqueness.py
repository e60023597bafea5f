"""Numerical audit of the monotonicity mechanism behind uniqueness.

The normalized slope U = H/k is strictly increasing along every admissible
trajectory, and its parameter sensitivity W = dU/dk stays strictly negative
past the origin: trajectories for distinct k never cross in U.  That
ordering is what forces a single critical k.  This module integrates the
(U, W) pair directly and cross-checks W against a central finite difference
of two neighboring U trajectories, which is the independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_ode import ProblemParams, _u_rhs, _w_rhs, series_start
from .rk45 import integrate
from .shooting import Classification, classify_k, shooting_ceiling

__all__ = [
    "UWTrajectory",
    "MonotonicityReport",
    "BlowupBeforeEndError",
    "ClassificationMismatchError",
    "integrate_uw",
    "audit_monotonicity",
]

HALF_PI = math.pi / 2.0
MAX_STEP = math.pi / 100.0

#: U beyond this counts as escaped (the trajectory is blowing up).
U_ESCAPE = 1e8


class BlowupBeforeEndError(RuntimeError):
    """U escaped before the requested endpoint."""


class ClassificationMismatchError(RuntimeError):
    """A k submitted to the audit does not classify as undershoot."""


@dataclass(frozen=True)
class UWTrajectory:
    """Sampled (x, U, W) along one trajectory."""

    p: float
    N: int
    k: float
    x: np.ndarray
    U: np.ndarray
    W: np.ndarray


@dataclass(frozen=True)
class MonotonicityReport:
    """Audit summary: max_W must be negative, fd_agreement finite.

    fd_agreement is the largest relative deviation between the integrated W
    and the central finite difference (U(x, k+h) - U(x, k-h)) / (2h), taken
    where |W| > 1e-6.
    """

    p: float
    N: int
    k_samples: tuple
    x_grid: np.ndarray
    max_W: float
    fd_agreement: float


def _uw_grid_values(params: ProblemParams, x_grid, *, rtol, atol, x0,
                    with_w=True):
    p, N, k = params.p, float(params.N), params.k
    grid = [float(t) for t in x_grid]
    collected = {}

    if with_w:
        def rhs(x, s):
            U, W = s
            up = _u_rhs(p, N, k, x, U)
            return (up, _w_rhs(p, N, k, x, U, W, up))
    else:
        def rhs(x, s):
            return (_u_rhs(p, N, k, x, s[0]),)

    _, uw0, _ = series_start(params, x0)
    state = (uw0.U, uw0.W) if with_w else (uw0.U,)
    status, x_end, _ = integrate(
        rhs, x0, state, grid[-1], rtol=rtol, atol=atol, max_step=MAX_STEP,
        escape=lambda s: s[0] >= U_ESCAPE, escape_tol=1e-9,
        checkpoints=grid, on_checkpoint=lambda cx, cy: collected.__setitem__(cx, cy),
    )
    if status == "escape":
        raise BlowupBeforeEndError(
            f"U escaped at x={x_end!r} before the endpoint {grid[-1]!r} "
            f"(p={p}, N={params.N}, k={k})"
        )
    return np.array([collected[t] for t in grid])


def integrate_uw(params: ProblemParams, x_end: float, *, rtol: float = 1e-10,
                 atol: float = 1e-10, x0: float = 1e-6,
                 x_grid=None) -> UWTrajectory:
    """Co-integrate (U, W) from the series start, sampling on x_grid.

    x_grid defaults to 200 equally spaced points on [1e-3, x_end]; x_end
    must sit strictly inside (x0, pi/2) -- callers supply a safe endpoint
    from a prior classification.  Raises BlowupBeforeEndError if U exceeds
    1e8 on the way.
    """
    if not x0 < x_end < HALF_PI:
        raise ValueError(f"x_end must lie in (x0, pi/2), got {x_end!r}")
    if x_grid is None:
        x_grid = np.linspace(1e-3, x_end, 200)
    x_grid = np.asarray(x_grid, dtype=float)
    vals = _uw_grid_values(params, x_grid, rtol=rtol, atol=atol, x0=x0)
    return UWTrajectory(p=params.p, N=params.N, k=params.k, x=x_grid,
                        U=vals[:, 0], W=vals[:, 1])


def audit_monotonicity(p: float, N: int, k_list, h: float = 1e-5, *,
                       rtol: float = 1e-10, atol: float = 1e-10,
                       n_grid: int = 200) -> MonotonicityReport:
    """Audit W < 0 and the finite-difference agreement over a k sample.

    Every k in k_list must classify as undershoot (else
    ClassificationMismatchError), and k +/- h must stay admissible.  The
    audit window [1e-3, pi/2 - 1e-3] excludes the series-start region and
    the near-boundary steepening.
    """
    if not 1e-7 <= h <= 1e-4:
        raise ValueError(f"h must lie in [1e-7, 1e-4], got {h!r}")
    k_list = [float(k) for k in k_list]
    if not k_list:
        raise ValueError("k_list must be nonempty")
    ceiling = shooting_ceiling(p, N)
    grid = np.linspace(1e-3, HALF_PI - 1e-3, n_grid)
    max_w = -math.inf
    fd_agreement = 0.0
    for k in k_list:
        if k + h >= ceiling:
            raise ValueError(
                f"k + h = {k + h!r} reaches the admissible ceiling {ceiling!r}"
            )
        if classify_k(ProblemParams(p, N, k), rtol=rtol, atol=atol) \
                is not Classification.UNDERSHOOT:
            raise ClassificationMismatchError(
                f"k={k!r} does not classify as undershoot for p={p}, N={N}"
            )
        traj = integrate_uw(ProblemParams(p, N, k), float(grid[-1]),
                            rtol=rtol, atol=atol, x_grid=grid)
        u_plus = _uw_grid_values(ProblemParams(p, N, k + h), grid,
                                 rtol=rtol, atol=atol, x0=1e-6,
                                 with_w=False)[:, 0]
        u_minus = _uw_grid_values(ProblemParams(p, N, k - h), grid,
                                  rtol=rtol, atol=atol, x0=1e-6,
                                  with_w=False)[:, 0]
        fd = (u_plus - u_minus) / (2.0 * h)
        mask = np.abs(traj.W) > 1e-6
        if mask.any():
            rel = np.abs(fd[mask] - traj.W[mask]) / np.abs(traj.W[mask])
            fd_agreement = max(fd_agreement, float(rel.max()))
        max_w = max(max_w, float(traj.W.max()))
    return MonotonicityReport(p=p, N=N, k_samples=tuple(k_list), x_grid=grid,
                              max_W=max_w, fd_agreement=fd_agreement)
