"""Desk-scale 2D p-harmonic measure experiment on a truncated half-plane.

Solves the p-Laplace Dirichlet problem on [-L, L] x [0, L] with boundary
data 1 on the bottom segment [-delta, delta] and 0 on the rest of the
boundary (the top and side edges truncate the half-plane; their error only
rescales omega, so the fitted delta-slope is unaffected).  The discrete
problem minimizes the p-Dirichlet energy of the piecewise-linear
interpolant on the two-triangle split of each grid cell, regularized by
eps_reg under the |grad u|^(p-2) weight.  For frozen weights that energy
reduces to a 5-point weighted Laplacian whose off-diagonal signs give a
discrete maximum principle; the nonlinearity is handled by lagged-weight
fixed-point iterations with a sparse direct solve per iteration
(deterministic by construction).

omega(delta) is read at the base point (0, 1) by bilinear interpolation,
and the scaling exponent is the least-squares slope of log omega against
log delta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .analytic import SignVerdict, classify_cos_test

__all__ = [
    "GridSpec",
    "PHarmonicSolution",
    "MeasureExperiment",
    "EnvelopeReport",
    "NonConvergenceError",
    "solve_p_harmonic",
    "run_experiment",
    "barrier_envelope_check",
    "export_experiment",
]

#: Regularization added to |grad u|^2 inside the weight.
EPS_REG = 1e-8


class NonConvergenceError(RuntimeError):
    """The lagged-weight iteration failed to meet tolerance within its
    budget; carries the last sup-norm change as .residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class GridSpec:
    """Truncated half-plane [-L, L] x [0, L] with n square cells across.

    n must be even (the height holds n/2 cells); the boundary ball must be
    resolved by at least 4 cells (delta >= 4 * h_grid) and stay clear of
    the truncation edges (delta <= L/8).
    """

    half_width: float
    n: int
    delta: float

    def __post_init__(self):
        if not self.half_width >= 4.0:
            raise ValueError(f"half_width must be >= 4, got {self.half_width!r}")
        if int(self.n) != self.n or self.n < 64 or self.n % 2:
            raise ValueError(f"n must be an even integer >= 64, got {self.n!r}")
        if not 0.0 < self.delta <= 1.0:
            raise ValueError(f"delta must lie in (0, 1], got {self.delta!r}")
        if self.delta > self.half_width / 8.0:
            raise ValueError(
                f"delta={self.delta!r} exceeds half_width/8 = "
                f"{self.half_width / 8.0!r}"
            )
        if self.delta < 4.0 * self.h_grid:
            raise ValueError(
                f"delta={self.delta!r} is under-resolved: needs >= 4 cells "
                f"(h_grid={self.h_grid!r})"
            )

    @property
    def h_grid(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def delta_effective(self) -> float:
        """delta snapped by the cell-center rule: a bottom cell carries the
        value 1 iff its center lies within delta of the origin."""
        return math.floor(self.delta / self.h_grid + 0.5) * self.h_grid


@dataclass(frozen=True)
class PHarmonicSolution:
    """Converged nodal field with its grid and iteration diagnostics.

    u has shape (n+1, n//2+1), indexed [ix, iy]; bound_violation records
    how far the raw solve strayed outside [0, 1] before the final
    projection (roundoff/conditioning scale).
    """

    spec: GridSpec
    p: float
    u: np.ndarray
    x: np.ndarray
    y: np.ndarray
    iterations: int
    change: float
    bound_violation: float

    def value_at(self, px: float, py: float) -> float:
        """Bilinear interpolation of the nodal field."""
        h = self.spec.h_grid
        fx = (px + self.spec.half_width) / h
        fy = py / h
        ix = min(max(int(fx), 0), len(self.x) - 2)
        iy = min(max(int(fy), 0), len(self.y) - 2)
        tx, ty = fx - ix, fy - iy
        u = self.u
        return float(
            (1 - tx) * (1 - ty) * u[ix, iy] + tx * (1 - ty) * u[ix + 1, iy]
            + (1 - tx) * ty * u[ix, iy + 1] + tx * ty * u[ix + 1, iy + 1]
        )

    @property
    def omega(self) -> float:
        """Measure estimate at the base point (0, 1)."""
        return self.value_at(0.0, 1.0)


@dataclass(frozen=True)
class MeasureExperiment:
    """Fitted delta-scaling of omega at one p."""

    p: float
    deltas: tuple
    deltas_effective: tuple
    omegas: tuple
    alpha_hat: float
    intercept: float
    r2: float


@dataclass(frozen=True)
class EnvelopeReport:
    """Outcome of one barrier comparison with its worst node."""

    ok: bool
    side: str
    worst_margin: float
    worst_node: tuple
    constant: float


def _boundary_values(spec: GridSpec) -> np.ndarray:
    """Nodal Dirichlet data: 1 on bottom nodes touching a ball cell, else 0."""
    nx, ny = spec.n, spec.n // 2
    h = spec.h_grid
    vals = np.zeros((nx + 1, ny + 1))
    centers = -spec.half_width + (np.arange(nx) + 0.5) * h
    hot = np.abs(centers) <= spec.delta
    nodes_hot = np.zeros(nx + 1, dtype=bool)
    nodes_hot[:-1] |= hot
    nodes_hot[1:] |= hot
    vals[:, 0] = np.where(nodes_hot, 1.0, 0.0)
    return vals


def _triangle_weights(u: np.ndarray, h: float, p: float):
    """Lagged weights (|grad u|^2 + eps)^((p-2)/2) per triangle.

    Each cell splits along its rising diagonal: triangle 1 has its right
    angle at the lower-left corner, triangle 2 at the upper-right.
    """
    gx1 = (u[1:, :-1] - u[:-1, :-1]) / h
    gy1 = (u[:-1, 1:] - u[:-1, :-1]) / h
    gx2 = (u[1:, 1:] - u[:-1, 1:]) / h
    gy2 = (u[1:, 1:] - u[1:, :-1]) / h
    w1 = (gx1 * gx1 + gy1 * gy1 + EPS_REG) ** ((p - 2.0) / 2.0)
    w2 = (gx2 * gx2 + gy2 * gy2 + EPS_REG) ** ((p - 2.0) / 2.0)
    return w1, w2


def _edge_conductances(w1: np.ndarray, w2: np.ndarray, nx: int, ny: int):
    """Per-edge conductances of the frozen-weight quadratic form.

    Horizontal edge (ix,iy)-(ix+1,iy) is a leg of triangle 1 in the cell
    above it and of triangle 2 in the cell below; vertical edges likewise
    left/right.  Each adjacent triangle contributes w/2.
    """
    ch = np.zeros((nx, ny + 1))
    ch[:, :-1] += 0.5 * w1
    ch[:, 1:] += 0.5 * w2
    cv = np.zeros((nx + 1, ny))
    cv[:-1, :] += 0.5 * w1
    cv[1:, :] += 0.5 * w2
    return ch, cv


def _solve_linearized(ch, cv, bvals, nx, ny):
    """Direct solve of the weighted 5-point system on interior nodes."""
    ix, iy = np.meshgrid(np.arange(1, nx), np.arange(1, ny), indexing="ij")
    ix, iy = ix.ravel(), iy.ravel()
    idx = (ix - 1) * (ny - 1) + (iy - 1)
    n_int = (nx - 1) * (ny - 1)

    c_left = ch[ix - 1, iy]
    c_right = ch[ix, iy]
    c_down = cv[ix, iy - 1]
    c_up = cv[ix, iy]
    diag = c_left + c_right + c_down + c_up

    rows = [idx]
    cols = [idx]
    vals = [diag]
    rhs = np.zeros(n_int)

    for cond, jx, jy in (
        (c_left, ix - 1, iy),
        (c_right, ix + 1, iy),
        (c_down, ix, iy - 1),
        (c_up, ix, iy + 1),
    ):
        interior = (jx >= 1) & (jx <= nx - 1) & (jy >= 1) & (jy <= ny - 1)
        rows.append(idx[interior])
        cols.append((jx[interior] - 1) * (ny - 1) + (jy[interior] - 1))
        vals.append(-cond[interior])
        np.add.at(rhs, idx[~interior],
                  cond[~interior] * bvals[jx[~interior], jy[~interior]])

    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_int, n_int),
    )
    sol = spla.spsolve(A, rhs)
    out = bvals.copy()
    out[1:nx, 1:ny] = sol.reshape(nx - 1, ny - 1)
    return out


def solve_p_harmonic(spec: GridSpec, p: float, max_iter: int = 200,
                     tol: float = 1e-7,
                     _boundary_override: np.ndarray | None = None
                     ) -> PHarmonicSolution:
    """Solve the discrete p-Laplace Dirichlet problem on the spec's grid.

    Iterates lagged-weight linearizations until the sup-norm change between
    successive fields is <= tol; raises NonConvergenceError (with the last
    change attached) when max_iter is spent first.  The returned field is
    projected onto [0, 1]; the pre-projection excursion is recorded as
    bound_violation.
    """
    if not p > 1.0:
        raise ValueError(f"p must exceed 1, got {p!r}")
    if not 1e-10 <= tol <= 1e-6:
        raise ValueError(f"tol must lie in [1e-10, 1e-6], got {tol!r}")
    nx, ny = spec.n, spec.n // 2
    h = spec.h_grid
    bvals = _boundary_values(spec) if _boundary_override is None \
        else _boundary_override
    u = bvals.copy()
    change = math.inf
    for iteration in range(1, max_iter + 1):
        w1, w2 = _triangle_weights(u, h, p)
        ch, cv = _edge_conductances(w1, w2, nx, ny)
        u_new = _solve_linearized(ch, cv, bvals, nx, ny)
        change = float(np.abs(u_new - u).max())
        u = u_new
        if change <= tol:
            break
    else:
        raise NonConvergenceError(
            f"lagged iteration stalled at change={change!r} after "
            f"{max_iter} iterations (p={p}, delta={spec.delta})",
            residual=change,
        )
    violation = float(max(-u.min(), u.max() - 1.0, 0.0))
    u = np.clip(u, 0.0, 1.0)
    xs = -spec.half_width + np.arange(nx + 1) * h
    ys = np.arange(ny + 1) * h
    return PHarmonicSolution(spec=spec, p=p, u=u, x=xs, y=ys,
                             iterations=iteration, change=change,
                             bound_violation=violation)


def run_experiment(p: float, deltas, *, half_width: float = 4.0,
                   n: int = 640, tol: float = 1e-7,
                   max_iter: int = 200, progress=None) -> MeasureExperiment:
    """Fit the delta-scaling exponent of omega(delta) at fixed p.

    deltas must hold at least 4 values inside [0.05, 0.5] spanning at least
    a factor of 4; the log-log fit uses the cell-snapped effective deltas.
    """
    deltas = sorted(float(d) for d in deltas)
    if len(deltas) < 4:
        raise ValueError("need at least 4 delta values")
    if deltas[0] < 0.05 or deltas[-1] > 0.5:
        raise ValueError("deltas must lie within [0.05, 0.5]")
    if deltas[-1] / deltas[0] < 4.0:
        raise ValueError("deltas must span at least a factor of 4")
    omegas = []
    deltas_eff = []
    for d in deltas:
        spec = GridSpec(half_width=half_width, n=n, delta=d)
        sol = solve_p_harmonic(spec, p, max_iter=max_iter, tol=tol)
        omegas.append(sol.omega)
        deltas_eff.append(spec.delta_effective)
        if progress is not None:
            progress(f"p={p} delta={d} omega={sol.omega:.6g} "
                     f"({sol.iterations} iterations)")
    logd = np.log(np.asarray(deltas_eff))
    logw = np.log(np.asarray(omegas))
    slope, intercept = np.polyfit(logd, logw, 1)
    fitted = slope * logd + intercept
    ss_res = float(np.sum((logw - fitted) ** 2))
    ss_tot = float(np.sum((logw - logw.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
    return MeasureExperiment(
        p=p, deltas=tuple(deltas), deltas_effective=tuple(deltas_eff),
        omegas=tuple(omegas), alpha_hat=float(slope),
        intercept=float(intercept), r2=r2,
    )


def barrier_envelope_check(p: float, k: float, solution: PHarmonicSolution,
                           slack: float = 0.05) -> EnvelopeReport:
    """Compare the discrete field against the r^k cos(theta) barrier.

    For a superharmonic (p, 2, k) the scaled barrier dominates the measure:
      u <= 3^|k| cos(pi/6)^-1 delta^|k| r^k cos(theta)   for r >= 3 delta.
    For a subharmonic one it undercuts it:
      u >= lambda (2r/delta)^k cos(theta), with lambda fitted as the
    smallest field value on the half-circle r ~ delta/2 (the comparison
    constant there comes from a Carleson-type bound and is not explicit).
    The lower check is restricted to r <= half_width/2, away from the
    truncation edges whose artificial zeros depress the field.  Both sides
    carry the multiplicative discretization slack.
    """
    verdict = classify_cos_test(p, 2, k)
    spec = solution.spec
    delta = spec.delta_effective
    X, Y = np.meshgrid(solution.x, solution.y, indexing="ij")
    r = np.hypot(X, Y)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos_theta = np.where(r > 0.0, Y / np.where(r > 0.0, r, 1.0), 0.0)

    if verdict in (SignVerdict.SUPERHARMONIC, SignVerdict.HARMONIC):
        C = 3.0 ** abs(k) / math.cos(math.pi / 6.0)
        zone = r >= 3.0 * delta
        envelope = C * delta ** abs(k) * r ** k * cos_theta
        margin = (1.0 + slack) * envelope - solution.u
        side = "upper"
    elif verdict is SignVerdict.SUBHARMONIC:
        band = (r >= 0.5 * delta) & (r <= 0.5 * delta + 2.0 * spec.h_grid) \
            & (Y >= spec.h_grid)
        if not band.any():
            raise ValueError("no nodes on the inner half-circle; grid too coarse")
        C = float(solution.u[band].min())
        zone = (r >= 3.0 * delta) & (r <= spec.half_width / 2.0)
        envelope = C * (2.0 * r / delta) ** k * cos_theta
        margin = solution.u - (1.0 - slack) * envelope
        side = "lower"
    else:
        raise ValueError(
            f"k={k!r} is {verdict.value} at p={p!r}: no envelope applies"
        )

    margin = np.where(zone, margin, np.inf)
    worst_flat = int(np.argmin(margin))
    wi, wj = np.unravel_index(worst_flat, margin.shape)
    worst = float(margin[wi, wj])
    return EnvelopeReport(
        ok=bool(worst >= 0.0), side=side, worst_margin=worst,
        worst_node=(float(solution.x[wi]), float(solution.y[wj])),
        constant=C,
    )


def export_experiment(experiment: MeasureExperiment, destination) -> None:
    """Write the experiment as CSV: p,delta,omega,alpha_hat,r2."""

    def rows(handle):
        handle.write("p,delta,omega,alpha_hat,r2\n")
        for d, w in zip(experiment.deltas, experiment.omegas):
            handle.write(
                f"{experiment.p:.17g},{d:.17g},{w:.17g},"
                f"{experiment.alpha_hat:.17g},{experiment.r2:.17g}\n"
            )

    if hasattr(destination, "write"):
        rows(destination)
        return
    try:
        with open(destination, "w", encoding="ascii") as handle:
            rows(handle)
    except OSError as exc:
        raise OSError(
            f"cannot write experiment to {destination!r}: {exc}") from exc
