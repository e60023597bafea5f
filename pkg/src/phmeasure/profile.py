"""Reconstruction and verification of the critical profile f(theta).

At the critical k the profile solves the full equation with f(0) = 1,
f'(0) = 0, decays strictly to f(pi/2) = 0, and arrives with a finite
negative slope.  Integration uses the (y, y') system rather than exp of the
integrated log-derivative because (y, y') stays regular through pi/2 (the
denominator tends to (p-1) f'(pi/2)^2 > 0) while H itself diverges there.

The residual check is deliberately independent of the integrated equation:
f'' is recovered from the sampled f' by a fourth-order finite-difference
stencil, so an error in the coded right-hand side would surface as a
nonzero residual of the full expression.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_ode import ProblemParams, _y_pp, full_residual, series_start
from .rk45 import integrate

__all__ = [
    "Profile",
    "ProfileChecklist",
    "NotCriticalError",
    "compute_profile",
    "y_trajectory",
    "normalized_residual",
    "verify_boundary_conditions",
    "export_profile",
]

HALF_PI = math.pi / 2.0
MAX_STEP = math.pi / 100.0

#: f values at or below this are treated as vanished when forming H = f'/f.
H_FLOOR = 1e-12


class NotCriticalError(RuntimeError):
    """The supplied k is not critical: the profile either crossed zero well
    before pi/2 or failed to come down to zero there."""


@dataclass(frozen=True)
class Profile:
    """Sampled critical profile on an equally spaced theta grid.

    H = f'/f is NaN where f has decayed below 1e-12 (the trailing samples).
    """

    p: float
    N: int
    k_star: float
    theta: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    H: np.ndarray

    @property
    def params(self) -> ProblemParams:
        return ProblemParams(self.p, self.N, self.k_star)


@dataclass(frozen=True)
class ProfileChecklist:
    """Boundary/shape conditions of a profile with measured deviations.

    f1_ok: positive and strictly decreasing before pi/2.
    f2_ok: finite C^1 samples throughout (numerical smoothness proxy).
    f3_ok: f(0) = 1 and f'(0) = 0 within 1e-8, |f(pi/2)| <= 1e-6.
    slope_ok: f'(pi/2) finite and strictly negative.
    """

    f1_ok: bool
    f2_ok: bool
    f3_ok: bool
    slope_ok: bool
    residual_max: float
    deviations: dict


def y_trajectory(params: ProblemParams, thetas, *, rtol: float = 1e-10,
                 atol: float = 1e-10, x0: float = 1e-6,
                 zero_event: bool = False):
    """Integrate the (y, y') system, sampling at the given ascending thetas.

    thetas may include values <= x0 (filled from the series start's exact
    initial data) and must not exceed pi/2.  With zero_event the first angle
    where y crosses 0 is localized and returned (else None); integration
    continues through the crossing either way.

    Returns (f, fp, crossing).
    """
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim != 1 or np.any(np.diff(thetas) <= 0.0):
        raise ValueError("thetas must be strictly increasing")
    if len(thetas) and (thetas[-1] > HALF_PI or thetas[0] < 0.0):
        raise ValueError("thetas must lie in [0, pi/2]")
    p, N, k = params.p, float(params.N), params.k
    f_out = np.empty_like(thetas)
    fp_out = np.empty_like(thetas)

    head = thetas <= x0
    f_out[head] = 1.0
    fp_out[head] = 0.0
    targets = [float(t) for t in thetas[~head]]
    collected: dict[float, tuple[float, float]] = {}

    def rhs(x, s):
        y, yp = s
        return (yp, _y_pp(p, N, k, x, y, yp))

    def on_cp(cx, cy):
        collected[cx] = cy

    _, _, y_start = series_start(params, x0)
    x, state = x0, (y_start.y, y_start.yp)
    crossing = None
    if targets and zero_event:
        status, x_ev, state_ev = integrate(
            rhs, x, state, HALF_PI, rtol=rtol, atol=atol, max_step=MAX_STEP,
            escape=lambda s: s[0] <= 0.0, escape_tol=1e-9,
            checkpoints=targets, on_checkpoint=on_cp,
        )
        if status == "escape":
            crossing = x_ev
            x, state = x_ev, state_ev
    pending = [t for t in targets if t not in collected]
    # A checkpoint the crossing landed on exactly takes the escape state.
    while pending and pending[0] <= x:
        collected[pending.pop(0)] = state
    if pending:
        integrate(
            rhs, x, state, pending[-1], rtol=rtol, atol=atol,
            max_step=MAX_STEP, checkpoints=pending, on_checkpoint=on_cp,
        )
    if targets:
        vals = np.array([collected[t] for t in targets])
        f_out[~head] = vals[:, 0]
        fp_out[~head] = vals[:, 1]
    return f_out, fp_out, crossing


def compute_profile(p: float, N: int, k_star: float, n_points: int = 1000, *,
                    rtol: float = 1e-10, atol: float = 1e-10,
                    x0: float = 1e-6) -> Profile:
    """Sample the profile at n_points equally spaced angles on [0, pi/2].

    Raises NotCriticalError when the trajectory betrays an inaccurate
    k_star: y crossing zero strictly before pi/2 - 1e-4, or y still above
    1e-3 at pi/2.
    """
    if n_points < 16:
        raise ValueError(f"n_points must be >= 16, got {n_points!r}")
    if not k_star < 0.0:
        raise ValueError(f"k_star must be negative, got {k_star!r}")
    params = ProblemParams(p, N, k_star)
    theta = np.linspace(0.0, HALF_PI, n_points)
    f, fp, crossing = y_trajectory(params, theta, rtol=rtol, atol=atol,
                                   x0=x0, zero_event=True)
    if crossing is not None and crossing < HALF_PI - 1e-4:
        raise NotCriticalError(
            f"profile crossed zero at theta={crossing!r} < pi/2 - 1e-4 "
            f"(k={k_star!r} is below critical)"
        )
    if f[-1] > 1e-3:
        raise NotCriticalError(
            f"profile still at f(pi/2)={f[-1]!r} > 1e-3 "
            f"(k={k_star!r} is above critical)"
        )
    with np.errstate(invalid="ignore", divide="ignore"):
        H = np.where(f > H_FLOOR, fp / np.where(f > H_FLOOR, f, 1.0), np.nan)
    return Profile(p=p, N=N, k_star=k_star, theta=theta, f=f, fp=fp, H=H)


def normalized_residual(profile: Profile) -> np.ndarray:
    """Normalized full-equation residual on the interior sample points.

    f'' comes from the five-point fourth-order first-derivative stencil
    applied to the sampled f', so the check is independent of the coded
    right-hand side.  The normalizer (|f|^3 + |f'|^3 + 1) |k|^3 makes the
    figure scale-free across steep profiles.
    """
    th, f, fp = profile.theta, profile.f, profile.fp
    h = th[1] - th[0]
    fpp = (fp[:-4] - 8.0 * fp[1:-3] + 8.0 * fp[3:-1] - fp[4:]) / (12.0 * h)
    sl = slice(2, -2)
    raw = full_residual(profile.params, th[sl], f[sl], fp[sl], fpp)
    k = abs(profile.k_star)
    norm = (np.abs(f[sl]) ** 3 + np.abs(fp[sl]) ** 3 + 1.0) * k ** 3
    return raw / norm


def verify_boundary_conditions(profile: Profile) -> ProfileChecklist:
    """Check the profile conditions; failures are reported, never raised."""
    f, fp = profile.f, profile.fp
    interior = f[:-1]
    decrements = np.diff(f)
    f1_ok = bool(np.all(interior > 0.0) and np.all(decrements < 0.0))
    f2_ok = bool(np.all(np.isfinite(f)) and np.all(np.isfinite(fp)))
    dev_f0 = abs(f[0] - 1.0)
    dev_fp0 = abs(fp[0])
    dev_end = abs(f[-1])
    f3_ok = bool(dev_f0 <= 1e-8 and dev_fp0 <= 1e-8 and dev_end <= 1e-6)
    slope_ok = bool(math.isfinite(fp[-1]) and fp[-1] < 0.0)
    residual_max = float(abs(normalized_residual(profile)).max())
    return ProfileChecklist(
        f1_ok=f1_ok, f2_ok=f2_ok, f3_ok=f3_ok, slope_ok=slope_ok,
        residual_max=residual_max,
        deviations={
            "f0_error": float(dev_f0),
            "fp0_error": float(dev_fp0),
            "f_end": float(dev_end),
            "fp_end": float(fp[-1]),
            "max_increment": float(decrements.max()),
        },
    )


def export_profile(profile: Profile, destination) -> None:
    """Write the profile as CSV (header theta,f,fprime,H; 17 significant
    digits; H empty where undefined)."""

    def rows(handle):
        handle.write("theta,f,fprime,H\n")
        for th, f, fp, H in zip(profile.theta, profile.f, profile.fp, profile.H):
            hcol = "" if math.isnan(H) else f"{H:.17g}"
            handle.write(f"{th:.17g},{f:.17g},{fp:.17g},{hcol}\n")

    if hasattr(destination, "write"):
        rows(destination)
        return
    try:
        with open(destination, "w", encoding="ascii") as handle:
            rows(handle)
    except OSError as exc:
        raise OSError(f"cannot write profile to {destination!r}: {exc}") from exc
