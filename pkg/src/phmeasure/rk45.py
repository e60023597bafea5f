"""Adaptive embedded Runge-Kutta 4(5) stepping (Dormand-Prince pair).

A small bespoke integrator rather than a library one for three reasons: the
shooting loop fires tens of thousands of scalar integrations and cannot
afford per-call setup overhead; samples must land exactly on caller-supplied
checkpoints (profiles are compared pointwise against closed forms); and
escape events (blow-up of H, vanishing of y) must be localized by halving the
triggering step until the bracket is narrower than a requested width, with
step underflow reported instead of silently stalling.

Two entry points share the tableau: integrate_scalar for a float state and
integrate for a tuple state.  Step acceptance uses the max norm of the
embedded error estimate against atol + rtol*|y|.
"""

from __future__ import annotations

import math

__all__ = ["StepUnderflowError", "integrate_scalar", "integrate"]


class StepUnderflowError(RuntimeError):
    """The error controller demanded a step below the floor before any
    terminal condition was met."""


# Dormand-Prince 5(4) tableau.
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
# Fifth-order weights (also the seventh stage position: FSAL).
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# Difference between the 5th- and embedded 4th-order weights.
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


def _scalar_stages(f, x, y, h, k1):
    k2 = f(x + _C2 * h, y + h * (_A21 * k1))
    k3 = f(x + _C3 * h, y + h * (_A31 * k1 + _A32 * k2))
    k4 = f(x + _C4 * h, y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3))
    k5 = f(x + _C5 * h, y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4))
    k6 = f(x + h, y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5))
    y5 = y + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
    k7 = f(x + h, y5)
    err = h * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
    return y5, k7, err


def integrate_scalar(f, x0, y0, x_end, *, rtol, atol, max_step=math.inf,
                     min_step=1e-14, escape=None, escape_tol=1e-9,
                     on_step=None, max_steps=20_000_000):
    """Integrate dy/dx = f(x, y) for scalar y from x0 toward x_end.

    escape(y) -> bool marks a terminal region; once an accepted step lands
    inside it the crossing is bracketed by step halving until the bracket is
    narrower than escape_tol.  Returns (status, x, y) with status "end" or
    "escape"; for "escape" x is the first bracketed point past the crossing.
    """
    x, y = x0, y0
    k1 = f(x, y)
    h = min(max_step, (x_end - x0) / 10.0, 1e-2 / (1.0 + abs(k1)))
    steps = 0
    while x < x_end:
        steps += 1
        if steps > max_steps:
            raise RuntimeError(f"step budget exhausted at x={x!r}")
        clipped = x + h >= x_end
        h_try = x_end - x if clipped else h
        if not clipped and h_try < min_step:
            raise StepUnderflowError(
                f"adaptive step {h_try!r} fell below {min_step!r} at x={x!r}"
            )
        y5, k7, err = _scalar_stages(f, x, y, h_try, k1)
        scale = atol + rtol * max(abs(y), abs(y5))
        ratio = abs(err) / scale
        if ratio <= 1.0:
            x_prev, y_prev = x, y
            x = x_end if clipped else x + h_try
            y = y5
            k1 = k7
            if on_step is not None:
                on_step(x, y)
            if escape is not None and escape(y):
                return _localize_scalar(f, x_prev, y_prev, x, y, escape, escape_tol)
            grow = _MAX_FACTOR if ratio == 0.0 else min(
                _MAX_FACTOR, _SAFETY * ratio ** -0.2)
            h = min(max_step, h_try * max(1.0, grow))
        else:
            h = h_try * max(_MIN_FACTOR, _SAFETY * ratio ** -0.2)
            if h < min_step:
                raise StepUnderflowError(
                    f"adaptive step {h!r} fell below {min_step!r} at x={x!r}"
                )
    return "end", x, y


def _localize_scalar(f, a, ya, b, yb, escape, tol):
    # Invariant: escape is False at a, True at b.  Halve the bracket with
    # single fifth-order steps until it is narrower than tol.
    while b - a > tol:
        h = 0.5 * (b - a)
        ym, _, _ = _scalar_stages(f, a, ya, h, f(a, ya))
        if escape(ym):
            b, yb = a + h, ym
        else:
            a, ya = a + h, ym
    return "escape", b, yb


def _tuple_stages(f, x, y, h, k1):
    n = len(y)
    k2 = f(x + _C2 * h, tuple(y[i] + h * _A21 * k1[i] for i in range(n)))
    k3 = f(x + _C3 * h, tuple(y[i] + h * (_A31 * k1[i] + _A32 * k2[i]) for i in range(n)))
    k4 = f(x + _C4 * h, tuple(
        y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i]) for i in range(n)))
    k5 = f(x + _C5 * h, tuple(
        y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
        for i in range(n)))
    k6 = f(x + h, tuple(
        y[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i]
                    + _A65 * k5[i]) for i in range(n)))
    y5 = tuple(y[i] + h * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i]
                           + _B6 * k6[i]) for i in range(n))
    k7 = f(x + h, y5)
    err = tuple(h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i]
                     + _E6 * k6[i] + _E7 * k7[i]) for i in range(n))
    return y5, k7, err


def integrate(f, x0, y0, x_end, *, rtol, atol, max_step=math.inf,
              min_step=1e-14, escape=None, escape_tol=1e-9,
              checkpoints=(), on_checkpoint=None, on_step=None,
              max_steps=20_000_000):
    """Tuple-state version of integrate_scalar with checkpoint landing.

    checkpoints must be strictly increasing angles inside (x0, x_end]; steps
    are clipped so an accepted step lands exactly on each, at which point
    on_checkpoint(x, y) fires.  escape semantics match integrate_scalar.
    """
    cps = list(checkpoints)
    for a, b in zip(cps, cps[1:]):
        if not b > a:
            raise ValueError("checkpoints must be strictly increasing")
    if cps and (cps[0] <= x0 or cps[-1] > x_end):
        raise ValueError("checkpoints must lie in (x0, x_end]")
    icp = 0
    x, y = x0, tuple(y0)
    k1 = f(x, y)
    h = min(max_step, (x_end - x0) / 10.0,
            1e-2 / (1.0 + max(abs(v) for v in k1)))
    steps = 0
    while x < x_end:
        steps += 1
        if steps > max_steps:
            raise RuntimeError(f"step budget exhausted at x={x!r}")
        target = cps[icp] if icp < len(cps) else x_end
        clipped = x + h >= target
        h_try = target - x if clipped else h
        if not clipped and h_try < min_step:
            raise StepUnderflowError(
                f"adaptive step {h_try!r} fell below {min_step!r} at x={x!r}"
            )
        y5, k7, err = _tuple_stages(f, x, y, h_try, k1)
        ratio = max(
            abs(err[i]) / (atol + rtol * max(abs(y[i]), abs(y5[i])))
            for i in range(len(y))
        )
        if ratio <= 1.0:
            x_prev, y_prev = x, y
            x = target if clipped else x + h_try
            y = y5
            k1 = k7
            if on_step is not None:
                on_step(x, y)
            if escape is not None and escape(y):
                return _localize_tuple(f, x_prev, y_prev, x, y, escape, escape_tol)
            if clipped and icp < len(cps) and x == cps[icp]:
                if on_checkpoint is not None:
                    on_checkpoint(x, y)
                icp += 1
            grow = _MAX_FACTOR if ratio == 0.0 else min(
                _MAX_FACTOR, _SAFETY * ratio ** -0.2)
            h = min(max_step, h_try * max(1.0, grow))
        else:
            h = h_try * max(_MIN_FACTOR, _SAFETY * ratio ** -0.2)
            if h < min_step:
                raise StepUnderflowError(
                    f"adaptive step {h!r} fell below {min_step!r} at x={x!r}"
                )
    return "end", x, y


def _localize_tuple(f, a, ya, b, yb, escape, tol):
    while b - a > tol:
        h = 0.5 * (b - a)
        ym, _, _ = _tuple_stages(f, a, ya, h, f(a, ya))
        if escape(ym):
            b, yb = a + h, ym
        else:
            a, ya = a + h, ym
    return "escape", b, yb
