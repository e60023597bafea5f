"""Critical exponents of p-harmonic measure in the half-space.

The scaling exponent alpha(p, N) of the p-harmonic measure of a small
boundary ball equals -k(p, N), where k(p, N) is the unique negative
homogeneity degree making r^k f(theta) p-harmonic with an admissible
profile f.  This package computes k(p, N) by topological shooting,
validates it against every closed form and analytic bracket available,
audits the monotonicity mechanism behind uniqueness, reconstructs the
critical profile, and cross-checks the exponent empirically with a 2D
finite-difference experiment.
"""

from .analytic import (
    LambdaCoefficients,
    SignVerdict,
    classify_cos_test,
    exponent_bounds,
    known_exponent,
    lambda_coefficients,
    lambda_eval,
    planar_exponent,
)
from .core_ode import (
    DegenerateStateError,
    HState,
    ProblemParams,
    UWState,
    YState,
    full_residual,
    h_initial_slope,
    h_rhs,
    series_start,
    u_initial_slope,
    u_rhs,
    w_initial_slope,
    w_rhs,
    y_rhs,
)
from .measure_fd import (
    GridSpec,
    MeasureExperiment,
    NonConvergenceError,
    PHarmonicSolution,
    barrier_envelope_check,
    export_experiment,
    run_experiment,
    solve_p_harmonic,
)
from .profile import (
    NotCriticalError,
    Profile,
    ProfileChecklist,
    compute_profile,
    export_profile,
    normalized_residual,
    verify_boundary_conditions,
    y_trajectory,
)
from .shooting import (
    BracketFailureError,
    Classification,
    ExponentResult,
    NonMonotoneBracketError,
    ShotKind,
    ShotOutcome,
    StepUnderflowError,
    classify_k,
    initial_bracket,
    integrate_h,
    shooting_ceiling,
    solve_exponent,
)
from .uniqueness import (
    BlowupBeforeEndError,
    ClassificationMismatchError,
    MonotonicityReport,
    UWTrajectory,
    audit_monotonicity,
    integrate_uw,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
