"""Variance-reduced stochastic extragradient method for pseudo-monotone
stochastic variational inequalities: solver, merit functions, sample-rate
schedules, theoretical-constants calculators, baselines, and a Monte Carlo
experiment harness."""

from .core import (
    ProblemInstance,
    RngStreamKey,
    SolverConfig,
    ValidationReport,
    VarianceProfile,
    derive_stream,
    validate,
)
from .errors import StochviError
from .merit import (
    MeritConfig,
    d_gap,
    distance_sq_to_solutions,
    natural_residual_sq,
    regularized_gap,
)
from .projection import (
    AffineSubspace,
    Ball,
    Box,
    CartesianProduct,
    FeasibleSet,
    Halfspace,
    NonnegativeOrthant,
    Simplex,
    WholeSpace,
    feasible_set_from_config,
    project,
    project_cartesian,
    set_distance,
)
from .sampling import (
    AgentSchedule,
    BatchMeanResult,
    SampleSchedule,
    batch_mean,
    error_decay_probe,
    harmonic_aggregate,
    network_exponents,
    sample_size,
    verify_network_exponents,
)
from .solver import (
    ExtragradientState,
    RunTrace,
    fejer_audit,
    martingale_probe,
    run,
    step,
    step_cartesian,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
