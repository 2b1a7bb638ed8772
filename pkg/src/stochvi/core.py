"""Problem and configuration model shared by all other modules.

The stochastic oracle contract: ``oracle(rng, x, size)`` returns an array of
shape ``(size, n)`` whose rows are independent draws of the random operator
at ``x`` -- one row per oracle call.  An oracle may additionally expose
``oracle.block(rng, x, size, sl)`` returning only the component block ``sl``
of each draw; this is used by the distributed iteration, where each agent
owns an independent sample stream, so restricting generation to the block an
agent actually consumes changes no observable quantity.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BlockMismatch,
    CoordinationMismatch,
    InvalidStepsize,
)
from .projection import FeasibleSet, set_distance
from .sampling import SampleSchedule, schedule_tail_check

STEPSIZE_CAP = 1.0 / math.sqrt(6.0)  # times 1/L


@dataclass(frozen=True)
class RngStreamKey:
    """Address of one independent random stream.

    Distinct keys yield statistically independent streams (counter-based
    generator keyed by a hash of the tuple); the same key always reproduces
    the same draws, independently of evaluation order.  ``stage`` is 1 for
    the prediction-step samples and 2 for the correction-step samples.
    """

    master_seed: int
    replication: int = 0
    iteration: int = 0
    stage: int = 1
    block: int = 0
    sample: int = 0

    def __post_init__(self):
        if self.stage not in (1, 2):
            raise ValueError("stage must be 1 or 2")


def derive_stream(key: RngStreamKey) -> np.random.Generator:
    """Deterministic, order-independent stream for the given key.

    The six key fields are packed and hashed into a 128-bit Philox key, so
    stream derivation is pure and collision probability is negligible.
    """
    payload = struct.pack(
        "<qqqqqq",
        key.master_seed,
        key.replication,
        key.iteration,
        key.stage,
        key.block,
        key.sample,
    )
    digest = hashlib.sha256(payload).digest()
    words = np.frombuffer(digest[:16], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=words))


@dataclass(frozen=True)
class VarianceProfile:
    """Oracle-noise descriptor: 'uniform' sigma over X, or 'point' sigma(x*)."""

    kind: str
    sigma: float

    def __post_init__(self):
        if self.kind not in ("uniform", "point"):
            raise ValueError("variance profile kind must be 'uniform' or 'point'")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")


def _freeze(arr):
    a = np.asarray(arr, dtype=float).copy()
    a.setflags(write=False)
    return a


@dataclass(frozen=True, kw_only=True)
class ProblemInstance:
    """A stochastic variational inequality: find x* in X with
    <T(x*), x - x*> >= 0 for all x in X, where T(x) = E[F(xi, x)] is only
    accessible through the sampling oracle.

    ``mean_operator`` is the closed-form T used by merit functions and
    diagnostics; ``lipschitz_L`` is a known Lipschitz modulus of T (an input,
    never estimated silently).  ``blocks`` partitions the coordinates among
    agents; a single block recovers the monolithic problem.
    """

    dimension: int
    oracle: object
    lipschitz_L: float
    feasible_set: FeasibleSet
    blocks: tuple = ()
    mean_operator: object = None
    known_solutions: tuple = ()
    variance_profile: VarianceProfile | None = None
    solution_set_is_feasible_set: bool = False
    name: str = ""

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if not self.lipschitz_L > 0:
            raise ValueError("lipschitz_L must be positive")
        blocks = tuple(int(b) for b in (self.blocks or (self.dimension,)))
        if sum(blocks) != self.dimension:
            raise BlockMismatch(
                f"blocks {blocks} do not sum to dimension {self.dimension}")
        object.__setattr__(self, "blocks", blocks)
        self.feasible_set.check_dim(self.dimension)
        sols = tuple(_freeze(s) for s in self.known_solutions)
        object.__setattr__(self, "known_solutions", sols)
        for s in sols:
            if s.shape != (self.dimension,):
                raise BlockMismatch("known solution has wrong dimension")
            if set_distance(self.feasible_set, s) > 1e-10:
                raise ValueError("known solution lies outside the feasible set")
        if self.mean_operator is not None:
            from .merit import natural_residual_sq

            alpha = 0.1 / self.lipschitz_L
            for s in sols:
                r2 = natural_residual_sq(self.mean_operator, self.feasible_set, s, alpha)
                if r2 > 1e-20:
                    raise ValueError(
                        f"known solution fails the fixed-point test: r^2 = {r2:.3e}")

    @property
    def n_blocks(self):
        return len(self.blocks)

    def block_slices(self):
        out, start = [], 0
        for b in self.blocks:
            out.append(slice(start, start + b))
            start += b
        return out

    def with_blocks(self, blocks) -> "ProblemInstance":
        """Re-partition the coordinates; the feasible set is split blockwise.

        Only componentwise-separable sets (whole space, box, orthant, or an
        already matching Cartesian product) can be split.
        """
        from dataclasses import replace

        from .projection import split_separable

        blocks = tuple(int(b) for b in blocks)
        fset = split_separable(self.feasible_set, blocks) if len(blocks) > 1 \
            else self.feasible_set
        return replace(self, blocks=blocks, feasible_set=fset)

    def oracle_batch(self, rng, x, size):
        out = np.asarray(self.oracle(rng, x, size), dtype=float)
        if out.shape != (size, self.dimension):
            from .errors import OracleFailure

            raise OracleFailure(
                f"oracle returned shape {out.shape}, expected {(size, self.dimension)}")
        return out

    def oracle_batch_block(self, rng, x, size, sl):
        block_fn = getattr(self.oracle, "block", None)
        if block_fn is not None:
            return np.asarray(block_fn(rng, x, size, sl), dtype=float)
        return self.oracle_batch(rng, x, size)[:, sl]


@dataclass(frozen=True, kw_only=True)
class SolverConfig:
    """Extragradient run parameters.

    ``stepsize`` is a constant or a bounded sequence (array-like, extended by
    its last value); the whole sequence must satisfy
    0 < inf alpha_k <= sup alpha_k < 1/(sqrt(6) L).
    ``coordination`` selects the sampling mode for multi-block problems:
    'centralized' shares one draw set per stage across blocks, 'distributed'
    gives each block its own independent draws.
    """

    stepsize: object
    schedule: SampleSchedule
    max_iterations: int
    coordination: str = "centralized"
    master_seed: int = 0
    diagnostics: bool = False
    residual_floor: float = 1e-24

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.coordination not in ("centralized", "distributed"):
            raise ValueError("coordination must be 'centralized' or 'distributed'")
        if np.ndim(self.stepsize) == 0:
            object.__setattr__(self, "stepsize", float(self.stepsize))
        else:
            object.__setattr__(self, "stepsize", _freeze(self.stepsize))

    def stepsize_at(self, k: int) -> float:
        if isinstance(self.stepsize, float):
            return self.stepsize
        return float(self.stepsize[min(k, len(self.stepsize) - 1)])

    @property
    def stepsize_sup(self) -> float:
        if isinstance(self.stepsize, float):
            return self.stepsize
        return float(np.max(self.stepsize))

    @property
    def stepsize_inf(self) -> float:
        if isinstance(self.stepsize, float):
            return self.stepsize
        return float(np.min(self.stepsize))


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def __str__(self):
        lines = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            lines.append(f"{status:4s}  {c.name}: {c.detail}")
        return "\n".join(lines)


def validate(problem: ProblemInstance, config: SolverConfig) -> ValidationReport:
    """Check every configuration-time condition the method relies on.

    Returns a report with one entry per check.  Raises immediately (rather
    than reporting) on the conditions that make a run meaningless: a stepsize
    at or above 1/(sqrt(6) L), a numerically non-summable sampling-rate tail,
    and inconsistent block structure.  Re-running is idempotent and
    side-effect free.
    """
    checks = []
    L = problem.lipschitz_L
    cap = STEPSIZE_CAP / L
    if not config.stepsize_inf > 0:
        raise InvalidStepsize("stepsize sequence must be bounded away from zero")
    if not config.stepsize_sup < cap:
        raise InvalidStepsize(
            f"sup stepsize {config.stepsize_sup:.6g} must be < 1/(sqrt(6) L) = {cap:.6g}")
    checks.append(CheckResult(
        "stepsize_bounds", True,
        f"0 < {config.stepsize_inf:.6g} <= {config.stepsize_sup:.6g} < {cap:.6g}"))

    m = problem.n_blocks
    sched = config.schedule.broadcast(m)  # raises InvalidSchedule on shape mismatch
    checks.append(CheckResult(
        "schedule_parameters", True,
        "; ".join(f"theta={a.theta:g}, mu={a.mu:g}, a={a.a:g}, b={a.b:g}"
                  for a in sched.agents)))

    ok, detail = schedule_tail_check(sched)
    if not ok:
        from .errors import InvalidSchedule

        raise InvalidSchedule(f"sampling-rate tail not summable at finite horizon: {detail}")
    checks.append(CheckResult("sampling_rate_summable", True, detail))

    if config.coordination == "centralized" and m > 1:
        first = sched.agents[0]
        if any(a != first for a in sched.agents[1:]):
            raise CoordinationMismatch(
                "centralized sampling requires identical per-block sample counts")
    checks.append(CheckResult("sampling_coordination", True, config.coordination))

    fdim = getattr(problem.feasible_set, "dim", None)
    if fdim is not None and fdim != problem.dimension:
        raise BlockMismatch("feasible set dimension disagrees with the problem")
    checks.append(CheckResult(
        "block_partition", True, f"blocks {problem.blocks} sum to n = {problem.dimension}"))

    # Construction-time invariants, re-reported for completeness.
    checks.append(CheckResult(
        "known_solutions_feasible", True,
        f"{len(problem.known_solutions)} solution(s) within 1e-10 of the set"))
    if problem.mean_operator is not None:
        checks.append(CheckResult(
            "known_solutions_fixed_points", True,
            "natural residual <= 1e-10 at alpha = 0.1/L"))
    else:
        checks.append(CheckResult(
            "mean_operator_available", False,
            "no closed-form mean operator: merits will be estimated"))
    if problem.variance_profile is None:
        checks.append(CheckResult(
            "variance_profile", False, "no variance descriptor supplied (informational)"))
    else:
        vp = problem.variance_profile
        checks.append(CheckResult("variance_profile", True, f"{vp.kind}, sigma={vp.sigma:g}"))
    return ValidationReport(tuple(checks))
