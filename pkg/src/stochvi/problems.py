"""Built-in stochastic test problems with closed-form mean operators.

Each generator returns a frozen :class:`~stochvi.core.ProblemInstance`
subclass carrying whatever extra structure the problem exposes (noise
covariance, strong-monotonicity modulus, ...).  Construction randomness is
seeded independently of the run-time sample streams.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ProblemInstance, VarianceProfile
from .projection import (
    FeasibleSet,
    NonnegativeOrthant,
    WholeSpace,
)

_EIG_DIAG_CAP = 512  # dense eigendecompositions stay at desk scale


class AdditiveGaussianOracle:
    """F(xi, x) = T(x) + xi with xi ~ N(0, scale^2 I_n)."""

    def __init__(self, mean_operator, n, scale):
        self.mean_operator = mean_operator
        self.n = int(n)
        self.scale = float(scale)

    def __call__(self, rng, x, size):
        t = np.asarray(self.mean_operator(x), dtype=float)
        if self.scale == 0.0:
            return np.broadcast_to(t, (size, self.n)).copy()
        return t + self.scale * rng.standard_normal((size, self.n))

    def block(self, rng, x, size, sl):
        # Additive noise is coordinatewise independent: an agent holding its
        # own stream may draw only the components it consumes.
        t = np.asarray(self.mean_operator(x), dtype=float)[sl]
        nb = t.shape[0]
        if self.scale == 0.0:
            return np.broadcast_to(t, (size, nb)).copy()
        return t + self.scale * rng.standard_normal((size, nb))


class LinearMatrixNoiseOracle:
    """F(xi, x) = (Abar + E(xi)) x with i.i.d. N(0, scale^2) matrix entries."""

    def __init__(self, mean_matrix, scale):
        self.mean_matrix = np.asarray(mean_matrix, dtype=float)
        self.scale = float(scale)
        self.n = self.mean_matrix.shape[0]

    def __call__(self, rng, x, size):
        t = self.mean_matrix @ x
        if self.scale == 0.0:
            return np.broadcast_to(t, (size, self.n)).copy()
        noise = rng.standard_normal((size, self.n, self.n))
        return t + self.scale * noise @ x

    def block(self, rng, x, size, sl):
        # Row blocks of E(xi) are independent, so an agent's draws need only
        # the rows feeding its components.
        t = (self.mean_matrix @ x)[sl]
        nb = t.shape[0]
        if self.scale == 0.0:
            return np.broadcast_to(t, (size, nb)).copy()
        noise = rng.standard_normal((size, nb, len(x)))
        return t + self.scale * noise @ x


class ConstantOracle:
    """F(xi, x) = xi, a zero-mean random constant; T is identically zero."""

    def __init__(self, sigma, n=1):
        self.sigma = float(sigma)
        self.n = int(n)

    def __call__(self, rng, x, size):
        if self.sigma == 0.0:
            return np.zeros((size, self.n))
        return self.sigma * rng.standard_normal((size, self.n))

    def block(self, rng, x, size, sl):
        nb = len(range(*sl.indices(self.n)))
        if self.sigma == 0.0:
            return np.zeros((size, nb))
        return self.sigma * rng.standard_normal((size, nb))


@dataclass(frozen=True, kw_only=True)
class LinearSVIProblem(ProblemInstance):
    """F(xi, x) = A(xi) x over an unbounded set: the oracle error variance
    x^T B x grows quadratically along rays, so no uniform bound exists."""

    mean_matrix: np.ndarray = None
    covariance_B: np.ndarray = None
    noise_scale: float = 0.0


@dataclass(frozen=True, kw_only=True)
class ConstantNoiseProblem(ProblemInstance):
    """Zero-mean random constant operator; every feasible point solves it."""

    sigma: float = 1.0


@dataclass(frozen=True, kw_only=True)
class ScaledMonotoneProblem(ProblemInstance):
    """T(x) = h(x) Abar x with h > 0: pseudo-monotone (positive scaling
    preserves the sign of <Abar x, z - x>) but genuinely non-monotone."""

    mean_matrix: np.ndarray = None
    noise_scale: float = 0.0


@dataclass(frozen=True, kw_only=True)
class StronglyMonotoneQuadratic(ProblemInstance):
    """T(x) = Abar (x - center) with symmetric part >= modulus * I, so the
    solution is unique and known in closed form."""

    mean_matrix: np.ndarray = None
    center: np.ndarray = None
    strong_modulus: float = 1.0
    noise_scale: float = 0.0


def _spectral_norm(A):
    return float(np.linalg.norm(A, 2))


def gen_linear_svi(n, seed=0, noise_scale=0.1, feasible="orthant") -> LinearSVIProblem:
    """Random positive-semidefinite mean matrix Abar = M^T M with entrywise
    i.i.d. Gaussian matrix noise of the given scale.

    The aggregated noise covariance is B = n * noise_scale^2 * I (each of the
    n rows contributes a noise_scale^2 * I row covariance), so the variance
    law x^T B x and its spectral quantities are exact.
    """
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n)) / np.sqrt(n)
    abar = M.T @ M
    B = n * noise_scale ** 2 * np.eye(n)
    fset = {"orthant": NonnegativeOrthant(n), "whole_space": WholeSpace(n)}[feasible]
    L = _spectral_norm(abar)
    sigma_star = float(np.sqrt(n) * noise_scale)  # sqrt(lambda_max(B))
    return LinearSVIProblem(
        dimension=n,
        oracle=LinearMatrixNoiseOracle(abar, noise_scale),
        mean_operator=lambda x, A=abar: A @ x,
        lipschitz_L=max(L, 1e-12),
        feasible_set=fset,
        known_solutions=(np.zeros(n),),
        variance_profile=VarianceProfile("point", sigma_star),
        mean_matrix=abar,
        covariance_B=B,
        noise_scale=float(noise_scale),
        name=f"linear_svi(n={n}, seed={seed}, noise={noise_scale:g})",
    )


def gen_constant_noise(sigma=1.0, n=1) -> ConstantNoiseProblem:
    """Zero-mean random constant operator on the whole space (T == 0)."""
    return ConstantNoiseProblem(
        dimension=n,
        oracle=ConstantOracle(sigma, n),
        mean_operator=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        lipschitz_L=1.0,  # any positive modulus bounds the constant operator
        feasible_set=WholeSpace(n),
        known_solutions=(np.zeros(n),),
        variance_profile=VarianceProfile("uniform", float(sigma) * np.sqrt(n)),
        solution_set_is_feasible_set=True,
        sigma=float(sigma),
        name=f"constant_noise(sigma={sigma:g}, n={n})",
    )


def gen_strongly_monotone(n, seed=0, noise_scale=1.0, strong_modulus=1.0,
                          psd_scale=0.0, skew_scale=0.0,
                          feasible=None, center=None) -> StronglyMonotoneQuadratic:
    """T(x) = Abar (x - center), Abar = modulus * I + psd + skew, with
    additive Gaussian oracle noise; the unique solution is ``center`` when
    feasible."""
    rng = np.random.default_rng(seed)
    abar = strong_modulus * np.eye(n)
    if psd_scale:
        M = rng.standard_normal((n, n)) / np.sqrt(n)
        abar = abar + psd_scale * (M.T @ M)
    if skew_scale:
        S = rng.standard_normal((n, n))
        abar = abar + skew_scale * 0.5 * (S - S.T)
    if center is None:
        center = rng.standard_normal(n)
    center = np.asarray(center, dtype=float)
    mean_op = lambda x, A=abar, c=center: A @ (np.asarray(x, dtype=float) - c)
    fset = feasible if feasible is not None else WholeSpace(n)
    sigma_star = float(np.sqrt(n) * noise_scale)
    return StronglyMonotoneQuadratic(
        dimension=n,
        oracle=AdditiveGaussianOracle(mean_op, n, noise_scale),
        mean_operator=mean_op,
        lipschitz_L=_spectral_norm(abar),
        feasible_set=fset,
        known_solutions=(center.copy(),),
        variance_profile=VarianceProfile("uniform", sigma_star),
        mean_matrix=abar,
        center=center,
        strong_modulus=float(strong_modulus),
        noise_scale=float(noise_scale),
        name=f"strongly_monotone(n={n}, seed={seed}, noise={noise_scale:g})",
    )


def gen_scaled_monotone(n, seed=0, noise_scale=1.0) -> ScaledMonotoneProblem:
    """Pseudo-monotone, non-monotone instance T(x) = Abar x / (1 + ||x||^2)."""
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n)) / np.sqrt(n)
    abar = M.T @ M + 0.1 * np.eye(n)

    def mean_op(x, A=abar):
        x = np.asarray(x, dtype=float)
        return (A @ x) / (1.0 + x @ x)

    # |grad T| <= h ||A|| + ||A x|| * 2||x||/(1+||x||^2)^2 <= 1.5 ||A||
    L = 1.5 * _spectral_norm(abar)
    sigma_star = float(np.sqrt(n) * noise_scale)
    return ScaledMonotoneProblem(
        dimension=n,
        oracle=AdditiveGaussianOracle(mean_op, n, noise_scale),
        mean_operator=mean_op,
        lipschitz_L=L,
        feasible_set=WholeSpace(n),
        known_solutions=(np.zeros(n),),
        variance_profile=VarianceProfile("uniform", sigma_star),
        mean_matrix=abar,
        noise_scale=float(noise_scale),
        name=f"scaled_monotone(n={n}, seed={seed}, noise={noise_scale:g})",
    )


def gen_negative_control(n=1, noise_scale=0.0) -> ProblemInstance:
    """T(x) = -x: not pseudo-monotone; used to show the audits can fail."""
    mean_op = lambda x: -np.asarray(x, dtype=float)
    return ProblemInstance(
        dimension=n,
        oracle=AdditiveGaussianOracle(mean_op, n, noise_scale),
        mean_operator=mean_op,
        lipschitz_L=1.0,
        feasible_set=WholeSpace(n),
        known_solutions=(np.zeros(n),),
        name=f"negative_control(n={n})",
    )


def variance_at(problem: LinearSVIProblem, x) -> float:
    """Total oracle-error variance x^T B x of the linear instance."""
    x = np.asarray(x, dtype=float)
    return float(x @ problem.covariance_B @ x)


def variance_lower_bound(problem: LinearSVIProblem, x) -> float:
    """lambda_+(B) ||x_B||^2 where x_B is x projected off the kernel of B."""
    B = problem.covariance_B
    n = B.shape[0]
    if n > _EIG_DIAG_CAP:
        raise ValueError(f"eigendecomposition capped at n <= {_EIG_DIAG_CAP}")
    w, V = np.linalg.eigh(B)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(w))))
    pos = w > tol
    if not np.any(pos):
        return 0.0
    lam_plus = float(np.min(w[pos]))
    x = np.asarray(x, dtype=float)
    x_B = V[:, pos] @ (V[:, pos].T @ x)
    return lam_plus * float(x_B @ x_B)


@dataclass(frozen=True)
class PseudoMonotonicityReport:
    n_pairs: int
    n_applicable: int
    violations: tuple
    passed: bool

    def __str__(self):
        head = ("pass" if self.passed else "FAIL") + (
            f": {self.n_applicable}/{self.n_pairs} applicable pairs, "
            f"{len(self.violations)} violation(s)")
        if self.violations:
            x, z, lhs = self.violations[0]
            head += f"; first witness x={x}, z={z}, <T(z), z-x> = {lhs:.3e}"
        return head


def check_pseudo_monotone(T, fset: FeasibleSet, samples=1000, seed=0,
                          scale=3.0, n=None) -> PseudoMonotonicityReport:
    """Randomized pseudo-monotonicity check.

    Draws feasible pairs (x, z); whenever <T(x), z - x> >= 0 the definition
    demands <T(z), z - x> >= 0, checked to 1e-10.  Passing is evidence, not
    proof; violations come with witnesses.
    """
    rng = np.random.default_rng(seed)
    xs = fset.sample(rng, samples, n=n, scale=scale)
    zs = fset.sample(rng, samples, n=n, scale=scale)
    applicable = 0
    violations = []
    for x, z in zip(xs, zs):
        d = z - x
        if np.asarray(T(x), dtype=float) @ d >= 0.0:
            applicable += 1
            lhs = float(np.asarray(T(z), dtype=float) @ d)
            if lhs < -1e-10:
                violations.append((x.copy(), z.copy(), lhs))
    return PseudoMonotonicityReport(
        n_pairs=samples, n_applicable=applicable,
        violations=tuple(violations), passed=not violations)


def lipschitz_estimate(T, fset: FeasibleSet, samples=1000, seed=0,
                       scale=3.0, n=None) -> float:
    """Largest sampled ratio ||T(x) - T(z)|| / ||x - z||: a lower estimate of
    the true modulus, approaching it as sampling grows."""
    rng = np.random.default_rng(seed)
    xs = fset.sample(rng, samples, n=n, scale=scale)
    zs = fset.sample(rng, samples, n=n, scale=scale)
    best = 0.0
    for x, z in zip(xs, zs):
        gap = np.linalg.norm(x - z)
        if gap < 1e-12:
            continue
        best = max(best, float(np.linalg.norm(
            np.asarray(T(x), dtype=float) - np.asarray(T(z), dtype=float)) / gap))
    return best
