"""Exact Euclidean projections onto standard closed convex sets.

Every descriptor is immutable and operates on the last axis of its input,
so a batch of points with shape ``(..., n)`` is projected in one call.
All projections are exact (closed form or finitely terminating), which the
pathwise audit in :mod:`stochvi.solver` relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BlockMismatch, DimensionMismatch, InfeasibleAffine


def _as_batch(x, n):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != n:
        raise DimensionMismatch(f"expected last axis {n}, got shape {x.shape}")
    return x


@dataclass(frozen=True)
class FeasibleSet:
    """Base descriptor. Subclasses implement :meth:`project` and :meth:`sample`.

    ``dim`` is ``None`` for dimension-agnostic sets (whole space, orthant);
    those validate against whatever dimension they are applied to.
    """

    def project(self, x):
        raise NotImplementedError

    def sample(self, rng, size, n=None, scale=1.0):
        """Draw ``size`` feasible points, used by randomized checks."""
        raise NotImplementedError

    def check_dim(self, n):
        d = getattr(self, "dim", None)
        if d is not None and d != n:
            raise DimensionMismatch(f"set has dimension {d}, point has {n}")

    def to_config(self):
        raise NotImplementedError


@dataclass(frozen=True)
class WholeSpace(FeasibleSet):
    dim: int | None = None

    def project(self, x):
        return np.asarray(x, dtype=float).copy()

    def sample(self, rng, size, n=None, scale=1.0):
        n = self.dim if n is None else n
        return scale * rng.standard_normal((size, n))

    def to_config(self):
        return {"variant": "whole_space"}


@dataclass(frozen=True)
class NonnegativeOrthant(FeasibleSet):
    dim: int | None = None

    def project(self, x):
        return np.maximum(np.asarray(x, dtype=float), 0.0)

    def sample(self, rng, size, n=None, scale=1.0):
        n = self.dim if n is None else n
        return np.abs(scale * rng.standard_normal((size, n)))

    def to_config(self):
        return {"variant": "nonnegative_orthant"}


@dataclass(frozen=True)
class Box(FeasibleSet):
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape:
            raise DimensionMismatch("box bounds must share a shape")
        if np.any(lo > hi):
            raise ValueError("box requires lower <= upper componentwise")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return self.lower.shape[0]

    def project(self, x):
        x = _as_batch(x, self.dim)
        return np.clip(x, self.lower, self.upper)

    def sample(self, rng, size, n=None, scale=1.0):
        return rng.uniform(self.lower, self.upper, size=(size, self.dim))

    def to_config(self):
        return {"variant": "box", "lower": self.lower.tolist(),
                "upper": self.upper.tolist()}


@dataclass(frozen=True)
class Ball(FeasibleSet):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    @property
    def dim(self):
        return self.center.shape[0]

    def project(self, x):
        x = _as_batch(x, self.dim)
        d = x - self.center
        nrm = np.linalg.norm(d, axis=-1, keepdims=True)
        factor = np.where(nrm > self.radius, self.radius / np.maximum(nrm, 1e-300), 1.0)
        return self.center + d * factor

    def sample(self, rng, size, n=None, scale=1.0):
        n = self.dim
        d = rng.standard_normal((size, n))
        d /= np.linalg.norm(d, axis=-1, keepdims=True)
        r = self.radius * rng.uniform(0.0, 1.0, size=(size, 1)) ** (1.0 / n)
        return self.center + r * d

    def to_config(self):
        return {"variant": "ball", "center": self.center.tolist(),
                "radius": self.radius}


@dataclass(frozen=True)
class Simplex(FeasibleSet):
    """{ y >= 0, sum(y) = scale }, projected by sort and threshold."""

    dim: int
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("simplex scale must be positive")

    def project(self, x):
        x = _as_batch(x, self.dim)
        srt = np.sort(x, axis=-1)[..., ::-1]
        csum = np.cumsum(srt, axis=-1) - self.scale
        idx = np.arange(1, self.dim + 1, dtype=float)
        cond = srt - csum / idx > 0
        # rho: largest index with positive gap; guaranteed >= 1
        rho = self.dim - np.argmax(cond[..., ::-1], axis=-1)
        tau = np.take_along_axis(csum, rho[..., None] - 1, axis=-1) / rho[..., None]
        return np.maximum(x - tau, 0.0)

    def sample(self, rng, size, n=None, scale=1.0):
        return self.scale * rng.dirichlet(np.ones(self.dim), size=size)

    def to_config(self):
        return {"variant": "simplex", "dim": self.dim, "scale": self.scale}


@dataclass(frozen=True)
class Halfspace(FeasibleSet):
    """{ y : <a, y> <= b }."""

    a: np.ndarray
    b: float

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        if np.linalg.norm(a) == 0:
            raise ValueError("halfspace normal must be nonzero")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)

    @property
    def dim(self):
        return self.a.shape[0]

    def project(self, x):
        x = _as_batch(x, self.dim)
        viol = (x @ self.a - self.b) / (self.a @ self.a)
        return x - np.maximum(viol, 0.0)[..., None] * self.a

    def sample(self, rng, size, n=None, scale=1.0):
        return self.project(scale * rng.standard_normal((size, self.dim)))

    def to_config(self):
        return {"variant": "halfspace", "a": self.a.tolist(), "b": self.b}


@dataclass(frozen=True)
class AffineSubspace(FeasibleSet):
    """{ y : A y = b } with full-row-rank A.

    The Gram matrix A A^T is Cholesky-factored once at construction and the
    factorization fails loudly on rank deficiency; a silently regularized
    pseudo-inverse would corrupt downstream audit inequalities.
    """

    A: np.ndarray
    b: np.ndarray
    _chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if A.shape[0] != b.shape[0]:
            raise DimensionMismatch("A rows must match len(b)")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        gram = A @ A.T
        try:
            chol = np.linalg.cholesky(gram)
        except np.linalg.LinAlgError:
            sol, residual, rank, _ = np.linalg.lstsq(A, b, rcond=None)
            if rank < A.shape[0] and np.linalg.norm(A @ sol - b) > 1e-8 * (1 + np.linalg.norm(b)):
                raise InfeasibleAffine("affine system A y = b is inconsistent") from None
            raise
        object.__setattr__(self, "_chol", chol)

    @property
    def dim(self):
        return self.A.shape[1]

    def _gram_solve(self, rhs):
        # rhs has shape (..., rows); two triangular solves against the factor
        y = np.linalg.solve(self._chol, rhs[..., None] if rhs.ndim == 1 else rhs.swapaxes(-1, -2))
        z = np.linalg.solve(self._chol.T, y)
        return z[..., 0] if rhs.ndim == 1 else z.swapaxes(-1, -2)

    def project(self, x):
        x = _as_batch(x, self.dim)
        resid = x @ self.A.T - self.b
        return x - self._gram_solve(resid) @ self.A

    def sample(self, rng, size, n=None, scale=1.0):
        return self.project(scale * rng.standard_normal((size, self.dim)))

    def to_config(self):
        return {"variant": "affine", "A": self.A.tolist(), "b": self.b.tolist()}


@dataclass(frozen=True)
class CartesianProduct(FeasibleSet):
    """Product of blocks, each a descriptor with an explicit size."""

    parts: tuple
    sizes: tuple

    def __post_init__(self):
        if len(self.parts) != len(self.sizes):
            raise BlockMismatch("one size per factor required")
        for s, p in zip(self.sizes, self.parts):
            d = getattr(p, "dim", None)
            if d is not None and d != s:
                raise BlockMismatch(f"factor of dimension {d} declared with size {s}")
        object.__setattr__(self, "parts", tuple(self.parts))
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))

    @property
    def dim(self):
        return sum(self.sizes)

    def block_slices(self):
        out, start = [], 0
        for s in self.sizes:
            out.append(slice(start, start + s))
            start += s
        return out

    def project(self, x):
        x = _as_batch(x, self.dim)
        out = np.empty_like(x)
        for part, sl in zip(self.parts, self.block_slices()):
            out[..., sl] = part.project(x[..., sl])
        return out

    def sample(self, rng, size, n=None, scale=1.0):
        cols = [p.sample(rng, size, n=s, scale=scale)
                for p, s in zip(self.parts, self.sizes)]
        return np.concatenate(cols, axis=-1)

    def to_config(self):
        return {"variant": "cartesian",
                "parts": [p.to_config() for p in self.parts],
                "sizes": list(self.sizes)}


_SEPARABLE = (WholeSpace, NonnegativeOrthant, Box)


def split_separable(fset: FeasibleSet, sizes) -> CartesianProduct:
    """Split a componentwise-separable set into a Cartesian descriptor."""
    slices, start = [], 0
    for s in sizes:
        slices.append(slice(start, start + s))
        start += s
    if isinstance(fset, CartesianProduct):
        if tuple(fset.sizes) != tuple(sizes):
            raise BlockMismatch("cartesian sizes disagree with requested split")
        return fset
    if isinstance(fset, WholeSpace):
        return CartesianProduct(tuple(WholeSpace(s) for s in sizes), tuple(sizes))
    if isinstance(fset, NonnegativeOrthant):
        return CartesianProduct(tuple(NonnegativeOrthant(s) for s in sizes), tuple(sizes))
    if isinstance(fset, Box):
        parts = tuple(Box(fset.lower[sl], fset.upper[sl]) for sl in slices)
        return CartesianProduct(parts, tuple(sizes))
    raise BlockMismatch(f"{type(fset).__name__} cannot be split into blocks")


def project(fset: FeasibleSet, x):
    """argmin_{y in set} ||y - x||^2 for x with shape (..., n)."""
    return fset.project(x)


def project_cartesian(fset, x):
    """Blockwise projection; identical to :func:`project` on the product set.

    Accepts either a :class:`CartesianProduct` or a list of
    ``(descriptor, size)`` pairs.
    """
    if not isinstance(fset, CartesianProduct):
        parts, sizes = zip(*fset)
        fset = CartesianProduct(tuple(parts), tuple(sizes))
    return fset.project(x)


def set_distance(fset: FeasibleSet, x):
    """||x - project(set, x)||; zero exactly when x is feasible."""
    x = np.asarray(x, dtype=float)
    return np.linalg.norm(x - fset.project(x), axis=-1)


def feasible_set_from_config(cfg) -> FeasibleSet:
    """Build a descriptor from its JSON form (see :meth:`FeasibleSet.to_config`)."""
    from .errors import ConfigError

    kind = cfg.get("variant")
    extra = set(cfg) - _ALLOWED_KEYS.get(kind, set())
    if kind not in _ALLOWED_KEYS:
        raise ConfigError(f"unknown feasible-set variant {kind!r}")
    if extra:
        raise ConfigError(f"unknown keys {sorted(extra)} for variant {kind!r}")
    if kind == "whole_space":
        return WholeSpace(cfg.get("dim"))
    if kind == "nonnegative_orthant":
        return NonnegativeOrthant(cfg.get("dim"))
    if kind == "box":
        return Box(np.asarray(cfg["lower"]), np.asarray(cfg["upper"]))
    if kind == "ball":
        return Ball(np.asarray(cfg["center"]), float(cfg["radius"]))
    if kind == "simplex":
        return Simplex(int(cfg["dim"]), float(cfg.get("scale", 1.0)))
    if kind == "halfspace":
        return Halfspace(np.asarray(cfg["a"]), float(cfg["b"]))
    if kind == "affine":
        return AffineSubspace(np.asarray(cfg["A"]), np.asarray(cfg["b"]))
    parts = [feasible_set_from_config(p) for p in cfg["parts"]]
    return CartesianProduct(tuple(parts), tuple(cfg["sizes"]))


_ALLOWED_KEYS = {
    "whole_space": {"variant", "dim"},
    "nonnegative_orthant": {"variant", "dim"},
    "box": {"variant", "lower", "upper"},
    "ball": {"variant", "center", "radius"},
    "simplex": {"variant", "dim", "scale"},
    "halfspace": {"variant", "a", "b"},
    "affine": {"variant", "A", "b"},
    "cartesian": {"variant", "parts", "sizes"},
}
