"""Test functions with known convexity / subharmonicity, and sampled checks."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from hhlab._rng import block_generator
from hhlab.errors import ArgumentError, InvalidInputError, SingularityError

_EPS = np.finfo(float).eps


class TestFunction:
    """Base class; subclasses implement ``_eval`` on (k, n) arrays."""

    __test__ = False  # keep pytest from collecting this class
    kind = "function"
    convex = False
    subharmonic = False
    poly_degree: int | None = None

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        x = np.asarray(x, float)
        single = x.ndim == 1
        vals = self._eval(np.atleast_2d(x))
        return float(vals[0]) if single else vals

    def _eval(self, x):
        raise NotImplementedError

    def laplacian(self, x):
        """Exact Laplacian away from kinks and singularities."""
        raise NotImplementedError

    def harmonic(self, dim: int) -> bool:
        return False

    def fourth_derivative_bound(self, x, h):
        """Bound on sum_i |d^4 f / dx_i^4| over the stencil around each point."""
        return np.zeros(len(np.atleast_2d(x)))

    def scaled(self, lam: float) -> "TestFunction":
        """The function x -> f(x / lam)."""
        raise NotImplementedError

    def to_spec(self) -> dict:
        raise NotImplementedError

    def singular_points(self):
        return np.zeros((0, 0))


@dataclass(frozen=True, eq=False)
class Affine(TestFunction):
    """<g, x> + c; ``g = None`` gives the constant c in every dimension."""

    g: np.ndarray | None = None
    c: float = 0.0
    kind = "affine"
    convex = True
    subharmonic = True

    def __post_init__(self):
        if self.g is not None:
            object.__setattr__(self, "g", np.asarray(self.g, float).ravel())
        object.__setattr__(self, "c", float(self.c))

    @property
    def poly_degree(self):
        return 0 if self.g is None or not np.any(self.g) else 1

    def _eval(self, x):
        if self.g is None:
            return np.full(len(x), self.c)
        return x @ self.g + self.c

    def gradient(self, dim):
        return np.zeros(dim) if self.g is None else self.g

    def laplacian(self, x):
        return np.zeros(len(np.atleast_2d(x)))

    def harmonic(self, dim):
        return True

    def scaled(self, lam):
        return Affine(None if self.g is None else self.g / lam, self.c)

    def to_spec(self):
        if self.g is None:
            return {"type": "constant", "c": self.c}
        return {"type": "affine", "g": self.g.tolist(), "c": self.c}


def constant(c: float = 1.0) -> Affine:
    return Affine(None, c)


def coordinate(i: int, dim: int = 2) -> Affine:
    g = np.zeros(dim)
    g[i] = 1.0
    return Affine(g, 0.0)


@dataclass(frozen=True, eq=False)
class MaxAffine(TestFunction):
    """Pointwise maximum of affine planes."""

    planes: tuple
    kind = "max_affine"
    convex = True
    subharmonic = True

    def __post_init__(self):
        planes = tuple(p if isinstance(p, Affine) else Affine(*p) for p in self.planes)
        if not planes:
            raise InvalidInputError("MaxAffine needs at least one plane")
        if any(p.g is None for p in planes):
            dims = {len(p.g) for p in planes if p.g is not None}
            n = dims.pop() if dims else 1
            planes = tuple(Affine(np.zeros(n), p.c) if p.g is None else p for p in planes)
        object.__setattr__(self, "planes", planes)

    @classmethod
    def from_arrays(cls, G, c):
        return cls(tuple(Affine(g, ci) for g, ci in zip(np.atleast_2d(G), np.ravel(c))))

    @property
    def G(self):
        return np.array([p.g for p in self.planes])

    @property
    def cs(self):
        return np.array([p.c for p in self.planes])

    def _eval(self, x):
        return np.max(x @ self.G.T + self.cs, axis=1)

    def laplacian(self, x):
        return np.zeros(len(np.atleast_2d(x)))

    def harmonic(self, dim):
        return len(self.planes) == 1

    def shifted(self, delta: float) -> "MaxAffine":
        return MaxAffine.from_arrays(self.G, self.cs + delta)

    def scaled(self, lam):
        return MaxAffine.from_arrays(self.G / lam, self.cs)

    def to_spec(self):
        return {"type": "max_affine", "planes": [{"g": p.g.tolist(), "c": p.c} for p in self.planes]}


@dataclass(frozen=True, eq=False)
class QuadForm(TestFunction):
    """x^T Q x + <b, x> + c with Q symmetric positive semidefinite."""

    Q: np.ndarray
    b: np.ndarray | None = None
    c: float = 0.0
    validate: bool = True
    kind = "quad_form"
    poly_degree = 2

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, float))
        if Q.shape[0] != Q.shape[1]:
            raise InvalidInputError("Q must be square")
        if np.max(np.abs(Q - Q.T)) > 1e-12 * max(1.0, np.max(np.abs(Q))):
            raise InvalidInputError("Q must be symmetric")
        Q = 0.5 * (Q + Q.T)
        if self.validate and np.linalg.eigvalsh(Q).min() < -1e-10:
            raise InvalidInputError("Q must be positive semidefinite")
        b = np.zeros(len(Q)) if self.b is None else np.asarray(self.b, float).ravel()
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", float(self.c))

    @classmethod
    def unchecked(cls, Q, b=None, c=0.0):
        """Build without the semidefiniteness check (for exercising the samplers)."""
        return cls(Q, b, c, validate=False)

    @property
    def convex(self):
        return bool(np.linalg.eigvalsh(self.Q).min() >= -1e-10)

    @property
    def subharmonic(self):
        return bool(np.trace(self.Q) >= 0)

    def _eval(self, x):
        return np.einsum("ij,jk,ik->i", x, self.Q, x) + x @ self.b + self.c

    def laplacian(self, x):
        return np.full(len(np.atleast_2d(x)), 2.0 * np.trace(self.Q))

    def harmonic(self, dim):
        return abs(np.trace(self.Q)) < 1e-14

    def scaled(self, lam):
        return QuadForm(self.Q / lam ** 2, self.b / lam, self.c, validate=self.validate)

    def to_spec(self):
        return {"type": "quad_form", "Q": self.Q.tolist(), "b": self.b.tolist(), "c": self.c}


@dataclass(frozen=True, eq=False)
class NormPower(TestFunction):
    """coef * |x - center|^p with p >= 1 and coef > 0."""

    center: np.ndarray
    p: float = 2.0
    coef: float = 1.0
    kind = "norm_power"
    convex = True
    subharmonic = True

    def __post_init__(self):
        if not float(self.p) >= 1:
            raise InvalidInputError(f"NormPower exponent must be >= 1, got {self.p}")
        if not float(self.coef) > 0:
            raise InvalidInputError("NormPower coefficient must be positive")
        object.__setattr__(self, "center", np.asarray(self.center, float).ravel())
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "coef", float(self.coef))

    @property
    def poly_degree(self):
        p = self.p
        return int(p) if p == int(p) and int(p) % 2 == 0 else None

    def _eval(self, x):
        r = np.linalg.norm(x - self.center, axis=1)
        return self.coef * r ** self.p

    def laplacian(self, x):
        x = np.atleast_2d(x)
        n = x.shape[1]
        r = np.linalg.norm(x - self.center, axis=1)
        with np.errstate(divide="ignore"):
            return self.coef * self.p * (self.p + n - 2) * r ** (self.p - 2)

    def scaled(self, lam):
        return NormPower(self.center * lam, self.p, self.coef * lam ** (-self.p))

    def to_spec(self):
        return {"type": "norm_power", "center": self.center.tolist(), "p": self.p, "coef": self.coef}


@dataclass(frozen=True, eq=False)
class LogSingularity(TestFunction):
    """-log |x - center| + offset; harmonic in the plane, superharmonic for n >= 3."""

    center: np.ndarray
    offset: float = 0.0
    kind = "log_singularity"
    convex = False

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, float).ravel())
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def subharmonic(self):
        return len(self.center) == 2

    def _eval(self, x):
        r = np.linalg.norm(x - self.center, axis=1)
        if np.any(r == 0):
            raise SingularityError("LogSingularity evaluated at its centre")
        return -np.log(r) + self.offset

    def laplacian(self, x):
        x = np.atleast_2d(x)
        n = x.shape[1]
        r = np.linalg.norm(x - self.center, axis=1)
        return -(n - 2) / r ** 2

    def harmonic(self, dim):
        return dim == 2

    def fourth_derivative_bound(self, x, h):
        x = np.atleast_2d(x)
        n = x.shape[1]
        r = np.linalg.norm(x - self.center, axis=1) - h
        # |d^4/dx_i^4 log r| <= 6 / r^4 for each coordinate
        return np.where(r > 0, 6.0 * n / np.maximum(r, 1e-300) ** 4, np.inf)

    def singular_points(self):
        return self.center[None]

    def scaled(self, lam):
        return LogSingularity(self.center * lam, self.offset + math.log(lam))

    def to_spec(self):
        return {"type": "log_singularity", "center": self.center.tolist(), "offset": self.offset}


@dataclass(frozen=True, eq=False)
class Negated(TestFunction):
    """-f; used to exercise the sampled checks on non-convex inputs."""

    base: TestFunction
    kind = "negated"

    @property
    def poly_degree(self):
        return self.base.poly_degree

    def _eval(self, x):
        return -self.base._eval(x)

    def laplacian(self, x):
        return -self.base.laplacian(x)

    def fourth_derivative_bound(self, x, h):
        return self.base.fourth_derivative_bound(x, h)

    def scaled(self, lam):
        return Negated(self.base.scaled(lam))

    def to_spec(self):
        return {"type": "negated", "base": self.base.to_spec()}


def eval_function(f: TestFunction, x):
    return f.eval(x)


@dataclass
class CheckResult:
    ok: bool
    witness: tuple | None = None
    tested: int = 0
    skipped: int = 0

    def __bool__(self):
        return bool(self.ok)


def is_convex_sampled(f: TestFunction, body, trials: int = 1000, seed: int = 0) -> CheckResult:
    """Midpoint convexity on random interior segments.

    Returns the first violating triple ``(y1, y2, midpoint)`` on failure.
    Segments leaving a non-convex domain are skipped.
    """
    if trials < 1:
        raise ArgumentError("trials must be >= 1")
    rng = block_generator(seed, 0, stream=21)
    y1 = body.uniform_points(rng, trials)
    y2 = body.uniform_points(rng, trials)
    mid = 0.5 * (y1 + y2)
    ok_seg = np.ones(trials, bool)
    if not getattr(body, "convex", True):
        for t in np.linspace(0.05, 0.95, 19):
            ok_seg &= body.contains(y1 + t * (y2 - y1))
    f1, f2, fm = f.eval(y1), f.eval(y2), f.eval(mid)
    tol = 1e-12 * (np.abs(f1) + np.abs(f2) + 1.0)
    bad = ok_seg & (fm > 0.5 * (f1 + f2) + tol)
    if np.any(bad):
        i = int(np.argmax(bad))
        return CheckResult(False, (y1[i], y2[i], mid[i]), int(ok_seg.sum()), int((~ok_seg).sum()))
    return CheckResult(True, None, int(ok_seg.sum()), int((~ok_seg).sum()))


def discrete_laplacian(f: TestFunction, x, h: float):
    x = np.atleast_2d(x)
    n = x.shape[1]
    total = -2 * n * f.eval(x)
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        total = total + f.eval(x + e) + f.eval(x - e)
    return total / h ** 2


def is_subharmonic_sampled(f: TestFunction, domain, trials: int = 1000, h: float = 1e-3,
                           seed: int = 0) -> CheckResult:
    """(2n+1)-point Laplacian >= -tol(h) at random interior points.

    tol(h) = C h^2 / 12 with C the variant's fourth-derivative bound on the
    stencil, plus a rounding allowance. Points whose stencil leaves the
    domain are skipped and counted.
    """
    if not h > 0:
        raise ArgumentError("stencil width must be positive")
    rng = block_generator(seed, 0, stream=22)
    x = domain.uniform_points(rng, trials)
    keep = domain.distance_to_boundary(x) > h * (1 + 1e-9)
    sing = f.singular_points()
    if sing.size:
        for c in sing:
            keep &= np.linalg.norm(x - c, axis=1) > h * (1 + 1e-9)
    x_ok = x[keep]
    skipped = int((~keep).sum())
    if len(x_ok) == 0:
        return CheckResult(True, None, 0, skipped)
    lap = discrete_laplacian(f, x_ok, h)
    fx = np.abs(f.eval(x_ok))
    n = x_ok.shape[1]
    tol = f.fourth_derivative_bound(x_ok, h) * h ** 2 / 12 + 64 * n * _EPS * (fx + 1.0) / h ** 2
    bad = lap < -tol
    if np.any(bad):
        i = int(np.argmax(bad))
        return CheckResult(False, (x_ok[i], float(lap[i])), len(x_ok), skipped)
    return CheckResult(True, None, len(x_ok), skipped)


def boundary_min(f: TestFunction, domain, samples: int = 4096) -> float:
    """Minimum of f over the boundary: dense samples, polygon vertices, then a
    bounded scalar refinement along arclength around the best sample."""
    if samples < 16:
        raise ArgumentError("boundary_min needs at least 16 samples")
    bs = domain.boundary_samples(samples)
    vals = f.eval(bs.points)
    best = float(vals.min())
    verts = getattr(domain, "vertices", None)
    if verts is not None:
        best = min(best, float(np.min(f.eval(verts))))
    if domain.dim == 2 and hasattr(domain, "boundary_point"):
        i = int(np.argmin(vals))
        s0 = bs.params[i]
        ds = 2.0 * domain.surface_measure() / len(vals)
        res = minimize_scalar(lambda s: f.eval(domain.boundary_point(s)[0]),
                              bounds=(s0 - ds, s0 + ds), method="bounded",
                              options={"xatol": 1e-12 * domain.diameter()})
        best = min(best, float(res.fun))
    return best


def function_from_spec(spec: dict) -> TestFunction:
    try:
        kind = spec["type"]
        if kind == "constant":
            return Affine(None, spec.get("c", 1.0))
        if kind == "affine":
            return Affine(spec["g"], spec.get("c", 0.0))
        if kind == "max_affine":
            return MaxAffine(tuple(Affine(p["g"], p.get("c", 0.0)) for p in spec["planes"]))
        if kind == "quad_form":
            return QuadForm(spec["Q"], spec.get("b"), spec.get("c", 0.0))
        if kind == "norm_power":
            return NormPower(spec["center"], spec.get("p", 2.0), spec.get("coef", 1.0))
        if kind == "log_singularity":
            return LogSingularity(spec["center"], spec.get("offset", 0.0))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise InvalidInputError(f"malformed function spec: {exc!r}") from exc
    raise InvalidInputError(f"unknown function type {spec.get('type')!r}")


def load_function(path) -> TestFunction:
    try:
        spec = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read function spec {path}: {exc}") from exc
    return function_from_spec(spec)


def random_max_affine(rng: np.random.Generator, dim: int = 2, m: int = 5) -> MaxAffine:
    return MaxAffine.from_arrays(rng.normal(size=(m, dim)), rng.normal(size=m))
