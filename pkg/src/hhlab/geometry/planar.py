"""Possibly non-convex planar domains: star-shaped radial graphs and annuli."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial import cKDTree

from hhlab.errors import InvalidDomainError
from hhlab.geometry.base import BoundarySamples, Domain, PlanarCurveMixin

MIN_RADIAL_SAMPLES = 64


@dataclass(frozen=True, eq=False)
class StarDomain2(PlanarCurveMixin, Domain):
    """{center + rho (cos t, sin t) : 0 <= rho < r(t)} with r a periodic cubic spline.

    ``radial`` holds r at the uniform angles 2 pi k / M.
    """

    center: np.ndarray
    radial: np.ndarray
    dim = 2
    kind = "star2"
    smooth = True
    convex = False

    def __post_init__(self):
        c = np.asarray(self.center, float).ravel()
        r = np.asarray(self.radial, float).ravel()
        if len(c) != 2:
            raise InvalidDomainError("star domain centre must be planar")
        if len(r) < MIN_RADIAL_SAMPLES:
            raise InvalidDomainError(f"need at least {MIN_RADIAL_SAMPLES} radial samples, got {len(r)}")
        if not np.all(np.isfinite(r)) or r.min() <= 0:
            raise InvalidDomainError("radial samples must be finite and positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radial", r)

    @classmethod
    def from_function(cls, radius_fn, m: int = 256, center=(0.0, 0.0)):
        t = 2 * np.pi * np.arange(m) / m
        return cls(np.asarray(center, float), np.asarray(radius_fn(t), float))

    @cached_property
    def spline(self) -> CubicSpline:
        m = len(self.radial)
        t = 2 * np.pi * np.arange(m + 1) / m
        return CubicSpline(t, np.append(self.radial, self.radial[0]), bc_type="periodic")

    def radius(self, t, nu: int = 0):
        return self.spline(np.mod(t, 2 * np.pi), nu)

    def level(self, x):
        u = np.asarray(x, float) - self.center
        rho = np.linalg.norm(u, axis=-1)
        return rho - self.radius(np.arctan2(u[..., 1], u[..., 0]))

    @cached_property
    def _piece_gauss(self):
        """Gauss points exact for the degree-6 integrand r^2 on each spline piece."""
        m = len(self.radial)
        x, w = np.polynomial.legendre.leggauss(6)
        h = 2 * np.pi / m
        t = (np.arange(m)[:, None] + 0.5 * (x[None] + 1)) * h
        return t.ravel(), np.tile(0.5 * h * w, m)

    def volume(self) -> float:
        t, w = self._piece_gauss
        return float(0.5 * np.dot(w, self.radius(t) ** 2))

    def surface_measure(self) -> float:
        return self.boundary_length()

    def boundary_length(self) -> float:
        t, w = self._piece_gauss
        # refine: the arclength integrand is not polynomial
        t2 = np.concatenate([0.5 * t, 0.5 * t + np.pi])
        w2 = np.concatenate([0.5 * w, 0.5 * w])
        return float(np.dot(w2, np.hypot(self.radius(t2), self.radius(t2, 1))))

    def bounding_box(self):
        p, _ = self._components[0](np.linspace(0, 2 * np.pi, 4097))
        return p.min(axis=0), p.max(axis=0)

    def centroid(self):
        t, w = self._piece_gauss
        r = self.radius(t)
        mom = (w * r ** 3 / 3.0) @ np.column_stack([np.cos(t), np.sin(t)])
        return self.center + mom / self.volume()

    @property
    def _components(self):
        def curve(t):
            r, dr = self.radius(t), self.radius(t, 1)
            c, s = np.cos(t), np.sin(t)
            return (self.center + np.column_stack([r * c, r * s]),
                    np.column_stack([dr * c - r * s, dr * s + r * c]))

        return [curve]

    def _component_param(self, y, i):
        u = y - self.center
        return np.arctan2(u[:, 1], u[:, 0])

    @cached_property
    def _dense_boundary(self):
        t = np.linspace(0.0, 2 * np.pi, 1 << 14, endpoint=False)
        p, _ = self._components[0](t)
        return p, cKDTree(p)

    def closest_boundary_point(self, x):
        x = np.atleast_2d(np.asarray(x, float))
        pts, tree = self._dense_boundary
        m = len(pts)
        _, i = tree.query(x)
        best = pts[i]
        bestd = np.linalg.norm(x - best, axis=1)
        # refine on the two adjacent polyline segments
        for j in ((i - 1) % m, i):
            a, b = pts[j], pts[(j + 1) % m]
            e = b - a
            u = np.clip(np.einsum("ij,ij->i", x - a, e) / np.einsum("ij,ij->i", e, e), 0.0, 1.0)
            q = a + u[:, None] * e
            d = np.linalg.norm(x - q, axis=1)
            better = d < bestd
            best = np.where(better[:, None], q, best)
            bestd = np.where(better, d, bestd)
        return best

    def distance_to_boundary(self, x):
        x = np.atleast_2d(np.asarray(x, float))
        d = np.linalg.norm(self.closest_boundary_point(x) - x, axis=1)
        return np.where(self.level(x) <= 0, d, -d)

    def boundary_samples(self, m: int) -> BoundarySamples:
        return self._smooth_samples(m)

    def scaled(self, lam: float) -> "StarDomain2":
        return StarDomain2(self.center * lam, self.radial * lam)

    def to_spec(self) -> dict:
        return {"type": "star2", "center": self.center.tolist(), "radial": self.radial.tolist()}


@dataclass(frozen=True, eq=False)
class Annulus2(PlanarCurveMixin, Domain):
    """{r_inner < |x| < r_outer}, centred at the origin.

    Arclength coordinates run over the outer circle first (counter-clockwise)
    and then over the inner circle (clockwise, so that normals point out of
    the domain, i.e. towards the origin).
    """

    r_inner: float
    r_outer: float
    dim = 2
    kind = "annulus2"
    smooth = True
    convex = False

    def __post_init__(self):
        ri, ro = float(self.r_inner), float(self.r_outer)
        if not (0 < ri < ro) or not math.isfinite(ro):
            raise InvalidDomainError(f"need 0 < r_inner < r_outer, got {ri}, {ro}")
        object.__setattr__(self, "r_inner", ri)
        object.__setattr__(self, "r_outer", ro)

    @property
    def center(self):
        return np.zeros(2)

    def level(self, x):
        r = np.linalg.norm(np.asarray(x, float), axis=-1)
        return np.maximum(r - self.r_outer, self.r_inner - r)

    def bounding_box(self):
        return np.full(2, -self.r_outer), np.full(2, self.r_outer)

    def diameter(self) -> float:
        return 2 * self.r_outer

    def volume(self) -> float:
        return math.pi * (self.r_outer ** 2 - self.r_inner ** 2)

    def surface_measure(self) -> float:
        return 2 * math.pi * (self.r_outer + self.r_inner)

    def boundary_length(self) -> float:
        return self.surface_measure()

    def centroid(self):
        return np.zeros(2)

    def distance_to_boundary(self, x):
        r = np.linalg.norm(np.asarray(x, float), axis=-1)
        return np.minimum(self.r_outer - r, r - self.r_inner)

    def closest_boundary_point(self, x):
        x = np.atleast_2d(np.asarray(x, float))
        r = np.linalg.norm(x, axis=1)
        unit = np.where(r[:, None] > 0, x / np.where(r > 0, r, 1.0)[:, None], np.array([1.0, 0.0]))
        target = np.where(self.r_outer - r <= r - self.r_inner, self.r_outer, self.r_inner)
        return unit * target[:, None]

    @property
    def _components(self):
        ro, ri = self.r_outer, self.r_inner

        def outer(t):
            return (ro * np.column_stack([np.cos(t), np.sin(t)]),
                    ro * np.column_stack([-np.sin(t), np.cos(t)]))

        def inner(t):
            return (ri * np.column_stack([np.cos(t), -np.sin(t)]),
                    ri * np.column_stack([-np.sin(t), -np.cos(t)]))

        return [outer, inner]

    def _component_index(self, y):
        r = np.linalg.norm(y, axis=1)
        return (np.abs(r - self.r_inner) < np.abs(r - self.r_outer)).astype(int)

    def _component_param(self, y, i):
        if i == 0:
            return np.arctan2(y[:, 1], y[:, 0])
        return np.arctan2(-y[:, 1], y[:, 0])

    def boundary_samples(self, m: int) -> BoundarySamples:
        return self._smooth_samples(m)

    def scaled(self, lam: float) -> "Annulus2":
        return Annulus2(self.r_inner * lam, self.r_outer * lam)

    def to_spec(self) -> dict:
        return {"type": "annulus2", "r_inner": self.r_inner, "r_outer": self.r_outer}


def notched_disk(depth: float, width: float = 0.15, m: int = 512) -> StarDomain2:
    """Unit disk with a smooth radial notch of the given depth at angle 0.

    As the depth grows towards 1 the domain approaches a slit disk.
    """
    if not 0 <= depth < 1:
        raise InvalidDomainError("notch depth must lie in [0, 1)")
    t = 2 * np.pi * np.arange(m) / m
    ang = np.angle(np.exp(1j * t))
    return StarDomain2(np.zeros(2), 1.0 - depth * np.exp(-0.5 * (ang / width) ** 2))


def star_from_fourier(coeffs, m: int = 256, base: float = 1.0) -> StarDomain2:
    """r(t) = base + sum_k (a_k cos kt + b_k sin kt) for coeffs [(a_1, b_1), ...]."""
    t = 2 * np.pi * np.arange(m) / m
    r = np.full(m, float(base))
    for k, (a, b) in enumerate(coeffs, start=1):
        r += a * np.cos(k * t) + b * np.sin(k * t)
    return StarDomain2(np.zeros(2), r)
