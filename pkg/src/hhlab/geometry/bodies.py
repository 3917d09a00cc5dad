"""Convex bodies: planar polygons, H-polytopes, ellipsoids and balls."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection, QhullError

from hhlab._simplex import simplex_rule, simplex_volume
from hhlab.bounds import ellipse_perimeter, unit_ball_volume
from hhlab.errors import ArgumentError, InvalidDomainError, UnsupportedVariantError
from hhlab.geometry.base import BoundarySamples, Domain, PlanarCurveMixin, sphere_rule

MAX_POLYTOPE_DIM = 6


def chebyshev_center(A: np.ndarray, b: np.ndarray):
    """Largest ball inside {A x <= b} for unit-norm rows of A."""
    n = A.shape[1]
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A_ub = np.column_stack([A, np.ones(len(A))])
    res = linprog(c, A_ub=A_ub, b_ub=b, bounds=[(None, None)] * n + [(0, None)], method="highs")
    if res.status == 3:
        raise InvalidDomainError("polytope is unbounded")
    if res.status != 0:
        raise InvalidDomainError(f"Chebyshev centre LP failed: {res.message}")
    return float(res.x[-1]), res.x[:n]


class ConvexBody(Domain):
    """Convex domain with support function, chords and centroids."""

    convex = True

    def support(self, d) -> float:
        raise NotImplementedError

    def width(self, d) -> float:
        d = np.asarray(d, float)
        nd = np.linalg.norm(d)
        if nd == 0:
            raise ArgumentError("direction must be nonzero")
        d = d / nd
        return self.support(d) + self.support(-d)

    def chord_through(self, point, direction):
        raise NotImplementedError

    def projection_area(self, v) -> float:
        """(n-1)-volume of the orthogonal projection along unit vector v."""
        raise NotImplementedError

    def centroid(self):
        raise NotImplementedError

    def boundary_centroid(self):
        raise NotImplementedError

    def _check_interior(self, point):
        point = np.asarray(point, float)
        if not self.contains(point, tol=1e-12 * self.diameter()):
            raise ArgumentError(f"point {point.tolist()} is not strictly interior")
        return point


class _HalfspaceMixin:
    """Operations shared by bodies stored as {x : A x <= b} with unit rows."""

    def level(self, x):
        x = np.asarray(x, float)
        return np.max(x @ self.A.T - self.b, axis=-1)

    def distance_to_boundary(self, x):
        x = np.asarray(x, float)
        return np.min(self.b - x @ self.A.T, axis=-1)

    def closest_boundary_point(self, x):
        x = np.atleast_2d(np.asarray(x, float))
        slack = self.b - x @ self.A.T
        i = np.argmin(slack, axis=1)
        return x + slack[np.arange(len(x)), i][:, None] * self.A[i]

    def chord_through(self, point, direction):
        point = self._check_interior(point)
        d = np.asarray(direction, float)
        nd = np.linalg.norm(d)
        if nd == 0:
            raise ArgumentError("direction must be nonzero")
        d = d / nd
        t_lo, t_hi = self._line_interval(point, d)
        y1, y2 = point + t_lo * d, point + t_hi * d
        return y1, y2, float(t_hi - t_lo)

    def _line_interval(self, point, d):
        """Parameter interval of {point + t d} inside the body (vectorized over points)."""
        point = np.atleast_2d(point)
        ad = self.A @ d
        slack = self.b - point @ self.A.T
        with np.errstate(divide="ignore", invalid="ignore"):
            t = slack / ad
        t_hi = np.min(np.where(ad > 1e-14, t, np.inf), axis=1)
        t_lo = np.max(np.where(ad < -1e-14, t, -np.inf), axis=1)
        if t_lo.size == 1:
            return float(t_lo[0]), float(t_hi[0])
        return t_lo, t_hi

    def chord_lengths(self, points, d):
        t_lo, t_hi = self._line_interval(points, d)
        return np.maximum(np.asarray(t_hi) - np.asarray(t_lo), 0.0)

    def inradius(self):
        return chebyshev_center(self.A, self.b)


@dataclass(frozen=True, eq=False)
class Polygon2(_HalfspaceMixin, PlanarCurveMixin, ConvexBody):
    """Strictly convex polygon with counter-clockwise vertices."""

    vertices: np.ndarray
    dim = 2
    kind = "polygon2"

    def __post_init__(self):
        v = np.asarray(self.vertices, float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise InvalidDomainError("polygon needs at least 3 planar vertices")
        if not np.all(np.isfinite(v)):
            raise InvalidDomainError("non-finite vertex")
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        scale = float(np.max(np.linalg.norm(e, axis=1))) ** 2
        if scale == 0 or np.any(cross <= 1e-14 * scale):
            raise InvalidDomainError("vertices must be counter-clockwise and strictly convex")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @classmethod
    def from_points(cls, points):
        """Convex hull of a point cloud, counter-clockwise."""
        hull = ConvexHull(np.asarray(points, float))
        return cls(hull.points[hull.vertices])

    @cached_property
    def edges(self):
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    @cached_property
    def edge_lengths(self):
        return np.linalg.norm(self.edges, axis=1)

    @cached_property
    def A(self):
        e = self.edges / self.edge_lengths[:, None]
        return np.column_stack([e[:, 1], -e[:, 0]])

    @cached_property
    def b(self):
        return np.einsum("ij,ij->i", self.A, self.vertices)

    def bounding_box(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def diameter(self) -> float:
        v = self.vertices
        return float(np.max(np.linalg.norm(v[:, None] - v[None], axis=-1)))

    def volume(self) -> float:
        x, y = self.vertices.T
        return float(0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def surface_measure(self) -> float:
        return float(self.edge_lengths.sum())

    def boundary_length(self) -> float:
        return self.surface_measure()

    def centroid(self):
        x, y = self.vertices.T
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cr = x * yn - xn * y
        area = 0.5 * cr.sum()
        return np.array([np.sum((x + xn) * cr), np.sum((y + yn) * cr)]) / (6 * area)

    def boundary_centroid(self):
        mids = self.vertices + 0.5 * self.edges
        return (self.edge_lengths @ mids) / self.edge_lengths.sum()

    def support(self, d) -> float:
        return float(np.max(self.vertices @ np.asarray(d, float)))

    def projection_area(self, v) -> float:
        v = np.asarray(v, float)
        return float(0.5 * np.sum(self.edge_lengths * np.abs(self.A @ v)))

    @cached_property
    def _cum_lengths(self):
        return np.concatenate([[0.0], np.cumsum(self.edge_lengths)])

    def boundary_curve(self, s):
        """Points and outward normals at arclength coordinates ``s``."""
        s = np.mod(np.asarray(s, float), self.surface_measure())
        i = np.clip(np.searchsorted(self._cum_lengths, s, side="right") - 1, 0, len(self.vertices) - 1)
        frac = (s - self._cum_lengths[i]) / self.edge_lengths[i]
        return self.vertices[i] + frac[:, None] * self.edges[i], self.A[i]

    def boundary_point(self, s):
        return self.boundary_curve(np.atleast_1d(s))[0]

    def boundary_coordinate(self, y):
        y = np.atleast_2d(np.asarray(y, float))
        dist = np.abs(y @ self.A.T - self.b)
        # restrict to edges whose segment projection contains the point
        t = np.einsum("kj,ikj->ik", self.edges, y[:, None, :] - self.vertices[None]) / self.edge_lengths ** 2
        dist = np.where((t >= -1e-9) & (t <= 1 + 1e-9), dist, np.inf)
        i = np.argmin(dist, axis=1)
        ti = np.clip(t[np.arange(len(y)), i], 0.0, 1.0)
        return self._cum_lengths[i] + ti * self.edge_lengths[i]

    def boundary_samples(self, m: int) -> BoundarySamples:
        per = np.maximum(1, np.round(m * self.edge_lengths / self.edge_lengths.sum())).astype(int)
        pts, nrm, wts, prm = [], [], [], []
        for i, k in enumerate(per):
            u = (np.arange(k) + 0.5) / k
            pts.append(self.vertices[i] + u[:, None] * self.edges[i])
            nrm.append(np.repeat(self.A[i][None], k, axis=0))
            wts.append(np.full(k, self.edge_lengths[i] / k))
            prm.append(self._cum_lengths[i] + u * self.edge_lengths[i])
        return BoundarySamples(np.concatenate(pts), np.concatenate(nrm),
                               np.concatenate(wts), np.concatenate(prm))

    def edge_gauss(self, npts: int = 8):
        """Gauss-Legendre points/weights on every edge, as (edge, q) arrays."""
        x, w = np.polynomial.legendre.leggauss(npts)
        u = 0.5 * (x + 1)
        pts = self.vertices[:, None, :] + u[None, :, None] * self.edges[:, None, :]
        wts = 0.5 * w[None, :] * self.edge_lengths[:, None]
        return pts, wts

    def fan_triangles(self, apex=None):
        """Triangles of a fan from ``apex`` (default: first vertex)."""
        v = self.vertices
        if apex is None:
            return np.stack([np.repeat(v[:1], len(v) - 2, axis=0), v[1:-1], v[2:]], axis=1)
        apex = np.asarray(apex, float)
        tris = np.stack([np.repeat(apex[None], len(v), axis=0), v, np.roll(v, -1, axis=0)], axis=1)
        keep = np.array([simplex_volume(t) > 1e-300 for t in tris])
        return tris[keep]

    def to_polytope(self) -> "PolytopeH":
        return PolytopeH(2, self.A, self.b)

    def scaled(self, lam: float) -> "Polygon2":
        return Polygon2(self.vertices * float(lam))

    def translated(self, shift) -> "Polygon2":
        return Polygon2(self.vertices + np.asarray(shift, float))

    def to_spec(self) -> dict:
        return {"type": "polygon2", "vertices": self.vertices.tolist()}


@dataclass(frozen=True, eq=False)
class PolytopeH(_HalfspaceMixin, ConvexBody):
    """Bounded polytope {x : <n_i, x> <= b_i} with unit outward normals."""

    dim: int
    normals: np.ndarray
    offsets: np.ndarray
    kind = "polytope_h"

    def __post_init__(self):
        n = int(self.dim)
        A = np.atleast_2d(np.asarray(self.normals, float))
        b = np.asarray(self.offsets, float).ravel()
        if n < 2 or A.shape[1] != n or len(b) != len(A):
            raise InvalidDomainError("halfspace normals/offsets do not match the dimension")
        if n > MAX_POLYTOPE_DIM:
            raise InvalidDomainError(f"polytopes limited to dimension <= {MAX_POLYTOPE_DIM}")
        norms = np.linalg.norm(A, axis=1)
        if np.any(norms == 0):
            raise InvalidDomainError("zero normal")
        A = A / norms[:, None]
        b = b / norms
        r, c = chebyshev_center(A, b)
        if r <= 1e-12 * max(1.0, float(np.max(np.abs(b)))):
            raise InvalidDomainError("polytope has empty interior")
        object.__setattr__(self, "dim", n)
        object.__setattr__(self, "normals", A)
        object.__setattr__(self, "offsets", b)
        object.__setattr__(self, "_cheb", (r, c))

    @classmethod
    def from_points(cls, points):
        hull = ConvexHull(np.asarray(points, float))
        eq = hull.equations
        # merge coplanar facets
        keys = np.round(eq, 10)
        _, idx = np.unique(keys, axis=0, return_index=True)
        eq = eq[np.sort(idx)]
        return cls(hull.points.shape[1], eq[:, :-1], -eq[:, -1])

    @classmethod
    def box(cls, lo, hi):
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        n = len(lo)
        eye = np.eye(n)
        return cls(n, np.vstack([eye, -eye]), np.concatenate([hi, -lo]))

    @property
    def A(self):
        return self.normals

    @property
    def b(self):
        return self.offsets

    def inradius(self):
        return self._cheb

    @cached_property
    def vertices(self) -> np.ndarray:
        r, c = self._cheb
        hs = np.column_stack([self.A, -self.b])
        try:
            verts = HalfspaceIntersection(hs, c).intersections
        except QhullError as exc:
            raise InvalidDomainError(f"vertex enumeration failed: {exc}") from exc
        hull = ConvexHull(verts)
        return verts[hull.vertices]

    @cached_property
    def _hull(self):
        return ConvexHull(self.vertices)

    @cached_property
    def boundary_simplices(self):
        """Triangulated facets: (simplices (s, n, n), facet row index (s,))."""
        hull = self._hull
        simp = hull.points[hull.simplices]
        # assign each boundary simplex to the halfspace it lies on
        resid = np.abs(np.einsum("sqn,mn->smq", simp, self.A) - self.b[None, :, None]).max(axis=2)
        row = np.argmin(resid, axis=1)
        return simp, row

    @cached_property
    def _simplex_data(self):
        simp, row = self.boundary_simplices
        areas = np.array([simplex_volume(s) for s in simp])
        p = self.vertices.mean(axis=0)
        cones = np.concatenate([np.repeat(p[None, None], len(simp), axis=0), simp], axis=1)
        vols = np.abs(np.linalg.det(cones[:, 1:] - cones[:, :1])) / math.factorial(self.dim)
        return areas, cones, vols

    def interior_simplices(self):
        """Simplicial decomposition: cones from the vertex mean over boundary simplices."""
        return self._simplex_data[1]

    def bounding_box(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def diameter(self) -> float:
        v = self.vertices
        return float(np.max(np.linalg.norm(v[:, None] - v[None], axis=-1)))

    def volume(self) -> float:
        return float(self._simplex_data[2].sum())

    def surface_measure(self) -> float:
        return float(self._simplex_data[0].sum())

    def centroid(self):
        _, cones, vols = self._simplex_data
        return (vols @ cones.mean(axis=1)) / vols.sum()

    def boundary_centroid(self):
        areas = self._simplex_data[0]
        simp, _ = self.boundary_simplices
        return (areas @ simp.mean(axis=1)) / areas.sum()

    def facet_areas(self) -> np.ndarray:
        areas = self._simplex_data[0]
        _, row = self.boundary_simplices
        return np.bincount(row, weights=areas, minlength=len(self.b))

    def support(self, d) -> float:
        return float(np.max(self.vertices @ np.asarray(d, float)))

    def projection_area(self, v) -> float:
        v = np.asarray(v, float)
        return float(0.5 * np.sum(self.facet_areas() * np.abs(self.A @ v)))

    def boundary_samples(self, m: int) -> BoundarySamples:
        simp, row = self.boundary_simplices
        areas = self._simplex_data[0]
        k = self.dim - 1
        per_simplex = max(1, m // max(len(simp), 1))
        npts = max(1, int(round(per_simplex ** (1.0 / k))))
        bary, w = simplex_rule(k, npts)
        pts = np.einsum("qk,skn->sqn", bary, simp).reshape(-1, self.dim)
        wts = (areas[:, None] * w[None]).ravel()
        nrm = np.repeat(self.A[row], len(w), axis=0)
        prm = np.repeat(row, len(w)).astype(float)
        return BoundarySamples(pts, nrm, wts, prm)

    def scaled(self, lam: float) -> "PolytopeH":
        return PolytopeH(self.dim, self.A, self.b * float(lam))

    def to_spec(self) -> dict:
        return {"type": "polytope_h", "dim": self.dim,
                "halfspaces": [{"normal": a.tolist(), "offset": float(bb)} for a, bb in zip(self.A, self.b)]}


def _ellipsoid_closest_local(y, axes):
    """Closest boundary point of {sum (u/a)^2 <= 1} to interior points y (local frame).

    Root of sum (a_i y_i / (a_i^2 + t))^2 = 1 on (-a_min^2, 0] by bisection.
    """
    y = np.atleast_2d(y)
    a2 = axes ** 2
    sgn = np.where(y < 0, -1.0, 1.0)
    z = np.abs(y)
    amin = axes[-1]
    lo = -a2[-1] + amin * z[:, -1]
    hi = np.zeros(len(z))

    def F(t):
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = (axes * z / (a2 + t[:, None])) ** 2
        terms = np.where(z == 0, 0.0, terms)
        return terms.sum(axis=1) - 1.0

    with np.errstate(divide="ignore", invalid="ignore"):
        deg = F(lo) < 0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        fm = F(mid)
        lo = np.where(fm > 0, mid, lo)
        hi = np.where(fm > 0, hi, mid)
    t = 0.5 * (lo + hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(z == 0, 0.0, a2 * z / (a2 + t[:, None]))
    if np.any(deg):
        # point on the shortest-axis hyperplane far from the boundary
        zd = z[deg]
        with np.errstate(divide="ignore", invalid="ignore"):
            xd = np.where(a2[:-1] > a2[-1], a2[:-1] * zd[:, :-1] / (a2[:-1] - a2[-1]), zd[:, :-1])
        rest = np.clip(1.0 - np.sum((xd / axes[:-1]) ** 2, axis=1), 0.0, None)
        x[deg] = np.column_stack([xd, axes[-1] * np.sqrt(rest)])
    return x * sgn


@dataclass(frozen=True, eq=False)
class EllipsoidBody(PlanarCurveMixin, ConvexBody):
    """Ellipsoid centre + F^T diag(a) B^n; rows of ``frame`` are the axis directions."""

    center: np.ndarray
    semi_axes: np.ndarray
    frame: np.ndarray = None
    kind = "ellipsoid"
    smooth = True

    def __post_init__(self):
        c = np.asarray(self.center, float).ravel()
        a = np.asarray(self.semi_axes, float).ravel()
        n = len(c)
        if len(a) != n or n < 2:
            raise InvalidDomainError("centre and semi-axes must share a dimension >= 2")
        if np.any(a <= 0):
            raise InvalidDomainError("semi-axes must be positive")
        if np.any(np.diff(a) > 0):
            raise InvalidDomainError("semi-axes must be sorted in descending order")
        F = np.eye(n) if self.frame is None else np.asarray(self.frame, float)
        if F.shape != (n, n) or np.max(np.abs(F @ F.T - np.eye(n))) > 1e-12:
            raise InvalidDomainError("frame must be orthonormal")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "semi_axes", a)
        object.__setattr__(self, "frame", F)

    @classmethod
    def from_shape_matrix(cls, center, B):
        """Ellipsoid {B u + center : |u| <= 1} for symmetric positive-definite B."""
        w, V = np.linalg.eigh(np.asarray(B, float))
        order = np.argsort(w)[::-1]
        F = V[:, order].T
        # re-orthonormalize to machine precision
        q, r = np.linalg.qr(F.T)
        F = (q * np.sign(np.diag(r))).T
        return cls(center, w[order], F)

    @property
    def dim(self):
        return len(self.center)

    def shape_matrix(self):
        return self.frame.T @ np.diag(self.semi_axes) @ self.frame

    def local(self, x):
        return (np.asarray(x, float) - self.center) @ self.frame.T

    def to_global(self, u):
        return self.center + np.asarray(u, float) @ self.frame

    def level(self, x):
        u = self.local(x)
        return np.sqrt(np.sum((u / self.semi_axes) ** 2, axis=-1)) - 1.0

    def bounding_box(self):
        half = np.sqrt((self.frame.T ** 2) @ (self.semi_axes ** 2))
        return self.center - half, self.center + half

    def diameter(self) -> float:
        return 2.0 * float(self.semi_axes[0])

    def volume(self) -> float:
        return unit_ball_volume(self.dim) * float(np.prod(self.semi_axes))

    def surface_measure(self) -> float:
        a = self.semi_axes
        if self.dim == 2:
            return ellipse_perimeter(a[0], a[1])
        if self.dim == 3:
            dirs, w = sphere_rule(3, 2 * 128 * 128)
            return float(np.prod(a) * np.dot(w, np.linalg.norm(dirs / a, axis=1)))
        from hhlab.geometry.ops import cauchy_surface_area

        return cauchy_surface_area(self, 1 << 18, seed=0)[0]

    def centroid(self):
        return self.center.copy()

    def boundary_centroid(self):
        return self.center.copy()

    def support(self, d) -> float:
        d = np.asarray(d, float)
        dl = self.frame @ d
        return float(self.center @ d + np.sqrt(np.sum((self.semi_axes * dl) ** 2)))

    def projection_area(self, v) -> float:
        return ellipsoid_projection_area(self.semi_axes, self.frame @ np.asarray(v, float))

    def chord_through(self, point, direction):
        point = self._check_interior(point)
        d = np.asarray(direction, float)
        nd = np.linalg.norm(d)
        if nd == 0:
            raise ArgumentError("direction must be nonzero")
        d = d / nd
        t_lo, t_hi = self._line_interval(point, d)
        return point + t_lo * d, point + t_hi * d, float(t_hi - t_lo)

    def _line_interval(self, point, d):
        y = self.local(np.atleast_2d(point)) / self.semi_axes
        e = (self.frame @ d) / self.semi_axes
        A = e @ e
        B = 2 * y @ e
        C = np.sum(y * y, axis=1) - 1.0
        disc = np.sqrt(np.maximum(B * B - 4 * A * C, 0.0))
        t_lo, t_hi = (-B - disc) / (2 * A), (-B + disc) / (2 * A)
        if t_lo.size == 1:
            return float(t_lo[0]), float(t_hi[0])
        return t_lo, t_hi

    def chord_lengths(self, points, d):
        t_lo, t_hi = self._line_interval(points, d)
        return np.maximum(np.asarray(t_hi) - np.asarray(t_lo), 0.0)

    def closest_boundary_point(self, x):
        u = self.local(np.atleast_2d(x))
        return self.to_global(_ellipsoid_closest_local(u, self.semi_axes))

    def distance_to_boundary(self, x):
        x = np.atleast_2d(np.asarray(x, float))
        d = np.linalg.norm(self.closest_boundary_point(x) - x, axis=1)
        return np.where(self.level(x) <= 0, d, -d)

    def outward_normal(self, y):
        g = (self.local(y) / self.semi_axes ** 2) @ self.frame
        return g / np.linalg.norm(g, axis=-1, keepdims=True)

    def inradius(self):
        return float(self.semi_axes[-1]), self.center.copy()

    @property
    def _components(self):
        a, b = self.semi_axes

        def curve(t):
            u = np.column_stack([a * np.cos(t), b * np.sin(t)])
            du = np.column_stack([-a * np.sin(t), b * np.cos(t)])
            return self.to_global(u), du @ self.frame

        return [curve]

    def _component_param(self, y, i):
        u = self.local(y)
        return np.arctan2(u[:, 1] / self.semi_axes[1], u[:, 0] / self.semi_axes[0])

    def boundary_samples(self, m: int) -> BoundarySamples:
        if self.dim == 2:
            return self._smooth_samples(m)
        if self.dim > 3:
            raise UnsupportedVariantError("ellipsoid boundary rules implemented for n <= 3")
        dirs, w = sphere_rule(3, m)
        a = self.semi_axes
        pts = self.to_global(dirs * a)
        wts = np.prod(a) * np.linalg.norm(dirs / a, axis=1) * w
        return BoundarySamples(pts, self.outward_normal(pts), wts, np.arange(len(w), dtype=float))

    def scaled(self, lam: float) -> "EllipsoidBody":
        return EllipsoidBody(self.center * lam, self.semi_axes * lam, self.frame)

    def to_spec(self) -> dict:
        return {"type": "ellipsoid", "center": self.center.tolist(),
                "semi_axes": self.semi_axes.tolist(), "frame": self.frame.tolist()}


@dataclass(frozen=True, eq=False)
class Ball(PlanarCurveMixin, ConvexBody):
    center: np.ndarray
    radius: float
    kind = "ball"
    smooth = True

    def __post_init__(self):
        c = np.asarray(self.center, float).ravel()
        if len(c) < 2:
            raise InvalidDomainError("ball needs dimension >= 2")
        if not float(self.radius) > 0:
            raise InvalidDomainError("radius must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self):
        return len(self.center)

    @property
    def semi_axes(self):
        return np.full(self.dim, self.radius)

    @property
    def frame(self):
        return np.eye(self.dim)

    def level(self, x):
        return np.linalg.norm(np.asarray(x, float) - self.center, axis=-1) - self.radius

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def diameter(self) -> float:
        return 2 * self.radius

    def volume(self) -> float:
        return unit_ball_volume(self.dim) * self.radius ** self.dim

    def surface_measure(self) -> float:
        return self.dim * unit_ball_volume(self.dim) * self.radius ** (self.dim - 1)

    def centroid(self):
        return self.center.copy()

    def boundary_centroid(self):
        return self.center.copy()

    def support(self, d) -> float:
        d = np.asarray(d, float)
        return float(self.center @ d + self.radius * np.linalg.norm(d))

    def projection_area(self, v) -> float:
        return unit_ball_volume(self.dim - 1) * self.radius ** (self.dim - 1)

    def chord_through(self, point, direction):
        point = self._check_interior(point)
        d = np.asarray(direction, float)
        nd = np.linalg.norm(d)
        if nd == 0:
            raise ArgumentError("direction must be nonzero")
        d = d / nd
        t_lo, t_hi = self._line_interval(point, d)
        return point + t_lo * d, point + t_hi * d, float(t_hi - t_lo)

    def _line_interval(self, point, d):
        y = np.atleast_2d(point) - self.center
        B = y @ d
        C = np.sum(y * y, axis=1) - self.radius ** 2
        disc = np.sqrt(np.maximum(B * B - C, 0.0))
        t_lo, t_hi = -B - disc, -B + disc
        if t_lo.size == 1:
            return float(t_lo[0]), float(t_hi[0])
        return t_lo, t_hi

    def chord_lengths(self, points, d):
        t_lo, t_hi = self._line_interval(points, d)
        return np.maximum(np.asarray(t_hi) - np.asarray(t_lo), 0.0)

    def distance_to_boundary(self, x):
        return self.radius - np.linalg.norm(np.asarray(x, float) - self.center, axis=-1)

    def closest_boundary_point(self, x):
        y = np.atleast_2d(np.asarray(x, float)) - self.center
        r = np.linalg.norm(y, axis=1, keepdims=True)
        unit = np.where(r > 0, y / np.where(r > 0, r, 1.0), np.eye(self.dim)[0])
        return self.center + self.radius * unit

    def outward_normal(self, y):
        g = np.asarray(y, float) - self.center
        return g / np.linalg.norm(g, axis=-1, keepdims=True)

    def inradius(self):
        return self.radius, self.center.copy()

    @property
    def _components(self):
        r = self.radius

        def curve(t):
            return (self.center + r * np.column_stack([np.cos(t), np.sin(t)]),
                    r * np.column_stack([-np.sin(t), np.cos(t)]))

        return [curve]

    def _component_param(self, y, i):
        u = y - self.center
        return np.arctan2(u[:, 1], u[:, 0])

    def boundary_samples(self, m: int) -> BoundarySamples:
        if self.dim == 2:
            return self._smooth_samples(m)
        dirs, w = sphere_rule(self.dim, m)
        pts = self.center + self.radius * dirs
        return BoundarySamples(pts, dirs, w * self.radius ** (self.dim - 1), np.arange(len(w), dtype=float))

    def as_ellipsoid(self) -> EllipsoidBody:
        return EllipsoidBody(self.center, self.semi_axes, np.eye(self.dim))

    def scaled(self, lam: float) -> "Ball":
        return Ball(self.center * lam, self.radius * lam)

    def to_spec(self) -> dict:
        return {"type": "ball", "center": self.center.tolist(), "radius": self.radius}


def ellipsoid_projection_area(semi_axes, direction) -> float:
    """Shadow volume of an axis-aligned ellipsoid along a direction.

    |B^{n-1}| prod(a) sqrt(sum v_i^2 / a_i^2) for unit v in the ellipsoid frame;
    the maximum over directions is attained along the shortest axis.
    """
    a = np.asarray(semi_axes, float)
    v = np.asarray(direction, float)
    nv = np.linalg.norm(v)
    if nv == 0:
        raise ArgumentError("direction must be nonzero")
    if np.any(a <= 0):
        raise ArgumentError("semi-axes must be positive")
    v = v / nv
    return float(unit_ball_volume(len(a) - 1) * np.prod(a) * np.sqrt(np.sum((v / a) ** 2)))


def triangle_family(a: float) -> Polygon2:
    """{0 <= x <= 1, 0 <= y <= a x}."""
    if not a > 0:
        raise ArgumentError("a must be positive")
    return Polygon2([[0.0, 0.0], [1.0, 0.0], [1.0, float(a)]])


def wedge_family(a: float) -> Polygon2:
    """{0 <= x <= 1, |y| <= a x}: the symmetric wedge with apex at the origin."""
    if not a > 0:
        raise ArgumentError("a must be positive")
    return Polygon2([[0.0, 0.0], [1.0, -float(a)], [1.0, float(a)]])


def unit_square() -> Polygon2:
    return Polygon2([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def regular_polygon(k: int, radius: float = 1.0, center=(0.0, 0.0), phase: float = 0.0) -> Polygon2:
    t = phase + 2 * np.pi * np.arange(k) / k
    return Polygon2(np.asarray(center, float) + radius * np.column_stack([np.cos(t), np.sin(t)]))


def random_polygon(rng: np.random.Generator, k: int = 6, symmetric: bool = False) -> Polygon2:
    """Convex hull of random points on a jittered ellipse."""
    while True:
        m = k if not symmetric else max(2, k // 2)
        t = np.sort(rng.uniform(0, 2 * np.pi if not symmetric else np.pi, m))
        r = rng.uniform(0.6, 1.0, m)
        stretch = rng.uniform(0.4, 1.0)
        pts = np.column_stack([r * np.cos(t), stretch * r * np.sin(t)])
        if symmetric:
            pts = np.vstack([pts, -pts])
        try:
            poly = Polygon2.from_points(pts)
        except (QhullError, InvalidDomainError):
            continue
        if len(poly.vertices) >= 3 and poly.volume() > 0.05:
            return poly


def random_polytope(rng: np.random.Generator, n: int = 3, m: int = 20) -> PolytopeH:
    while True:
        g = rng.normal(size=(m, n))
        pts = g / np.linalg.norm(g, axis=1, keepdims=True) * rng.uniform(0.5, 1.0, (m, 1))
        pts *= rng.uniform(0.5, 1.5, n)
        try:
            return PolytopeH.from_points(pts)
        except (QhullError, InvalidDomainError):
            continue
