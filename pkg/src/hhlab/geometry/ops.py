"""Module-level geometric operations: measures, Cauchy formula, inradius,
Schwarz profiles, flatness scale and boundary density."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import minimize
from scipy.spatial import ConvexHull, QhullError

from hhlab._rng import map_blocks, pairwise_sum
from hhlab.bounds import unit_ball_volume, unit_sphere_area
from hhlab.errors import ArgumentError, UnsupportedVariantError
from hhlab.geometry.bodies import Ball, ConvexBody, EllipsoidBody, Polygon2, PolytopeH
from hhlab.geometry.base import Domain

FLAT_SLOPE = 0.1
FLAT_ANGLE = math.atan(FLAT_SLOPE)


def volume(domain: Domain) -> float:
    return domain.volume()


def surface_measure(domain: Domain) -> float:
    return domain.surface_measure()


def width(body: ConvexBody, direction) -> float:
    return body.width(direction)


def chord_through(body: ConvexBody, point, direction):
    return body.chord_through(point, direction)


def centroid(domain: Domain):
    return domain.centroid()


def boundary_centroid(domain: Domain, m: int = 1 << 14):
    if hasattr(domain, "boundary_centroid") and not domain.smooth:
        return domain.boundary_centroid()
    if isinstance(domain, (EllipsoidBody, Ball)):
        return domain.boundary_centroid()
    bs = domain.boundary_samples(m)
    return bs.weights @ bs.points / bs.weights.sum()


def _unit_directions(rng, k, n):
    g = rng.standard_normal((k, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def cauchy_surface_area(body: ConvexBody, directions: int, seed: int = 0, workers=None):
    """Cauchy's projection formula by Monte Carlo.

    Averages |S^{n-1}| |pi_v body| / |B^{n-1}| over uniform unit vectors v;
    returns ``(estimate, std_error)``.
    """
    if directions < 2:
        raise ArgumentError("cauchy_surface_area needs at least 2 directions")
    n = body.dim
    scale = unit_sphere_area(n) / unit_ball_volume(n - 1)

    def block(rng, start, stop):
        v = _unit_directions(rng, stop - start, n)
        vals = np.array([body.projection_area(d) for d in v]) * scale
        return np.array([vals.sum(), (vals ** 2).sum()])

    parts = map_blocks(block, directions, seed, stream=11, workers=workers)
    s, s2 = pairwise_sum(parts)
    mean = s / directions
    var = max(s2 / directions - mean ** 2, 0.0) * directions / (directions - 1)
    return float(mean), float(math.sqrt(var / directions))


def inradius(domain: Domain, grid: int = 256):
    """(radius, incenter) of the largest inscribed ball.

    Polyhedral bodies solve the Chebyshev-centre LP; balls and ellipsoids use
    closed forms; other planar domains maximise the distance to the boundary
    on a grid, refined by Nelder-Mead.
    """
    if isinstance(domain, (Polygon2, PolytopeH, EllipsoidBody, Ball)):
        r, c = domain.inradius()
        return float(r), np.asarray(c, float)
    lo, hi = domain.bounding_box()
    axes = [np.linspace(lo[i], hi[i], grid) for i in range(domain.dim)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, domain.dim)
    inside = domain.contains(pts)
    pts = pts[inside]
    d = domain.distance_to_boundary(pts)
    order = np.argsort(d)[::-1][:5]
    best_r, best_x = -np.inf, None
    scale = domain.diameter()
    for x0 in pts[order]:
        res = minimize(lambda x: -float(domain.distance_to_boundary(x[None])[0]), x0,
                       method="Nelder-Mead",
                       options={"xatol": 1e-7 * scale, "fatol": 1e-9 * scale, "maxiter": 2000})
        if -res.fun > best_r:
            best_r, best_x = -res.fun, res.x
    return float(best_r), best_x


@dataclass
class SchwarzProfile:
    """Slice areas of a body orthogonal to a coordinate axis.

    ``heights`` run over [0, height_extent]; ``offset`` is the coordinate of
    the lowest slice in the original body.
    """

    axis: int
    heights: np.ndarray
    slice_areas: np.ndarray
    height_extent: float
    dim: int
    offset: float = 0.0

    @property
    def sup_area(self) -> float:
        return float(self.slice_areas.max())

    def radii(self) -> np.ndarray:
        """Radii of the centred (n-1)-balls of the symmetrized body."""
        return (self.slice_areas / unit_ball_volume(self.dim - 1)) ** (1.0 / (self.dim - 1))

    def concavity_defect(self) -> float:
        """Largest positive second difference of areas^(1/(n-1)), relative to its max."""
        g = self.slice_areas ** (1.0 / (self.dim - 1))
        if len(g) < 3 or g.max() == 0:
            return 0.0
        d2 = g[:-2] - 2 * g[1:-1] + g[2:]
        return float(max(d2.max(), 0.0) / g.max())

    def is_concave(self, tol: float = 1e-6) -> bool:
        return self.concavity_defect() <= tol

    def volume(self) -> float:
        return float(trapezoid(self.slice_areas, self.heights))


def _hull_edges(points, simplices):
    e = np.concatenate([simplices[:, [i, j]] for i in range(simplices.shape[1])
                        for j in range(i + 1, simplices.shape[1])])
    e = np.unique(np.sort(e, axis=1), axis=0)
    return points[e[:, 0]], points[e[:, 1]]


def _section_measure(p, q, axis, c, n):
    """(n-1)-volume of the section {x_axis = c} of the hull whose edges are p-q."""
    za, zb = p[:, axis], q[:, axis]
    lo, hi = np.minimum(za, zb), np.maximum(za, zb)
    sel = (lo <= c) & (hi >= c)
    if not np.any(sel):
        return 0.0
    dz = zb[sel] - za[sel]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(np.abs(dz) > 0, (c - za[sel]) / dz, 0.0)
    pts = p[sel] + t[:, None] * (q[sel] - p[sel])
    # include whole edges lying in the plane
    flat = np.abs(dz) == 0
    if np.any(flat):
        pts = np.vstack([pts, q[sel][flat]])
    pts = np.delete(pts, axis, axis=1)
    if n == 2:
        return float(pts[:, 0].max() - pts[:, 0].min())
    if n == 3:
        ctr = pts.mean(axis=0)
        ang = np.arctan2(pts[:, 1] - ctr[1], pts[:, 0] - ctr[0])
        pts = pts[np.argsort(ang)]
        x, y = pts.T
        return float(abs(0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))
    try:
        return float(ConvexHull(pts).volume)
    except QhullError:
        return 0.0


def schwarz_profile(body: ConvexBody, axis: int = -1, heights: int = 512) -> SchwarzProfile:
    """Slice areas |body ∩ {x_axis = c}| on a uniform grid of at least 512 heights."""
    n = body.dim
    axis = int(axis) % n
    heights = max(int(heights), 512)
    lo, hi = body.bounding_box()
    a = float(hi[axis] - lo[axis])
    cs = np.linspace(lo[axis], hi[axis], heights)
    if isinstance(body, (EllipsoidBody, Ball)):
        if isinstance(body, Ball):
            body = body.as_ellipsoid()
        S = body.shape_matrix() @ body.shape_matrix()
        M = np.linalg.inv(S)
        keep = [i for i in range(n) if i != axis]
        Mk = M[np.ix_(keep, keep)]
        z = (cs - body.center[axis]) ** 2 / S[axis, axis]
        areas = unit_ball_volume(n - 1) / math.sqrt(np.linalg.det(Mk)) * np.clip(1 - z, 0, None) ** ((n - 1) / 2)
    else:
        if isinstance(body, Polygon2):
            verts = body.vertices
            idx = np.arange(len(verts))
            p, q = verts, verts[(idx + 1) % len(verts)]
        else:
            hull = ConvexHull(body.vertices)
            p, q = _hull_edges(hull.points, hull.simplices)
        areas = np.array([_section_measure(p, q, axis, c, n) for c in cs])
    return SchwarzProfile(axis, cs - lo[axis], np.asarray(areas, float), a, n, float(lo[axis]))


@dataclass
class FlatnessScale:
    delta: float
    resolution: int
    limiting_point: np.ndarray = field(default=None)


def _curve_flatness(points, normals, arclen, other_points):
    """Flatness radius of every sample on one closed curve.

    A sample x keeps the contiguous arc around it while the normal turns by
    less than atan(1/10); delta(x) is the distance from x to the nearest
    boundary point outside that arc (window ends are interpolated).
    """
    m = len(points)
    ang = np.unwrap(np.arctan2(normals[:, 1], normals[:, 0]))
    turn = 2 * np.pi * round((ang[-1] - ang[0]) / (2 * np.pi))
    ang3 = np.concatenate([ang - turn, ang, ang + turn])
    p3 = np.concatenate([points, points, points])
    tree_other = None
    if other_points is not None and len(other_points):
        from scipy.spatial import cKDTree

        tree_other = cKDTree(other_points)
    out = np.empty(m)
    for k in range(m):
        i = k + m
        dev_f = np.abs(ang3[i:i + m] - ang3[i])
        dev_b = np.abs(ang3[i - m + 1:i + 1][::-1] - ang3[i])
        ends = []
        for dev, sgn in ((dev_f, 1), (dev_b, -1)):
            j = int(np.argmax(dev > FLAT_ANGLE))
            if dev[j] <= FLAT_ANGLE:
                ends.append((None, m))
                continue
            frac = (FLAT_ANGLE - dev[j - 1]) / (dev[j] - dev[j - 1])
            a, b = p3[i + sgn * (j - 1)], p3[i + sgn * j]
            ends.append((a + frac * (b - a), j))
        x = points[k]
        best = np.inf
        for y, _ in ends:
            if y is not None:
                best = min(best, float(np.linalg.norm(y - x)))
        jf, jb = ends[0][1], ends[1][1]
        if jf + jb < m:
            outside = p3[i + jf:i + m - jb + 1]
            if len(outside):
                best = min(best, float(np.min(np.linalg.norm(outside - x, axis=1))))
        if tree_other is not None:
            best = min(best, float(tree_other.query(x)[0]))
        out[k] = best
    return out


def flatness_scale(domain: Domain, resolution: int = 2048) -> FlatnessScale:
    """Largest delta such that ∂Ω ∩ B(x, delta) is a graph of slope <= 1/10 over
    the tangent plane at x, for every boundary sample x."""
    if isinstance(domain, (Polygon2, PolytopeH)):
        raise UnsupportedVariantError("polyhedral boundaries have corners; flatness scale is zero")
    if isinstance(domain, Ball):
        x = domain.center + domain.radius * np.eye(domain.dim)[0]
        return FlatnessScale(2 * domain.radius * math.sin(FLAT_ANGLE / 2), 0, x)
    if domain.dim == 2:
        comps = domain._components
        tables = domain._arclength_tables
        total = sum(tab[2] for tab in tables)
        curves = []
        for comp, tab in zip(comps, tables):
            k = max(256, int(round(resolution * tab[2] / total)))
            s = np.arange(k) * (tab[2] / k) + tab[1][0]
            t = np.interp(s, tab[1], tab[0])
            p, v = comp(t)
            tan = v / np.linalg.norm(v, axis=1, keepdims=True)
            curves.append((p, np.column_stack([tan[:, 1], -tan[:, 0]]), s - tab[1][0]))
        best, where = np.inf, None
        for ci, (p, nrm, s) in enumerate(curves):
            others = [c[0] for cj, c in enumerate(curves) if cj != ci]
            other = np.concatenate(others) if others else None
            d = _curve_flatness(p, nrm, s, other)
            if d.min() < best:
                best, where = float(d.min()), p[int(np.argmin(d))]
        return FlatnessScale(best, resolution, where)
    if isinstance(domain, EllipsoidBody):
        bs = domain.boundary_samples(resolution)
        P, N = bs.points, bs.normals
        best, where = np.inf, None
        cos0 = math.cos(FLAT_ANGLE)
        for start in range(0, len(P), 512):
            cosang = N[start:start + 512] @ N.T
            dist = np.linalg.norm(P[start:start + 512, None] - P[None], axis=-1)
            d = np.where(cosang < cos0, dist, np.inf).min(axis=1)
            if d.min() < best:
                best, where = float(d.min()), P[start + int(np.argmin(d))]
        return FlatnessScale(best, resolution, where)
    raise UnsupportedVariantError(f"flatness scale not available for {domain.kind}")


def boundary_density(domain: Domain, x, delta: float, m: int = 1 << 18) -> float:
    """H^1(∂Ω ∩ B(x, delta)) by dense boundary sampling."""
    if domain.dim != 2:
        raise UnsupportedVariantError("boundary_density is planar")
    x = np.asarray(x, float)
    diam = domain.diameter()
    if not 0 < delta <= diam:
        raise ArgumentError("delta must lie in (0, diam]")
    if abs(float(np.atleast_1d(domain.distance_to_boundary(x[None]))[0])) > 1e-6 * diam:
        raise ArgumentError("x is not on the boundary")
    bs = domain.boundary_samples(m)
    inside = np.linalg.norm(bs.points - x, axis=1) <= delta
    return float(bs.weights[inside].sum())
