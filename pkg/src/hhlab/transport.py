"""Chord-weight transport of interior mass to the boundary along a fixed direction.

Every interior point x lies on the chord [y1, y2] through x parallel to d;
splitting its mass with the barycentric weights pushes Lebesgue measure on
Ω forward to a boundary measure with density

    D(y) = (chord length through y / 2) * |<nu(y), d>|

with respect to H^{n-1}. For convex f, ∫_Ω f <= ∫_∂Ω D f, so
sup D * |∂Ω| / |Ω| certifies a normalized Hermite-Hadamard constant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from hhlab._rng import block_generator
from hhlab.bounds import theorem1_constants
from hhlab.errors import ArgumentError, HypothesisViolation, UnsupportedVariantError
from hhlab.functions import Affine, MaxAffine, TestFunction, boundary_min
from hhlab.geometry import Ball, ConvexBody, EllipsoidBody, Polygon2
from hhlab.quadrature import DEFAULT_BUDGET, _edge_kinks, interior_integral

DEFAULT_SAMPLES = 4096


def _unit(direction):
    d = np.asarray(direction, float).ravel()
    nd = np.linalg.norm(d)
    if not nd > 0:
        raise ArgumentError("direction must be nonzero")
    return d / nd


@dataclass
class TransportProfile:
    direction: np.ndarray
    points: np.ndarray
    params: np.ndarray
    weights: np.ndarray
    density: np.ndarray
    sup_density: float
    mass: float
    volume: float
    surface: float

    @property
    def constant(self) -> float:
        return self.sup_density * self.surface / self.volume

    def mass_defect(self) -> float:
        return abs(self.mass - self.volume) / self.volume

    def rows(self):
        """(boundary parameter, density) pairs for CSV export."""
        return np.column_stack([self.params, self.density])

    def to_dict(self) -> dict:
        return {"direction": self.direction.tolist(), "sup_density": self.sup_density,
                "mass": self.mass, "volume": self.volume, "surface": self.surface,
                "constant": self.constant, "params": self.params.tolist(),
                "density": self.density.tolist()}


def _density(body, points, normals, d):
    lengths = body.chord_lengths(points, d)
    return 0.5 * lengths * np.abs(normals @ d)


def _polygon_breakpoints(poly: Polygon2, d):
    """Per-edge parameters in [0, 1] where the chord length is not affine:
    edge ends plus projections of vertices along d."""
    out = []
    perp = np.array([-d[1], d[0]])
    vproj = poly.vertices @ perp
    for a, e in zip(poly.vertices, poly.edges):
        ep = e @ perp
        ts = [0.0, 1.0]
        if abs(ep) > 1e-15:
            t = (vproj - a @ perp) / ep
            ts.extend(t[(t > 0) & (t < 1)].tolist())
        out.append(np.unique(ts))
    return out


def _polygon_edge_density(poly, i, t, d):
    a, e = poly.vertices[i], poly.edges[i]
    # nudge off the vertices so that the chord is the one entering from the edge interior
    t = np.clip(np.asarray(t, float), 1e-12, 1 - 1e-12)
    pts = a + t[:, None] * e
    return 0.5 * poly.chord_lengths(pts, d) * abs(poly.A[i] @ d)


def _polygon_sup(poly, d):
    best, where = 0.0, None
    for i, ts in enumerate(_polygon_breakpoints(poly, d)):
        vals = _polygon_edge_density(poly, i, ts, d)
        k = int(np.argmax(vals))
        if vals[k] > best:
            best, where = float(vals[k]), poly.vertices[i] + ts[k] * poly.edges[i]
    return best, where


def _smooth_sup(body, d, samples):
    """Sample maximum refined by a bounded search in the curve parameter (2-D)."""
    i = int(np.argmax(samples.density))
    best = float(samples.density[i])
    if body.dim != 2:
        return best
    s0 = samples.params[i]
    ds = 2.0 * body.surface_measure() / len(samples.density)

    def neg(s):
        y = body.boundary_point(s)
        y = body.center + (y - body.center) * (1 - 1e-13)
        return -float(_density(body, y, body.outward_normal(y), d)[0])

    res = minimize_scalar(neg, bounds=(s0 - ds, s0 + ds), method="bounded",
                          options={"xatol": 1e-12 * body.diameter()})
    return max(best, -float(res.fun))


@dataclass
class _Samples:
    points: np.ndarray
    params: np.ndarray
    weights: np.ndarray
    density: np.ndarray


def _boundary_density_samples(body, d, m):
    bs = body.boundary_samples(m)
    pts = bs.points
    if isinstance(body, (EllipsoidBody, Ball)):
        # pull samples onto the closed body so the chord solver sees them as boundary points
        pts = body.center + (pts - body.center) * (1 - 1e-13)
    dens = _density(body, pts, bs.normals, d)
    return _Samples(bs.points, bs.params, bs.weights, dens)


def transport_profile(body: ConvexBody, direction, samples: int = DEFAULT_SAMPLES) -> TransportProfile:
    """Boundary density of the constant-direction chord transport."""
    if not isinstance(body, ConvexBody):
        raise UnsupportedVariantError("transport needs a convex body")
    d = _unit(direction)
    if len(d) != body.dim:
        raise ArgumentError("direction dimension mismatch")
    if isinstance(body, Polygon2):
        m = samples * len(body.vertices)
    else:
        m = samples
    s = _boundary_density_samples(body, d, m)
    if isinstance(body, Polygon2):
        sup, _ = _polygon_sup(body, d)
        mass = polygon_transport_integral(body, d, None)
    else:
        sup = _smooth_sup(body, d, s) if isinstance(body, (EllipsoidBody, Ball)) else float(s.density.max())
        mass = float(np.dot(s.weights, s.density))
    return TransportProfile(d, s.points, s.params, s.weights, s.density, sup, mass,
                            body.volume(), body.surface_measure())


def polygon_transport_integral(poly: Polygon2, d, f: TestFunction | None, npts: int = 6) -> float:
    """∫_∂Ω D f on a polygon, split at chord breakpoints and MaxAffine kinks.

    D is affine between breakpoints, so with affine pieces of f the Gauss rule
    is exact.
    """
    x, w = np.polynomial.legendre.leggauss(npts)
    total = 0.0
    g = None
    if isinstance(f, MaxAffine):
        g = f
    elif isinstance(f, Affine) and f.g is not None:
        g = MaxAffine((f,))
    for i, ts in enumerate(_polygon_breakpoints(poly, d)):
        a, e, L = poly.vertices[i], poly.edges[i], poly.edge_lengths[i]
        if g is not None:
            ts = np.unique(np.concatenate([ts, _edge_kinks(g, a, a + e)]))
        lo, hi = ts[:-1], ts[1:]
        u = (0.5 * (hi - lo)[:, None] * (x + 1) + lo[:, None]).ravel()
        wu = (0.5 * (hi - lo)[:, None] * w).ravel()
        dens = _polygon_edge_density(poly, i, u, d)
        vals = np.ones_like(u) if f is None else f.eval(a + u[:, None] * e)
        total += L * float(np.sum(wu * dens * vals))
    return total


def transport_constant(body: ConvexBody, direction, samples: int = DEFAULT_SAMPLES) -> float:
    """sup D * |∂Ω| / |Ω| for the given direction."""
    return transport_profile(body, direction, samples).constant


def _sphere_chart(theta):
    """Unit vector from n-1 spherical angles."""
    theta = np.atleast_1d(theta)
    n = len(theta) + 1
    v = np.ones(n)
    for k, t in enumerate(theta):
        v[k] *= math.cos(t)
        v[k + 1:] *= math.sin(t)
    return v


def _chart_angles(v):
    v = _unit(v)
    n = len(v)
    ang = []
    for k in range(n - 1):
        r = np.linalg.norm(v[k:])
        a = math.acos(np.clip(v[k] / r, -1, 1)) if r > 0 else 0.0
        if k == n - 2 and v[-1] < 0:
            a = 2 * math.pi - a
        ang.append(a)
    return np.array(ang)


def best_direction(body: ConvexBody, restarts: int = 8, seed: int = 0, samples: int = 1024):
    """Minimize the transport constant over directions.

    Starts at the John-ellipsoid axes (shortest first) and at random
    directions; returns ``(direction, constant)``, an upper bound for the
    body's optimal normalized constant.
    """
    from hhlab.john import john_ellipsoid

    E = john_ellipsoid(body)
    starts = [E.frame[k] for k in range(body.dim - 1, -1, -1)]
    rng = block_generator(seed, 0, stream=41)
    for _ in range(max(0, restarts - len(starts))):
        g = rng.standard_normal(body.dim)
        starts.append(g / np.linalg.norm(g))
    best_c, best_d = np.inf, None
    if body.dim == 2:
        def obj(t):
            return transport_constant(body, [math.cos(t), math.sin(t)], samples)

        for v in starts:
            t0 = math.atan2(v[1], v[0])
            res = minimize_scalar(obj, bounds=(t0 - math.pi / 4, t0 + math.pi / 4), method="bounded",
                                  options={"xatol": 1e-9})
            for t, c in ((t0, obj(t0)), (res.x, res.fun)):
                if c < best_c * (1 - 1e-9):
                    best_c, best_d = float(c), np.array([math.cos(t), math.sin(t)])
    else:
        def obj(a):
            return transport_constant(body, _sphere_chart(a), samples)

        for v in starts:
            a0 = _chart_angles(v)
            res = minimize(obj, a0, method="Nelder-Mead", options={"xatol": 1e-6, "fatol": 1e-9, "maxiter": 400})
            for a, c in ((a0, obj(a0)), (res.x, res.fun)):
                if c < best_c * (1 - 1e-9):
                    best_c, best_d = float(c), _sphere_chart(a)
    if best_d[np.argmax(np.abs(best_d))] < 0:
        best_d = -best_d
    return best_d, best_c


@dataclass
class TransportCheck:
    lhs: float
    rhs: float
    error: float
    ok: bool

    def __bool__(self):
        return bool(self.ok)


def transport_integral(body: ConvexBody, f: TestFunction, direction, samples: int = DEFAULT_SAMPLES):
    """(∫_∂Ω D f, error estimate)."""
    d = _unit(direction)
    if isinstance(body, Polygon2):
        hi = polygon_transport_integral(body, d, f, 8)
        lo = polygon_transport_integral(body, d, f, 5)
        return hi, abs(hi - lo) + 1e-13 * (abs(hi) + body.volume())
    s_hi = _boundary_density_samples(body, d, samples)
    s_lo = _boundary_density_samples(body, d, samples // 2)
    hi = float(np.sum(s_hi.weights * s_hi.density * f.eval(s_hi.points)))
    lo = float(np.sum(s_lo.weights * s_lo.density * f.eval(s_lo.points)))
    return hi, abs(hi - lo) + 1e-13 * abs(hi)


def transport_inequality_check(body: ConvexBody, f: TestFunction, direction,
                               budget: int = DEFAULT_BUDGET, seed: int = 0) -> TransportCheck:
    """∫_Ω f <= ∫_∂Ω D f within the combined quadrature error."""
    if not f.convex:
        raise HypothesisViolation("transport inequality needs a convex function")
    bmin = boundary_min(f, body)
    if bmin < -1e-10 * max(1.0, abs(bmin)):
        raise HypothesisViolation(f"f is negative on the boundary (min {bmin:.6g})")
    lhs, dl = interior_integral(body, f, budget=budget, seed=seed)
    rhs, dr = transport_integral(body, f, direction, samples=max(DEFAULT_SAMPLES, budget // 4))
    err = dl + dr + 1e-12 * (abs(lhs) + abs(rhs))
    return TransportCheck(lhs, rhs, err, bool(lhs <= rhs + err))


def john_chain(body: ConvexBody, samples: int = DEFAULT_SAMPLES) -> dict:
    """Transport constant along the shortest John axis beside the bound chain.

    With E ⊆ Ω ⊆ nE and d the shortest axis a_n of E: sup D <= n a_n,
    |∂Ω| <= |∂(nE)| and |Ω| >= |E|, so the certified constant is at most
    n a_n |∂(nE)| / |E|, itself at most the closed-form dimensional constant.
    """
    from hhlab.john import john_ellipsoid

    E = john_ellipsoid(body)
    n = body.dim
    d = E.frame[-1]
    prof = transport_profile(body, d, samples)
    chain = n * E.semi_axes[-1] * E.scaled(n).surface_measure() / E.volume()
    return {"transport_constant": prof.constant, "sup_density": prof.sup_density,
            "sup_density_bound": n * E.semi_axes[-1], "chain_bound": chain,
            "theorem1_simple": theorem1_constants(n).simple, "john_axes": E.semi_axes.tolist()}
