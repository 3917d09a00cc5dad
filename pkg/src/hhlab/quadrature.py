"""Interior and boundary integration and the normalized Hermite-Hadamard ratio."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import qmc

from hhlab._rng import block_generator
from hhlab._simplex import simplex_rule, simplex_volume
from hhlab.errors import (
    ArgumentError,
    HypothesisViolation,
    IllPosedRatioError,
    InvalidDomainError,
    SingularityError,
    UnsupportedVariantError,
)
from hhlab.functions import Affine, LogSingularity, MaxAffine, NormPower, TestFunction, boundary_min
from hhlab.geometry import Annulus2, Ball, EllipsoidBody, Polygon2, PolytopeH, StarDomain2
from hhlab.geometry.base import sphere_rule

METHODS = ("exact-fan", "polar", "quasi-mc")
DEFAULT_BUDGET = 1 << 16


def default_method(domain) -> str:
    if isinstance(domain, (Polygon2, PolytopeH)):
        return "exact-fan"
    if isinstance(domain, (Ball, EllipsoidBody, StarDomain2, Annulus2)):
        return "polar"
    return "quasi-mc"


def _singular_inside(domain, f) -> bool:
    if not isinstance(f, LogSingularity):
        return False
    c = f.center
    return bool(domain.level(c) <= 0)


# ---------------------------------------------------------------- polyhedral


def _dominated(G, cs, i):
    """Plane i never uniquely active because a parallel copy wins (ties go to the lower index)."""
    for j in range(len(cs)):
        if j != i and np.all(G[j] == G[i]) and (cs[j] > cs[i] or (cs[j] == cs[i] and j < i)):
            return True
    return False


def _maxaffine_pieces_polygon(poly: Polygon2, f: MaxAffine):
    """Split the polygon into the convex pieces where one plane is active."""
    G, cs = f.G, f.cs
    pieces = []
    for i in range(len(cs)):
        if _dominated(G, cs, i):
            continue
        verts = poly.vertices
        for j in range(len(cs)):
            if j == i or np.all(G[j] == G[i]):
                continue
            a, b = G[j] - G[i], cs[i] - cs[j]
            verts = _clip_halfplane(verts, a, b)
            if len(verts) < 3:
                break
        if len(verts) >= 3:
            pieces.append((i, verts))
    return pieces


def _clip_halfplane(verts, a, b):
    """Sutherland-Hodgman clip of a convex polygon to {a.x <= b}."""
    if not np.any(a):
        return verts if b >= 0 else np.zeros((0, 2))
    s = verts @ a - b
    out = []
    m = len(verts)
    for k in range(m):
        p, q = verts[k], verts[(k + 1) % m]
        sp, sq = s[k], s[(k + 1) % m]
        if sp <= 0:
            out.append(p)
        if (sp < 0 < sq) or (sq < 0 < sp):
            out.append(p + (sp / (sp - sq)) * (q - p))
    return np.array(out) if out else np.zeros((0, 2))


def _polygon_area_centroid(v):
    x, y = v.T
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cr = x * yn - xn * y
    area = 0.5 * cr.sum()
    if abs(area) < 1e-300:
        return 0.0, v.mean(axis=0)
    return area, np.array([np.sum((x + xn) * cr), np.sum((y + yn) * cr)]) / (6 * area)


def _maxaffine_pieces_polytope(body: PolytopeH, f: MaxAffine):
    G, cs = f.G, f.cs
    pieces = []
    for i in range(len(cs)):
        others = [j for j in range(len(cs)) if j != i and np.any(G[j] != G[i])]
        A = np.vstack([body.A] + [(G[j] - G[i])[None] for j in others]) if others else body.A
        b = np.concatenate([body.b, [cs[i] - cs[j] for j in others]]) if others else body.b
        if _dominated(G, cs, i):
            continue
        try:
            piece = PolytopeH(body.dim, A, b)
        except InvalidDomainError:
            continue
        pieces.append((i, piece))
    return pieces


def _fan_apex(poly, f):
    apex = None
    if isinstance(f, NormPower) and poly.contains(f.center, tol=1e-12 * poly.diameter()):
        apex = f.center
    return apex


def _fan_simplices(poly: Polygon2, apex=None):
    v = poly.vertices
    if apex is None:
        apex = v.mean(axis=0)
    tris = np.stack([v, np.repeat(np.asarray(apex)[None], len(v), axis=0), np.roll(v, -1, axis=0)], axis=1)
    keep = np.array([simplex_volume(t) > 1e-300 for t in tris])
    return tris[keep]


def _rule_sum(f, simplices, npts):
    s, kp1, n = simplices.shape
    bary, w = simplex_rule(kp1 - 1, npts)
    pts = np.einsum("qk,skn->sqn", bary, simplices)
    vols = np.array([simplex_volume(sx) for sx in simplices])
    vals = np.asarray(f.eval(pts.reshape(-1, n)), float).reshape(s, -1)
    return float(np.sum(vols * (vals @ w)))


def _exact_fan(domain, f, budget):
    if isinstance(f, MaxAffine):
        if isinstance(domain, Polygon2):
            total = 0.0
            for i, verts in _maxaffine_pieces_polygon(domain, f):
                area, ctr = _polygon_area_centroid(verts)
                total += area * (ctr @ f.G[i] + f.cs[i])
            return total, 64 * np.finfo(float).eps * (abs(total) + domain.volume())
        total = 0.0
        for i, piece in _maxaffine_pieces_polytope(domain, f):
            total += piece.volume() * (piece.centroid() @ f.G[i] + f.cs[i])
        return total, 1e-12 * (abs(total) + domain.volume())
    if isinstance(domain, Polygon2):
        simp = _fan_simplices(domain, _fan_apex(domain, f))
    else:
        simp = domain.interior_simplices()
    lo_pts, hi_pts = 5, 7
    if f.poly_degree is None:
        # refine non-polynomial integrands through the budget
        per = max(1, budget // max(len(simp), 1))
        hi_pts = int(np.clip(round(per ** (1.0 / domain.dim)), 7, 24))
        lo_pts = hi_pts - 2
    lo = _rule_sum(f, simp, lo_pts)
    hi = _rule_sum(f, simp, hi_pts)
    err = abs(hi - lo) + 64 * np.finfo(float).eps * abs(hi)
    return hi, err


# ---------------------------------------------------------------- round domains


def _radial_panels(r0, r1, npts, graded):
    """Composite Gauss nodes/weights on [r0, r1], geometrically graded towards r0."""
    x, w = np.polynomial.legendre.leggauss(npts)
    if graded and r0 > 0 and r1 / r0 > 4:
        k = int(math.ceil(math.log2(r1 / r0)))
        edges = np.geomspace(r0, r1, k + 1)
    else:
        edges = np.array([r0, r1])
    a, b = edges[:-1, None], edges[1:, None]
    return (0.5 * (b - a) * (x + 1) + a).ravel(), (0.5 * (b - a) * w).ravel()


def _polar(domain, f, budget):
    n = domain.dim
    if n == 2:
        nt = int(max(64, 2 * round(math.sqrt(budget) / 2)))
        nr = max(8, nt // 8)

        def rule(nt, nr):
            t = (np.arange(nt) + 0.5) * (2 * np.pi / nt)
            wt = np.full(nt, 2 * np.pi / nt)
            return t, wt, nr

        def evaluate(nt, nr):
            t, wt, nr = rule(nt, nr)
            cos, sin = np.cos(t), np.sin(t)
            if isinstance(domain, Annulus2):
                graded = isinstance(f, LogSingularity) and np.linalg.norm(f.center) < domain.r_inner
                rho, wr = _radial_panels(domain.r_inner, domain.r_outer, nr, graded)
                P = rho[:, None, None] * np.stack([cos, sin], axis=-1)[None]
                vals = f.eval(P.reshape(-1, 2)).reshape(len(rho), nt)
                return float(np.einsum("i,ij,j->", wr * rho, vals, wt))
            rho, wr = _radial_panels(0.0, 1.0, nr, False)
            if isinstance(domain, StarDomain2):
                R = domain.radius(t)
                P = domain.center + (rho[:, None] * R[None])[..., None] * np.stack([cos, sin], axis=-1)[None]
                jac = rho[:, None] * R[None] ** 2
            else:
                axes = domain.semi_axes
                local = rho[:, None, None] * np.stack([axes[0] * cos, axes[1] * sin], axis=-1)[None]
                P = domain.center + local @ domain.frame
                jac = rho[:, None] * np.prod(axes) * np.ones(nt)[None]
            vals = f.eval(P.reshape(-1, 2)).reshape(len(rho), nt)
            return float(np.einsum("i,ij,ij,j->", wr, jac, vals, wt))

        hi = evaluate(nt, nr)
        lo = evaluate(nt // 2, max(4, nr // 2))
        return hi, abs(hi - lo) + 64 * np.finfo(float).eps * abs(hi)
    if not isinstance(domain, (Ball, EllipsoidBody)):
        raise UnsupportedVariantError("polar rule in n >= 3 needs a ball or ellipsoid")
    axes = domain.semi_axes

    def evaluate(m, nr):
        dirs, wd = sphere_rule(n, m)
        x, w = np.polynomial.legendre.leggauss(nr)
        rho = 0.5 * (x + 1)
        wr = 0.5 * w * rho ** (n - 1)
        P = domain.center + (rho[:, None, None] * (dirs * axes)[None]) @ domain.frame
        vals = f.eval(P.reshape(-1, n)).reshape(nr, -1)
        return float(np.prod(axes) * np.einsum("i,ij,j->", wr, vals, wd))

    m = int(max(512, budget // 16))
    hi = evaluate(m, 16)
    lo = evaluate(m // 4, 8)
    return hi, abs(hi - lo) + 64 * np.finfo(float).eps * abs(hi)


# ---------------------------------------------------------------- quasi Monte Carlo


def _quasi_mc(domain, f, budget, seed, replicas: int = 8):
    lo, hi = domain.bounding_box()
    box = float(np.prod(hi - lo))
    n = domain.dim
    m = max(64, budget // replicas)
    ests = []
    for r in range(replicas):
        sub = int(block_generator(seed, r, stream=31).integers(2 ** 32))
        u = qmc.Halton(d=n, scramble=True, seed=sub).random(m)
        x = lo + (hi - lo) * u
        inside = domain.contains(x)
        vals = np.zeros(m)
        if np.any(inside):
            vals[inside] = f.eval(x[inside])
        ests.append(box * vals.mean())
    ests = np.array(ests)
    return float(ests.mean()), float(ests.std(ddof=1) / math.sqrt(replicas))


def interior_integral(domain, f: TestFunction, method: str | None = None,
                      budget: int = DEFAULT_BUDGET, seed: int = 0):
    """∫_Ω f with an error estimate; returns ``(value, error)``.

    ``exact-fan`` applies conical Gauss-Jacobi simplex rules (degree 9 and
    up) on a fan triangulation, or exact clipping for MaxAffine integrands;
    ``polar`` integrates round domains in polar/spherical coordinates;
    ``quasi-mc`` uses scrambled Halton points in the bounding box with an
    error from independent scramblings.
    """
    method = method or default_method(domain)
    if method not in METHODS:
        raise ArgumentError(f"unknown method {method!r}; choose from {METHODS}")
    if budget < 16:
        raise ArgumentError("budget must be at least 16")
    if _singular_inside(domain, f):
        raise SingularityError("function is singular inside the domain")
    if method == "exact-fan":
        if not isinstance(domain, (Polygon2, PolytopeH)):
            raise UnsupportedVariantError("exact-fan needs a polygon or polytope")
        return _exact_fan(domain, f, budget)
    if method == "polar":
        if not isinstance(domain, (Ball, EllipsoidBody, StarDomain2, Annulus2)):
            raise UnsupportedVariantError("polar rule needs a ball, ellipsoid, star domain or annulus")
        return _polar(domain, f, budget)
    return _quasi_mc(domain, f, budget, seed)


# ---------------------------------------------------------------- boundary


def _edge_kinks(f: MaxAffine, a, b):
    """Breakpoints in (0, 1) of t -> f(a + t (b - a))."""
    slope = f.G @ (b - a)
    icpt = f.G @ a + f.cs
    ts = [0.0, 1.0]
    k = len(slope)
    for i in range(k):
        for j in range(i + 1, k):
            ds = slope[i] - slope[j]
            if ds != 0:
                t = (icpt[j] - icpt[i]) / ds
                if 0 < t < 1:
                    ts.append(t)
    return np.unique(ts)


def _polygon_boundary(poly: Polygon2, f, budget):
    if isinstance(f, MaxAffine) or (isinstance(f, Affine)):
        g = f if isinstance(f, MaxAffine) else MaxAffine((f if f.g is not None else Affine(np.zeros(2), f.c),))
        total = 0.0
        for a, e, L in zip(poly.vertices, poly.edges, poly.edge_lengths):
            ts = _edge_kinks(g, a, a + e)
            mids = 0.5 * (ts[1:] + ts[:-1])
            vals = g.eval(a + mids[:, None] * e)
            total += L * float(np.dot(np.diff(ts), vals))
        return total, 64 * np.finfo(float).eps * (abs(total) + poly.surface_measure())

    def rule(q):
        pts, wts = poly.edge_gauss(q)
        return float(np.sum(wts * f.eval(pts.reshape(-1, 2)).reshape(wts.shape)))

    q = int(np.clip(budget // (4 * len(poly.vertices)), 12, 64))
    hi, lo = rule(q), rule(q // 2)
    return hi, abs(hi - lo) + 64 * np.finfo(float).eps * abs(hi)


def _polytope_boundary(body: PolytopeH, f, budget):
    if isinstance(f, (MaxAffine, Affine)):
        g = f if isinstance(f, MaxAffine) else MaxAffine((f if f.g is not None else Affine(np.zeros(body.dim), f.c),))
        total = 0.0
        for i, piece in _maxaffine_pieces_polytope(body, g):
            simp, row = piece.boundary_simplices
            areas = piece._simplex_data[0]
            on_bd = np.zeros(len(piece.b), bool)
            for r in range(len(piece.b)):
                match = (np.abs(body.A @ piece.A[r] - 1) < 1e-9) & (np.abs(body.b - piece.b[r]) < 1e-9 * (1 + abs(piece.b[r])))
                on_bd[r] = bool(np.any(match))
            sel = on_bd[row]
            ctr = simp[sel].mean(axis=1)
            total += float(np.sum(areas[sel] * (ctr @ g.G[i] + g.cs[i])))
        return total, 1e-12 * (abs(total) + body.surface_measure())
    simp, _ = body.boundary_simplices
    areas = body._simplex_data[0]
    k = body.dim - 1

    def rule(q):
        bary, w = simplex_rule(k, q)
        pts = np.einsum("qk,skn->sqn", bary, simp)
        vals = f.eval(pts.reshape(-1, body.dim)).reshape(len(simp), -1)
        return float(np.sum(areas * (vals @ w)))

    hi, lo = rule(8), rule(5)
    return hi, abs(hi - lo) + 64 * np.finfo(float).eps * abs(hi)


def boundary_integral(domain, f: TestFunction, budget: int = DEFAULT_BUDGET):
    """∫_∂Ω f dH^{n-1}; returns ``(value, error)``.

    Polygons use per-edge Gauss rules (split at kinks for piecewise-affine
    f), polytopes facet simplex rules, smooth planar curves the periodic
    trapezoid in the curve parameter, and ellipsoids/balls spherical rules.
    """
    if budget < 16:
        raise ArgumentError("budget must be at least 16")
    sing = f.singular_points()
    if sing.size and np.any(np.abs(domain.level(sing)) < 1e-12 * domain.diameter()):
        raise SingularityError("function is singular on the boundary")
    if isinstance(domain, Polygon2):
        return _polygon_boundary(domain, f, budget)
    if isinstance(domain, PolytopeH):
        return _polytope_boundary(domain, f, budget)
    m = int(max(256, budget // 16))
    bs = domain.boundary_samples(m)
    hi = bs.integrate(f.eval(bs.points))
    bs_lo = domain.boundary_samples(m // 2)
    lo = bs_lo.integrate(f.eval(bs_lo.points))
    return hi, abs(hi - lo) + 64 * np.finfo(float).eps * abs(hi)


# ---------------------------------------------------------------- ratio


@dataclass
class RatioReport:
    domain: dict
    function: dict
    interior_integral: float
    boundary_integral: float
    volume: float
    surface: float
    ratio: float
    interior_error: float
    boundary_error: float
    ratio_error: float
    method: str
    seed: int
    budget: int
    boundary_min: float = field(default=float("nan"))

    def to_dict(self) -> dict:
        return asdict(self)

    CSV_FIELDS = ("ratio", "ratio_error", "interior_integral", "interior_error",
                  "boundary_integral", "boundary_error", "volume", "surface", "method", "seed")

    def csv_row(self) -> list:
        return [getattr(self, k) for k in self.CSV_FIELDS]


def hh_ratio(domain, f: TestFunction, budget: int = DEFAULT_BUDGET, seed: int = 0,
             method: str | None = None, sign_tol: float = 1e-10) -> RatioReport:
    """Normalized Hermite-Hadamard ratio (|∂Ω|/|Ω|) ∫_Ω f / ∫_∂Ω f."""
    method = method or default_method(domain)
    bmin = boundary_min(f, domain)
    scale = max(1.0, float(np.max(np.abs(f.eval(domain.boundary_samples(64).points)))))
    if bmin < -sign_tol * scale:
        raise HypothesisViolation(f"f is negative on the boundary (min {bmin:.6g})")
    I, dI = interior_integral(domain, f, method=method, budget=budget, seed=seed)
    B, dB = boundary_integral(domain, f, budget=budget)
    if not B > 10 * dB or B <= 0:
        raise IllPosedRatioError(f"boundary integral {B:.3g} not resolved above its error {dB:.3g}")
    V, S = domain.volume(), domain.surface_measure()
    ratio = S / V * I / B
    rerr = abs(ratio) * (dI / max(abs(I), 1e-300) + dB / B)
    return RatioReport(domain.to_spec(), f.to_spec(), I, B, V, S, ratio, dI, dB, rerr,
                       method, int(seed), int(budget), bmin)
