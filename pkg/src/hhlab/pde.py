"""Cut-cell finite differences on masked grids: torsion, harmonic extension,
explicit heat flow and the boundary kernel mass K = ∂φ/∂n."""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, bicgstab, spilu, spsolve
from scipy.spatial import cKDTree

from hhlab.errors import (
    ArgumentError,
    HypothesisViolation,
    NumericalError,
    ResolutionError,
    StabilityError,
    UnsupportedVariantError,
)
from hhlab.functions import TestFunction
from hhlab.geometry import inradius as geometric_inradius
from hhlab.quadrature import boundary_integral, interior_integral

EXTERIOR, INTERIOR, NEAR_BOUNDARY = 0, 1, 2
_BINARY_MAGIC = b"HHGF"


@dataclass
class GridField:
    """Values on a uniform grid with a node classification mask."""

    origin: np.ndarray
    h: float
    dims: tuple
    values: np.ndarray
    mask: np.ndarray

    @property
    def dim(self):
        return len(self.dims)

    def coords(self) -> np.ndarray:
        axes = [self.origin[k] + self.h * np.arange(self.dims[k]) for k in range(self.dim)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def active(self) -> np.ndarray:
        return self.mask != EXTERIOR

    def min(self) -> float:
        return float(self.values[self.active()].min())

    def max(self) -> float:
        return float(self.values[self.active()].max())

    def nearest_node(self, x):
        idx = np.rint((np.asarray(x, float) - self.origin) / self.h).astype(int)
        return tuple(np.clip(idx, 0, np.array(self.dims) - 1))

    def value_at_node(self, idx) -> float:
        return float(self.values[tuple(idx)])

    def to_csv(self, path) -> None:
        X = self.coords()[self.active()]
        v = self.values[self.active()]
        header = ",".join(["x", "y", "z"][: self.dim] + ["value"])
        np.savetxt(path, np.column_stack([X, v]), delimiter=",", header=header, comments="", fmt="%.17g")

    def to_bytes(self) -> bytes:
        head = _BINARY_MAGIC + struct.pack("<I", self.dim)
        head += struct.pack(f"<{self.dim}Q", *self.dims)
        head += struct.pack("<d", self.h) + struct.pack(f"<{self.dim}d", *self.origin)
        return head + np.ascontiguousarray(self.values, dtype="<f8").tobytes(order="C")

    def to_binary(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes, mask=None) -> "GridField":
        if data[:4] != _BINARY_MAGIC:
            raise ArgumentError("not a grid-field binary")
        n = struct.unpack_from("<I", data, 4)[0]
        off = 8
        dims = struct.unpack_from(f"<{n}Q", data, off)
        off += 8 * n
        h = struct.unpack_from("<d", data, off)[0]
        off += 8
        origin = np.array(struct.unpack_from(f"<{n}d", data, off))
        off += 8 * n
        vals = np.frombuffer(data, dtype="<f8", offset=off).reshape(dims).copy()
        if mask is None:
            mask = np.where(np.isfinite(vals), INTERIOR, EXTERIOR).astype(np.int8)
        return cls(origin, h, tuple(int(d) for d in dims), vals, mask)

    @classmethod
    def from_binary(cls, path, mask=None) -> "GridField":
        return cls.from_bytes(Path(path).read_bytes(), mask)


def _bisect_crossing(domain, a, b, iters: int = 60):
    """Fraction theta in (0, 1] with level(a + theta (b - a)) = 0, level(a) < 0 <= level(b)."""
    lo = np.zeros(len(a))
    hi = np.ones(len(a))
    d = b - a
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        inside = domain.level(a + mid[:, None] * d) < 0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return hi


class CutGrid:
    """Shortley-Weller discretization of the Dirichlet Laplacian on a domain.

    Every interior node has 2n arms. A regular arm reaches a neighbouring
    unknown at distance h; a cut arm ends on the boundary at distance theta*h
    where Dirichlet data are imposed. With ``snap=True`` interior nodes
    having an arm with theta < 1/2 become Dirichlet nodes themselves (their
    own data value), which bounds the diagonal by 8n/h^2.
    """

    def __init__(self, domain, h: float, snap: bool = False):
        if domain.dim not in (2, 3):
            raise UnsupportedVariantError("grids are implemented in 2 and 3 dimensions")
        if not h > 0:
            raise ArgumentError("h must be positive")
        self.domain, self.h, self.snap = domain, float(h), snap
        n = domain.dim
        lo, hi = domain.bounding_box()
        self.origin = np.asarray(lo, float) - self.h
        self.dims = tuple(int(math.ceil((hi[k] - lo[k]) / self.h)) + 3 for k in range(n))
        total = int(np.prod(self.dims))
        if total > 6e7:
            raise ResolutionError(f"grid of {total} nodes is too large")
        axes = [self.origin[k] + self.h * np.arange(self.dims[k]) for k in range(n)]
        X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        inside = domain.level(X) < 0
        self.X = X
        self.strides = np.array([int(np.prod(self.dims[k + 1:])) for k in range(n)])
        self.inside_flat = np.flatnonzero(inside)
        theta_min = self._arms(inside)["theta_min"]
        self.snapped_flat = np.zeros(0, dtype=int)
        if snap:
            snapped = np.zeros(total, bool)
            snapped[self.inside_flat[theta_min < 0.5]] = True
            self.snapped_flat = np.flatnonzero(snapped)
            unknown = inside & ~snapped
            self.unknown_flat = np.flatnonzero(unknown)
            self.arms = self._arms(unknown, snapped)
        else:
            self.unknown_flat = self.inside_flat
            self.arms = self._arms(inside)
        if len(self.unknown_flat) == 0:
            raise ResolutionError("no interior grid nodes; decrease h")

    def _arms(self, unknown, snapped=None):
        n = self.domain.dim
        flat = np.flatnonzero(unknown)
        index = -np.ones(len(unknown), dtype=int)
        index[flat] = np.arange(len(flat))
        multi = np.stack(np.unravel_index(flat, self.dims), axis=1)
        out = {"dirs": [], "theta_min": np.ones(len(flat))}
        for k in range(n):
            for s in (-1, 1):
                nb_multi = multi.copy()
                nb_multi[:, k] += s
                nb = flat + s * self.strides[k]
                nb_index = index[nb]
                theta = np.ones(len(flat))
                points = np.zeros((len(flat), n))
                cut = nb_index < 0
                if snapped is not None:
                    to_snap = cut & snapped[nb]
                    points[to_snap] = self.X[nb[to_snap]]
                    cross = cut & ~to_snap
                else:
                    cross = cut
                if np.any(cross):
                    a, b = self.X[flat[cross]], self.X[nb[cross]]
                    th = _bisect_crossing(self.domain, a, b)
                    theta[cross] = th
                    points[cross] = a + th[:, None] * (b - a)
                out["dirs"].append((k, s, nb_index, theta, cut, points))
                out["theta_min"] = np.minimum(out["theta_min"], theta)
        return out

    @property
    def m(self) -> int:
        return len(self.unknown_flat)

    @cached_property
    def operator(self):
        """(L, boundary coefficient list) so that Lap u = L u + sum_j c_j g(p_j)."""
        m, h = self.m, self.h
        dirs = self.arms["dirs"]
        by_axis = {}
        for k, s, nb_index, theta, cut, points in dirs:
            by_axis.setdefault(k, {})[s] = (nb_index, theta, cut, points)
        rows, cols, vals = [], [], []
        diag = np.zeros(m)
        bcoef = []
        ar = np.arange(m)
        for k, arms in by_axis.items():
            hm = arms[-1][1] * h
            hp = arms[1][1] * h
            for s, hs in ((-1, hm), (1, hp)):
                nb_index, theta, cut, points = arms[s]
                c = 2.0 / (hs * (hm + hp))
                diag -= c
                reg = ~cut
                rows.append(ar[reg])
                cols.append(nb_index[reg])
                vals.append(c[reg])
                bcoef.append((np.flatnonzero(cut), c[cut], points[cut]))
        rows.append(ar)
        cols.append(ar)
        vals.append(diag)
        L = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(m, m))
        return L, bcoef

    def boundary_vector(self, g) -> np.ndarray:
        """Contribution of Dirichlet data g (callable on points) to the Laplacian rows."""
        _, bcoef = self.operator
        b = np.zeros(self.m)
        for idx, c, pts in bcoef:
            if len(idx):
                np.add.at(b, idx, c * np.asarray(g(pts), float))
        return b

    def node_points(self):
        return self.X[self.unknown_flat]

    def max_diagonal(self) -> float:
        L, _ = self.operator
        return float(np.max(-L.diagonal()))

    def solve(self, rhs, g=None) -> np.ndarray:
        L, _ = self.operator
        b = np.zeros(self.m) if g is None else self.boundary_vector(g)
        r = np.broadcast_to(np.asarray(rhs, float), (self.m,)) - b
        # sparse LU is fastest for planar grids; 3-D fill-in favours the Krylov solver
        u = self._krylov(L, r) if self.domain.dim == 3 else np.full_like(r, np.nan)
        res = np.linalg.norm(L @ u - r) / max(np.linalg.norm(r), 1e-300)
        if not res <= 1e-10:
            u = spsolve(L.tocsc(), r)
            res = np.linalg.norm(L @ u - r) / max(np.linalg.norm(r), 1e-300)
        if not np.all(np.isfinite(u)) or res > 1e-10:
            raise NumericalError(f"sparse solve failed (relative residual {res:.2e})")
        return u

    @cached_property
    def _ilu(self):
        L, _ = self.operator
        return spilu(L.tocsc(), drop_tol=1e-5, fill_factor=10)

    def _krylov(self, L, r):
        """ILU-preconditioned BiCGSTAB; the operator is nonsymmetric at cut cells."""
        if not np.any(r):
            return np.zeros_like(r)
        ilu = self._ilu
        M = LinearOperator(L.shape, ilu.solve)
        u, info = bicgstab(L, r, rtol=1e-13, atol=0.0, maxiter=2000, M=M)
        return u if info == 0 else np.full_like(r, np.nan)

    def field(self, u, fill=0.0, g=None) -> GridField:
        vals = np.full(len(self.X), float(fill))
        if g is not None:
            ext = np.setdiff1d(np.arange(len(self.X)), self.unknown_flat)
            vals[ext] = np.asarray(g(self.X[ext]), float)
        vals[self.unknown_flat] = u
        mask = np.zeros(len(self.X), np.int8)
        mask[self.unknown_flat] = INTERIOR
        near = self.unknown_flat[self.arms["theta_min"] < 1.0]
        mask[near] = NEAR_BOUNDARY
        if len(self.snapped_flat):
            mask[self.snapped_flat] = NEAR_BOUNDARY
        return GridField(self.origin.copy(), self.h, self.dims, vals.reshape(self.dims), mask.reshape(self.dims))


def _check_resolution(domain, h):
    r, _ = geometric_inradius(domain)
    if h > r / 10 * (1 + 1e-12):
        raise ResolutionError(f"h = {h:g} exceeds inradius/10 = {r / 10:g}")
    return r


def _as_callable(g):
    if isinstance(g, TestFunction):
        return g.eval
    if callable(g):
        return g
    c = float(g)
    return lambda p: np.full(len(p), c)


_GRID_CACHE: dict = {}


def cut_grid(domain, h, snap=False) -> CutGrid:
    key = (id(domain), float(h), bool(snap))
    hit = _GRID_CACHE.get(key)
    if hit is not None and hit[0] is domain:
        return hit[1]
    grid = CutGrid(domain, h, snap)
    if len(_GRID_CACHE) > 8:
        _GRID_CACHE.clear()
    _GRID_CACHE[key] = (domain, grid)
    return grid


def solve_torsion(domain, h: float) -> GridField:
    """Δφ = 1 in Ω, φ = 0 on ∂Ω (φ <= 0); −φ is the mean exit time for generator Δ."""
    _check_resolution(domain, h)
    grid = cut_grid(domain, h)
    u = grid.solve(1.0)
    return grid.field(u)


def solve_laplace(domain, g, h: float, snap: bool = False) -> GridField:
    """Δu = 0 in Ω with u = g on ∂Ω (g evaluated at the cut points)."""
    _check_resolution(domain, h)
    grid = cut_grid(domain, h, snap)
    gf = _as_callable(g)
    u = grid.solve(0.0, gf)
    return grid.field(u, g=gf)


# ---------------------------------------------------------------- kernel mass


@dataclass
class KernelMassProfile:
    params: np.ndarray
    points: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    K: np.ndarray
    sup_K: float
    method: str
    volume: float
    surface: float
    stderr: np.ndarray | None = None

    @property
    def mass(self) -> float:
        return float(np.dot(self.weights, self.K))

    def mass_defect(self) -> float:
        return abs(self.mass - self.volume) / self.volume

    @property
    def normalized_constant(self) -> float:
        return self.sup_K * self.surface / self.volume

    def binned(self, edges) -> np.ndarray:
        """Weighted mean of K over boundary-parameter bins."""
        idx = np.clip(np.searchsorted(edges, self.params, side="right") - 1, 0, len(edges) - 2)
        num = np.bincount(idx, weights=self.weights * self.K, minlength=len(edges) - 1)
        den = np.bincount(idx, weights=self.weights, minlength=len(edges) - 1)
        return num / np.where(den > 0, den, 1.0)

    def to_dict(self) -> dict:
        out = {"method": self.method, "sup_K": self.sup_K, "mass": self.mass, "volume": self.volume,
               "surface": self.surface, "normalized_constant": self.normalized_constant,
               "params": self.params.tolist(), "K": self.K.tolist()}
        if self.stderr is not None:
            out["stderr"] = self.stderr.tolist()
        return out


def _quadratic_basis(P):
    n = P.shape[1]
    cols = [np.ones(len(P))] + [P[:, i] for i in range(n)]
    for i in range(n):
        for j in range(i, n):
            cols.append(P[:, i] * P[:, j])
    return np.column_stack(cols)


def _normal_derivatives(grid: CutGrid, phi: np.ndarray, points, normals, radius: float = 2.5):
    """Outward normal derivative at boundary points.

    A local quadratic least-squares fit of φ (nearby nodes plus cut points
    where φ = 0) supplies φ at y - hν and y - 2hν; the one-sided quadratic
    through these two values and φ(y) = 0 gives ∂φ/∂n = -(4φ₁ - φ₂)/(2h).
    """
    h = grid.h
    nodes = grid.node_points()
    _, bcoef = grid.operator
    cuts = np.concatenate([pts for _, _, pts in bcoef])
    data_pts = np.vstack([nodes, cuts])
    data_val = np.concatenate([phi, np.zeros(len(cuts))])
    tree = cKDTree(data_pts)
    out = np.empty(len(points))
    n = points.shape[1]
    need = (n + 1) * (n + 2) // 2
    for i, (y, nu) in enumerate(zip(points, normals)):
        r = radius
        while True:
            idx = tree.query_ball_point(y, r * h)
            if len(idx) >= 2 * need or r > 6:
                break
            r += 0.5
        P = (data_pts[idx] - y) / h
        w = np.exp(-0.5 * np.sum(P * P, axis=1) / (0.6 * r) ** 2)
        M = _quadratic_basis(P) * w[:, None]
        coef = np.linalg.lstsq(M, data_val[idx] * w, rcond=None)[0]
        Q = _quadratic_basis(np.array([-nu, -2 * nu]))
        phi1, phi2 = Q @ coef
        out[i] = -(4 * phi1 - phi2) / (2 * h)
    return out


def kernel_mass(domain, h: float, samples: int | None = None) -> KernelMassProfile:
    """K(y) = ∫_Ω p(x, y) dx, extracted as the outward normal derivative of the torsion function."""
    _check_resolution(domain, h)
    grid = cut_grid(domain, h)
    phi = grid.solve(1.0)
    S = domain.surface_measure()
    if samples is None:
        samples = int(2 * S / h) if domain.dim == 2 else int(4 * S / h ** 2)
    bs = domain.boundary_samples(max(64, samples))
    K = _normal_derivatives(grid, phi, bs.points, bs.normals)
    return KernelMassProfile(bs.params, bs.points, bs.normals, bs.weights, K, float(K.max()),
                             "fd-normal-derivative", domain.volume(), S)


@dataclass
class ThmACheck:
    lhs: float
    rhs: float
    tolerance: float
    ok: bool
    harmonic: bool
    relative_gap: float
    green_gap: float

    def __bool__(self):
        return bool(self.ok)


def thmA_check(domain, f: TestFunction, h: float, profile: KernelMassProfile | None = None) -> ThmACheck:
    """∫_Ω f <= ∫_∂Ω K f for subharmonic f, with equality for harmonic f.

    The tolerance combines the mass-balance defect of K (scaled by the
    boundary size of f) with the quadrature error of the interior side.
    ``green_gap`` is -∫ φ Δf from the grid, the exact size of the gap.
    """
    if not f.subharmonic:
        raise HypothesisViolation("Thm A check needs a subharmonic function")
    prof = profile if profile is not None else kernel_mass(domain, h)
    lhs, dl = interior_integral(domain, f)
    fvals = f.eval(prof.points)
    rhs = float(np.dot(prof.weights, prof.K * fvals))
    fb = float(np.dot(prof.weights, np.abs(fvals))) / prof.surface
    tol = 2 * prof.mass_defect() * prof.volume * fb + dl + 1e-12 * abs(lhs)
    grid = cut_grid(domain, h)
    phi = grid.solve(1.0)
    nodes = grid.node_points()
    green = -float(np.sum(phi * f.laplacian(nodes))) * grid.h ** domain.dim
    harmonic = f.harmonic(domain.dim)
    rel = (rhs - lhs) / max(abs(lhs), 1e-300)
    return ThmACheck(lhs, rhs, tol, bool(lhs <= rhs + tol), harmonic, rel, green)


# ---------------------------------------------------------------- heat flow


@dataclass
class HeatSeries:
    times: np.ndarray
    integrals: np.ndarray
    final: GridField
    dt: float
    laplace_gap: float = float("nan")
    scale: float = 1.0

    def nondecreasing(self, tol: float = 1e-8) -> bool:
        return bool(np.all(np.diff(self.integrals) >= -tol * self.scale))

    def max_drop(self) -> float:
        return float(max(0.0, -np.min(np.diff(self.integrals)))) if len(self.integrals) > 1 else 0.0

    def to_rows(self):
        return np.column_stack([self.times, self.integrals])


def heat_monotonicity(domain, f: TestFunction, h: float, dt: float | None = None, steps: int = 2000,
                      record_every: int = 10, compare_laplace: bool = False) -> HeatSeries:
    """Explicit heat flow u_t = Δu with u = f on ∂Ω and u(0) = f.

    Returns the series t -> ∫_Ω u(t) (grid sum over unknown and snapped
    nodes times h^n). ``dt`` defaults to 0.9 of the stability limit
    1 / max diagonal; larger values raise a stability error.
    """
    _check_resolution(domain, h)
    grid = cut_grid(domain, h, snap=True)
    L, _ = grid.operator
    limit = 1.0 / grid.max_diagonal()
    if dt is None:
        dt = 0.9 * limit
    if dt > limit * (1 + 1e-12):
        raise StabilityError(f"dt = {dt:g} exceeds the explicit stability limit {limit:g}")
    if steps < 1:
        raise ArgumentError("steps must be >= 1")
    g = f.eval
    b = grid.boundary_vector(g)
    u = f.eval(grid.node_points())
    fixed = float(np.sum(f.eval(grid.X[grid.snapped_flat]))) if len(grid.snapped_flat) else 0.0
    cell = grid.h ** domain.dim
    times, ints = [0.0], [cell * (float(np.sum(u)) + fixed)]
    for k in range(1, steps + 1):
        u = u + dt * (L @ u + b)
        if k % record_every == 0 or k == steps:
            times.append(k * dt)
            ints.append(cell * (float(np.sum(u)) + fixed))
    field_ = grid.field(u, g=g)
    scale = max(1.0, float(np.max(np.abs(ints))))
    series = HeatSeries(np.array(times), np.array(ints), field_, dt, scale=scale)
    if compare_laplace:
        ul = grid.solve(0.0, g)
        series.laplace_gap = float(np.max(np.abs(ul - u)))
    return series


# ---------------------------------------------------------------- rigidity


def torsion_gradient_sup(domain, h: float, profile: KernelMassProfile | None = None) -> float:
    """sup |∇φ|: centred differences on regular nodes, and K on the boundary
    (where ∇φ = K ν because φ vanishes there)."""
    grid = cut_grid(domain, h)
    field_ = solve_torsion(domain, h)
    v, mask = field_.values, field_.mask
    regular = mask == INTERIOR
    g2 = np.zeros_like(v)
    for k in range(field_.dim):
        g2 += ((np.roll(v, -1, axis=k) - np.roll(v, 1, axis=k)) / (2 * grid.h)) ** 2
    interior_sup = float(np.sqrt(g2[regular].max())) if np.any(regular) else 0.0
    prof = profile if profile is not None else kernel_mass(domain, h)
    return max(interior_sup, float(np.max(np.abs(prof.K))))


def inradius_rigidity_ratio(domain, h: float, profile: KernelMassProfile | None = None) -> float:
    """sup_y K(y) / inradius(Ω)."""
    prof = profile if profile is not None else kernel_mass(domain, h)
    r, _ = geometric_inradius(domain)
    return prof.sup_K / r


@dataclass
class AnnulusReport:
    eps: float
    interior: float
    boundary: float
    inradius: float
    ratio: float
    interior_exact: float = field(default=float("nan"))

    def to_dict(self):
        return dict(self.__dict__)


def annulus_counterexample(eps: float) -> AnnulusReport:
    """∫_Ω f / (inradius ∫_∂Ω f) for f = -log|x| on {eps < |x| < 1}.

    The interior integral approaches pi/2 while the boundary side
    2 pi eps log(1/eps) and the inradius (1 - eps)/2 stay bounded, so the
    ratio grows without bound as eps -> 0.
    """
    from hhlab.functions import LogSingularity
    from hhlab.geometry import Annulus2

    if not 0 < eps < 1:
        raise ArgumentError("eps must lie in (0, 1)")
    dom = Annulus2(eps, 1.0)
    f = LogSingularity(np.zeros(2))
    I, _ = interior_integral(dom, f)
    B, _ = boundary_integral(dom, f)
    r, _ = geometric_inradius(dom)
    exact = 2 * math.pi * (0.25 - eps ** 2 / 4 + eps ** 2 / 2 * math.log(eps))
    return AnnulusReport(eps, I, B, r, I / (r * B), exact)
