"""Shared domain interface and boundary-sample containers."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from hhlab.bounds import unit_sphere_area


@dataclass
class BoundarySamples:
    """Quadrature-weighted boundary points.

    ``params`` holds the arclength coordinate for planar domains and the
    facet/patch index otherwise.
    """

    points: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    params: np.ndarray

    def __len__(self):
        return len(self.weights)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


class Domain:
    """Common interface of every domain variant.

    Subclasses provide ``level`` (negative inside), exact measures, a
    distance-to-boundary oracle and weighted boundary samples.
    """

    dim: int
    kind: str = "domain"
    smooth: bool = False
    convex: bool = True

    def level(self, x):
        raise NotImplementedError

    def contains(self, x, tol: float = 0.0):
        return self.level(np.asarray(x, float)) < -tol

    def bounding_box(self):
        raise NotImplementedError

    def diameter(self) -> float:
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(hi - lo))

    def volume(self) -> float:
        raise NotImplementedError

    def surface_measure(self) -> float:
        raise NotImplementedError

    def distance_to_boundary(self, x):
        raise NotImplementedError

    def closest_boundary_point(self, x):
        raise NotImplementedError

    def boundary_samples(self, m: int) -> BoundarySamples:
        raise NotImplementedError

    def scaled(self, lam: float) -> "Domain":
        raise NotImplementedError

    def to_spec(self) -> dict:
        raise NotImplementedError

    def uniform_points(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Uniform interior points by rejection from the bounding box."""
        lo, hi = self.bounding_box()
        out = []
        need = n
        frac = max(self.volume() / float(np.prod(hi - lo)), 1e-3)
        while need > 0:
            batch = int(need / frac * 1.2) + 16
            pts = lo + (hi - lo) * rng.random((batch, self.dim))
            pts = pts[self.contains(pts)]
            out.append(pts[:need])
            need -= len(out[-1])
        return np.concatenate(out)


class PlanarCurveMixin:
    """Arclength bookkeeping for planar domains with smooth boundary curves.

    Subclasses define ``_components`` as a list of callables
    ``t -> (points, velocity)`` on [0, 2 pi) and ``_component_param(y, i)``
    returning the curve parameter of boundary points.
    """

    _table_size = 1 << 14

    @cached_property
    def _arclength_tables(self):
        tables = []
        offset = 0.0
        t = np.linspace(0.0, 2 * np.pi, self._table_size + 1)
        for comp in self._components:
            _, vel = comp(t)
            speed = np.linalg.norm(vel, axis=1)
            # periodic Simpson on the dense grid
            cum = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(t))])
            total = float(np.sum(speed[:-1]) * (2 * np.pi / self._table_size))
            cum *= total / cum[-1]
            tables.append((t, cum + offset, total))
            offset += total
        return tables

    def boundary_length(self) -> float:
        return float(sum(tab[2] for tab in self._arclength_tables))

    def _smooth_samples(self, m: int) -> BoundarySamples:
        lengths = [tab[2] for tab in self._arclength_tables]
        total = sum(lengths)
        pts, nrm, wts, prm = [], [], [], []
        for comp, tab, L in zip(self._components, self._arclength_tables, lengths):
            k = max(16, int(round(m * L / total)))
            t = (np.arange(k) + 0.5) * (2 * np.pi / k)
            p, v = comp(t)
            speed = np.linalg.norm(v, axis=1)
            tangent = v / speed[:, None]
            pts.append(p)
            nrm.append(np.column_stack([tangent[:, 1], -tangent[:, 0]]))
            wts.append(speed * (2 * np.pi / k))
            prm.append(np.interp(t, tab[0], tab[1]))
        return BoundarySamples(np.concatenate(pts), np.concatenate(nrm),
                               np.concatenate(wts), np.concatenate(prm))

    def boundary_coordinate(self, y) -> np.ndarray:
        """Arclength coordinate of (near-)boundary points."""
        y = np.atleast_2d(np.asarray(y, float))
        comp = self._component_index(y)
        s = np.empty(len(y))
        for i, tab in enumerate(self._arclength_tables):
            sel = comp == i
            if np.any(sel):
                t = np.mod(self._component_param(y[sel], i), 2 * np.pi)
                s[sel] = np.interp(t, tab[0], tab[1])
        return s

    def boundary_point(self, s) -> np.ndarray:
        """Boundary points at arclength coordinates ``s`` (mod the total length)."""
        s = np.mod(np.atleast_1d(np.asarray(s, float)), self.boundary_length())
        out = np.empty((len(s), 2))
        for comp, (t, cum, _) in zip(self._components, self._arclength_tables):
            sel = (s >= cum[0]) & (s <= cum[-1])
            if np.any(sel):
                out[sel] = comp(np.interp(s[sel], cum, t))[0]
        return out

    def _component_index(self, y):
        return np.zeros(len(y), dtype=int)


def sphere_rule(n: int, m: int):
    """Directions on S^{n-1} with weights summing to |S^{n-1}|.

    n = 2: periodic trapezoid; n = 3: Gauss-Legendre in cos(polar angle)
    times trapezoid in azimuth; n >= 4: scrambled Halton points mapped to
    the sphere with equal weights.
    """
    if n == 2:
        t = (np.arange(m) + 0.5) * (2 * np.pi / m)
        return np.column_stack([np.cos(t), np.sin(t)]), np.full(m, 2 * np.pi / m)
    if n == 3:
        k = max(8, int(np.sqrt(m / 2)))
        mu, wmu = np.polynomial.legendre.leggauss(k)
        nphi = 2 * k
        phi = (np.arange(nphi) + 0.5) * (2 * np.pi / nphi)
        MU, PHI = np.meshgrid(mu, phi, indexing="ij")
        W = np.repeat(wmu[:, None], nphi, axis=1) * (2 * np.pi / nphi)
        s = np.sqrt(1 - MU ** 2)
        dirs = np.column_stack([(s * np.cos(PHI)).ravel(), (s * np.sin(PHI)).ravel(), MU.ravel()])
        return dirs, W.ravel()
    pts = qmc.Halton(d=n, scramble=True, seed=0).random(m)
    g = ndtri(np.clip(pts, 1e-12, 1 - 1e-12))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g, np.full(m, unit_sphere_area(n) / m)
