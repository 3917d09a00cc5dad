"""Conical-product (collapsed Gauss-Jacobi) rules on simplices."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@lru_cache(maxsize=None)
def simplex_rule(dim: int, npts: int):
    """Rule on the unit simplex with ``npts`` points per collapsed axis.

    Returns barycentric coordinates of shape (q, dim+1) and weights summing
    to one. Exact for total degree ``2*npts - 1``.
    """
    if dim == 0:
        return np.ones((1, 1)), np.ones(1)
    axes = []
    for i in range(1, dim + 1):
        alpha = dim - i
        if alpha == 0:
            x, w = roots_legendre(npts)
        else:
            x, w = roots_jacobi(npts, alpha, 0.0)
        u = (1.0 + x) / 2.0
        axes.append((u, w / 2.0 ** (alpha + 1)))
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    wgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
    us = [g.ravel() for g in grids]
    w = np.prod([g.ravel() for g in wgrids], axis=0)
    coords = np.empty((w.size, dim))
    rest = np.ones(w.size)
    for i in range(dim):
        coords[:, i] = rest * us[i]
        rest = rest * (1.0 - us[i])
    bary = np.column_stack([1.0 - coords.sum(axis=1), coords])
    w = w * math.factorial(dim)
    return bary, w / w.sum()


def simplex_volume(verts: np.ndarray) -> float:
    """k-dimensional volume of a k-simplex given by (k+1) points in R^n."""
    verts = np.asarray(verts, float)
    k = verts.shape[0] - 1
    if k == 0:
        return 1.0
    edges = verts[1:] - verts[0]
    if k == verts.shape[1]:
        return abs(float(np.linalg.det(edges))) / math.factorial(k)
    # QR instead of the Gram determinant, which cancels badly for slivers
    r = np.linalg.qr(edges.T, mode="r")
    return float(abs(np.prod(np.diag(r)))) / math.factorial(k)


def integrate_simplices(f, simplices: np.ndarray, npts: int = 5):
    """Sum of the rule applied to each simplex; ``simplices`` is (s, k+1, n).

    ``f`` takes points (q, n) and returns values (q,).
    """
    simplices = np.asarray(simplices, float)
    s, kp1, n = simplices.shape
    bary, w = simplex_rule(kp1 - 1, npts)
    pts = np.einsum("qk,skn->sqn", bary, simplices)
    vols = np.array([simplex_volume(sx) for sx in simplices])
    vals = np.asarray(f(pts.reshape(-1, n)), float).reshape(s, -1)
    return float(np.sum(vols * (vals @ w)))
