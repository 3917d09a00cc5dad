"""Maximum-volume inscribed (John) ellipsoid of polyhedral bodies."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hhlab.errors import ArgumentError, ConvergenceError, InvalidDomainError, UnsupportedVariantError
from hhlab.geometry import Ball, EllipsoidBody, Polygon2, PolytopeH

MAX_ASPECT = 1e6


@dataclass
class JohnDiagnostics:
    log_det: float
    gap_bound: float
    newton_steps: int
    barrier_rounds: int


def _sym_basis(n):
    """Basis E_k of symmetric n x n matrices matching vech ordering."""
    basis = []
    for i in range(n):
        for j in range(i, n):
            E = np.zeros((n, n))
            E[i, j] = E[j, i] = 1.0
            basis.append(E)
    return np.array(basis)


class _Barrier:
    """t * (-log det B) - sum log(b_i - a_i.d - |B a_i|) over x = (vech B, d)."""

    def __init__(self, A, b):
        self.A, self.b = A, b
        m, n = A.shape
        self.n, self.m = n, m
        self.E = _sym_basis(n)
        self.p = len(self.E)
        # M[i] maps vech(B) to B a_i
        self.M = np.einsum("kuv,iv->iuk", self.E, A)

    def unpack(self, x):
        B = np.einsum("k,kuv->uv", x[:self.p], self.E)
        return B, x[self.p:]

    def slack(self, x):
        B, d = self.unpack(x)
        U = self.A @ B  # rows are (B a_i)^T since B is symmetric
        return self.b - self.A @ d - np.linalg.norm(U, axis=1)

    def feasible(self, x):
        B, _ = self.unpack(x)
        try:
            np.linalg.cholesky(B)
        except np.linalg.LinAlgError:
            return False
        return bool(np.all(self.slack(x) > 0))

    def value(self, x, t):
        B, _ = self.unpack(x)
        s = self.slack(x)
        return -t * np.linalg.slogdet(B)[1] - np.sum(np.log(s))

    def derivatives(self, x, t):
        B, d = self.unpack(x)
        Binv = np.linalg.inv(B)
        p, n = self.p, self.n
        grad = np.zeros(p + n)
        hess = np.zeros((p + n, p + n))
        BE = np.einsum("uv,kvw->kuw", Binv, self.E)
        grad[:p] = -t * np.einsum("kuu->k", BE)
        hess[:p, :p] = t * np.einsum("kuv,lvu->kl", BE, BE)
        U = self.A @ B
        nu = np.linalg.norm(U, axis=1)
        s = self.b - self.A @ d - nu
        uh = U / nu[:, None]
        gv = np.einsum("iuk,iu->ik", self.M, uh)
        G = np.hstack([gv, self.A])
        grad += np.sum(G / s[:, None], axis=0)
        hess += (G / s[:, None]).T @ (G / s[:, None])
        proj = np.eye(n)[None] - uh[:, :, None] * uh[:, None, :]
        curv = np.einsum("iuk,iuv,ivl->ikl", self.M, proj, self.M) / (nu * s)[:, None, None]
        hess[:p, :p] += curv.sum(axis=0)
        return grad, hess


def _newton(bar, x, t, tol=1e-10, max_steps=200):
    steps = 0
    for _ in range(max_steps):
        g, H = bar.derivatives(x, t)
        try:
            dx = -np.linalg.solve(H + 1e-14 * np.trace(H) / len(H) * np.eye(len(H)), g)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError("singular Newton system in John ellipsoid") from exc
        lam2 = float(-g @ dx)
        steps += 1
        f0 = bar.value(x, t)
        # the Newton decrement cannot resolve below the rounding level of the barrier
        if lam2 / 2 <= tol + 1e-13 * abs(f0):
            break
        step = 1.0
        while True:
            xn = x + step * dx
            if bar.feasible(xn) and bar.value(xn, t) <= f0 - 0.25 * step * lam2:
                break
            step *= 0.5
            if step < 1e-16:
                return x, steps
        x = xn
    return x, steps


def john_ellipsoid(body, gap: float = 1e-8, return_diagnostics: bool = False):
    """Maximum-volume ellipsoid {B u + d : |u| <= 1} inside a polygon or polytope.

    Damped Newton on the log-barrier of the constraints |B a_i| + a_i.d <= b_i
    with objective -log det B; the barrier parameter grows until the duality
    gap bound m/t falls below ``gap``. Ellipsoids and balls are returned as
    their own John ellipsoid.
    """
    if isinstance(body, Ball):
        E = body.as_ellipsoid()
        return (E, JohnDiagnostics(float(np.sum(np.log(E.semi_axes))), 0.0, 0, 0)) if return_diagnostics else E
    if isinstance(body, EllipsoidBody):
        return (body, JohnDiagnostics(float(np.sum(np.log(body.semi_axes))), 0.0, 0, 0)) if return_diagnostics else body
    if not isinstance(body, (Polygon2, PolytopeH)):
        raise UnsupportedVariantError(f"John ellipsoid needs a polyhedral body, got {body.kind}")
    A, b = np.asarray(body.A, float), np.asarray(body.b, float)
    r, c = body.inradius()
    if body.diameter() / (2 * r) > MAX_ASPECT:
        raise InvalidDomainError("body too flat for the John ellipsoid solver (aspect ratio > 1e6)")
    n = A.shape[1]
    # work in coordinates centred at the Chebyshev centre and scaled by the inradius
    b0 = (b - A @ c) / r
    bar = _Barrier(A, b0)
    x = np.concatenate([np.einsum("uv,kuv->k", 0.5 * np.eye(n), bar.E) / np.einsum("kuv,kuv->k", bar.E, bar.E),
                        np.zeros(n)])
    if not bar.feasible(x):
        raise ConvergenceError("could not find a strictly feasible start")
    t, rounds, steps = 1.0, 0, 0
    m = len(b0)
    while True:
        x, k = _newton(bar, x, t)
        steps += k
        rounds += 1
        if m / t < gap:
            break
        t *= 10.0
        if rounds > 60:
            raise ConvergenceError("John ellipsoid barrier method did not converge")
    B, d = bar.unpack(x)
    E = EllipsoidBody.from_shape_matrix(c + r * d, r * B)
    if return_diagnostics:
        return E, JohnDiagnostics(float(np.linalg.slogdet(r * B)[1]), m / t, steps, rounds)
    return E


def certify_containment(body, ellipsoid: EllipsoidBody, factor: float, slack: float = 1e-8) -> bool:
    """E ⊆ Ω (support functions per half-space) and Ω ⊆ factor·E (vertices),
    both up to ``slack``·diam(Ω); the dilation is about the ellipsoid centre."""
    if factor < 1:
        raise ArgumentError("factor must be >= 1")
    diam = body.diameter()
    tol = slack * diam
    B = ellipsoid.shape_matrix()
    cen = ellipsoid.center
    if isinstance(body, (Polygon2, PolytopeH)):
        A, b = body.A, body.b
        inner = np.all(A @ cen + np.linalg.norm(A @ B, axis=1) <= b + tol)
        pts = body.vertices
    else:
        from hhlab.geometry.base import sphere_rule

        dirs, _ = sphere_rule(body.dim, 4096)
        inner = all(ellipsoid.support(v) <= body.support(v) + tol for v in dirs)
        pts = body.boundary_samples(4096).points
    local = np.linalg.solve(B, (pts - cen).T).T
    outer = np.all(np.linalg.norm(local, axis=1) <= factor + tol / ellipsoid.semi_axes[-1])
    return bool(inner and outer)


def john_volume_ratio(body) -> float:
    """|Ω| / |E| for the John ellipsoid E (at most n^n)."""
    return body.volume() / john_ellipsoid(body).volume()

