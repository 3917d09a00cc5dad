import math

import cvxpy as cp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hhlab.errors import ArgumentError, InvalidDomainError, UnsupportedVariantError
from hhlab.geometry import (
    Ball, EllipsoidBody, Polygon2, StarDomain2, random_polygon, random_polytope,
    unit_square,
)
from hhlab.john import certify_containment, john_ellipsoid, john_volume_ratio


def cvx_john(body):
    """Independent oracle: log-det maximization with a conic solver."""
    A, b = body.A, body.b
    n = A.shape[1]
    B = cp.Variable((n, n), PSD=True)
    d = cp.Variable(n)
    cons = [cp.norm(B @ A[i]) + A[i] @ d <= b[i] for i in range(len(b))]
    cp.Problem(cp.Maximize(cp.log_det(B)), cons).solve(
        solver="CLARABEL", tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    return B.value, d.value


def test_unit_square_john_ball():
    E = john_ellipsoid(unit_square())
    assert np.allclose(E.center, [0.5, 0.5], atol=1e-7)
    assert np.allclose(E.semi_axes, [0.5, 0.5], atol=1e-7)
    assert certify_containment(unit_square(), E, math.sqrt(2))
    assert not certify_containment(unit_square(), E, 1.01)


def test_rectangle_axes():
    rect = Polygon2([[0, 0], [4, 0], [4, 1], [0, 1]])
    E = john_ellipsoid(rect)
    assert np.allclose(E.semi_axes, [2.0, 0.5], atol=1e-7)
    assert np.allclose(E.center, [2.0, 0.5], atol=1e-7)
    assert abs(E.frame[0] @ [1, 0]) == pytest.approx(1.0, abs=1e-9)


def test_right_triangle():
    tri = Polygon2([[0, 0], [1, 0], [0, 1]])
    E = john_ellipsoid(tri)
    r_in = (2 - math.sqrt(2)) / 2
    assert E.volume() >= math.pi * r_in ** 2
    assert certify_containment(tri, E, 2.0)
    # the John ellipse of a triangle is its Steiner inellipse: area pi / (3 sqrt 3) times the triangle
    assert E.volume() == pytest.approx(math.pi / (3 * math.sqrt(3)) * 0.5, rel=1e-7)


def test_against_conic_oracle(rng):
    for body in [random_polygon(rng, k=7), random_polygon(rng, k=12), random_polytope(rng, n=3, m=14)]:
        E = john_ellipsoid(body)
        B, d = cvx_john(body)
        assert np.allclose(E.shape_matrix(), B, atol=1e-6 * body.diameter())
        assert np.allclose(E.center, d, atol=1e-6 * body.diameter())


def test_diagnostics_gap():
    E, diag = john_ellipsoid(random_polygon(np.random.default_rng(1), k=8), return_diagnostics=True)
    assert diag.gap_bound <= 1e-6
    assert diag.log_det == pytest.approx(float(np.sum(np.log(E.semi_axes))), abs=1e-9)


def test_smooth_bodies_are_their_own_john_ellipsoid():
    ell = EllipsoidBody([1, 2], [3, 1])
    assert john_ellipsoid(ell) is ell
    E = john_ellipsoid(Ball(np.zeros(3), 2.0))
    assert np.allclose(E.semi_axes, 2.0)


def test_rejections():
    with pytest.raises(UnsupportedVariantError):
        john_ellipsoid(StarDomain2.from_function(lambda t: 1 + 0.1 * np.cos(t)))
    with pytest.raises(InvalidDomainError):
        john_ellipsoid(Polygon2([[0, 0], [1e7, 0], [1e7, 1], [0, 1]]))
    with pytest.raises(ArgumentError):
        certify_containment(unit_square(), john_ellipsoid(unit_square()), 0.5)


@settings(max_examples=100)
@given(st.integers(0, 2**31))
def test_containment_factor_two(seed):
    body = random_polygon(np.random.default_rng(seed), k=int(np.random.default_rng(seed).integers(3, 12)))
    E = john_ellipsoid(body)
    assert certify_containment(body, E, 2.0)


@settings(max_examples=50)
@given(st.integers(0, 2**31))
def test_containment_symmetric_sqrt_two(seed):
    body = random_polygon(np.random.default_rng(seed), k=8, symmetric=True)
    assert certify_containment(body, john_ellipsoid(body), math.sqrt(2))


@settings(max_examples=20)
@given(st.integers(0, 2**31))
def test_containment_factor_n_polytopes(seed):
    body = random_polytope(np.random.default_rng(seed), n=3, m=16)
    E = john_ellipsoid(body)
    assert certify_containment(body, E, 3.0)
    assert john_volume_ratio(body) <= 3 ** 3


@settings(max_examples=20)
@given(st.integers(0, 2**31))
def test_volume_optimality_under_perturbation(seed):
    rng = np.random.default_rng(seed)
    body = random_polygon(rng, k=7)
    E = john_ellipsoid(body)
    B0, c0 = E.shape_matrix(), E.center
    logv = np.linalg.slogdet(B0)[1]
    A, b = body.A, body.b
    for _ in range(50):
        S = rng.normal(size=(2, 2))
        S = S + S.T
        dc = rng.normal(size=2)
        scale = 1e-3 / math.sqrt(np.sum(S * S) + dc @ dc)
        B, c = B0 + scale * S, c0 + scale * dc
        if np.linalg.eigvalsh(B).min() <= 0:
            continue
        if np.all(A @ c + np.linalg.norm(A @ B, axis=1) <= b):
            assert np.linalg.slogdet(B)[1] <= logv + 1e-6
