import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hhlab.errors import ArgumentError, InvalidInputError, SingularityError
from hhlab.functions import (
    Affine, LogSingularity, MaxAffine, Negated, NormPower, QuadForm, boundary_min, constant,
    coordinate, discrete_laplacian, function_from_spec, is_convex_sampled,
    is_subharmonic_sampled, random_max_affine,
)
from hhlab.geometry import Annulus2, Ball, random_polygon, regular_polygon, unit_square

coords = st.floats(-10, 10, allow_nan=False)


def test_eval_examples():
    f = MaxAffine((Affine([1.0], 0.0), Affine([-1.0], 1.0)))
    assert f.eval(np.array([[0.3]]))[0] == pytest.approx(0.7)
    assert NormPower([0, 0], 2).eval(np.array([[3.0, 4.0]]))[0] == pytest.approx(25.0)
    val = LogSingularity([0, 0]).eval(np.array([[0.01, 0.0]]))[0]
    assert val == pytest.approx(math.log(100), rel=1e-14)
    assert val == pytest.approx(4.6052, abs=1e-4)
    with pytest.raises(SingularityError):
        LogSingularity([0, 0]).eval(np.array([[0.0, 0.0]]))


def test_construction_invariants():
    with pytest.raises(InvalidInputError):
        QuadForm(-np.eye(2))
    with pytest.raises(InvalidInputError):
        NormPower([0, 0], 0.5)
    with pytest.raises(InvalidInputError):
        MaxAffine(())
    QuadForm(np.diag([1.0, -1e-12]))  # within tolerance


def test_convexity_sampler():
    sq = unit_square()
    assert is_convex_sampled(Affine([1.0, -2.0], 0.3), sq)
    bad = is_convex_sampled(QuadForm.unchecked(-np.eye(2)), sq)
    assert not bad and bad.witness is not None
    y1, y2, mid = bad.witness
    f = QuadForm.unchecked(-np.eye(2))
    assert f.eval(mid[None])[0] > 0.5 * (f.eval(y1[None])[0] + f.eval(y2[None])[0])
    rng = np.random.default_rng(0)
    assert is_convex_sampled(random_max_affine(rng, 2, 5), sq, trials=10_000)
    with pytest.raises(ArgumentError):
        is_convex_sampled(Affine([1.0, 0.0], 0.0), sq, trials=0)


def test_subharmonic_sampler():
    ann = Annulus2(0.1, 1.0)
    assert is_subharmonic_sampled(LogSingularity([0, 0]), ann, trials=10_000)
    assert is_subharmonic_sampled(NormPower([0, 0], 2), unit_square(), trials=10_000)
    res = is_subharmonic_sampled(Negated(NormPower([0, 0], 2)), unit_square())
    assert not res
    with pytest.raises(ArgumentError):
        is_subharmonic_sampled(NormPower([0, 0], 2), unit_square(), h=0)


@pytest.mark.parametrize("f", [
    Affine([0.3, -1.0], 2.0), MaxAffine.from_arrays(np.eye(2), [0, 0]),
    QuadForm(np.array([[2.0, 0.5], [0.5, 1.0]]), [1, 0], -1), NormPower([0.2, 0.1], 1.5),
    NormPower([0, 0], 3.0, 2.0),
])
def test_convex_variants_pass_both_samplers(f):
    dom = regular_polygon(7)
    assert is_convex_sampled(f, dom, trials=10_000)
    assert is_subharmonic_sampled(f, dom, trials=10_000)


def test_discrete_laplacian_of_quadratic_is_exact():
    f = QuadForm(np.diag([1.0, 3.0]))
    x = np.random.default_rng(1).normal(size=(20, 2))
    assert np.allclose(discrete_laplacian(f, x, 1e-2), 8.0, atol=1e-8)


def test_boundary_min_examples():
    assert boundary_min(coordinate(0, 2), unit_square()) == pytest.approx(0.0, abs=1e-14)
    assert boundary_min(LogSingularity([0, 0]), Annulus2(0.05, 1.0)) == pytest.approx(0.0, abs=1e-12)
    f = MaxAffine.from_arrays([[1.0, 0.0]], [-0.2])
    assert boundary_min(f, unit_square()) == pytest.approx(-0.2, abs=1e-14)
    # smooth boundary: exact minimum of x + y on the unit circle is -sqrt(2)
    assert boundary_min(Affine([1.0, 1.0], 0.0), Ball(np.zeros(2), 1.0)) == pytest.approx(
        -math.sqrt(2), abs=1e-10)
    with pytest.raises(ArgumentError):
        boundary_min(coordinate(0, 2), unit_square(), samples=8)


@given(coords, coords, st.floats(0.1, 10), st.floats(1, 4))
def test_normpower_scale_covariance(x, y, lam, p):
    f = NormPower([0, 0], p)
    v = f.eval(np.array([[x, y]]))[0]
    w = f.eval(np.array([[lam * x, lam * y]]))[0]
    assert w == pytest.approx(lam ** p * v, rel=1e-12, abs=1e-300)


@given(st.integers(0, 10_000), st.floats(0.1, 10))
def test_scaled_functions_compose(seed, lam):
    rng = np.random.default_rng(seed)
    fs = [random_max_affine(rng, 2, 4), NormPower(rng.normal(size=2), 2.5),
          QuadForm(np.eye(2), rng.normal(size=2), 0.5), LogSingularity(rng.normal(size=2) + 5)]
    x = rng.normal(size=(8, 2))
    for f in fs:
        assert np.allclose(f.scaled(lam).eval(lam * x), f.eval(x), rtol=1e-10, atol=1e-12)


@given(st.integers(0, 10_000))
def test_maxaffine_is_convex_sampled(seed):
    f = random_max_affine(np.random.default_rng(seed), 2, 5)
    dom = random_polygon(np.random.default_rng(seed + 1), k=6)
    assert is_convex_sampled(f, dom, trials=500, seed=seed)


@pytest.mark.parametrize("f", [
    constant(2.0), Affine([1.0, 2.0], 3.0), MaxAffine.from_arrays(np.eye(2), [0, 1]),
    QuadForm(np.eye(2), [1, 1], 0.0), NormPower([1, 1], 3.0), LogSingularity([0, 0], 0.5),
])
def test_function_spec_round_trip(f):
    g = function_from_spec(f.to_spec())
    x = np.random.default_rng(0).normal(size=(16, 2)) + 3
    assert np.allclose(g.eval(x), f.eval(x), rtol=1e-15)


def test_function_spec_errors():
    with pytest.raises(InvalidInputError):
        function_from_spec({"type": "exp"})
    with pytest.raises(InvalidInputError):
        function_from_spec({"type": "affine"})


def test_eval_is_deterministic():
    f = random_max_affine(np.random.default_rng(5), 3, 6)
    x = np.random.default_rng(6).normal(size=(100, 3))
    assert np.array_equal(f.eval(x), f.eval(x.copy()))
