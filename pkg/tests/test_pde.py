import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hhlab.errors import ArgumentError, HypothesisViolation, ResolutionError, StabilityError
from hhlab.functions import Affine, Negated, NormPower, constant, coordinate, random_max_affine
from hhlab.geometry import Ball, EllipsoidBody, notched_disk, random_polygon, regular_polygon, unit_square
from hhlab.pde import (
    EXTERIOR, INTERIOR, GridField, annulus_counterexample, heat_monotonicity, inradius_rigidity_ratio,
    kernel_mass, solve_laplace, solve_torsion, thmA_check, torsion_gradient_sup,
)
from oracles import square_kernel_mass, square_torsion

DISK = Ball(np.zeros(2), 1.0)
SQUARE = unit_square()


def active_values(field):
    act = field.active()
    return field.coords()[act], field.values[act]


# ------------------------------------------------------------------ torsion

def test_disk_torsion_matches_closed_form():
    field = solve_torsion(DISK, 1 / 32)
    X, v = active_values(field)
    assert np.max(np.abs(v - (np.sum(X * X, axis=1) - 1) / 4)) <= 1e-10
    assert field.value_at_node(field.nearest_node([0, 0])) == pytest.approx(-0.25, abs=1e-10)
    assert field.max() <= 0


def test_ball_torsion_3d():
    R = 1.5
    field = solve_torsion(Ball(np.zeros(3), R), R / 12)
    X, v = active_values(field)
    assert np.max(np.abs(v - (np.sum(X * X, axis=1) - R * R) / 6)) <= 1e-8
    assert field.min() == pytest.approx(-R * R / 6, abs=1e-8)


def test_square_torsion_series_and_min():
    field = solve_torsion(SQUARE, 1 / 64)
    X, v = active_values(field)
    ref = square_torsion(X[:, 0], X[:, 1])
    assert np.max(np.abs(v - ref)) <= 1e-4
    assert field.min() == pytest.approx(-0.0737, abs=1e-4)


def test_torsion_second_order_convergence():
    # on the disk the scheme is exact (quadratic solution), so the square's series is the oracle
    errs = []
    for h in (1 / 20, 1 / 40, 1 / 80):
        X, v = active_values(solve_torsion(SQUARE, h))
        errs.append(np.max(np.abs(v - square_torsion(X[:, 0], X[:, 1]))))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all((rates > 1.7) & (rates < 2.5)), (errs, rates)


def test_resolution_error():
    with pytest.raises(ResolutionError):
        solve_torsion(DISK, 0.2)


# ------------------------------------------------------------------ Laplace

def test_laplace_trivial_data():
    X, v = active_values(solve_laplace(DISK, 1.0, 1 / 32))
    assert np.allclose(v, 1.0, atol=1e-12)
    X, v = active_values(solve_laplace(SQUARE, coordinate(0, 2), 1 / 32))
    assert np.allclose(v, X[:, 0], atol=1e-12)
    X, v = active_values(solve_laplace(DISK, coordinate(0, 2), 1 / 32))
    assert np.allclose(v, X[:, 0], atol=1e-12)  # r cos θ


def test_laplace_second_order_on_nonpolynomial_data():
    def g(p):
        return np.exp(p[:, 0]) * np.cos(p[:, 1])

    errs = []
    for h in (1 / 16, 1 / 32, 1 / 64):
        X, v = active_values(solve_laplace(DISK, g, h))
        errs.append(np.max(np.abs(v - g(X))))
    assert errs[-1] < 1e-4
    assert np.all(np.log2(np.array(errs[:-1]) / np.array(errs[1:])) > 1.7)


# ------------------------------------------------------------------ kernel mass

def test_disk_kernel_mass():
    prof = kernel_mass(DISK, 1 / 64)
    assert np.max(np.abs(prof.K - 0.5)) <= 5e-3
    assert prof.normalized_constant == pytest.approx(1.0, rel=1e-2)
    assert prof.mass_defect() <= 0.02


def test_disk_radius_scaling():
    prof = kernel_mass(Ball(np.zeros(2), 2.0), 1 / 16)
    assert np.allclose(prof.K, 1.0, atol=1e-2)
    assert prof.normalized_constant == pytest.approx(1.0, rel=2e-2)


def test_square_kernel_mass_against_series():
    prof = kernel_mass(SQUARE, 1 / 128)
    assert prof.mass_defect() <= 0.02
    bottom = (np.abs(prof.points[:, 1]) < 1e-12) & (prof.points[:, 0] > 0.05) & (prof.points[:, 0] < 0.95)
    ref = square_kernel_mass(prof.points[bottom, 0])
    assert np.max(np.abs(prof.K[bottom] - ref)) <= 0.01
    i = int(np.argmax(prof.K))
    y = prof.points[i]
    assert min(abs(y[0] - 0.5), abs(y[1] - 0.5)) <= 0.02  # edge midpoint
    near_corner = np.linalg.norm(prof.points - np.round(prof.points), axis=1) < 0.02
    assert np.max(prof.K[near_corner]) <= 0.05


@pytest.mark.parametrize("dom", [regular_polygon(6), EllipsoidBody([0, 0], [2.0, 1.0]), notched_disk(0.4)])
def test_mass_balance_on_test_domains(dom):
    assert kernel_mass(dom, 1 / 64).mass_defect() <= 0.02


def test_kernel_mass_nonnegative():
    prof = kernel_mass(random_polygon(np.random.default_rng(2), k=7), 1 / 128)
    assert prof.K.min() >= -1e-3


# ------------------------------------------------------------------ Thm A

def test_thmA_constant_reduces_to_mass_balance():
    chk = thmA_check(DISK, constant(1.0), 1 / 64)
    assert chk.ok and abs(chk.relative_gap) <= 0.01


def test_thmA_harmonic_equality_on_square():
    chk = thmA_check(SQUARE, Affine([1.0, 0.0], 1.0), 1 / 64)
    assert chk.ok and chk.harmonic and abs(chk.relative_gap) <= 0.01


def test_thmA_strict_for_strictly_subharmonic():
    chk = thmA_check(DISK, NormPower([0, 0], 2.0), 1 / 64)
    assert chk.ok and not chk.harmonic
    # gap equals -∫ φ Δf with Δ|x|² = 4 and -∫ φ = π/8
    assert chk.rhs - chk.lhs == pytest.approx(math.pi / 2, rel=0.02)
    assert chk.green_gap == pytest.approx(math.pi / 2, rel=0.02)


def test_thmA_rejects_superharmonic():
    with pytest.raises(HypothesisViolation):
        thmA_check(DISK, Negated(NormPower([0, 0], 2.0)), 1 / 32)


@settings(max_examples=8)
@given(st.integers(0, 2**31))
def test_thmA_random_polygons(seed):
    rng = np.random.default_rng(seed)
    poly = random_polygon(rng, k=6)
    r = poly.inradius()[0]
    chk = thmA_check(poly, random_max_affine(rng, 2, 3), r / 12)
    assert chk.ok


# ------------------------------------------------------------------ heat flow

def test_heat_strictly_increasing_for_subharmonic():
    s = heat_monotonicity(DISK, NormPower([0, 0], 2.0), 1 / 16, steps=400)
    assert s.nondecreasing()
    assert np.all(np.diff(s.integrals) > 0)


def test_heat_stationary_for_harmonic_data():
    s = heat_monotonicity(SQUARE, Affine([1.0, 2.0], 0.5), 1 / 32, steps=400)
    assert np.ptp(s.integrals) <= 1e-10 * s.scale


def test_heat_long_time_limit_is_harmonic_extension():
    s = heat_monotonicity(DISK, NormPower([0.2, 0], 2.0), 1 / 16, steps=6000, record_every=100,
                          compare_laplace=True)
    assert s.laplace_gap <= 1e-4
    assert s.nondecreasing()


def test_heat_stability_error():
    with pytest.raises(StabilityError):
        heat_monotonicity(DISK, constant(1.0), 1 / 16, dt=1.0)
    with pytest.raises(ArgumentError):
        heat_monotonicity(DISK, constant(1.0), 1 / 16, steps=0)


# ------------------------------------------------------------------ rigidity, annulus

def test_disk_gradient_and_ratio():
    assert torsion_gradient_sup(DISK, 1 / 64) == pytest.approx(0.5, abs=5e-3)
    assert inradius_rigidity_ratio(DISK, 1 / 64) == pytest.approx(0.5, abs=5e-3)


def test_ellipse_ratio_closed_form():
    # φ = (x²/a² + y²/b² − 1) / (2 (1/a² + 1/b²)); sup |∇φ| = (1/b)/(1/a² + 1/b²) = 0.8 at a=2, b=1
    ell = EllipsoidBody([0, 0], [2.0, 1.0])
    assert inradius_rigidity_ratio(ell, 1 / 64) == pytest.approx(0.8, abs=1e-2)


def test_annulus_counterexample_values():
    for eps, approx in ((1e-2, 11.0), (1e-3, 72.5)):
        rep = annulus_counterexample(eps)
        ref = rep.interior_exact / (0.5 * (1 - eps) * 2 * math.pi * eps * math.log(1 / eps))
        assert rep.ratio == pytest.approx(ref, rel=1e-8)
        assert rep.ratio == pytest.approx(approx, rel=1e-2)
    assert annulus_counterexample(1e-3).ratio > annulus_counterexample(1e-2).ratio
    with pytest.raises(ArgumentError):
        annulus_counterexample(1.5)


# ------------------------------------------------------------------ export

def test_grid_field_binary_round_trip(tmp_path):
    field = solve_torsion(DISK, 1 / 16)
    path = tmp_path / "phi.bin"
    field.to_binary(path)
    back = GridField.from_binary(path, mask=field.mask)
    assert back.dims == field.dims and back.h == field.h
    assert np.array_equal(back.values, field.values)
    assert np.array_equal(back.origin, field.origin)
    data = path.read_bytes()
    assert data[:4] == b"HHGF"
    assert len(data) == 4 + 4 + 8 * 2 + 8 + 8 * 2 + 8 * field.values.size
    with pytest.raises(ArgumentError):
        GridField.from_bytes(b"XXXX" + data[4:])


def test_grid_field_csv(tmp_path):
    field = solve_torsion(SQUARE, 1 / 32)
    path = tmp_path / "phi.csv"
    field.to_csv(path)
    arr = np.loadtxt(path, delimiter=",", skiprows=1)
    assert arr.shape == (int(field.active().sum()), 3)
    assert np.allclose(arr[:, 2], square_torsion(arr[:, 0], arr[:, 1]), atol=2e-3)
    assert set(np.unique(field.mask)) <= {EXTERIOR, INTERIOR, 2}
