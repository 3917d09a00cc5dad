import math

import numpy as np
import pytest
from scipy import stats
from scipy.special import jn_zeros

from hhlab.errors import ArgumentError, UnsupportedVariantError
from hhlab.geometry import Annulus2, Ball, unit_square
from hhlab.pde import kernel_mass
from hhlab.stochastic import (
    decay_rate, disk_survival_series, survival_curve, survival_probability, theorem4_empirical,
    wos_exit, wos_exit_time, wos_kernel_mass,
)
from oracles import disk_poisson_cdf, square_torsion

DISK = Ball(np.zeros(2), 1.0)
SQUARE = unit_square()


# ------------------------------------------------------------------ exit law

def test_disk_center_exit_uniform():
    Y = wos_exit(DISK, [0.0, 0.0], 20_000, seed=0)
    assert np.allclose(np.linalg.norm(Y, axis=1), 1.0, atol=1e-9)
    ang = np.arctan2(Y[:, 1], Y[:, 0])
    counts = np.histogram(ang, bins=16, range=(-np.pi, np.pi))[0]
    assert stats.chisquare(counts).pvalue > 0.01


def test_disk_off_center_exit_is_poisson_kernel():
    Y = wos_exit(DISK, [0.5, 0.0], 20_000, seed=0)
    ang = np.arctan2(Y[:, 1], Y[:, 0])
    assert stats.kstest(ang, lambda t: disk_poisson_cdf(t, 0.5)).pvalue > 0.05


def test_square_center_edges_equal():
    Y = wos_exit(SQUARE, [0.5, 0.5], 20_000, seed=0)
    c = np.abs(Y - 0.5)
    edge = np.where(c[:, 0] > c[:, 1], np.where(Y[:, 0] > 0.5, 0, 1), np.where(Y[:, 1] > 0.5, 2, 3))
    assert stats.chisquare(np.bincount(edge, minlength=4)).pvalue > 0.01


def test_exit_rejects_exterior_start():
    with pytest.raises(ArgumentError):
        wos_exit(DISK, [2.0, 0.0], 10)


# ------------------------------------------------------------------ exit time

def test_exit_time_disk_and_ball():
    m, se = wos_exit_time(DISK, [0.0, 0.0], 20_000, seed=0)
    assert abs(m - 0.25) <= 3 * se
    m, se = wos_exit_time(Ball(np.zeros(3), 2.0), np.zeros(3), 20_000, seed=0)
    assert abs(m - 4 / 6) <= 3 * se


def test_exit_time_square_series():
    m, se = wos_exit_time(SQUARE, [0.5, 0.5], 20_000, seed=0)
    ref = -float(square_torsion(0.5, 0.5))
    assert abs(m - ref) <= 3 * se and ref == pytest.approx(0.0737, abs=1e-4)


@pytest.mark.parametrize("x", [[0.2, 0.3], [0.9, 0.5], [0.05, 0.05]])
def test_exit_time_square_off_center(x):
    m, se = wos_exit_time(SQUARE, x, 20_000, seed=1)
    assert abs(m + float(square_torsion(*x))) <= 3 * se


def test_estimates_independent_of_worker_count(monkeypatch):
    monkeypatch.setenv("HHLAB_THREADS", "1")
    a = wos_exit_time(DISK, [0.3, 0.1], 10_000, seed=5)
    ya = wos_exit(DISK, [0.3, 0.1], 9000, seed=5)
    monkeypatch.setenv("HHLAB_THREADS", "4")
    b = wos_exit_time(DISK, [0.3, 0.1], 10_000, seed=5)
    yb = wos_exit(DISK, [0.3, 0.1], 9000, seed=5)
    assert a == b and np.array_equal(ya, yb)


# ------------------------------------------------------------------ kernel mass

def test_disk_wos_kernel_mass_per_bin():
    prof = wos_kernel_mass(DISK, 100_000, seed=0)
    z = np.abs(prof.K - 0.5) / prof.stderr
    assert prof.method == "wos-histogram"
    assert np.max(z) <= 3.0


def test_square_wos_vs_fd():
    wos = wos_kernel_mass(SQUARE, 100_000, seed=0)
    fd = kernel_mass(SQUARE, 1 / 128)
    ref = fd.binned(wos.edges)
    assert np.max(np.abs(wos.K - ref)) <= 0.05 * np.max(ref)


def test_annulus_wos_kernel_mass_closed_form():
    eps = 0.1
    A = (1 - eps ** 2) / (4 * math.log(eps))
    k_outer, k_inner = 0.5 + A, -(eps / 2 + A / eps)
    prof = wos_kernel_mass(Annulus2(eps, 1.0), 100_000, seed=0, bins=64)
    inner = np.linalg.norm(prof.points, axis=1) < 0.5
    assert np.mean(prof.K[inner]) == pytest.approx(k_inner, rel=0.05)
    assert np.mean(prof.K[~inner]) == pytest.approx(k_outer, rel=0.05)
    assert np.linalg.norm(prof.points[np.argmax(prof.K)]) == pytest.approx(eps, rel=1e-6)


def test_kernel_mass_needs_samples():
    with pytest.raises(ArgumentError):
        wos_kernel_mass(DISK, 100)
    with pytest.raises(UnsupportedVariantError):
        wos_kernel_mass(Ball(np.zeros(3), 1.0), 10_000)


# ------------------------------------------------------------------ survival

def test_survival_complementary_counts():
    for est in survival_curve(DISK, [0.2, 0.1], [0.01, 0.1, 0.3], 1e-3, 5000, seed=0):
        assert est.survived + est.absorbed_count == est.N
        assert est.survival + est.absorbed == 1.0


def test_survival_disk_center_series():
    est = survival_probability(DISK, [0.0, 0.0], 0.5, 1e-3, 40_000, seed=0)
    ref = disk_survival_series(0.0, 0.5)
    assert abs(est.survival - ref) <= 0.05 * ref + 3 * est.std_error


def test_series_oracle_limits():
    assert disk_survival_series(0.0, 1e-4) == pytest.approx(1.0, abs=1e-6)
    j = jn_zeros(0, 1)[0]
    s1, s2 = disk_survival_series(0.0, 2.0), disk_survival_series(0.0, 3.0)
    assert math.log(s1 / s2) == pytest.approx(j * j, rel=1e-8)


def test_survival_short_time_and_monotone():
    curve = survival_curve(DISK, [0.0, 0.0], [1e-3, 0.05, 0.1, 0.2, 0.4, 0.8], 1e-3, 20_000, seed=2)
    assert curve[0].survival == 1.0
    s = np.array([e.survival for e in curve])
    se = np.array([e.std_error for e in curve])
    assert np.all(np.diff(s) <= 3 * (se[1:] + se[:-1]))


def test_decay_rate_principal_eigenvalue():
    times = np.linspace(0.3, 1.0, 8)
    curve = survival_curve(DISK, [0.0, 0.0], times, 1e-3, 40_000, seed=0)
    rate = decay_rate(curve)
    assert rate == pytest.approx(jn_zeros(0, 1)[0] ** 2, rel=0.05)


def test_survival_argument_errors():
    with pytest.raises(ArgumentError):
        survival_probability(DISK, [0.0, 0.0], 1e-4, 1e-3, 10)
    with pytest.raises(ArgumentError):
        survival_probability(DISK, [0.0, 0.0], 0.5, 0.1, 10)
    with pytest.raises(ArgumentError):
        decay_rate([])


# ------------------------------------------------------------------ survival bound

def test_theorem4_dilation_covariance():
    a = theorem4_empirical(DISK, N=4000, seed=0)
    b = theorem4_empirical(Ball(np.zeros(2), 2.0), N=4000, seed=0)
    assert b.log_constant - a.log_constant == pytest.approx(math.log(2), abs=math.log(1.1))
    assert np.all(a.deficits > 0) and np.all(a.deficits < 1)
    assert a.c_fit == pytest.approx(np.nanmax(a.c_per_time))
    d = a.to_dict()
    assert d["constant"] is None or d["constant"] > 0


def test_theorem4_fit_reproduces_deficits():
    rep = theorem4_empirical(DISK, N=4000, seed=1)
    n, V = 2, rep.volume
    for t, c, D in zip(rep.times, rep.c_per_time, rep.deficits):
        lhs = (1 / c) * V ** ((n - 2) / n) * t ** (1 - n / 2) * math.exp(-c * c * V ** (2 / n) / t)
        assert lhs == pytest.approx(D, rel=1e-9)


def test_theorem4_planar_only():
    with pytest.raises(UnsupportedVariantError):
        theorem4_empirical(Ball(np.zeros(3), 1.0), N=100)
