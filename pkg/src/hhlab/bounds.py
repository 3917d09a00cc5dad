"""Closed-form constants, special functions and scale laws."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate

from hhlab.errors import ArgumentError, HypothesisViolation

SQRT_PI = math.sqrt(math.pi)


def gamma_fn(x: float) -> float:
    """Gamma function for x > 0, switching to the log domain for large x."""
    x = float(x)
    if not x > 0:
        raise ArgumentError(f"gamma_fn requires x > 0, got {x}")
    if x < 170.0:
        return math.gamma(x)
    return math.exp(math.lgamma(x))


def gamma_ratio(num: float, den: float) -> float:
    """Gamma(num) / Gamma(den) without overflow."""
    return math.exp(math.lgamma(num) - math.lgamma(den))


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / gamma_fn(n / 2 + 1)


def unit_sphere_area(n: int) -> float:
    """H^{n-1} of the unit sphere in R^n."""
    return 2 * math.pi ** (n / 2) / gamma_fn(n / 2)


def sphere_to_ball_ratio(n: int) -> float:
    """|S^{n-1}| / |B^{n-1}| = 2 sqrt(pi) Gamma((n+1)/2) / Gamma(n/2)."""
    return 2 * SQRT_PI * gamma_ratio((n + 1) / 2, n / 2)


@dataclass(frozen=True)
class BoundsTable:
    n: int
    simple: float
    refined: float
    asymptotic_ratio: float

    def as_dict(self):
        return asdict(self)


def theorem1_constants(n: int) -> BoundsTable:
    """Convex Hermite-Hadamard constants in dimension ``n``.

    ``simple`` is 2 n^{n+1} / sqrt(pi); ``refined`` is the sharper
    sqrt(2n) Gamma((n+2)/2) / Gamma((n+1)/2) n^n that the John-ellipsoid
    argument actually yields. ``asymptotic_ratio`` is refined / n^{n+1}.
    """
    if int(n) != n or n < 2:
        raise ArgumentError(f"dimension must be an integer >= 2, got {n}")
    n = int(n)
    log_nn = n * math.log(n)
    simple = math.exp(math.log(2.0) + (n + 1) * math.log(n) - 0.5 * math.log(math.pi))
    log_ref = 0.5 * math.log(2 * n) + math.lgamma((n + 2) / 2) - math.lgamma((n + 1) / 2) + log_nn
    refined = math.exp(log_ref)
    ratio = math.exp(log_ref - (n + 1) * math.log(n))
    if n == 2:
        # both expressions reduce to 16/sqrt(pi)
        refined = simple = 16.0 / SQRT_PI
    return BoundsTable(n, simple, refined, ratio)


def elliptic_E(k: float) -> float:
    """Complete elliptic integral of the second kind, modulus convention.

    E(k) = int_0^{pi/2} sqrt(1 - k^2 sin^2 t) dt, evaluated with the
    arithmetic-geometric mean. The ellipse with semi-axes a >= b has
    perimeter 4 a E(sqrt(1 - b^2/a^2)).
    """
    k = float(k)
    if not 0.0 <= k <= 1.0:
        raise ArgumentError(f"modulus must lie in [0, 1], got {k}")
    if k == 1.0:
        return 1.0
    if k == 0.0:
        return math.pi / 2
    a, b = 1.0, math.sqrt((1.0 - k) * (1.0 + k))
    c2 = k * k
    total = 0.5 * c2
    power = 0.5
    for _ in range(64):
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        power *= 2.0
        total += power * c * c
        if abs(c) <= 1e-17 * a:
            break
    return math.pi / (2.0 * a) * (1.0 - total)


def ellipse_perimeter(a: float, b: float) -> float:
    a, b = max(a, b), min(a, b)
    if a == b:
        return 2 * math.pi * a
    return 4.0 * a * elliptic_E(math.sqrt(1.0 - (b / a) ** 2))


def proposition_2d_bound(a: float, b: float) -> float:
    """Planar constant bound (16/pi) E(sqrt(1 - b^2/a^2)) for John semi-axes a >= b."""
    if not (a > 0 and b > 0):
        raise ArgumentError("semi-axes must be positive")
    if b > a:
        raise ArgumentError(f"need a >= b, got a={a}, b={b}")
    # 8 * E / (pi/2) keeps the circle case at exactly 8
    return 8.0 * (elliptic_E(math.sqrt(max(0.0, 1.0 - (b / a) ** 2))) / (math.pi / 2))


def triangle_family_ratio(a: float) -> float:
    """(3/2)(sqrt(1+a^2) + 2a) / (2 sqrt(1+a^2) + 2a).

    For the wedge {0 <= x <= 1, |y| <= a x} with f(x, y) = x this equals the
    boundary mean of f divided by its interior mean. The normalized
    Hermite-Hadamard ratio of that pair is the reciprocal, see
    :func:`wedge_hh_ratio`. The supremum over a > 0 is 9/8 (a -> inf).
    """
    if not a > 0:
        raise ArgumentError(f"a must be positive, got {a}")
    s = math.hypot(1.0, a)
    return 1.5 * (s + 2 * a) / (2 * s + 2 * a)


def wedge_hh_ratio(a: float) -> float:
    """Normalized ratio (interior mean / boundary mean) of x on the wedge of slope a.

    Tends to 4/3 as a -> 0 and to 8/9 as a -> inf.
    """
    return 1.0 / triangle_family_ratio(a)


def corollary_check(body):
    """Center-of-mass form of the convex inequality for bodies in the positive orthant.

    Returns ``(|m_body|, |m_boundary|, holds)``.
    """
    lo, _ = body.bounding_box()
    scale = body.diameter()
    if np.any(lo < -1e-12 * scale):
        raise HypothesisViolation("body leaves the closed positive orthant")
    m_in = float(np.linalg.norm(body.centroid()))
    m_bd = float(np.linalg.norm(body.boundary_centroid()))
    const = theorem1_constants(body.dim).simple
    return m_in, m_bd, bool(m_in <= const * m_bd * (1 + 1e-12))


def theorem3_scale(n: int, volume: float, c: float = 1.0) -> float:
    """c |Omega|^{1/n}; the dimensional constant is left to the caller."""
    if n < 3:
        raise ArgumentError("theorem3_scale needs n >= 3")
    if not volume > 0:
        raise ArgumentError("volume must be positive")
    return c * volume ** (1.0 / n)


def theorem4_bound(n: int, volume: float, delta: float, c_exponent: float = 1.0,
                   prefactor: float = 1.0) -> float:
    """prefactor * delta^{n-1} exp(c |Omega|^{2/n} / delta^2) |Omega|^{-(n-2)/n}."""
    if not (delta > 0 and volume > 0):
        raise ArgumentError("delta and volume must be positive")
    if n < 2:
        raise ArgumentError("n >= 2 required")
    return (prefactor * delta ** (n - 1) * math.exp(c_exponent * volume ** (2.0 / n) / delta ** 2)
            * volume ** (-(n - 2) / n))


def verify_1d(f, a: float, b: float, tol: float = 1e-12):
    """One-dimensional Hermite-Hadamard check.

    Returns ``(holds, interior_mean, endpoint_mean)``.
    """
    if not a < b:
        raise ArgumentError("need a < b")
    val, _ = integrate.quad(f, a, b, epsabs=1e-14, epsrel=1e-13, limit=200)
    mean = val / (b - a)
    ends = 0.5 * (f(a) + f(b))
    return bool(mean <= ends + tol * max(1.0, abs(ends))), mean, ends


def half_space_poisson_kernel(n: int, x) -> float:
    """Poisson kernel of the upper half space seen from the origin on the boundary.

    Gamma(n/2) pi^{-n/2} x_n / |x|^n; needs x_n > 0.
    """
    x = np.asarray(x, float)
    if x.shape[-1] != n:
        raise ArgumentError("point dimension mismatch")
    if np.any(x[..., -1] <= 0):
        raise ArgumentError("x_n must be positive")
    r = np.linalg.norm(x, axis=-1)
    val = gamma_fn(n / 2) * math.pi ** (-n / 2) * x[..., -1] / r ** n
    return float(val) if np.ndim(val) == 0 else val


def poisson_kernel_mass(n: int = 3, height: float = 1.0) -> float:
    """Integral of the half-space kernel over the boundary hyperplane.

    For n = 3 this is a genuine 2-D quadrature in polar coordinates; other
    dimensions integrate the radial profile against |S^{n-2}| rho^{n-2}.
    """
    if n == 3:
        val, _ = integrate.dblquad(
            lambda rho, th: rho * half_space_poisson_kernel(
                3, np.array([rho * math.cos(th), rho * math.sin(th), height])),
            0.0, 2 * math.pi, 0.0, np.inf, epsabs=1e-12, epsrel=1e-11)
        return val
    area = unit_sphere_area(n - 1)
    c = gamma_fn(n / 2) * math.pi ** (-n / 2)
    val, _ = integrate.quad(lambda r: area * r ** (n - 2) * c * height / (r * r + height * height) ** (n / 2),
                            0.0, np.inf, epsabs=1e-13, epsrel=1e-12)
    return val


def slice_integral_identity(n: int, c: float) -> float:
    """int_0^inf b c^{n-2} / (b^2 + c^2)^{n/2} db, which equals 1/(n-2) for every c > 0."""
    if n < 3:
        raise ArgumentError("identity needs n >= 3")
    if not c > 0:
        raise ArgumentError("c must be positive")
    g = lambda b: b * c ** (n - 2) / (b * b + c * c) ** (n / 2)
    head, _ = integrate.quad(g, 0.0, c, epsabs=1e-14, epsrel=1e-12, limit=200)
    tail, _ = integrate.quad(g, c, np.inf, epsabs=1e-14, epsrel=1e-12, limit=200)
    return head + tail


def constants_table(n_min: int, n_max: int):
    return [theorem1_constants(n) for n in range(n_min, n_max + 1)]
