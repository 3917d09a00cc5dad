"""Brownian-motion estimators with generator Δ.

Convention: the process has generator Δ (not Δ/2), matching u_t = Δu.
Increments over a step Δt are Gaussian with variance 2Δt per coordinate,
and the mean exit time from a ball of radius r started at its centre is
r²/(2n). With this convention −φ(x) is the mean exit time, φ the torsion
function (Δφ = 1, φ = 0 on ∂Ω).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from hhlab._rng import map_blocks, pairwise_sum
from hhlab.errors import ArgumentError, ConvergenceError, UnsupportedVariantError
from hhlab.geometry import Domain, flatness_scale
from hhlab.geometry import inradius as geometric_inradius
from hhlab.pde import KernelMassProfile

STREAM_WOS_EXIT = 51
STREAM_WOS_KERNEL = 52
STREAM_WOS_TIME = 53
STREAM_SURVIVAL = 61
SHELL = 1e-6
MAX_WOS_STEPS = 100_000


def _require_distance(domain):
    if type(domain).distance_to_boundary is Domain.distance_to_boundary:
        raise UnsupportedVariantError(f"no distance oracle for {getattr(domain, 'kind', type(domain).__name__)}")


def _require_interior(domain, x):
    x = np.asarray(x, float)
    if x.shape != (domain.dim,):
        raise ArgumentError("start point has the wrong dimension")
    if not domain.level(x[None])[0] < 0:
        raise ArgumentError("start point must lie in the interior")
    return x


def _unit_vectors(rng, k, n):
    v = rng.standard_normal((k, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _walk(domain, X, rng, eps):
    """Walk-on-spheres from each row of X; returns (exit points, exit times)."""
    n = X.shape[1]
    pos = X.copy()
    time = np.zeros(len(X))
    alive = np.ones(len(X), bool)
    for _ in range(MAX_WOS_STEPS):
        idx = np.flatnonzero(alive)
        if len(idx) == 0:
            break
        r = np.atleast_1d(domain.distance_to_boundary(pos[idx]))
        stop = r <= eps
        alive[idx[stop]] = False
        go = idx[~stop]
        rg = r[~stop]
        # directions are drawn for every live walker so the stream consumption
        # depends only on the walk itself
        step = _unit_vectors(rng, len(go), n) * rg[:, None]
        pos[go] += step
        time[go] += rg ** 2 / (2 * n)
        # approximate distance oracles may overshoot; such walkers exit here
        out = np.atleast_1d(domain.level(pos[go])) >= 0
        alive[go[out]] = False
    else:
        raise ConvergenceError("walk-on-spheres did not terminate")
    return domain.closest_boundary_point(pos), time


def wos_exit(domain, x, N: int, seed: int = 0) -> np.ndarray:
    """N exit points of Brownian motion started at x (walk-on-spheres).

    Walkers stop inside the shell of width 1e-6·diam and are projected onto
    the boundary; the exit law is the harmonic measure p(x, ·).
    """
    _require_distance(domain)
    x = _require_interior(domain, x)
    if N < 1:
        raise ArgumentError("N must be positive")
    eps = SHELL * domain.diameter()

    def block(rng, a, b):
        return _walk(domain, np.repeat(x[None], b - a, axis=0), rng, eps)[0]

    return np.concatenate(map_blocks(block, N, seed, STREAM_WOS_EXIT))


def wos_exit_time(domain, x, N: int, seed: int = 0):
    """Mean exit time for generator Δ (estimate of −φ(x)) and its standard error."""
    _require_distance(domain)
    x = _require_interior(domain, x)
    if N < 2:
        raise ArgumentError("N must be at least 2")
    eps = SHELL * domain.diameter()

    def block(rng, a, b):
        t = _walk(domain, np.repeat(x[None], b - a, axis=0), rng, eps)[1]
        return np.array([t.sum(), (t * t).sum()])

    s, s2 = pairwise_sum(map_blocks(block, N, seed, STREAM_WOS_TIME))
    mean = s / N
    var = max(s2 / N - mean * mean, 0.0) * N / (N - 1)
    return float(mean), float(math.sqrt(var / N))


def wos_kernel_mass(domain, N: int, seed: int = 0, bins: int = 32) -> KernelMassProfile:
    """Histogram estimate of K(y) = ∫_Ω p(x, y) dx on a planar domain.

    Starts are uniform in Ω, so the exit law has boundary density K/|Ω|; the
    arclength histogram scaled by |Ω| estimates K with binomial standard
    errors per bin.
    """
    _require_distance(domain)
    if domain.dim != 2:
        raise UnsupportedVariantError("the exit histogram is binned by arclength (planar domains)")
    if N < 10_000:
        raise ArgumentError("N >= 10^4 required")
    if bins < 2:
        raise ArgumentError("bins must be >= 2")
    eps = SHELL * domain.diameter()

    def block(rng, a, b):
        X = domain.uniform_points(rng, b - a)
        return _walk(domain, X, rng, eps)[0]

    Y = np.concatenate(map_blocks(block, N, seed, STREAM_WOS_KERNEL))
    L = domain.boundary_length()
    s = np.mod(domain.boundary_coordinate(Y), L)
    edges = np.linspace(0.0, L, bins + 1)
    counts = np.histogram(s, bins=edges)[0].astype(float)
    width = np.diff(edges)
    V = domain.volume()
    K = V * counts / (N * width)
    p = counts / N
    se = V * np.sqrt(p * (1 - p) / N) / width
    centres = 0.5 * (edges[1:] + edges[:-1])
    pts = domain.boundary_point(centres)
    samples = domain.boundary_samples(4 * bins)
    nrm = samples.normals[np.argmin(np.abs(samples.params[None, :] - centres[:, None]), axis=1)]
    prof = KernelMassProfile(centres, pts, nrm, width, K, float(K.max()), "wos-histogram",
                             V, domain.surface_measure(), se)
    prof.edges = edges
    return prof


# ---------------------------------------------------------------- survival


@dataclass
class SurvivalEstimate:
    x: np.ndarray
    t: float
    dt: float
    N: int
    survived: int
    absorbed_count: int

    @property
    def survival(self) -> float:
        return self.survived / self.N

    @property
    def absorbed(self) -> float:
        return self.absorbed_count / self.N

    @property
    def std_error(self) -> float:
        p = self.survival
        return math.sqrt(max(p * (1 - p), 0.0) / self.N)

    def to_dict(self) -> dict:
        return {"x": np.asarray(self.x).tolist(), "t": self.t, "dt": self.dt, "N": self.N,
                "survival": self.survival, "absorbed": self.absorbed, "std_error": self.std_error}


def _schedule(times, dt):
    grid = np.arange(1, int(math.floor(times[-1] / dt + 1e-9)) + 1) * dt
    nodes = np.unique(np.concatenate([grid[grid < times[-1] * (1 - 1e-12)], times]))
    steps = np.diff(np.concatenate([[0.0], nodes]))
    record = np.searchsorted(nodes, times)
    return steps, record


def survival_curve(domain, x, times, dt: float, N: int, seed: int = 0):
    """Survival estimates at each time in ``times`` from one set of paths.

    A path is absorbed when a step lands outside Ω or when the Brownian
    bridge between the two endpoints crosses the locally flat boundary,
    which happens with probability exp(−d₁d₂/Δt) for variance 2Δt.
    """
    _require_distance(domain)
    x = _require_interior(domain, x)
    times = np.atleast_1d(np.asarray(times, float))
    if dt <= 0 or N < 1:
        raise ArgumentError("dt and N must be positive")
    if np.any(times < dt) or np.any(np.diff(times) <= 0):
        raise ArgumentError("times must be increasing and at least dt")
    r, _ = geometric_inradius(domain)
    if dt > r * r / 100 * (1 + 1e-12):
        raise ArgumentError(f"dt = {dt:g} exceeds inradius^2/100 = {r * r / 100:g}")
    steps, record = _schedule(times, dt)
    n = domain.dim

    def block(rng, a, b):
        k = b - a
        pos = np.repeat(x[None], k, axis=0)
        alive = np.ones(k, bool)
        d_old = np.atleast_1d(domain.distance_to_boundary(pos))
        out = np.zeros(len(times), dtype=np.int64)
        j = 0
        for i, h in enumerate(steps):
            z = rng.standard_normal((k, n)) * math.sqrt(2 * h)
            u = rng.random(k)
            idx = np.flatnonzero(alive)
            new = pos[idx] + z[idx]
            inside = np.atleast_1d(domain.level(new)) < 0
            d_new = np.zeros(len(idx))
            if np.any(inside):
                d_new[inside] = np.atleast_1d(domain.distance_to_boundary(new[inside]))
            cross = u[idx] < np.exp(-np.maximum(d_old[idx], 0) * np.maximum(d_new, 0) / h)
            dead = ~inside | cross
            alive[idx[dead]] = False
            pos[idx] = new
            d_old[idx] = d_new
            while j < len(record) and record[j] == i:
                out[j] = int(alive.sum())
                j += 1
        return out

    counts = pairwise_sum(map_blocks(block, N, seed, STREAM_SURVIVAL))
    counts = np.rint(np.atleast_1d(counts)).astype(np.int64)
    return [SurvivalEstimate(x.copy(), float(t), float(dt), int(N), int(c), int(N - c))
            for t, c in zip(times, counts)]


def survival_probability(domain, x, t: float, dt: float, N: int, seed: int = 0) -> SurvivalEstimate:
    """Probability that Brownian motion from x stays in Ω up to time t."""
    if t < dt:
        raise ArgumentError("horizon t must be at least dt")
    return survival_curve(domain, x, [t], dt, N, seed)[0]


def decay_rate(estimates, t_min: float = 0.0) -> float:
    """Exponential decay rate of survival from a least-squares fit of log S(t)."""
    pts = [(e.t, math.log(e.survival)) for e in estimates if e.t >= t_min and e.survived > 0]
    if len(pts) < 2:
        raise ArgumentError("need at least two times with positive survival")
    t, y = np.array(pts).T
    return float(-np.polyfit(t, y, 1)[0])


def disk_survival_series(x_radius: float, t: float, R: float = 1.0, modes: int = 200) -> float:
    """Survival in the disk of radius R from the radial Dirichlet eigen-expansion.

    S = Σ_k 2 J₀(j_k r/R) / (j_k J₁(j_k)) exp(−j_k² t / R²) for generator Δ.
    """
    from scipy.special import j0, j1, jn_zeros

    j = jn_zeros(0, modes)
    terms = 2 * j0(j * x_radius / R) / (j * j1(j)) * np.exp(-j * j * t / R ** 2)
    return float(np.sum(terms))


# ---------------------------------------------------------------- survival bound


@dataclass
class Theorem4Report:
    delta: float
    volume: float
    dim: int
    times: np.ndarray
    deficits: np.ndarray
    std_errors: np.ndarray
    c_per_time: np.ndarray
    c_fit: float
    log_constant: float
    log_scale_law: float
    starts: np.ndarray = field(default=None)

    @property
    def constant(self) -> float:
        return math.exp(self.log_constant) if self.log_constant < 700 else math.inf

    def to_dict(self) -> dict:
        return {"delta": self.delta, "volume": self.volume, "dim": self.dim,
                "times": self.times.tolist(), "deficits": self.deficits.tolist(),
                "std_errors": self.std_errors.tolist(), "c_per_time": self.c_per_time.tolist(),
                "c_fit": self.c_fit, "log_constant": self.log_constant,
                "constant": self.constant if math.isfinite(self.constant) else None,
                "log_scale_law": self.log_scale_law}


def _log_thm4(n, V, t, c):
    """log of c |Ω|^{−(n−2)/n} t^{(n−1)/2} exp(c² |Ω|^{2/n} / t)."""
    return math.log(c) - (n - 2) / n * math.log(V) + 0.5 * (n - 1) * math.log(t) + c * c * V ** (2 / n) / t


def _solve_c(n, V, t, D):
    """Unique c > 0 with c⁻¹ |Ω|^{(n−2)/n} t^{1−n/2} exp(−c²|Ω|^{2/n}/t) = D."""
    a = (n - 2) / n * math.log(V) + (1 - n / 2) * math.log(t)
    b = V ** (2 / n) / t

    def g(logc):
        c = math.exp(logc)
        return -logc + a - c * c * b - math.log(D)

    lo, hi = -30.0, 0.0
    while g(hi) > 0:
        hi += 1.0
    return math.exp(optimize.brentq(g, lo, hi, xtol=1e-14))


def theorem4_empirical(domain, delta: float | None = None, times=None, N: int = 20_000, seed: int = 0,
                       starts=None, dt: float | None = None) -> Theorem4Report:
    """Empirical version of the survival-based Hermite–Hadamard bound.

    Estimates D(t) = 1 − max_x survival(x, t) over the starts, fits the
    smallest constant c for which c⁻¹|Ω|^{(n−2)/n} t^{1−n/2} e^{−c²|Ω|^{2/n}/t}
    <= D(t) at every time, and evaluates the bound at t = δ² in log form
    (the exponential overflows double precision for realistic c).
    """
    n = domain.dim
    if n != 2:
        raise UnsupportedVariantError("theorem4_empirical covers smooth planar domains")
    V = domain.volume()
    if delta is None:
        delta = flatness_scale(domain).delta
    if not delta > 0:
        raise ArgumentError("delta must be positive")
    if times is None:
        times = V ** (2 / n) * np.array([0.02, 0.04, 0.08, 0.16, 0.32])
    times = np.asarray(times, float)
    r, c0 = geometric_inradius(domain)
    if starts is None:
        starts = np.array([c0])
    starts = np.atleast_2d(np.asarray(starts, float))
    if dt is None:
        dt = min(r * r / 100, times[0] / 20)
    best = None
    for k, x in enumerate(starts):
        curve = survival_curve(domain, x, times, dt, N, seed + k)
        s = np.array([e.survived for e in curve])
        best = s if best is None else np.maximum(best, s)
    D = 1 - best / N
    se = np.sqrt(np.maximum(D * (1 - D), 0) / N)
    c_t = np.array([_solve_c(n, V, t, d) if d > 0 else np.nan for t, d in zip(times, D)])
    if not np.any(np.isfinite(c_t)):
        raise ArgumentError("no absorption observed on the time grid; use larger times")
    c_fit = float(np.nanmax(c_t))
    log_c = _log_thm4(n, V, delta ** 2, c_fit)
    log_law = _log_thm4(n, V, delta ** 2, 1.0)
    return Theorem4Report(float(delta), V, n, times, D, se, c_t, c_fit, log_c, log_law, starts)
