"""Information measures of the psi density and their dependence on geometry."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .distribution import (
    TWO_PI,
    DistributionContext,
    TabulatedDensity,
    converged_periodic_integral,
    density,
    initial_grid_size,
    make_context,
    normalization_numeric,
)
from .errors import ContractViolation, DegenerateGeometryError, QuadratureError
from .kinematics import DetectorPair, ProcessParams

LN_TWO_PI = math.log(TWO_PI)
DEFAULT_EPSILON = 0.3


@dataclass(frozen=True)
class StatRow:
    r: float
    alpha: float
    entropy: float
    best_guess_prob: float
    best_guess_center: float
    normalization: float


def _neg_p_log_p(p):
    safe = np.where(p > 0, p, 1.0)
    return np.where(p > 0, -p * np.log(safe), 0.0)


def shannon_entropy(ctx: DistributionContext, atol: float = 1e-9) -> float:
    """Differential entropy in nats, with ``0 ln 0 = 0``.

    Successive grid doublings must agree within ``atol``; the trapezoid error
    decays at least as h^3 even where the density touches zero.
    """
    value, _ = converged_periodic_integral(
        lambda x: _neg_p_log_p(density(x, ctx)), initial_grid_size(ctx, 1024), rtol=0.0, atol=atol
    )
    return value


def _resolved_spectrum(ctx, max_n=2**22):
    # rfft of the density on a grid whose upper spectral quarter is negligible
    n = initial_grid_size(ctx, 1024)
    while True:
        psi = np.arange(n) * (TWO_PI / n)
        X = np.fft.rfft(density(psi, ctx))
        tail = np.max(np.abs(X[n // 4:]))
        if tail <= 1e-14 * abs(X[0]) or n >= max_n:
            if tail > 1e-14 * abs(X[0]):
                raise QuadratureError("density spectrum not resolved", estimate=None)
            return X, n
        n *= 2


def best_guess(ctx: DistributionContext, epsilon: float = DEFAULT_EPSILON) -> tuple[float, float]:
    """Center and mass of the most probable window ``[psi0 - eps, psi0 + eps]``.

    The window mass is a trigonometric series in ``psi0`` obtained from the
    density's Fourier coefficients, scanned on the sampling grid and polished
    with a bounded scalar search.  Ties resolve to the smallest center.
    """
    if not 0 < epsilon < math.pi:
        raise ContractViolation("epsilon must lie in (0, pi)")
    X, n = _resolved_spectrum(ctx)
    k = np.arange(len(X))
    g = np.empty(len(X))
    g[0] = 2 * epsilon
    g[1:] = 2 * np.sin(k[1:] * epsilon) / k[1:]
    coef = X * g
    window = np.fft.irfft(coef, n)

    fold = np.full(len(X), 2.0)
    fold[0] = 1.0
    if n % 2 == 0:
        fold[-1] = 1.0

    def mass_at(x):
        return float(np.real(np.sum(fold * coef * np.exp(1j * k * x))) / n)

    top = window.max()
    tie = 1e-12 * max(abs(top), 1.0)
    j = int(np.argmax(window >= top - tie))
    h = TWO_PI / n
    best_psi, best_mass = j * h, float(window[j])
    if window.max() - window.min() > tie:
        res = minimize_scalar(lambda x: -mass_at(x), bounds=(best_psi - h, best_psi + h),
                              method="bounded", options={"xatol": 1e-12})
        if -res.fun > best_mass + tie:
            best_psi, best_mass = float(res.x) % TWO_PI, float(-res.fun)
    return best_psi, best_mass


def tv_distance(a: TabulatedDensity, b: TabulatedDensity) -> float:
    """Total-variation distance ``0.5 * integral |a - b|`` on a shared grid."""
    if a.grid.shape != b.grid.shape or not np.array_equal(a.grid, b.grid):
        raise ValueError("tabulations are on different grids")
    return 0.5 * float(np.trapezoid(np.abs(a.values - b.values), a.grid))


def sup_distance(a: TabulatedDensity, b: TabulatedDensity) -> float:
    if a.grid.shape != b.grid.shape or not np.array_equal(a.grid, b.grid):
        raise ValueError("tabulations are on different grids")
    return float(np.max(np.abs(a.values - b.values)))


def stat_row(ctx: DistributionContext, epsilon: float = DEFAULT_EPSILON) -> StatRow:
    center, prob = best_guess(ctx, epsilon)
    return StatRow(ctx.det.r, ctx.det.alpha, shannon_entropy(ctx), prob, center, ctx.normalization)


def sweep(proc: ProcessParams, det: DetectorPair, r_values, alphas, epsilon: float = DEFAULT_EPSILON,
          threads: int = 1, **context_options) -> list[StatRow]:
    """Statistics over the (alpha, r) grid, ordered by alpha then r.

    Grid points are independent and are evaluated on ``threads`` workers;
    the output order does not depend on scheduling.
    """
    points = [(a, r) for a in alphas for r in r_values]

    def run(point):
        a, r = point
        return stat_row(make_context(proc, replace(det, r=float(r), alpha=float(a)), **context_options), epsilon)

    if threads <= 1:
        return [run(p) for p in points]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run, points))


@dataclass(frozen=True)
class EntropyOptimum:
    r: float
    entropy: float
    r_scan: np.ndarray
    entropy_scan: np.ndarray

    @property
    def interior(self) -> bool:
        """True when the minimum lies strictly below both scan endpoints."""
        return self.entropy < self.entropy_scan[0] and self.entropy < self.entropy_scan[-1]


def entropy_minimum(proc: ProcessParams, det: DetectorPair, r_scan, **context_options) -> EntropyOptimum:
    """Minimize h over r: coarse scan, then bounded search around the best cell."""
    r_scan = np.asarray(r_scan, dtype=float)

    def h(r):
        return shannon_entropy(make_context(proc, replace(det, r=float(r)), **context_options))

    hs = np.array([h(r) for r in r_scan])
    i = int(np.argmin(hs))
    lo, hi = r_scan[max(i - 1, 0)], r_scan[min(i + 1, len(r_scan) - 1)]
    r_best, h_best = r_scan[i], hs[i]
    if hi > lo:
        res = minimize_scalar(h, bounds=(lo, hi), method="bounded", options={"xatol": 1e-6})
        if res.fun < h_best:
            r_best, h_best = float(res.x), float(res.fun)
    return EntropyOptimum(float(r_best), float(h_best), r_scan, hs)


def _cos2_moment(ctx):
    value, _ = converged_periodic_integral(
        lambda x: np.cos(2 * x) * density(x, ctx), initial_grid_size(ctx), rtol=0.0, atol=1e-12
    )
    return value


def deviation_from_uniform(ctx: DistributionContext, observable: str = "normalization") -> float:
    """Distance of a large-r observable from its uniform-distribution limit.

    ``normalization``: ``|N(r) - N_inf|`` with ``N_inf = 2 pi sum(weights)``.
    ``cos2_moment``: ``|integral cos(2 psi) p(psi)|``, whose uniform limit is 0.
    """
    if observable == "normalization":
        limit = TWO_PI * sum(b.weight for b in ctx.branches)
        return abs(normalization_numeric(ctx) - limit)
    if observable == "cos2_moment":
        return abs(_cos2_moment(ctx))
    raise ValueError(f"unknown observable {observable!r}")


def decay_envelope(proc: ProcessParams, det_template: DetectorPair, r_values,
                   observable: str = "normalization", n_windows: int = 10):
    """Per-window maxima of the deviation over equal windows in log r.

    Returns ``(r_env, d_env, d_all)``.
    """
    r_values = np.sort(np.asarray(r_values, dtype=float))
    if len(r_values) < 40:
        raise ContractViolation("need at least 40 separations")
    if r_values[0] <= 0 or r_values[-1] / r_values[0] < 100 * (1 - 1e-12):
        raise ContractViolation("separations must span at least two decades")
    if det_template.trig_alpha()[1] == 0:
        raise DegenerateGeometryError("alpha in {0, pi}: density is uniform at every r, nothing decays")

    d = np.array([deviation_from_uniform(make_context(proc, replace(det_template, r=float(r))), observable)
                  for r in r_values])
    logs = np.log(r_values)
    edges = np.linspace(logs[0], logs[-1], n_windows + 1)
    slot = np.clip(np.searchsorted(edges, logs, side="right") - 1, 0, n_windows - 1)
    r_env, d_env = [], []
    for w in range(n_windows):
        members = np.flatnonzero(slot == w)
        if members.size == 0:
            continue
        top = members[np.argmax(d[members])]
        if d[top] > 0:
            r_env.append(r_values[top])
            d_env.append(d[top])
    return np.array(r_env), np.array(d_env), d


def decay_exponent(proc: ProcessParams, det_template: DetectorPair, r_values,
                   observable: str = "normalization", n_windows: int = 10) -> float:
    """Least-squares slope of log(envelope) against log r."""
    r_env, d_env, _ = decay_envelope(proc, det_template, r_values, observable, n_windows)
    if len(r_env) < 2:
        raise DegenerateGeometryError("deviation vanishes; no decay to fit")
    slope, _ = np.polyfit(np.log(r_env), np.log(d_env), 1)
    return float(slope)
