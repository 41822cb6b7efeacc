"""Brute-force reconstruction of the psi density.

Integrates the click rate over |k1| and cos(theta) numerically, with both
energy-conserving Dirac deltas replaced by Gaussians of width ``eta``.  No
delta-function reduction is performed, so the result checks the closed
form end to end.  As ``eta -> 0`` the two pipelines must agree.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .distribution import TWO_PI, TabulatedDensity, density, make_context
from .errors import InfeasibleError, ResolutionError
from .kinematics import BRANCHES, DetectorPair, ProcessParams
from .stats import sup_distance, tv_distance

WINDOW_SIGMAS = 8.0
# weights below this fraction of the peak contribute < 1e-14 relative and are skipped
_SUPPORT_CUTOFF = 1e-16
_RESOLUTION_TV = 1e-3
_CHUNK = 2048


@dataclass(frozen=True)
class OracleSettings:
    eta: float = 0.01
    n_k: int = 1024
    n_cos: int = 4096
    n_psi: int = 1024
    mc_samples: int | None = None
    check_resolution: bool = True

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.n_k < 64 or self.n_cos < 64:
            raise ValueError("integration grids need at least 64 points")
        if self.n_psi < 256:
            raise ValueError("output grid needs at least 256 points")
        if self.mc_samples is not None and self.mc_samples < 1:
            raise ValueError("mc_samples must be positive")


def nascent_delta(x, eta):
    """Unit-mass Gaussian of width ``eta`` approximating the Dirac delta."""
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * (x / eta) ** 2) / (eta * math.sqrt(TWO_PI))


def _energy(m, k):
    return np.sqrt(m * m + k * k)


def _momentum_window(m, gaps, eta):
    # invert E_k = Delta +- 8 eta exactly instead of a local Jacobian
    def k_of(E):
        return math.sqrt(max(E * E - m * m, 0.0))

    lo = k_of(max(min(gaps) - WINDOW_SIGMAS * eta, m))
    hi = k_of(max(gaps) + WINDOW_SIGMAS * eta)
    return lo, hi


def _nodes(n_k, n_cos, k_lo, k_hi, rng):
    """Integration nodes and cell areas over [k_lo, k_hi] x [-1, 1].

    Deterministic mode uses cell midpoints; with ``rng`` each cell gets one
    uniformly placed point (stratified Monte Carlo).
    """
    hk = (k_hi - k_lo) / n_k
    hc = 2.0 / n_cos
    ik, ic = np.meshgrid(np.arange(n_k), np.arange(n_cos), indexing="ij")
    if rng is None:
        uk = uc = 0.5
    else:
        uk, uc = rng.random(ik.shape), rng.random(ic.shape)
    k = k_lo + (ik + uk) * hk
    c = -1.0 + (ic + uc) * hc
    return k.ravel(), c.ravel(), hk * hc


def _rate_weights(proc, det, eta, k, c):
    """psi-independent part of the integrand: k^2 / (4 E1 E2) times both regularized deltas."""
    m, P = proc.m, proc.P
    E1 = _energy(m, k)
    E2 = np.sqrt(m * m + P * P + k * k - 2 * P * k * c)
    deltas = np.zeros_like(k)
    for i, j in BRANCHES:
        deltas += nascent_delta(E1 - det.gap(i), eta) * nascent_delta(E2 - det.gap(j), eta)
    return k * k / (4 * E1 * E2) * deltas


def _unnormalized(proc, det, settings, n_k, n_cos, rng=None):
    k_lo, k_hi = _momentum_window(proc.m, (det.delta1, det.delta2), settings.eta)
    psi = np.linspace(0.0, TWO_PI, settings.n_psi)
    if k_hi <= k_lo:
        return psi, np.zeros_like(psi)
    k, c, area = _nodes(n_k, n_cos, k_lo, k_hi, rng)
    w = _rate_weights(proc, det, settings.eta, k, c) * area
    if not np.any(w > 0):
        return psi, np.zeros_like(psi)
    keep = w > _SUPPORT_CUTOFF * w.max()
    k, c, w = k[keep], c[keep], w[keep]
    s = np.sqrt(np.clip(1 - c * c, 0.0, None))
    sep = det.separation()
    # (k1 - k2) . sep with k2 = p - k1, split into cos(psi), sin(psi) and constant parts
    u = 2 * k * s * sep[0]
    v = 2 * k * s * sep[1]
    z = (2 * k * c - proc.P) * sep[2]
    cos_psi, sin_psi = np.cos(psi), np.sin(psi)

    values = np.full_like(psi, 2.0 * w.sum())
    # fixed chunk order keeps the reduction deterministic
    for start in range(0, len(w), _CHUNK):
        sl = slice(start, start + _CHUNK)
        phase = np.outer(u[sl], cos_psi) + np.outer(v[sl], sin_psi) + z[sl, None]
        values += 2.0 * (w[sl] @ np.cos(phase))
    return psi, values


def brute_force_mass(proc: ProcessParams, det: DetectorPair, settings: OracleSettings | None = None) -> float:
    """Integral over psi of the unnormalized brute-force density."""
    settings = settings or OracleSettings()
    psi, values = _unnormalized(proc, det, settings, settings.n_k, settings.n_cos)
    return float(np.trapezoid(values, psi))


def _feasible_scale(proc):
    # order of magnitude of the open-channel mass: 2 branches x 2 pi x max K / (4 P)
    return 4 * math.pi / max(proc.P, 1e-300)


def brute_force_density(proc: ProcessParams, det: DetectorPair, settings: OracleSettings | None = None,
                        seed=None) -> TabulatedDensity:
    """Density of psi from direct numerical integration of the click rate.

    Raises :class:`InfeasibleError` when the regularized deltas have no joint
    support, and :class:`ResolutionError` when halving both integration grids
    moves the result by more than 1e-3 in total variation.
    """
    settings = settings or OracleSettings()
    if settings.mc_samples is not None:
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        ratio = settings.mc_samples / (settings.n_k * settings.n_cos)
        n_k = max(1, int(round(settings.n_k * math.sqrt(ratio))))
        n_cos = max(1, int(round(settings.mc_samples / n_k)))
        psi, values = _unnormalized(proc, det, settings, n_k, n_cos, rng)
    else:
        psi, values = _unnormalized(proc, det, settings, settings.n_k, settings.n_cos)

    mass = float(np.trapezoid(values, psi))
    if not mass > 1e-6 * _feasible_scale(proc):
        raise InfeasibleError(f"regularized deltas have no joint support (mass {mass:.3g})")
    tab = TabulatedDensity.from_values(psi, values / mass)

    if settings.check_resolution and settings.mc_samples is None:
        psi_c, coarse = _unnormalized(proc, det, settings, settings.n_k // 2, settings.n_cos // 2)
        coarse_tab = TabulatedDensity.from_values(psi_c, coarse / np.trapezoid(coarse, psi_c))
        gap = tv_distance(tab, coarse_tab)
        if gap > _RESOLUTION_TV:
            raise ResolutionError(f"brute-force grid under-resolved: halving moved tv by {gap:.2e}")
    return tab


def analytic_on_grid(proc: ProcessParams, det: DetectorPair, grid, **context_options) -> TabulatedDensity:
    ctx = make_context(proc, det, **context_options)
    return TabulatedDensity.from_values(grid, density(grid, ctx))


@dataclass
class OracleReport:
    tv: float
    sup: float
    analytic_seconds: float
    oracle_seconds: float
    analytic: TabulatedDensity = field(repr=False)
    oracle: TabulatedDensity = field(repr=False)


def oracle_compare(proc: ProcessParams, det: DetectorPair, settings: OracleSettings | None = None,
                   seed=None) -> OracleReport:
    """Run the closed form and the brute-force integral on a shared grid.

    When the parameters are infeasible both pipelines are run anyway; if both
    refuse, a single :class:`InfeasibleError` naming both reasons is raised.
    Disagreement about feasibility is itself an error.
    """
    settings = settings or OracleSettings()
    grid = np.linspace(0.0, TWO_PI, settings.n_psi)
    failures = {}
    t0 = time.perf_counter()
    try:
        analytic = analytic_on_grid(proc, det, grid)
    except InfeasibleError as exc:
        failures["analytic"] = exc
    t1 = time.perf_counter()
    try:
        oracle = brute_force_density(proc, det, settings, seed)
    except InfeasibleError as exc:
        failures["oracle"] = exc
    t2 = time.perf_counter()

    if len(failures) == 2:
        reasons = "; ".join(f"{k}: {v}" for k, v in failures.items())
        raise InfeasibleError(f"both pipelines report infeasible parameters ({reasons})",
                              getattr(failures["analytic"], "report", None))
    if failures:
        (which, exc), = failures.items()
        raise InfeasibleError(f"only the {which} pipeline reports infeasibility: {exc}")
    return OracleReport(tv_distance(analytic, oracle), sup_distance(analytic, oracle), t1 - t0, t2 - t1,
                        analytic, oracle)
