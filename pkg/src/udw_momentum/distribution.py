"""Conditional density of the azimuth ``psi`` of k1 about the parent momentum.

Each open branch ``(i, j)`` contributes ``1 + cos(A_ij + B_ij cos psi)``.
The interference factor is ``K = 2 + 2 cos(...)``; the factor 2 and every
psi-independent prefactor (couplings, energy delta, flux, phase-space
constants) cancel on normalization and are never materialized.

Optional psi-dependent weights multiply each branch term: a squared matrix
element model ``|M(psi)|^2`` and a Gaussian angular filter favouring k1
aligned with the detector separation.  Spherical-detector form factors are
evaluated at the on-shell magnitudes, so they are per-branch constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import ContractViolation, InfeasibleError, QuadratureError, ResolutionError
from .kinematics import (
    BRANCHES,
    BranchKinematics,
    DetectorPair,
    ProcessParams,
    branch_kinematics,
    validate_params,
)
from .specfun import bessel_j0, spherical_j1_over_x

TWO_PI = 2 * math.pi
DEFAULT_SIGMA_ANGLE = 0.3
DEFAULT_TABLE_SIZE = 4096
MAX_QUADRATURE_POINTS = 2**24


def interference_factor(k1, k2, separation):
    """``2 + 2 cos((k1 - k2) . separation)``; broadcasts over leading axes."""
    phase = np.sum((np.asarray(k1) - np.asarray(k2)) * np.asarray(separation), axis=-1)
    return 2.0 + 2.0 * np.cos(phase)


@dataclass(frozen=True)
class PhaseCoefficients:
    A: float
    B: float


def phase_coefficients(proc: ProcessParams, det: DetectorPair, branch: tuple[int, int]) -> PhaseCoefficients:
    """Offset and amplitude of ``(2 k1 - p) . r = A + B cos psi``."""
    kin = branch_kinematics(proc, det, branch)
    if not kin.open:
        raise InfeasibleError(f"branch {branch} is closed", validate_params(proc, det))
    return _phase(proc, det, kin)


def _phase(proc, det, kin):
    cos_a, sin_a = det.trig_alpha()
    A = 2 * kin.kappa_i * det.r * kin.cos_theta * cos_a - proc.P * det.r * cos_a
    B = 2 * kin.kappa_i * det.r * kin.sin_theta * sin_a
    return PhaseCoefficients(A, B)


def form_factor(k: float, radius_a: float) -> float:
    """Squared transform ``|chi(k)|^2`` of a uniform ball of radius ``a``."""
    chi = 4 * math.pi * radius_a**3 * spherical_j1_over_x(k * radius_a)
    return chi * chi


@dataclass(frozen=True)
class Branch:
    kin: BranchKinematics
    phase: PhaseCoefficients
    weight: float = 1.0


@dataclass(frozen=True)
class DistributionContext:
    """Everything needed to evaluate the normalized density.

    Build with :func:`make_context`; ``normalization`` is the integral of
    :func:`density_unnormalized` over one period and ``normalization_method``
    records whether it came from the closed form or from quadrature.
    """

    proc: ProcessParams
    det: DetectorPair
    branches: tuple[Branch, ...]
    matrix_element: Callable | None = None
    filter_sigma: float | None = None
    form_factors: bool = False
    normalization: float = float("nan")
    normalization_method: str = ""

    @property
    def psi_dependent_weights(self) -> bool:
        return self.matrix_element is not None or self.filter_sigma is not None

    @property
    def max_amplitude(self) -> float:
        return max(b.phase.B for b in self.branches)


def make_context(
    proc: ProcessParams,
    det: DetectorPair,
    *,
    matrix_element: Callable | None = None,
    filter_sigma: float | None = None,
    form_factors: bool = False,
) -> DistributionContext:
    """Resolve branches, weights and the normalization for one configuration.

    Raises :class:`InfeasibleError` (carrying the validation report) when no
    branch is open or the click probability vanishes identically.
    """
    if filter_sigma is not None and not filter_sigma > 0:
        raise ValueError(f"filter sigma must be positive, got {filter_sigma}")
    if form_factors and det.radius_a is None:
        raise ValueError("form factors requested but detector radius_a is not set")

    branches = []
    for br in BRANCHES:
        kin = branch_kinematics(proc, det, br)
        if not kin.open:
            continue
        weight = 1.0
        if form_factors:
            weight = form_factor(kin.kappa_i, det.radius_a) * form_factor(kin.kappa_j, det.radius_a)
        branches.append(Branch(kin, _phase(proc, det, kin), weight))
    if not branches:
        raise InfeasibleError("no open detection branch", validate_params(proc, det))

    ctx = DistributionContext(proc, det, tuple(branches), matrix_element, filter_sigma, form_factors)
    if ctx.psi_dependent_weights:
        norm, method = normalization_numeric(ctx), "numeric"
    else:
        norm, method = normalization_analytic(ctx), "analytic"
    # each bracket is at most 2, so 4 pi sum(w) bounds the normalization
    if not norm > 1e-12 * 2 * TWO_PI * sum(b.weight for b in branches):
        raise InfeasibleError(f"click probability vanishes (normalization {norm:.3g})", validate_params(proc, det))
    return replace(ctx, normalization=norm, normalization_method=method)


def mott_filter_weight(psi, ctx: DistributionContext, sigma_angle: float, branch: tuple[int, int] = (1, 2)):
    """Gaussian suppression ``exp(-beta^2 / 2 sigma^2)`` of the branch's k1 direction.

    ``beta`` is the angle between k1(psi) and the separation direction.
    """
    kin = next((b.kin for b in ctx.branches if (b.kin.i, b.kin.j) == tuple(branch)), None)
    if kin is None:
        raise InfeasibleError(f"branch {branch} is closed")
    return _filter(np.asarray(psi, dtype=float), ctx.det, kin, sigma_angle)


def _filter(psi, det, kin, sigma):
    cos_a, sin_a = det.trig_alpha()
    cos_beta = kin.sin_theta * np.cos(psi) * sin_a + kin.cos_theta * cos_a
    beta = np.arccos(np.clip(cos_beta, -1.0, 1.0))
    return np.exp(-0.5 * (beta / sigma) ** 2)


def density_unnormalized(psi, ctx: DistributionContext):
    """Sum over open branches of ``[1 + cos(A + B cos psi)]`` times weights."""
    psi = np.asarray(psi, dtype=float)
    cos_psi = np.cos(psi)
    total = np.zeros_like(cos_psi)
    for b in ctx.branches:
        term = 1.0 + np.cos(b.phase.A + b.phase.B * cos_psi)
        if ctx.filter_sigma is not None:
            term = term * _filter(psi, ctx.det, b.kin, ctx.filter_sigma)
        total = total + b.weight * term
    if ctx.matrix_element is not None:
        total = total * np.asarray(ctx.matrix_element(psi), dtype=float)
    return total


def normalization_analytic(ctx: DistributionContext) -> float:
    """Closed form ``2 pi sum_branches w [1 + cos(A) J0(B)]``.

    Only valid when no weight depends on psi.  With unit weights and both
    branches open it tends to ``4 pi`` at large separation.
    """
    if ctx.psi_dependent_weights:
        raise ContractViolation("closed-form normalization needs psi-independent weights")
    return TWO_PI * sum(b.weight * (1.0 + math.cos(b.phase.A) * bessel_j0(b.phase.B)) for b in ctx.branches)


def initial_grid_size(ctx: DistributionContext, minimum: int = 64) -> int:
    """Power of two comfortably above the Fourier bandwidth of the density."""
    B = ctx.max_amplitude
    need = 2 * (B + 8 * B ** (1 / 3) + 32)
    return max(minimum, 1 << math.ceil(math.log2(need)))


def periodic_trapezoid(func, n: int) -> float:
    psi = np.arange(n) * (TWO_PI / n)
    return float(np.mean(func(psi)) * TWO_PI)


def converged_periodic_integral(func, n_start: int, rtol: float = 1e-10, atol: float = 0.0,
                                max_n: int = MAX_QUADRATURE_POINTS) -> tuple[float, int]:
    """Periodic trapezoid on [0, 2 pi), doubling until successive values agree."""
    n = n_start
    prev = periodic_trapezoid(func, n)
    while n < max_n:
        n *= 2
        cur = periodic_trapezoid(func, n)
        if abs(cur - prev) <= rtol * abs(cur) + atol:
            return cur, n
        prev = cur
    raise QuadratureError(f"no convergence with {n} points", estimate=prev)


def normalization_numeric(ctx: DistributionContext, n_grid: int = 64) -> float:
    """Integral of the unnormalized density by auto-refined periodic trapezoid."""
    if n_grid < 64:
        raise ValueError("n_grid must be at least 64")
    value, _ = converged_periodic_integral(lambda x: density_unnormalized(x, ctx), initial_grid_size(ctx, n_grid))
    return value


def density(psi, ctx: DistributionContext):
    """Normalized conditional density of psi on [0, 2 pi]."""
    return density_unnormalized(psi, ctx) / ctx.normalization


@dataclass(frozen=True)
class TabulatedDensity:
    """Density values on the closed uniform grid ``linspace(0, 2 pi, n)``."""

    grid: np.ndarray
    values: np.ndarray
    cdf: np.ndarray

    @classmethod
    def from_values(cls, grid, values) -> "TabulatedDensity":
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        steps = 0.5 * (values[1:] + values[:-1]) * np.diff(grid)
        cdf = np.concatenate([[0.0], np.cumsum(steps)])
        cdf /= cdf[-1]
        cdf[-1] = 1.0
        return cls(grid, values, cdf)

    def mass(self) -> float:
        return float(np.trapezoid(self.values, self.grid))


def tabulate(ctx: DistributionContext, n: int = DEFAULT_TABLE_SIZE) -> TabulatedDensity:
    if n < 1024:
        raise ValueError("tabulation needs at least 1024 points")
    grid = np.linspace(0.0, TWO_PI, n)
    tab = TabulatedDensity.from_values(grid, density(grid, ctx))
    if abs(tab.mass() - 1.0) > 1e-9:
        raise ResolutionError(f"{n} points do not resolve the density (mass {tab.mass():.12f})")
    return tab


def sample(tab: TabulatedDensity, count: int, seed=None) -> np.ndarray:
    """Inverse-CDF draws using linear interpolation of the tabulated CDF.

    ``seed`` may be an integer or a ``numpy.random.Generator`` owned by the
    caller.
    """
    if count < 1:
        raise ValueError("count must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    u = rng.random(count)
    idx = np.clip(np.searchsorted(tab.cdf, u, side="right") - 1, 0, len(tab.cdf) - 2)
    lo, hi = tab.cdf[idx], tab.cdf[idx + 1]
    width = hi - lo
    frac = np.divide(u - lo, width, out=np.zeros_like(u), where=width > 0)
    return tab.grid[idx] + frac * (tab.grid[idx + 1] - tab.grid[idx])


def ks_distance(samples, tab: TabulatedDensity) -> float:
    """Kolmogorov-Smirnov distance between draws and the piecewise-linear CDF."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    F = np.interp(x, tab.grid, tab.cdf)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))
