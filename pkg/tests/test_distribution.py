import math
from dataclasses import replace

import mpmath
import numpy as np
import pytest
from hypothesis import given, reject, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from strategies import feasible_params
from udw_momentum.distribution import (
    TWO_PI,
    TabulatedDensity,
    density,
    density_unnormalized,
    interference_factor,
    ks_distance,
    make_context,
    mott_filter_weight,
    normalization_analytic,
    normalization_numeric,
    phase_coefficients,
    sample,
    tabulate,
)
from udw_momentum.errors import ContractViolation, InfeasibleError, ResolutionError
from udw_momentum.kinematics import DetectorPair, ProcessParams, reconstruct_momenta


def test_interference_factor_cases():
    assert interference_factor([1, 2, 3], [1, 2, 3], [4, 5, 6]) == 4.0
    assert interference_factor([1, 0, 0], [0, 0, 0], [math.pi, 0, 0]) == pytest.approx(0.0, abs=1e-15)
    assert interference_factor([1, 0, 0], [0, 0, 0], [math.pi / 2, 0, 0]) == pytest.approx(2.0, abs=1e-15)


def phase_by_vectors(proc, det, branch):
    """A and B read off (2 k1 - p) . r at psi = 0 and psi = pi."""
    sep = det.separation()
    vals = []
    for psi in (0.0, math.pi):
        k1, k2 = reconstruct_momenta(proc, det, branch, psi)
        vals.append(np.dot(k1 - k2, sep))
    return 0.5 * (vals[0] + vals[1]), 0.5 * (vals[0] - vals[1])


@pytest.mark.parametrize("branch", [(1, 2), (2, 1)])
def test_phase_coefficients_default(default_proc, default_det, branch):
    pc = phase_coefficients(default_proc, default_det, branch)
    assert pc.A == 0.0
    assert pc.B == pytest.approx(15.9862, abs=1e-4)
    A_vec, B_vec = phase_by_vectors(default_proc, default_det, branch)
    assert pc.A == pytest.approx(A_vec, abs=1e-12)
    assert pc.B == pytest.approx(B_vec, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(feasible_params(r_max=50), st.sampled_from([(1, 2), (2, 1)]))
def test_phase_coefficients_match_vector_form(params, branch):
    proc, det = params
    pc = phase_coefficients(proc, det, branch)
    A_vec, B_vec = phase_by_vectors(proc, det, branch)
    scale = 1 + 4 * det.gap(branch[0]) * det.r
    assert pc.A == pytest.approx(A_vec, abs=1e-12 * scale)
    assert pc.B == pytest.approx(B_vec, abs=1e-12 * scale)
    assert pc.B >= 0


def test_phase_alpha_zero_kills_amplitude(default_proc, default_det):
    for branch in [(1, 2), (2, 1)]:
        assert phase_coefficients(default_proc, replace(default_det, alpha=0.0), branch).B == 0.0


def test_density_constant_at_alpha_zero(default_proc, default_det):
    ctx = make_context(default_proc, replace(default_det, alpha=0.0))
    psi = np.linspace(0, TWO_PI, 257)
    values = density_unnormalized(psi, ctx)
    assert np.ptp(values) == 0.0
    np.testing.assert_allclose(density(psi, ctx), 1 / TWO_PI, rtol=0, atol=1e-12)


def test_density_unnormalized_default_quarter_turn(default_proc, default_det):
    ctx = make_context(default_proc, default_det)
    assert density_unnormalized(math.pi / 2, ctx) == pytest.approx(4.0, rel=1e-15)


def test_normalization_analytic_default(default_proc, default_det):
    ctx = make_context(default_proc, default_det)
    B = phase_coefficients(default_proc, default_det, (1, 2)).B
    expected = TWO_PI * 2 * (1 + float(mpmath.besselj(0, B)))
    assert normalization_analytic(ctx) == pytest.approx(expected, rel=1e-13)
    assert density(math.pi / 2, ctx) == pytest.approx(4 / expected, rel=1e-13)


def test_normalization_alpha_zero(default_proc, default_det):
    det = replace(default_det, alpha=0.0)
    ctx = make_context(default_proc, det)
    A = [phase_coefficients(default_proc, det, b).A for b in [(1, 2), (2, 1)]]
    assert normalization_analytic(ctx) == pytest.approx(TWO_PI * sum(1 + math.cos(a) for a in A), rel=1e-14)
    assert normalization_numeric(ctx) == pytest.approx(normalization_analytic(ctx), rel=1e-14)


def test_normalization_large_separation_tends_to_uniform(default_proc, default_det):
    ctx = make_context(default_proc, replace(default_det, r=1e6))
    assert normalization_analytic(ctx) == pytest.approx(4 * math.pi, rel=2e-3)


@settings(max_examples=100, deadline=None)
@given(feasible_params())
def test_normalization_analytic_matches_numeric(params):
    ctx = make_context(*params)
    assert normalization_numeric(ctx) == pytest.approx(normalization_analytic(ctx), rel=1e-8)


def test_normalization_numeric_against_adaptive_quad(default_proc, default_det):
    ctx = make_context(default_proc, default_det, filter_sigma=0.5)
    ref, _ = quad(lambda x: float(density_unnormalized(x, ctx)), 0, TWO_PI, limit=400, epsabs=0, epsrel=1e-12)
    assert normalization_numeric(ctx) == pytest.approx(ref, rel=1e-9)


def test_analytic_refuses_psi_dependent_weights(default_proc, default_det):
    ctx = make_context(default_proc, default_det, filter_sigma=0.3)
    assert ctx.normalization_method == "numeric"
    with pytest.raises(ContractViolation):
        normalization_analytic(ctx)
    ctx = make_context(default_proc, default_det, matrix_element=lambda psi: 1 + 0.5 * np.cos(psi) ** 2)
    with pytest.raises(ContractViolation):
        normalization_analytic(ctx)


def test_numeric_grid_minimum(default_proc, default_det):
    with pytest.raises(ValueError):
        normalization_numeric(make_context(default_proc, default_det), n_grid=16)


@settings(max_examples=60, deadline=None)
@given(feasible_params(), st.sampled_from([None, 0.2, 1.0]))
def test_density_normalized(params, sigma):
    try:
        ctx = make_context(*params, filter_sigma=sigma)
    except InfeasibleError:
        # a narrow filter far from every emission direction
        reject()
    n = 4 * max(1024, ctx.max_amplitude.__ceil__() * 4)
    psi = np.arange(n) * TWO_PI / n
    assert np.mean(density(psi, ctx)) * TWO_PI == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(feasible_params(r_max=100), st.sampled_from([None, 0.3]), st.floats(0, math.pi))
def test_density_symmetric_about_pi(params, sigma, psi):
    try:
        ctx = make_context(*params, filter_sigma=sigma)
    except InfeasibleError:
        reject()
    assert density(psi, ctx) == pytest.approx(density(TWO_PI - psi, ctx), rel=1e-12, abs=1e-14)


@settings(max_examples=60, deadline=None)
@given(feasible_params(r_max=100))
def test_density_nonnegative(params):
    ctx = make_context(*params)
    assert np.all(density_unnormalized(np.linspace(0, TWO_PI, 2001), ctx) >= 0)


@settings(max_examples=60, deadline=None)
@given(feasible_params(r_max=100), st.floats(0, TWO_PI))
def test_density_invariant_under_detector_swap(params, psi):
    proc, det = params
    swapped = DetectorPair(det.delta2, det.delta1, det.r, math.pi - det.alpha)
    a = density(psi, make_context(proc, det))
    b = density(psi + math.pi, make_context(proc, swapped))
    assert a == pytest.approx(b, rel=1e-9, abs=1e-12)


def test_form_factor_small_radius_is_constant_ratio(default_proc, default_det):
    det = replace(default_det, radius_a=1e-4)
    point = make_context(default_proc, det)
    extended = make_context(default_proc, det, form_factors=True)
    psi = np.linspace(0, TWO_PI, 101)
    ratio = density_unnormalized(psi, extended) / density_unnormalized(psi, point)
    np.testing.assert_allclose(ratio, ratio[0], rtol=1e-12)
    np.testing.assert_allclose(density(psi, extended), density(psi, point), rtol=1e-12)
    assert extended.normalization_method == "analytic"


def test_form_factor_requires_radius(default_proc, default_det):
    with pytest.raises(ValueError):
        make_context(default_proc, default_det, form_factors=True)


def test_filter_weight_unity_when_aligned(default_proc, default_det):
    ctx = make_context(default_proc, default_det)
    theta = math.acos(ctx.branches[0].kin.cos_theta)
    aligned = make_context(default_proc, replace(default_det, alpha=theta))
    assert mott_filter_weight(0.0, aligned, 0.3, (1, 2)) == pytest.approx(1.0, abs=1e-12)
    assert mott_filter_weight(math.pi, aligned, 0.3, (1, 2)) < 1e-3


def test_filter_infinite_width_is_off(default_proc, default_det):
    ctx = make_context(default_proc, default_det)
    psi = np.linspace(0, TWO_PI, 333)
    assert np.all(mott_filter_weight(psi, ctx, math.inf) == 1.0)
    wide = make_context(default_proc, default_det, filter_sigma=1e12)
    np.testing.assert_allclose(density(psi, wide), density(psi, ctx), rtol=0, atol=1e-10)
    assert normalization_numeric(wide) == pytest.approx(normalization_analytic(ctx), rel=1e-12)


def test_infeasible_context_carries_report():
    with pytest.raises(InfeasibleError) as info:
        make_context(ProcessParams(1, 4, 10), DetectorPair(2, 3, 1, 0))
    assert info.value.report is not None and not info.value.report.feasible


def test_vanishing_click_probability_is_infeasible(default_proc):
    # alpha = 0 with A = -pi: both brackets vanish identically
    r = 3 * math.pi / 5
    with pytest.raises(InfeasibleError):
        make_context(default_proc, DetectorPair(2, 3, r, 0.0))


def test_tabulate_invariants(default_proc, default_det):
    tab = tabulate(make_context(default_proc, default_det), 4096)
    assert tab.grid[0] == 0 and tab.grid[-1] == TWO_PI
    assert np.all(tab.values >= 0)
    assert np.all(np.diff(tab.cdf) >= 0) and tab.cdf[-1] == 1.0
    assert tab.mass() == pytest.approx(1.0, abs=1e-9)


def test_tabulate_detects_under_resolution(default_proc, default_det):
    with pytest.raises(ResolutionError):
        tabulate(make_context(default_proc, replace(default_det, r=2000.0)), 1024)
    with pytest.raises(ValueError):
        tabulate(make_context(default_proc, default_det), 512)


def test_sampling_uniform_ks(default_proc, default_det):
    tab = tabulate(make_context(default_proc, replace(default_det, alpha=0.0)), 4096)
    draws = sample(tab, 1_000_000, seed=11)
    u = np.sort(draws) / TWO_PI
    i = np.arange(1, len(u) + 1)
    assert max(np.max(i / len(u) - u), np.max(u - (i - 1) / len(u))) < 2e-3


def test_sampling_reproducible(default_proc, default_det):
    tab = tabulate(make_context(default_proc, default_det), 4096)
    np.testing.assert_array_equal(sample(tab, 1000, seed=5), sample(tab, 1000, seed=5))
    rng_a, rng_b = np.random.default_rng(9), np.random.default_rng(9)
    np.testing.assert_array_equal(sample(tab, 10, rng_a), sample(tab, 10, rng_b))
    assert not np.array_equal(sample(tab, 1000, seed=5), sample(tab, 1000, seed=6))


def test_sample_mean_cos_matches_quadrature(default_proc, default_det):
    ctx = make_context(default_proc, default_det, filter_sigma=0.5)
    tab = tabulate(ctx, 4096)
    draws = np.cos(sample(tab, 400_000, seed=1))
    expected, _ = quad(lambda x: math.cos(x) * float(density(x, ctx)), 0, TWO_PI, limit=400)
    assert expected > 0.1
    sigma = draws.std() / math.sqrt(len(draws))
    assert abs(draws.mean() - expected) < 3 * sigma


def test_ks_distance_self_consistency():
    grid = np.linspace(0, TWO_PI, 1025)
    tab = TabulatedDensity.from_values(grid, 1 + 0.5 * np.cos(grid))
    assert ks_distance(sample(tab, 200_000, seed=2), tab) < 5e-3
    shifted = TabulatedDensity.from_values(grid, 1 - 0.5 * np.cos(grid))
    assert ks_distance(sample(tab, 200_000, seed=2), shifted) > 0.1
