import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import quad

from udw_momentum.distribution import TWO_PI
from udw_momentum.errors import InfeasibleError, ResolutionError
from udw_momentum.kinematics import DetectorPair, ProcessParams
from udw_momentum.oracle import (
    OracleSettings,
    brute_force_density,
    brute_force_mass,
    nascent_delta,
    oracle_compare,
)
from udw_momentum.stats import tv_distance


@pytest.mark.parametrize("eta", [0.5, 0.01])
def test_nascent_delta_moments(eta):
    assert nascent_delta(0.0, eta) == pytest.approx(1 / (eta * math.sqrt(TWO_PI)), rel=1e-15)
    mass, _ = quad(lambda x: float(nascent_delta(x, eta)), -50 * eta, 50 * eta, points=[0])
    assert mass == pytest.approx(1.0, rel=1e-12)
    window, _ = quad(lambda x: float(nascent_delta(x, eta)), -8 * eta, 8 * eta, points=[0])
    assert window == pytest.approx(1.0, abs=1e-10)
    # integral of x^2 delta_eta(x - a) is a^2 + eta^2: the regularization error is O(eta^2)
    a = 0.7
    second, _ = quad(lambda x: x * x * float(nascent_delta(x - a, eta)), a - 50 * eta, a + 50 * eta, points=[a])
    assert second == pytest.approx(a * a + eta * eta, rel=1e-12)


def test_settings_validation():
    with pytest.raises(ValueError):
        OracleSettings(eta=0.0)
    with pytest.raises(ValueError):
        OracleSettings(n_k=8)
    with pytest.raises(ValueError):
        OracleSettings(n_psi=100)
    with pytest.raises(ValueError):
        OracleSettings(mc_samples=0)


def test_oracle_uniform_at_alpha_zero(default_proc, default_det):
    tab = brute_force_density(default_proc, replace(default_det, alpha=0.0))
    uniform = np.full_like(tab.grid, 1 / TWO_PI)
    assert 0.5 * np.trapezoid(np.abs(tab.values - uniform), tab.grid) < 0.02


@pytest.mark.parametrize("r, alpha", [(2.0, math.pi / 4), (5.0, math.pi / 2)])
def test_oracle_agrees_with_closed_form(default_proc, default_det, r, alpha):
    rep = oracle_compare(default_proc, replace(default_det, r=r, alpha=alpha))
    assert rep.tv < 0.05
    assert rep.analytic_seconds >= 0 and rep.oracle_seconds > 0


def test_oracle_error_shrinks_with_eta(default_proc, default_det):
    det = replace(default_det, r=5.0, alpha=math.pi / 2)
    coarse = oracle_compare(default_proc, det, OracleSettings(eta=0.02)).tv
    fine = oracle_compare(default_proc, det, OracleSettings(eta=0.01)).tv
    assert fine < coarse
    # Gaussian smearing errors scale as eta^2
    assert fine / coarse == pytest.approx(0.25, abs=0.1)


def test_both_pipelines_refuse_band_violation(default_det):
    with pytest.raises(InfeasibleError, match="both pipelines"):
        oracle_compare(ProcessParams(1.0, 4.0, 5.0), default_det)


def test_band_violation_mass_negligible(default_proc, default_det):
    good = brute_force_mass(default_proc, default_det)
    bad = brute_force_mass(ProcessParams(1.0, 4.0, 5.0), default_det)
    assert good > 0
    assert bad <= 1e-6 * good


def test_closed_channel_has_no_support(default_det):
    proc = ProcessParams(1.0, 4.0, 3.0)
    assert brute_force_mass(proc, DetectorPair(0.5, 0.6, 5.0, 1.0)) == 0.0


def test_monte_carlo_mode_close_to_grid(default_proc, default_det):
    det = replace(default_det, r=2.0)
    grid = brute_force_density(default_proc, det)
    mc = brute_force_density(default_proc, det, OracleSettings(mc_samples=1_000_000), seed=3)
    assert tv_distance(grid, mc) < 0.02
    again = brute_force_density(default_proc, det, OracleSettings(mc_samples=1_000_000), seed=3)
    np.testing.assert_array_equal(mc.values, again.values)


def test_coarse_grid_flagged(default_proc, default_det):
    with pytest.raises(ResolutionError):
        brute_force_density(default_proc, replace(default_det, r=20.0), OracleSettings(n_k=64, n_cos=64))
