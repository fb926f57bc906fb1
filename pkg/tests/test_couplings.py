import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from maltkit.analytics import langevin_acf, twist_matrix
from maltkit.couplings import (
    CoupledPair,
    fit_log_slope,
    generator_limit_check,
    langevin_coupled_run,
    persistent_rhmc_exact,
    rhmc_coupled_run,
    rhmc_renewal_acf,
    twisted_norm_sq,
)
from maltkit.dynamics import PhaseState
from maltkit.rng import RngStream
from maltkit.targets import diagonal_gaussian, make_target

vec = arrays(np.float64, 3, elements=st.floats(-10, 10))


def test_twisted_norm_examples():
    z = PhaseState(np.array([1.0, 0.0]), np.zeros(2))
    z0 = PhaseState(np.zeros(2), np.zeros(2))
    assert twisted_norm_sq(CoupledPair(z, z0), 8, 2, 2) == 8.0
    assert twisted_norm_sq(CoupledPair(z, z), 8, 2, 2) == 0.0
    with pytest.raises(ValueError):
        twisted_norm_sq(CoupledPair(z, z0), 1, 2, 1)


@settings(deadline=None, max_examples=80)
@given(vec, vec, st.floats(0.01, 100), st.floats(1.0, 100), st.floats(0, 0.99))
def test_twisted_norm_dominates_position(dx, dv, m, ratio, alpha):
    a, b, c = twist_matrix(m, m * ratio, alpha)
    pair = CoupledPair(PhaseState(dx, dv), PhaseState(np.zeros(3), np.zeros(3)))
    q = twisted_norm_sq(pair, a, b, c)
    assert c / (a * c - b * b) * q >= np.dot(dx, dx) * (1 - 1e-9) - 1e-12


@settings(deadline=None, max_examples=40)
@given(vec, st.floats(0.1, 10), st.floats(0.0, 1.0))
def test_twisted_norm_position_only(dx, a, frac):
    c = 1.0
    b = frac * math.sqrt(a * c) * 0.99
    pair = CoupledPair(PhaseState(dx, np.ones(3)), PhaseState(np.zeros(3), np.ones(3)))
    assert twisted_norm_sq(pair, a, b, c) == pytest.approx(a * np.dot(dx, dx))


def test_fit_log_slope_recovers_exponent():
    t = np.linspace(0, 5, 101)
    assert fit_log_slope(t, 3 * np.exp(-0.7 * t)) == pytest.approx(-0.7)
    assert math.isnan(fit_log_slope(t, np.zeros_like(t)))


def test_identical_pairs_stay_together():
    t = diagonal_gaussian([1.0, 0.5])
    for tr in (rhmc_coupled_run(t, 0.0, 1.0, 20, RngStream(1), identical=True),
               langevin_coupled_run(t, 3.0, 1.0, 20, RngStream(1), identical=True)):
        assert np.all(tr.twisted_norm_sq == 0)


def test_coupling_preconditions():
    with pytest.raises(ValueError):
        langevin_coupled_run(diagonal_gaussian([1.0]), 1.0, 1.0, 5)
    with pytest.raises(ValueError):
        rhmc_coupled_run(make_target("student", 2), 0.0, 1.0, 5)
    with pytest.warns(RuntimeWarning):
        rhmc_coupled_run(diagonal_gaussian([1.0]), 0.0, 0.2, 5, RngStream(0), h_fine=0.1)


def test_trace_shape_and_start():
    tr = rhmc_coupled_run(diagonal_gaussian([1.0, 0.5]), 0.5, 2.0, 50, RngStream(2), n_records=21)
    assert tr.times[0] == 0 and tr.times[-1] == pytest.approx(2.0)
    a, b, c = tr.twist
    assert tr.twisted_norm_sq[0] == pytest.approx(a)  # unit displacement, equal velocities
    assert np.all(tr.twisted_norm_sq > 0)


def test_langevin_contracts_faster_near_optimal_friction():
    t = diagonal_gaussian([1.0])
    opt = langevin_coupled_run(t, math.sqrt(2), 5.0, 200, RngStream(3))
    slow = langevin_coupled_run(t, 3.0, 5.0, 200, RngStream(3))
    assert opt.fitted_slope <= -2 * (1 / math.sqrt(2)) * 0.85
    assert abs(slow.fitted_slope) < abs(opt.fitted_slope)


def test_persistent_exact_paths_are_stationary():
    x0, xT = persistent_rhmc_exact(0.7, 3.0, 0.5, 2.0, 50000, RngStream(4))
    assert np.var(xT) == pytest.approx(0.49, rel=0.03)
    assert np.var(x0) == pytest.approx(0.49, rel=0.03)


def test_renewal_equation_is_langevin_with_gamma_equal_rate():
    for lam, T in [(0.5, 1.0), (2.0, 1.0), (1.0, 3.0)]:
        assert rhmc_renewal_acf(1.0, lam, T) == pytest.approx(langevin_acf(1.0, lam, T), abs=1e-5)


def test_full_refresh_control_matches_renewal_oracle():
    lam, T, n = 0.5, 1.0, 10**5
    x0, xT = persistent_rhmc_exact(1.0, lam, 0.0, T, n, RngStream(5))
    prod = x0 * xT
    assert abs(prod.mean() - rhmc_renewal_acf(1.0, lam, T)) < 3 * prod.std() / math.sqrt(n)


def test_generator_limit_small():
    checks = generator_limit_check(1.0, 1.0, [0.5, 0.99], 1.0, 20000, RngStream(6))
    assert [c.alpha for c in checks] == [0.5, 0.99]
    assert checks[1].lam == pytest.approx(2 / (1 - 0.99**2))
    assert checks[1].error < 3 * checks[1].std_error + 0.01
    assert checks[0].reference == langevin_acf(1.0, 1.0, 1.0)
