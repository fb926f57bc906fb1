import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maltkit.analytics import (
    ar_ess,
    capped,
    damping_regime,
    deligiannidis_rate,
    langevin_acf,
    langevin_acf_curve,
    langevin_rate,
    rhmc_mean_acf,
    rhmc_square_acf,
    rhmc_contraction_rate,
    twist_matrix,
    worst_acf,
)
from maltkit.rng import RngStream


def oracle_acf(sigma, gamma, T):
    # eigen-decomposition of A = [[0,-1],[1/sigma^2, gamma]] in complex arithmetic
    a = np.array([[0.0, -1.0], [sigma**-2, gamma]], dtype=complex)
    w, V = np.linalg.eig(a)
    return float(np.real(V @ np.diag(np.exp(-T * w)) @ np.linalg.inv(V))[0, 0])


def test_known_values():
    assert langevin_acf(1.0, 0.0, math.pi) == pytest.approx(-1.0, abs=1e-15)
    assert langevin_acf(1.0, 2.0, 1.0) == pytest.approx(0.7357589, abs=1e-7)
    assert langevin_acf(1.0, 4.0, 2.0) == pytest.approx(oracle_acf(1.0, 4.0, 2.0), abs=1e-9)


@pytest.mark.parametrize("sigma, gamma", [(1.0, 0.5), (0.3, 1.0), (2.0, 3.0), (1.0, 10.0)])
def test_matches_eigen_oracle(sigma, gamma):
    for T in np.linspace(0, 8, 33):
        assert langevin_acf(sigma, gamma, T) == pytest.approx(oracle_acf(sigma, gamma, T), abs=1e-9)


def test_regimes():
    assert damping_regime(1.0, 1.0) == "underdamped"
    assert damping_regime(1.0, 2.0) == "critical"
    assert damping_regime(1.0, 3.0) == "overdamped"
    assert langevin_acf_curve(1.0, 3.0, [0, 1]).regime == "overdamped"


def test_curve_starts_at_one_and_bounded():
    c = langevin_acf_curve(0.5, 0.3, np.linspace(0, 20, 200))
    assert c.values[0] == 1.0 and np.all(np.abs(c.values) <= 1 + 1e-12)


@pytest.mark.parametrize("sigma", [0.2, 1.0, 3.0])
def test_continuous_across_critical_boundary(sigma):
    g = 2 / sigma
    for T in np.linspace(0, 10, 51):
        base = langevin_acf(sigma, g, T)
        assert abs(langevin_acf(sigma, g + 1e-7, T) - base) < 1e-5
        assert abs(langevin_acf(sigma, g - 1e-7, T) - base) < 1e-5


@settings(deadline=None, max_examples=60)
@given(st.floats(0.1, 3.0), st.floats(0.05, 5.0))
def test_overdamped_monotone_and_vanishing(sigma, excess):
    gamma = 2 / sigma + excess
    vals = [langevin_acf(sigma, gamma, T) for T in np.linspace(0, 30, 61)]
    assert all(b <= a + 1e-14 for a, b in zip(vals, vals[1:]))
    assert langevin_acf(sigma, gamma, 1e4) < 1e-6


def test_domination_rule():
    scales = np.sqrt(np.arange(1, 51) / 50)
    g = 2 / scales.max()
    for T in np.linspace(0, 15, 301):
        top = math.exp(-T) * (1 + T)
        assert worst_acf(scales, "langevin", "mean", T) == pytest.approx(top, abs=1e-12)
        assert all(abs(langevin_acf(s, g, T)) <= top + 1e-12 for s in scales)


def test_worst_acf_hamiltonian_and_single():
    assert worst_acf([1.0, 0.5], "hamiltonian", "mean", math.pi) == pytest.approx(1.0)
    assert worst_acf([1.0], "langevin", "mean", 1.3, gamma=0.7) == langevin_acf(1.0, 0.7, 1.3)
    assert worst_acf([1.0], "rhmc", "square", 1.0) == pytest.approx(0.6)
    with pytest.raises(ValueError):
        worst_acf([1.0], "nuts", "mean", 1.0)


def test_rhmc_formulas():
    assert rhmc_mean_acf(1.0, 1.0) == 0.5 and rhmc_square_acf(1.0, 1.0) == pytest.approx(0.6)
    assert rhmc_mean_acf(1.0, 1e6) < 1e-11 and rhmc_square_acf(1.0, 1e6) == pytest.approx(0.5)


def test_rhmc_mean_acf_monte_carlo():
    tau = RngStream(31).exponential(1.0, 10**6)
    c = np.cos(tau)
    assert abs(c.mean() - rhmc_mean_acf(1.0, 1.0)) < 3 * c.std() / 1000
    # for unit scale corr(x^2, x'^2) = E[cos^2 tau]
    s = np.cos(tau) ** 2
    assert abs(s.mean() - rhmc_square_acf(1.0, 1.0)) < 3 * s.std() / 1000


def test_ar_ess():
    assert ar_ess(0.0, math.pi / 2) == 1.0
    assert ar_ess(0.5, 1.0) == pytest.approx(math.pi / 6)
    assert ar_ess(1.0, 1.0) == 0.0
    assert ar_ess(-1.0, 1.0) == math.inf and capped(math.inf) == 1e6
    with pytest.raises(ValueError):
        ar_ess(0.2, 0.0)


def test_rhmc_contraction_rate_values():
    rep = rhmc_contraction_rate(1.0, 3.0, 0.0)
    assert rep.r == 0.25 and rep.lam == 4.0 and rep.C == pytest.approx(1.1547, abs=1e-4)
    near = rhmc_contraction_rate(1.0, 3.0, 1 - 1e-9)
    assert near.r == pytest.approx(1 / 2, rel=1e-8)
    assert near.C_prime == pytest.approx((3 + 2 * math.sqrt(2)) ** 0.25, rel=1e-8)
    assert near.C_prime <= 1.56


@settings(deadline=None, max_examples=60)
@given(st.floats(0.01, 10), st.floats(1.0, 100), st.floats(0, 0.999))
def test_rhmc_prefactors_bounded(m, ratio, alpha):
    rep = rhmc_contraction_rate(m, m * ratio, alpha)
    assert rep.C <= math.sqrt(2) + 1e-12 and rep.C_prime <= 1.56


def test_rhmc_rate_increasing_in_alpha():
    rs = [rhmc_contraction_rate(1.0, 5.0, a).r for a in np.linspace(0, 0.99, 50)]
    assert all(b > a for a, b in zip(rs, rs[1:]))


def test_langevin_rate():
    assert langevin_rate(1.0, 3.0, 2.0) == pytest.approx(0.5)
    assert langevin_rate(1.0, 1.0, math.sqrt(2)) == pytest.approx(1 / math.sqrt(2))
    assert langevin_rate(1.0, 1.0, 1e6) < 1e-5
    with pytest.raises(ValueError):
        langevin_rate(1.0, 4.0, 2.0)
    gs = np.sqrt(np.linspace(4.01, 5.0, 30))
    up = [langevin_rate(1.0, 4.0, g) for g in gs]
    assert all(b > a for a, b in zip(up, up[1:]))
    down = [langevin_rate(1.0, 4.0, g) for g in np.sqrt(np.linspace(5.0, 50, 30))]
    assert all(b < a for a, b in zip(down, down[1:]))


def test_deligiannidis_comparison():
    assert deligiannidis_rate(1.0, 3.0, 0.0)[0] == pytest.approx(0.25)
    for m, M in [(1.0, 1.0), (1.0, 10.0), (0.1, 50.0)]:
        for a in np.linspace(0.01, 0.99, 30):
            assert rhmc_contraction_rate(m, M, a).r > deligiannidis_rate(m, M, a)[0]
    ratio = deligiannidis_rate(1.0, 1e8, 0.999)[0] / rhmc_contraction_rate(1.0, 1e8, 0.999).r
    assert ratio == pytest.approx(1.0, abs=1e-3)


def test_twist_matrix():
    assert twist_matrix(1.0, 3.0, 0.0) == (8.0, 2.0, 2.0)
    for a in np.linspace(0, 0.99, 20):
        ta, tb, tc = twist_matrix(1.0, 3.0, a)
        assert tb == 2.0
        assert ta * tc - tb * tb == pytest.approx(4.0 * (3 - a) / (1 + a))
