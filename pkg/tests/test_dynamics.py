import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from maltkit.analytics import langevin_acf
from maltkit.dynamics import (
    NoisePair,
    PhaseState,
    StepParams,
    leapfrog_step,
    local_energy_error,
    matexp_2x2,
    obabo_step,
    ou_exact_step,
    refine_noise,
)
from maltkit.rng import RngStream
from maltkit.targets import TargetModel, diagonal_gaussian, make_target

finite = st.floats(-5, 5, allow_nan=False)


class FreeParticle(TargetModel):
    def __init__(self, d):
        super().__init__(d)

    def potential(self, x):
        return np.zeros(np.shape(x)[:-1])

    def gradient(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


def taylor_expm(a, T):
    # scaling and squaring on a plain Taylor series; independent of the closed form
    m = -T * np.asarray(a, dtype=float)
    k = max(0, int(math.ceil(math.log2(max(np.abs(m).max(), 1e-300)))) + 4)
    m = m / 2**k
    out, term = np.eye(2), np.eye(2)
    for j in range(1, 30):
        term = term @ m / j
        out = out + term
    for _ in range(k):
        out = out @ out
    return out


def test_free_particle_drifts():
    s, g = leapfrog_step(FreeParticle(2), PhaseState([1.0, 2.0], [0.5, -1.0]), 0.3)
    assert np.allclose(s.x, [1.15, 1.7]) and np.allclose(s.v, [0.5, -1.0])
    assert np.all(g == 0)


def test_leapfrog_hand_expansion():
    s, g = leapfrog_step(diagonal_gaussian([1.0]), PhaseState([1.0], [0.0]), 0.1)
    assert s.x[0] == pytest.approx(0.995, abs=1e-15)
    assert s.v[0] == pytest.approx(-0.09975, abs=1e-15)
    assert g[0] == pytest.approx(0.995, abs=1e-15)


@settings(deadline=None, max_examples=60)
@given(arrays(np.float64, 3, elements=finite), arrays(np.float64, 3, elements=finite), st.floats(0.01, 0.5))
def test_leapfrog_reversible(x, v, h):
    t = make_target("mixture", 3)
    s, _ = leapfrog_step(t, PhaseState(x, v), h)
    back, _ = leapfrog_step(t, s.flipped(), h)
    assert np.allclose(back.x, x, atol=1e-12) and np.allclose(-back.v, v, atol=1e-12)


@settings(deadline=None, max_examples=60)
@given(arrays(np.float64, 4, elements=finite), arrays(np.float64, 4, elements=finite), st.floats(0.01, 1.0))
def test_obabo_gamma_zero_is_bitwise_leapfrog(x, v, h):
    t = make_target("student", 4)
    noise = NoisePair(np.ones(4), np.ones(4))
    a, ga = obabo_step(t, PhaseState(x, v), StepParams(h, 0.0), noise)
    b, gb = leapfrog_step(t, PhaseState(x, v), h)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.v, b.v) and np.array_equal(ga, gb)


def test_obabo_matches_straight_line_oracle():
    h, gamma = 0.1, 1.0
    x, v, xi, xi2 = 0.7, -0.3, 1.1, -0.4
    eta = math.exp(-gamma * h / 2)
    c = math.sqrt(1 - eta**2)
    # O, B, A, B, O written out for phi'(x) = x
    v1 = eta * v + c * xi
    v2 = v1 - h / 2 * x
    x1 = x + h * v2
    v3 = v2 - h / 2 * x1
    v4 = eta * v3 + c * xi2
    s, _ = obabo_step(diagonal_gaussian([1.0]), PhaseState([x], [v]), StepParams(h, gamma),
                      NoisePair(np.array([xi]), np.array([xi2])))
    assert s.x[0] == pytest.approx(x1, abs=1e-12) and s.v[0] == pytest.approx(v4, abs=1e-12)


def test_obabo_large_friction_refreshes_fully():
    s, _ = obabo_step(FreeParticle(1), PhaseState([0.0], [5.0]), StepParams(0.1, 1e4),
                      NoisePair(np.array([0.3]), np.array([-0.2])))
    assert s.x[0] == pytest.approx(0.03) and s.v[0] == pytest.approx(-0.2)


def test_step_params_eta():
    p = StepParams(0.2, 1.5)
    assert p.eta == math.exp(-0.15)
    assert StepParams(0.2, 0.0).eta == 1.0 and StepParams(0.2, 0.0).noise_scale == 0.0
    with pytest.raises(ValueError):
        StepParams(0.0, 1.0)
    with pytest.raises(ValueError):
        StepParams(0.1, -1.0)


def test_local_error_quadratic_closed_form():
    t = diagonal_gaussian([1.0])
    x0, x1 = np.array([0.0]), np.array([1.0])
    assert local_energy_error(t, x0, x1, x0, x1, 0.2) == pytest.approx(0.005, abs=1e-15)
    assert local_energy_error(t, x1, x1, x1, x1, 0.2) == 0.0


@settings(deadline=None, max_examples=80)
@given(arrays(np.float64, 3, elements=finite), arrays(np.float64, 3, elements=finite), st.floats(0.01, 1.0))
def test_local_error_antisymmetric(x, y, h):
    t = make_target("mixture", 3)
    gx, gy = t.gradient(x), t.gradient(y)
    assert local_energy_error(t, x, y, gx, gy, h) == pytest.approx(-local_energy_error(t, y, x, gy, gx, h), abs=1e-10)


@pytest.mark.parametrize("kind", ["gaussian", "mixture", "student"])
def test_local_error_equals_leapfrog_energy_change(kind):
    t = make_target(kind, 10)
    rng = RngStream(2)
    for _ in range(20):
        x, v = t.sample(rng), rng.standard_normal(10)
        s, g1 = leapfrog_step(t, PhaseState(x, v), 0.15)
        energy = t.potential(s.x) - t.potential(x) + 0.5 * (s.v @ s.v - v @ v)
        assert local_energy_error(t, x, s.x, t.gradient(x), g1, 0.15) == pytest.approx(energy, abs=1e-10)


def test_matexp_identity_at_zero():
    assert np.array_equal(matexp_2x2(0.7, 1.3, 0.0), np.eye(2))


def test_matexp_critical_value():
    assert matexp_2x2(1.0, 2.0, 1.0)[0, 0] == pytest.approx(2 / math.e, abs=1e-12)


@pytest.mark.parametrize("gamma", [0.0, 1.0, 2.0, 4.0])
@pytest.mark.parametrize("sigma", [0.1, 1.0])
def test_matexp_against_taylor_oracle(gamma, sigma):
    a = np.array([[0.0, -1.0], [sigma**-2, gamma]])
    for T in np.linspace(0, 10, 41):
        ref = taylor_expm(a, T)
        assert np.max(np.abs(matexp_2x2(sigma, gamma, T) - ref)) < 1e-9 * max(1.0, np.abs(ref).max())


@pytest.mark.parametrize("offset", [0.0, 1e-9, -1e-9, 5e-7, -5e-7, 2e-6, -2e-6])
def test_matexp_near_critical_boundary(offset):
    sigma, T = 1.0, 3.0
    gamma = 2.0 * (1 + offset)
    ref = taylor_expm(np.array([[0.0, -1.0], [1.0, gamma]]), T)
    assert np.max(np.abs(matexp_2x2(sigma, gamma, T) - ref)) < 1e-9


@settings(deadline=None, max_examples=60)
@given(st.floats(0.05, 5), st.floats(0, 20), st.floats(0, 10))
def test_matexp_entry_equals_acf(sigma, gamma, T):
    assert matexp_2x2(sigma, gamma, T)[0, 0] == pytest.approx(langevin_acf(sigma, gamma, T), abs=1e-9)


def test_overdamped_branch_no_overflow():
    m = matexp_2x2(1.0, 50.0, 500.0)
    assert np.all(np.isfinite(m)) and 0 < m[0, 0] < 1


def test_ou_gamma_zero_is_rotation():
    scales, T = np.array([1.0, 0.5]), 0.8
    x, v = np.array([0.4, -1.0]), np.array([0.3, 0.9])
    s = ou_exact_step(scales, 0.0, T, PhaseState(x, v), RngStream(1))
    ref = np.cos(T / scales) * x + scales * np.sin(T / scales) * v
    assert np.allclose(s.x, ref, atol=1e-12)


def test_ou_preserves_stationary_covariance_and_matches_acf():
    sigma, gamma, T, n = 0.7, 1.2, 0.9, 10**5
    rng = RngStream(6)
    x = sigma * rng.standard_normal(n)
    v = rng.standard_normal(n)
    s = ou_exact_step(np.full(n, sigma), gamma, T, PhaseState(x, v), rng)
    assert np.var(s.x) / sigma**2 == pytest.approx(1.0, abs=0.02)
    assert np.var(s.v) == pytest.approx(1.0, abs=0.02)
    assert abs(np.mean(s.x * s.v)) < 0.015
    prod = x * s.x / sigma**2
    se = prod.std() / math.sqrt(n)
    assert abs(prod.mean() - langevin_acf(sigma, gamma, T)) < 3 * se


def test_ou_rejects_negative_friction():
    with pytest.raises(ValueError):
        ou_exact_step([1.0], -0.1, 1.0, PhaseState([0.0], [0.0]), RngStream(0))


def test_refine_noise_unit_variance():
    rng = RngStream(13)
    z = refine_noise(0.0, 0.3, 1.0, 2.0, rng.standard_normal(10**5), rng.standard_normal(10**5))
    se = math.sqrt(2.0 / 10**5)
    assert abs(z.var() - 1.0) < 3 * se


def test_refine_noise_brownian_limit():
    w = refine_noise(0.0, 0.25, 1.0, 0.0, 1.0, 0.0), refine_noise(0.0, 0.25, 1.0, 0.0, 0.0, 1.0)
    assert w[0] == pytest.approx(0.5) and w[1] == pytest.approx(math.sqrt(0.75))
    tiny = refine_noise(0.0, 0.25, 1.0, 1e-9, 1.0, 0.0)
    assert tiny == pytest.approx(0.5, rel=1e-6)


@settings(deadline=None, max_examples=50)
@given(arrays(np.float64, 4, elements=finite), st.floats(0.0, 5.0), st.floats(0.01, 2.0))
def test_refine_noise_associative(xi, gamma, step):
    pairwise = refine_noise(0, 2 * step, 4 * step, gamma,
                            refine_noise(0, step, 2 * step, gamma, xi[0], xi[1]),
                            refine_noise(2 * step, 3 * step, 4 * step, gamma, xi[2], xi[3]))
    # direct four-way sum of the weighted integrals
    sd = [math.sqrt(step) if gamma == 0 else math.sqrt(-math.expm1(-2 * gamma * step) / (2 * gamma))] * 4
    total = math.sqrt(4 * step) if gamma == 0 else math.sqrt(-math.expm1(-8 * gamma * step) / (2 * gamma))
    direct = sum(math.exp(-gamma * step * (3 - j)) * sd[j] * xi[j] for j in range(4)) / total
    assert pairwise == pytest.approx(direct, abs=1e-12)


def test_refine_noise_rejects_bad_order():
    with pytest.raises(ValueError):
        refine_noise(0.0, 1.0, 0.5, 1.0, 0.0, 0.0)


def test_obabo_strong_accuracy_order_one():
    target = diagonal_gaussian([1.0])
    gamma, T, n = 1.0, 1.0, 4000
    hs = [0.2, 0.1, 0.05, 0.025, 0.0125]
    rng = RngStream(5)
    x0, v0 = rng.standard_normal((n, 1)), rng.standard_normal((n, 1))
    # every O half-step of the finest chain gets its own standardized increment
    noise = {hs[-1]: rng.standard_normal((int(round(2 * T / hs[-1])), n, 1))}
    for h in hs[-2::-1]:
        fine, quarter = noise[h / 2], h / 4
        noise[h] = np.array([refine_noise(0, quarter, 2 * quarter, gamma, fine[2 * j], fine[2 * j + 1])
                             for j in range(fine.shape[0] // 2)])

    def endpoint(h):
        s, g, z = PhaseState(x0.copy(), v0.copy()), None, noise[h]
        for k in range(int(round(T / h))):
            s, g = obabo_step(target, s, StepParams(h, gamma), NoisePair(z[2 * k], z[2 * k + 1]), g)
        return s

    ends = {h: endpoint(h) for h in hs}
    errs = [math.sqrt(np.mean((ends[h].x - ends[h / 2].x) ** 2 + (ends[h].v - ends[h / 2].v) ** 2))
            for h in hs[:-1]]
    slope = np.polyfit(np.log(hs[:-1]), np.log(errs), 1)[0]
    assert 0.8 <= slope <= 1.3
