import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from fddmc import kinetics as kin
from fddmc._core import available_backends
from fddmc.kinetics import LigandKinetics

# Independent 40-digit evaluation at defaults, bit 1, c_i = mu_ci.
P_EQ = (0.7947493209077784, 0.13908113115886122, 0.0661695479333604)
P_B = 0.9338304520666396
RATE_M, RATE_I = 26.021603463519909, 24.815122424463936
OMEGA_EIGS = (-45.52532945302591, -5.311396434957931)
NB_STATS = (112.05965424799675, 7.414936663158614)
FC_SINGLE = 4.141466818396378

rates = st.floats(1e-2, 1e3)
concs = st.floats(0, 1e19)


def generator(c_m, c_i, k: LigandKinetics):
    """Per-receptor generator over states (RM, RI, R)."""
    bm, bi = k.k_on_m * c_m, k.k_on_i * c_i
    return np.array(
        [[-k.k_off_m, 0, k.k_off_m], [0, -k.k_off_i, k.k_off_i], [bm, bi, -bm - bi]]
    )


def test_bound_probability_examples(kinetics, derived):
    assert kin.bound_probability(0, 0, 5e16, 2e17) == 0
    assert kin.bound_probability(5e16, 0, 5e16, 2e17) == 0.5
    p = kin.bound_probability(derived.c_m1, derived.mu_ci, derived.K_Dm, derived.K_Di)
    assert p == pytest.approx(P_B, rel=1e-12)
    assert derived.c_m1 / derived.K_Dm == pytest.approx(12.0, abs=0.05)
    assert derived.mu_ci / derived.K_Di == pytest.approx(2.1, abs=0.01)


def test_equilibrium_examples(kinetics, derived):
    assert kin.equilibrium_probabilities(0, 0, kinetics) == (0, 0, 1)
    assert kin.equilibrium_probabilities(kinetics.K_Dm, 0, kinetics) == (0.5, 0, 0.5)
    got = kin.equilibrium_probabilities(derived.c_m1, derived.mu_ci, kinetics)
    np.testing.assert_allclose(got, P_EQ, rtol=1e-12)
    assert got[0] + got[1] == pytest.approx(P_B, rel=1e-14)


@given(c_m=concs, c_i=concs, a=rates, b=rates, c=rates, d=rates)
def test_equilibrium_conservation_and_balance(c_m, c_i, a, b, c, d):
    k = LigandKinetics(a * 1e-18, b * 1e-18, c, d)
    p_rm, p_ri, p_r = kin.equilibrium_probabilities(c_m, c_i, k)
    assert p_rm + p_ri + p_r == pytest.approx(1.0, abs=4.5e-16)
    assert math.isclose(k.k_on_m * c_m * p_r, k.k_off_m * p_rm, rel_tol=1e-12, abs_tol=1e-300)
    assert math.isclose(k.k_on_i * c_i * p_r, k.k_off_i * p_ri, rel_tol=1e-12, abs_tol=1e-300)
    assert 0 <= kin.bound_probability(c_m, c_i, k.K_Dm, k.K_Di) <= 1


def test_omega_examples(kinetics, derived):
    np.testing.assert_array_equal(kin.omega_matrix(0, 0, kinetics), np.diag([-2.0, -8.0]))
    om = kin.omega_matrix(derived.c_m1, derived.mu_ci, kinetics)
    assert np.trace(om) == pytest.approx(-(RATE_M + RATE_I), rel=1e-12)
    np.testing.assert_allclose(sorted(np.linalg.eigvals(om)), OMEGA_EIGS, rtol=1e-12)


def test_omega_is_linearized_generator(kinetics):
    # Reduced dynamics of [p_RM, p_RI] from the full generator with p_R = 1 - p_RM - p_RI.
    c_m, c_i = 3e17, 1e17
    Q = generator(c_m, c_i, kinetics).T  # d/dt p = Q p
    reduced = Q[:2, :2] - Q[:2, 2:3]
    np.testing.assert_allclose(kin.omega_matrix(c_m, c_i, kinetics), reduced, rtol=1e-15)


def test_characteristic_times_examples(kinetics, derived):
    tau_m = 1 / (derived.c_m1 * kinetics.k_on_m + kinetics.k_off_m)
    t1, t2 = kin.characteristic_times(derived.c_m1, 0.0, kinetics)
    assert sorted([t1, t2]) == pytest.approx(sorted([tau_m, 1 / kinetics.k_off_i]), rel=1e-14)
    f1, f2 = kin.characteristic_frequencies(derived.c_m1, 0.0, kinetics)
    assert f2 == pytest.approx(FC_SINGLE, rel=1e-12)
    assert t1 >= t2


@settings(max_examples=100)
@given(c_m=concs, c_i=concs, a=rates, b=rates, c=rates, d=rates)
def test_characteristic_times_match_eigenvalues(c_m, c_i, a, b, c, d):
    k = LigandKinetics(a * 1e-18, b * 1e-18, c, d)
    mpmath.mp.dps = 50
    # Build Omega at high precision from the inputs; a float Omega loses
    # its determinant to cancellation when binding dominates.
    bm = mpmath.mpf(k.k_on_m) * mpmath.mpf(c_m)
    bi = mpmath.mpf(k.k_on_i) * mpmath.mpf(c_i)
    om = mpmath.matrix([[-bm - k.k_off_m, -bm], [-bi, -bi - k.k_off_i]])
    eigs, _ = mpmath.eig(om)
    oracle = sorted(-1 / float(mpmath.re(e)) for e in eigs)
    got = sorted(kin.characteristic_times(c_m, c_i, k))
    assert got == pytest.approx(oracle, rel=1e-12)
    assert max(float(mpmath.re(e)) for e in eigs) < 0


def test_covariance_matrix_properties():
    g = kin.covariance_matrix(0.3, 0.5)
    assert g[0, 1] == g[1, 0]
    assert np.all(np.diag(g) >= 0)
    assert np.linalg.det(g) >= 0
    model = kin.OccupancyModel.build(1e17, 1e17, LigandKinetics(4e-17, 4e-17, 2, 8), N_e=3)
    np.testing.assert_array_equal(model.reduction, [[1, 0], [0, 1], [-1, -1]])
    assert model.p_rm + model.p_ri + model.p_r == pytest.approx(1, abs=4.5e-16)


def test_bound_count_stats():
    assert kin.bound_count_stats(0, 120) == (0, 0)
    assert kin.bound_count_stats(0.5, 120) == (60, 30)
    mean, var = kin.bound_count_stats(P_B, 120)
    assert (mean, var) == pytest.approx(NB_STATS, rel=1e-12)
    with pytest.raises(ValueError):
        kin.bound_count_stats(1.5, 120)


def test_empty_channel_gives_zero_series(kinetics, rng):
    s = kin.simulate_bound_counts(120, 0.0, 0.0, kinetics, 1.0, 200, 0.005, rng)
    assert np.all(s.counts == 0)


def test_series_shape_and_csv(kinetics, rng):
    s = kin.simulate_bound_counts(10, 1e17, 1e17, kinetics, 0.5, 8, 0.01, rng)
    assert s.counts.shape == (8,)
    assert s.times[0] == 0.5 and s.times[-1] == pytest.approx(0.57)
    lines = s.to_text().splitlines()
    assert lines[0] == "time,count" and len(lines) == 9


@pytest.mark.parametrize("bad", [dict(N=0), dict(dt=0.0), dict(burn_in=-1.0)])
def test_simulation_argument_errors(kinetics, rng, bad):
    args = dict(burn_in=1.0, N=8, dt=0.01)
    args.update(bad)
    with pytest.raises(ValueError):
        kin.simulate_bound_counts(10, 1e17, 1e17, kinetics, rng=rng, **args)


@pytest.mark.skipif("cython" not in available_backends(), reason="extension not built")
def test_backends_bit_identical(kinetics, derived):
    runs = [
        kin.simulate_bound_counts(
            120, derived.c_m1, derived.mu_ci, kinetics, None, 700, 0.005,
            np.random.default_rng(11), backend=b,
        ).counts
        for b in ("cython", "python")
    ]
    np.testing.assert_array_equal(*runs)


def test_unknown_backend(kinetics, rng):
    with pytest.raises(ValueError):
        kin.simulate_bound_counts(1, 1e17, 0, kinetics, 0.0, 8, 0.1, rng, backend="fortran")


def test_long_run_mean_and_variance(kinetics, derived):
    N_r, c_m, c_i = 120, derived.c_m1, derived.mu_ci
    s = kin.simulate_bound_counts(
        N_r, c_m, c_i, kinetics, None, 1_000_000, 0.005, np.random.default_rng(3)
    ).counts
    p_b = kin.bound_probability(c_m, c_i, derived.K_Dm, derived.K_Di)
    mu, var = kin.bound_count_stats(p_b, N_r)
    tau = kin.characteristic_times(c_m, c_i, kinetics)[0]
    n_eff = len(s) * 0.005 / (2 * tau)
    assert abs(s.mean() - mu) < 3 * math.sqrt(var / n_eff)
    assert s.var() == pytest.approx(var, rel=0.05)


def dtmc_counts(N_r, c_m, c_i, k, N, dt, rng):
    """Exact sampled-chain oracle: multinomial moves with P = expm(Q dt)."""
    P = expm(generator(c_m, c_i, k) * dt)
    p_eq = kin.equilibrium_probabilities(c_m, c_i, k)
    state = rng.multinomial(N_r, p_eq)
    out = np.empty(N, dtype=int)
    for n in range(N):
        out[n] = state[0] + state[1]
        state = sum(rng.multinomial(state[j], P[j]) for j in range(3))
    return out


def exact_autocovariance(N_r, c_m, c_i, k, lags, dt):
    pi = np.array(kin.equilibrium_probabilities(c_m, c_i, k))
    b = np.array([1.0, 1.0, 0.0])
    Q = generator(c_m, c_i, k)
    pb = pi @ b
    return np.array([N_r * ((pi * b) @ expm(Q * dt * lag) @ b - pb**2) for lag in lags])


def autocovariance(x, lags):
    x = x - x.mean()
    return np.array([np.mean(x[: len(x) - l] * x[l:]) for l in lags])


def test_ssa_matches_sampled_chain_oracle(kinetics):
    N_r, c_m, c_i, dt = 40, 8e16, 1.2e17, 0.02
    lags = [0, 1, 2, 5, 10]
    exact = exact_autocovariance(N_r, c_m, c_i, kinetics, lags, dt)
    ssa = kin.simulate_bound_counts(
        N_r, c_m, c_i, kinetics, None, 400_000, dt, np.random.default_rng(8)
    ).counts
    dtmc = dtmc_counts(N_r, c_m, c_i, kinetics, 100_000, dt, np.random.default_rng(9))
    mean = N_r * kin.bound_probability(c_m, c_i, kinetics.K_Dm, kinetics.K_Di)
    for series in (ssa, dtmc):
        assert series.mean() == pytest.approx(mean, rel=0.01)
        np.testing.assert_allclose(autocovariance(series, lags), exact, rtol=0.06, atol=0.03 * exact[0])


def test_single_ligand_autocorrelation_time(kinetics):
    c_m, dt = 1e17, 0.002
    tau_m = 1 / (kinetics.k_on_m * c_m + kinetics.k_off_m)
    s = kin.simulate_bound_counts(200, c_m, 0.0, kinetics, None, 1_000_000, dt, np.random.default_rng(4))
    lags = np.arange(1, 11)
    acov = autocovariance(s.counts.astype(float), lags)
    slope = np.polyfit(lags * dt, np.log(acov), 1)[0]
    assert -1 / slope == pytest.approx(tau_m, rel=0.10)
