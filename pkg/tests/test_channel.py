import math

import numpy as np
import pytest
from scipy import integrate, stats

from fddmc.channel import (
    ConcentrationProfile,
    InterfererDistribution,
    concentration_at,
    peak_concentration,
    sample_interferer,
)

# Independent 40-digit evaluation of the peak concentrations at defaults.
C_M1 = 6.005400865879977e17
C_M0 = 1.2010801731759954e17


@pytest.fixture
def profile(derived):
    return ConcentrationProfile(5000, derived.A_ch, derived.D, 1e-5)


def test_zero_molecules():
    p = ConcentrationProfile(0, 5e-11, 2e-11, 1e-5)
    assert np.all(concentration_at(p, np.linspace(0, 1e-3, 5), 10.0) == 0)


def test_peak_location(profile):
    t = 37.0
    expected = profile.N_m / (profile.A_ch * math.sqrt(4 * math.pi * profile.D * t))
    assert concentration_at(profile, profile.u * t, t) == pytest.approx(expected, rel=1e-15)


def test_defaults_reference(profile, derived):
    assert concentration_at(profile, 1e-3, 100.0) == pytest.approx(C_M1, rel=1e-12)
    assert peak_concentration(1000, derived.A_ch, derived.D, 100.0) == pytest.approx(C_M0, rel=1e-12)
    assert derived.c_m1 == pytest.approx(C_M1, rel=1e-12)


def test_peak_linear_and_consistent(profile, derived):
    a = peak_concentration(1000, derived.A_ch, derived.D, 100.0)
    assert peak_concentration(2000, derived.A_ch, derived.D, 100.0) == 2 * a
    assert peak_concentration(5000, derived.A_ch, derived.D, 100.0) == pytest.approx(
        concentration_at(profile, profile.u * 100.0, 100.0), rel=1e-15
    )


def test_nonpositive_time_rejected(profile):
    with pytest.raises(ValueError):
        concentration_at(profile, 0.0, 0.0)


@pytest.mark.parametrize("t", [0.5, 10.0, 100.0])
def test_mass_conservation(profile, t):
    width = 10 * math.sqrt(4 * profile.D * t)
    centre = profile.u * t
    mass, _ = integrate.quad(
        lambda x: concentration_at(profile, x, t), centre - width, centre + width, points=[centre]
    )
    assert mass * profile.A_ch == pytest.approx(profile.N_m, rel=1e-3)


def test_profile_symmetry(profile):
    t = 50.0
    dx = np.linspace(0, 3e-5, 7)
    left = concentration_at(profile, profile.u * t - dx, t)
    right = concentration_at(profile, profile.u * t + dx, t)
    np.testing.assert_allclose(left, right, rtol=1e-14)


def test_degenerate_interferer(rng):
    dist = InterfererDistribution(4.2e17, 0.0)
    assert sample_interferer(dist, rng) == 4.2e17
    assert np.all(sample_interferer(dist, rng, size=3) == 4.2e17)


def test_interferer_moments(rng):
    dist = InterfererDistribution(4.2e17, 4.2e16)
    draws = sample_interferer(dist, rng, size=1_000_000)
    assert np.all(draws > 0)
    assert draws.mean() == pytest.approx(4.2e17, rel=0.01)
    assert draws.var() == pytest.approx(4.2e16**2, rel=0.05)
    assert abs(stats.skew(np.log(draws))) < 0.05


def test_interferer_log_parameters():
    dist = InterfererDistribution(3.0, 1.5)
    m = math.exp(dist.log_mean + dist.log_std**2 / 2)
    v = (math.exp(dist.log_std**2) - 1) * math.exp(2 * dist.log_mean + dist.log_std**2)
    assert m == pytest.approx(3.0, rel=1e-14)
    assert v == pytest.approx(2.25, rel=1e-13)
