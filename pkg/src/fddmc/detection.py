"""Time-domain (TDD) and frequency-domain (FDD) detectors.

Both detectors threshold a scalar statistic with the maximum-likelihood
boundary between two Gaussians. The receiver builds its thresholds
without knowledge of the interferer; the error probabilities use the
statistics that actually hold under interference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import erfc

from .channel import InterfererDistribution
from .estimation import estimator_variances
from .kinetics import bound_probability
from .params import derive_all

EQUAL_VARIANCE_RTOL = 1e-12


@dataclass(frozen=True)
class SignalStats:
    """Mean and variance of a detector statistic for one transmitted bit."""

    bit: int
    mean: float
    var: float

    def __post_init__(self):
        if not self.var > 0:
            raise ValueError("variance must be positive")

    @property
    def std(self) -> float:
        return math.sqrt(self.var)


@dataclass(frozen=True)
class Threshold:
    """Decision boundary; ``mode`` is ``general``, ``equal_variance`` or ``exterior``.

    ``exterior`` marks the rare case where the two densities cross only
    outside ``(mu0, mu1)``; the crossing nearest the midpoint is used.
    """

    value: float
    mode: str


def two_gaussian_threshold(mu0: float, var0: float, mu1: float, var1: float) -> Threshold:
    """ML boundary between N(mu0, var0) and N(mu1, var1), with ``mu1 >= mu0``.

    The boundary solves ``a x^2 + b x + c = 0`` for ``x = gamma - mu0``.
    The root that stays finite as the variances merge is computed as
    ``c / q`` (no cancellation); it is the closed-form root whose square
    root term carries a plus sign.
    """
    if not mu1 >= mu0:
        raise ValueError("need mu1 > mu0")
    if not (var0 > 0 and var1 > 0):
        raise ValueError("variances must be positive")
    d = mu1 - mu0
    if d == 0:
        # Identical symbols: any boundary is as good as another.
        return Threshold(mu0, "equal_variance")
    if abs(var1 - var0) < EQUAL_VARIANCE_RTOL * max(var0, var1):
        return Threshold(mu0 + 0.5 * d, "equal_variance")
    s0, s1 = math.sqrt(var0), math.sqrt(var1)
    log_ratio = math.log(s1 / s0)
    disc = d * d + 2.0 * (var1 - var0) * log_ratio
    if disc < 0:
        raise ArithmeticError(f"negative discriminant {disc!r}")
    # a = var0 - var1, b = -2 d var0, c = var0 (d^2 + 2 var1 ln(s1/s0))
    c = var0 * (d * d + 2.0 * var1 * log_ratio)
    q = d * var0 + s0 * s1 * math.sqrt(disc)
    x = c / q
    gamma = mu0 + x
    mode = "general" if mu0 < gamma < mu1 else "exterior"
    return Threshold(gamma, mode)


def _bep(threshold: float, mu0, var0, mu1, var1) -> float:
    return 0.25 * erfc((threshold - mu0) / math.sqrt(2.0 * var0)) + 0.25 * erfc(
        (mu1 - threshold) / math.sqrt(2.0 * var1)
    )


def _decide(statistic, threshold: Threshold):
    out = np.asarray(statistic) > threshold.value
    return int(out) if out.ndim == 0 else out.astype(int)


# Time domain


def _interferer(cfg, derived) -> InterfererDistribution:
    return InterfererDistribution(derived.mu_ci, derived.sigma_ci)


def _occupancy_moments(c_m, cfg, derived, z_max: float = 8.0):
    """``E[p]``, ``E[p(1-p)]`` and ``E[p^2]`` over the interferer density."""
    dist = _interferer(cfg, derived)

    def p_of(c_i):
        return bound_probability(c_m, c_i, derived.K_Dm, derived.K_Di)

    if dist.degenerate:
        p = p_of(dist.mean)
        return p, p * (1 - p), p * p

    lm, ls = dist.log_mean, dist.log_std

    def integrand(z):
        p = p_of(math.exp(lm + ls * z))
        w = math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
        return w * np.array([p, p * (1 - p), p * p])

    values, err = integrate.quad_vec(integrand, -z_max, z_max, epsabs=1e-13, epsrel=1e-10)
    if not np.all(np.isfinite(values)) or np.any(err > 1e-8 * np.maximum(np.abs(values), 1e-300)):
        raise ArithmeticError(
            f"interferer quadrature did not converge: values={values}, error={err}"
        )
    mass = math.erf(z_max / math.sqrt(2.0))
    return tuple(values / mass)


def tdd_signal_stats(bit: int, cfg, derived=None, interference: str = "marginal") -> SignalStats:
    """Statistics of one output-current sample for bit ``bit``.

    ``interference="marginal"`` averages over the log-normal interferer
    (what the channel delivers); ``"none"`` uses the single-ligand
    occupancy the receiver assumes when it sets its threshold.
    """
    derived = derive_all(cfg) if derived is None else derived
    c_m = derived.c_m(bit)
    zeta, N_r = derived.zeta, cfg.N_r
    if interference == "none":
        p = bound_probability(c_m, 0.0, derived.K_Dm, derived.K_Di)
        mean = zeta * N_r * p
        var = zeta**2 * N_r * p * (1 - p) + derived.sigma2_f
        return SignalStats(bit, float(mean), float(var))
    if interference != "marginal":
        raise ValueError(f"unknown interference model {interference!r}")
    Ep, Epq, Ep2 = _occupancy_moments(c_m, cfg, derived)
    mean_n = N_r * Ep
    var_n = N_r * Epq + N_r**2 * Ep2 - mean_n**2
    return SignalStats(bit, float(zeta * mean_n), float(zeta**2 * var_n + derived.sigma2_f))


def tdd_threshold(mu0, var0, mu1, var1) -> Threshold:
    return two_gaussian_threshold(mu0, var0, mu1, var1)


def tdd_receiver_threshold(cfg, derived=None) -> Threshold:
    """Threshold built from interference-free statistics."""
    derived = derive_all(cfg) if derived is None else derived
    s0 = tdd_signal_stats(0, cfg, derived, interference="none")
    s1 = tdd_signal_stats(1, cfg, derived, interference="none")
    return tdd_threshold(s0.mean, s0.var, s1.mean, s1.var)


def tdd_decide(sample, threshold: Threshold):
    """1 iff the sample strictly exceeds the threshold."""
    return _decide(sample, threshold)


def tdd_bep(cfg, derived=None) -> float:
    derived = derive_all(cfg) if derived is None else derived
    if cfg.N_m0 == cfg.N_m1:
        return 0.5
    th = tdd_receiver_threshold(cfg, derived)
    s0 = tdd_signal_stats(0, cfg, derived)
    s1 = tdd_signal_stats(1, cfg, derived)
    return _bep(th.value, s0.mean, s0.var, s1.mean, s1.var)


# Frequency domain


def fdd_threshold(cfg, derived=None) -> Threshold:
    """Threshold on the concentration estimate from single-ligand variances."""
    derived = derive_all(cfg) if derived is None else derived
    v0, v1 = estimator_variances(cfg, "single_ligand", derived)
    return two_gaussian_threshold(derived.c_m0, v0, derived.c_m1, v1)


def fdd_decide(c_m_hat, threshold: Threshold):
    """1 iff the concentration estimate strictly exceeds the threshold."""
    return _decide(c_m_hat, threshold)


def fdd_bep(cfg, derived=None) -> float:
    """Asymptotic (Gaussian-estimator) FDD error probability."""
    derived = derive_all(cfg) if derived is None else derived
    if cfg.N_m0 == cfg.N_m1:
        return 0.5
    th = fdd_threshold(cfg, derived)
    v0, v1 = estimator_variances(cfg, "full", derived)
    return _bep(th.value, derived.c_m0, v0, derived.c_m1, v1)
