"""Advection-diffusion propagation and the interferer concentration model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConcentrationProfile:
    """Concentration of an impulsive release of ``N_m`` molecules in a flow channel."""

    N_m: float
    A_ch: float
    D: float
    u: float

    def __post_init__(self):
        if self.N_m < 0 or self.A_ch <= 0 or self.D <= 0 or self.u < 0:
            raise ValueError("invalid profile parameters")


def concentration_at(profile: ConcentrationProfile, x, t):
    """Concentration (molecules/m^3) at position ``x`` (m) and time ``t`` (s)."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("concentration is only defined for t > 0")
    x = np.asarray(x, dtype=float)
    spread = 4.0 * profile.D * t
    value = profile.N_m / (profile.A_ch * np.sqrt(math.pi * spread)) * np.exp(
        -((x - profile.u * t) ** 2) / spread
    )
    return value[()] if value.ndim == 0 else value


def peak_concentration(N_m: float, A_ch: float, D: float, t_D: float) -> float:
    if A_ch <= 0 or D <= 0 or t_D <= 0:
        raise ValueError("A_ch, D and t_D must be positive")
    return N_m / (A_ch * math.sqrt(4.0 * math.pi * D * t_D))


@dataclass(frozen=True)
class InterfererDistribution:
    """Log-normal interferer concentration parameterized by its own mean and std.

    ``log_mean`` and ``log_std`` are the mean and standard deviation of
    ``ln c_i``; they are chosen so that ``c_i`` itself has mean ``mean`` and
    variance ``std**2``.
    """

    mean: float
    std: float

    def __post_init__(self):
        if not self.mean >= 0 or not self.std >= 0:
            raise ValueError("interferer mean and std must be non-negative")
        if self.mean == 0 and self.std > 0:
            raise ValueError("zero-mean interferer must have zero spread")

    @property
    def log_mean(self) -> float:
        m, s = self.mean, self.std
        return math.log(m**2 / math.sqrt(m**2 + s**2))

    @property
    def log_std(self) -> float:
        return math.sqrt(math.log1p((self.std / self.mean) ** 2))

    @property
    def degenerate(self) -> bool:
        return self.std == 0 or self.mean == 0


def sample_interferer(dist: InterfererDistribution, rng: np.random.Generator, size=None):
    """Draw interferer concentration(s); the point mass case returns ``dist.mean``."""
    if dist.degenerate:
        if size is None:
            return float(dist.mean)
        return np.full(size, float(dist.mean))
    draw = rng.lognormal(dist.log_mean, dist.log_std, size=size)
    return float(draw) if size is None else draw
