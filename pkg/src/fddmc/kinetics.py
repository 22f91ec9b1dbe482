"""Two-ligand receptor kinetics: equilibrium occupancy, linearized fluctuation
dynamics and exact stochastic simulation of the bound-receptor count.

Each receptor is a three-state Markov chain::

    R + M <-> RM   (k_on_m * c_m, k_off_m)
    R + I <-> RI   (k_on_i * c_i, k_off_i)

Fluctuations of ``[p_RM, p_RI]`` around equilibrium obey ``d/dt dp = Omega dp``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._core import get_ssa_kernel

# Maps reduced fluctuations [dp_RM, dp_RI] to [dp_RM, dp_RI, dp_R].
REDUCTION = np.array([[1, 0], [0, 1], [-1, -1]])


@dataclass(frozen=True)
class LigandKinetics:
    k_on_m: float
    k_on_i: float
    k_off_m: float
    k_off_i: float

    def __post_init__(self):
        if min(self.k_on_m, self.k_on_i, self.k_off_m, self.k_off_i) <= 0:
            raise ValueError("rate constants must be strictly positive")

    @classmethod
    def from_config(cls, cfg) -> "LigandKinetics":
        return cls(cfg.k_on_m, cfg.k_on_i, cfg.k_off_m, cfg.k_off_i)

    @property
    def K_Dm(self) -> float:
        return self.k_off_m / self.k_on_m

    @property
    def K_Di(self) -> float:
        return self.k_off_i / self.k_on_i


def bound_probability(c_m, c_i, K_Dm, K_Di):
    """Probability that a receptor is bound by either ligand."""
    x = np.asarray(c_m, dtype=float) / K_Dm + np.asarray(c_i, dtype=float) / K_Di
    p = x / (1.0 + x)
    return p[()] if p.ndim == 0 else p


def equilibrium_probabilities(c_m, c_i, kinetics: LigandKinetics):
    """Equilibrium ``(p_RM, p_RI, p_R)``; the triple sums to one."""
    x = np.asarray(c_m, dtype=float) / kinetics.K_Dm
    y = np.asarray(c_i, dtype=float) / kinetics.K_Di
    den = 1.0 + x + y
    p_rm = x / den
    p_ri = y / den
    p_r = 1.0 / den
    if p_rm.ndim == 0:
        return float(p_rm), float(p_ri), float(p_r)
    return p_rm, p_ri, p_r


def omega_matrix(c_m, c_i, kinetics: LigandKinetics) -> np.ndarray:
    bm = kinetics.k_on_m * c_m
    bi = kinetics.k_on_i * c_i
    return np.array([[-bm - kinetics.k_off_m, -bm], [-bi, -bi - kinetics.k_off_i]])


def covariance_matrix(p_rm: float, p_ri: float) -> np.ndarray:
    """Single-receptor covariance of the indicator vector ``[1_RM, 1_RI]``."""
    return np.array([[p_rm * (1 - p_rm), -p_rm * p_ri], [-p_rm * p_ri, p_ri * (1 - p_ri)]])


@dataclass(frozen=True)
class OccupancyModel:
    c_m: float
    c_i: float
    p_rm: float
    p_ri: float
    p_r: float
    omega: np.ndarray
    gamma: np.ndarray
    charges: np.ndarray

    @classmethod
    def build(cls, c_m, c_i, kinetics: LigandKinetics, N_e: float = 1.0) -> "OccupancyModel":
        p_rm, p_ri, p_r = equilibrium_probabilities(c_m, c_i, kinetics)
        return cls(
            c_m=float(c_m),
            c_i=float(c_i),
            p_rm=p_rm,
            p_ri=p_ri,
            p_r=p_r,
            omega=omega_matrix(c_m, c_i, kinetics),
            gamma=covariance_matrix(p_rm, p_ri),
            charges=np.array([N_e, N_e, 0.0]),
        )

    @property
    def reduction(self) -> np.ndarray:
        return REDUCTION

    @property
    def p_bound(self) -> float:
        return self.p_rm + self.p_ri


def characteristic_times(c_m, c_i, kinetics: LigandKinetics):
    """Relaxation times ``(tau_c1, tau_c2)`` of Omega, sorted slow to fast.

    Uses the closed-form eigenvalues of the 2x2 system; the slow rate is
    taken as det/fast so it does not lose digits to cancellation.
    """
    rate_m = c_m * kinetics.k_on_m + kinetics.k_off_m
    rate_i = c_i * kinetics.k_on_i + kinetics.k_off_i
    coupling = 4.0 * kinetics.k_on_m * c_m * kinetics.k_on_i * c_i
    fast = 0.5 * (rate_m + rate_i + math.sqrt((rate_m - rate_i) ** 2 + coupling))
    det = (
        kinetics.k_off_m * kinetics.k_on_i * c_i
        + kinetics.k_off_i * kinetics.k_on_m * c_m
        + kinetics.k_off_m * kinetics.k_off_i
    )
    slow = det / fast
    return 1.0 / slow, 1.0 / fast


def characteristic_frequencies(c_m, c_i, kinetics: LigandKinetics):
    return tuple(1.0 / (2.0 * math.pi * tau) for tau in characteristic_times(c_m, c_i, kinetics))


def bound_count_stats(p_b: float, N_r: int):
    """Binomial mean and variance of the bound-receptor count."""
    if not 0.0 <= p_b <= 1.0:
        raise ValueError("p_b must lie in [0, 1]")
    return N_r * p_b, N_r * p_b * (1.0 - p_b)


@dataclass(frozen=True)
class BoundCountSeries:
    counts: np.ndarray
    dt: float
    burn_in: float

    def __post_init__(self):
        if self.counts.ndim != 1:
            raise ValueError("counts must be one-dimensional")

    @property
    def times(self) -> np.ndarray:
        return self.burn_in + self.dt * np.arange(len(self.counts))

    def to_text(self, delimiter: str = ",") -> str:
        lines = [f"time{delimiter}count"]
        lines += [f"{t:.17e}{delimiter}{int(n)}" for t, n in zip(self.times, self.counts)]
        return "\n".join(lines) + "\n"


def simulate_bound_counts(
    N_r: int,
    c_m: float,
    c_i: float,
    kinetics: LigandKinetics,
    burn_in: float | None,
    N: int,
    dt: float,
    rng: np.random.Generator,
    backend: str | None = None,
) -> BoundCountSeries:
    """Exact SSA of ``N_r`` independent receptors, sampled every ``dt``.

    Receptors start from a multinomial draw over the equilibrium
    probabilities; ``burn_in=None`` uses ten slowest relaxation times.
    Both kernel backends consume the same uniform stream, so the output
    does not depend on which one runs.
    """
    if N < 1:
        raise ValueError("N must be positive")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if burn_in is None:
        burn_in = 10.0 * characteristic_times(c_m, c_i, kinetics)[0]
    if burn_in < 0:
        raise ValueError("burn_in must be non-negative")

    p_rm, p_ri, p_r = equilibrium_probabilities(c_m, c_i, kinetics)
    state = np.array(rng.multinomial(N_r, [p_rm, p_ri, p_r]), dtype=np.int64)
    rates = np.array(
        [kinetics.k_on_m * c_m, kinetics.k_off_m, kinetics.k_on_i * c_i, kinetics.k_off_i],
        dtype=float,
    )
    out = np.zeros(N, dtype=np.int64)

    # At equilibrium binding and unbinding fluxes balance.
    event_rate = 2.0 * N_r * (kinetics.k_off_m * p_rm + kinetics.k_off_i * p_ri)
    horizon = burn_in + (N - 1) * dt
    batch = 2 * int(1.1 * event_rate * horizon + 10.0 * math.sqrt(event_rate * horizon + 1.0) + 64)

    kernel = get_ssa_kernel(backend)
    t, k = 0.0, 0
    while k < N:
        uniforms = 1.0 - rng.random(batch)  # (0, 1]
        t, k, _ = kernel(state, rates, t, burn_in, dt, out, k, uniforms, 0)
    return BoundCountSeries(counts=out, dt=dt, burn_in=burn_in)
