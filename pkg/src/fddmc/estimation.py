"""Whittle-likelihood estimation of ``(c_m, c_i)`` from a periodogram, and the
Fisher information that bounds it."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import spectral
from .spectral import PsdModel


class NonIdentifiableError(ValueError):
    """The Fisher matrix is numerically singular (ligands indistinguishable)."""


@dataclass
class WhittleObjective:
    """Negative Whittle log-likelihood ``sum(Y/S + ln S)`` over a frequency grid."""

    Y: np.ndarray
    freqs: np.ndarray
    model: PsdModel

    def __post_init__(self):
        self.Y = np.asarray(self.Y, dtype=float)
        self.freqs = np.asarray(self.freqs, dtype=float)
        if self.Y.shape != self.freqs.shape or self.Y.ndim != 1 or self.Y.size == 0:
            raise ValueError("periodogram and frequency grid must be equal-length 1-D arrays")
        if np.any(self.freqs <= 0):
            raise ValueError("frequencies must be positive")

    @property
    def size(self) -> int:
        return self.Y.size

    def psd(self, c_m, c_i):
        S = spectral.total_psd(self.freqs, (c_m, c_i), self.model)
        if not np.all(S > 0) or not np.all(np.isfinite(S)):
            raise FloatingPointError("model PSD is not strictly positive and finite")
        return S

    def value(self, lam) -> float:
        c_m, c_i = lam
        if c_m < 0 or c_i < 0:
            raise ValueError("concentrations must be non-negative")
        S = self.psd(c_m, c_i)
        return float(np.sum(self.Y / S + np.log(S)))

    def values_on(self, c_m, c_i) -> np.ndarray:
        """Objective for arrays of candidate pairs (vectorized over candidates)."""
        c_m = np.asarray(c_m, dtype=float)[..., None]
        c_i = np.asarray(c_i, dtype=float)[..., None]
        S = spectral.total_psd(self.freqs, (c_m, c_i), self.model)
        return np.sum(self.Y / S + np.log(S), axis=-1)

    def gradient(self, lam) -> np.ndarray:
        """Score in concentration coordinates."""
        c_m, c_i = lam
        S = self.psd(c_m, c_i)
        dS = spectral.binding_noise_gradient(self.freqs, c_m, c_i, self.model)
        w = (S - self.Y) / S**2
        return np.array([np.sum(w * d) for d in dS])

    def scoring_matrix(self, lam) -> np.ndarray:
        """Expected Hessian ``sum (dS_i dS_j) / S^2`` (Fisher scoring)."""
        c_m, c_i = lam
        S = self.psd(c_m, c_i)
        dS = spectral.binding_noise_gradient(self.freqs, c_m, c_i, self.model)
        J = np.stack([d / S for d in dS])
        return J @ J.T


def whittle_nll(Y, freqs, lam, model: PsdModel) -> float:
    return WhittleObjective(Y, freqs, model).value(lam)


def coarse_grid_init(Y, freqs, model: PsdModel, points: int = 12, span=(1e-2, 1e2)):
    """Best pair on a log grid of ``points x points`` scaled by the K_D values."""
    obj = WhittleObjective(Y, freqs, model)
    scale = np.geomspace(span[0], span[1], points) if points > 1 else np.array([span[0]])
    cm_grid = scale * model.kinetics.K_Dm
    ci_grid = scale * model.kinetics.K_Di
    CM, CI = np.meshgrid(cm_grid, ci_grid, indexing="ij")
    vals = obj.values_on(CM.ravel(), CI.ravel())
    best = int(np.argmin(vals))
    return np.array([CM.ravel()[best], CI.ravel()[best]])


@dataclass
class Estimate:
    lam: np.ndarray
    converged: bool
    iterations: int
    objective: float
    grad_norm: float
    coords: str = "log"
    fallback_steps: int = 0
    std_errors: np.ndarray | None = field(default=None)

    @property
    def c_m(self) -> float:
        return float(self.lam[0])

    @property
    def c_i(self) -> float:
        return float(self.lam[1])

    def to_record(self) -> dict:
        rec = {
            "c_m": self.c_m,
            "c_i": self.c_i,
            "converged": int(self.converged),
            "iterations": self.iterations,
            "objective": self.objective,
            "grad_norm": self.grad_norm,
            "coords": self.coords,
            "fallback_steps": self.fallback_steps,
        }
        if self.std_errors is not None:
            rec["se_c_m"], rec["se_c_i"] = (float(s) for s in self.std_errors)
        return rec


def mle_estimate(
    Y,
    freqs,
    lam0,
    model: PsdModel,
    coords: str = "log",
    gtol: float = 1e-8,
    max_iter: int = 50,
    with_errors: bool = False,
) -> Estimate:
    """Minimize the Whittle objective by damped Newton iterations.

    In ``log`` coordinates the unknowns are ``ln c`` which keeps them
    positive; ``raw`` coordinates use ``c / K_D`` with projection onto a
    small positive floor. The Hessian is a central difference of the
    analytic score; when it is not positive definite the step uses the
    Fisher-scoring matrix instead. Convergence means the score's max-norm
    per periodogram bin is below ``gtol``.
    """
    obj = WhittleObjective(Y, freqs, model)
    lam0 = np.asarray(lam0, dtype=float)
    if lam0.shape != (2,) or np.any(lam0 <= 0):
        raise ValueError("initial guess must be two positive concentrations")
    K = np.array([model.kinetics.K_Dm, model.kinetics.K_Di])

    if coords == "log":
        lo, hi = np.log(K * 1e-9), np.log(K * 1e9)

        def to_lam(z):
            return np.exp(z)

        def chain(z):
            return np.exp(z)

        z = np.log(lam0)
    elif coords == "raw":
        lo, hi = np.full(2, 1e-9), np.full(2, 1e9)

        def to_lam(z):
            return z * K

        def chain(z):
            return K

        z = lam0 / K
    else:
        raise ValueError(f"unknown coordinates {coords!r}")

    def f(z):
        return obj.value(to_lam(z))

    def grad(z):
        return obj.gradient(to_lam(z)) * chain(z)

    scale = obj.size
    fallbacks = 0
    converged = False
    value = f(z)
    g = grad(z)
    it = 0
    for it in range(1, max_iter + 1):
        if np.max(np.abs(g)) / scale < gtol:
            converged = True
            it -= 1
            break
        H = _fd_hessian(grad, z, lo, hi)
        try:
            np.linalg.cholesky(H)
            step = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            fallbacks += 1
            J = chain(z)
            F = obj.scoring_matrix(to_lam(z)) * np.outer(J, J)
            F += 1e-12 * np.trace(F) * np.eye(2)
            step = -np.linalg.solve(F, g)
        if coords == "log":
            # At most a factor e^2 per iteration.
            step *= min(1.0, 2.0 / max(np.max(np.abs(step)), 1e-300))
        t = 1.0
        slope = float(g @ step)
        while True:
            z_new = np.clip(z + t * step, lo, hi)
            v_new = f(z_new)
            if v_new <= value + 1e-4 * t * min(slope, 0.0) or t < 1e-10:
                break
            t *= 0.5
        if v_new > value:
            break
        moved = np.max(np.abs(z_new - z))
        z, value = z_new, v_new
        g = grad(z)
        if moved < 1e-15 * max(1.0, np.max(np.abs(z))):
            converged = bool(np.max(np.abs(g)) / scale < gtol)
            break
    else:
        converged = bool(np.max(np.abs(g)) / scale < gtol)

    lam = to_lam(z)
    est = Estimate(
        lam=lam,
        converged=converged,
        iterations=it,
        objective=float(value),
        grad_norm=float(np.max(np.abs(g)) / scale),
        coords=coords,
        fallback_steps=fallbacks,
    )
    if with_errors:
        F = obj.scoring_matrix(lam)
        try:
            est.std_errors = np.sqrt(np.diag(np.linalg.inv(F)))
        except np.linalg.LinAlgError:
            est.std_errors = np.full(2, np.inf)
    return est


def _fd_hessian(grad, z, lo, hi, rel: float = 1e-5) -> np.ndarray:
    n = z.size
    H = np.empty((n, n))
    for j in range(n):
        h = rel * max(1.0, abs(z[j]))
        e = np.zeros(n)
        e[j] = h
        H[:, j] = (grad(z + e) - grad(z - e)) / (2 * h)
    return 0.5 * (H + H.T)


@dataclass(frozen=True)
class FisherMatrix:
    matrix: np.ndarray
    lam: tuple
    N: int
    dt: float
    mode: str

    @property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.matrix)

    def variance(self, index: int = 0) -> float:
        return float(self.inverse[index, index])


def _psd_derivatives(freqs, lam, model, mode, derivative, rel_step=1e-6):
    if mode == "single_ligand":
        (c_m,) = lam
        S = spectral.single_ligand_psd(freqs, c_m, model)
        if derivative == "analytic":
            return S, (spectral.single_ligand_gradient(freqs, c_m, model),)
        h = rel_step * c_m if c_m > 0 else rel_step * model.kinetics.K_Dm
        d = (spectral.single_ligand_psd(freqs, c_m + h, model)
             - spectral.single_ligand_psd(freqs, c_m - h, model)) / (2 * h)
        return S, (d,)
    c_m, c_i = lam
    S = spectral.total_psd(freqs, (c_m, c_i), model)
    if derivative == "analytic":
        return S, spectral.binding_noise_gradient(freqs, c_m, c_i, model)
    hm = rel_step * c_m if c_m > 0 else rel_step * model.kinetics.K_Dm
    hi = rel_step * c_i if c_i > 0 else rel_step * model.kinetics.K_Di
    dm = (spectral.binding_noise_psd(freqs, c_m + hm, c_i, model)
          - spectral.binding_noise_psd(freqs, c_m - hm, c_i, model)) / (2 * hm)
    di = (spectral.binding_noise_psd(freqs, c_m, c_i + hi, model)
          - spectral.binding_noise_psd(freqs, c_m, c_i - hi, model)) / (2 * hi)
    return S, (dm, di)


def fisher_matrix(
    lam,
    N: int,
    dt: float,
    model: PsdModel,
    mode: str = "full",
    derivative: str = "numeric",
    epsrel: float = 1e-6,
) -> FisherMatrix:
    """Whittle Fisher information in its integral (large-N) form.

    ``mode="full"`` treats ``lam = (c_m, c_i)`` with the two-ligand PSD;
    ``mode="single_ligand"`` treats ``lam = (c_m,)`` with the
    interference-free PSD and returns a 1x1 matrix. Derivatives are
    central differences (relative step 1e-6) unless
    ``derivative="analytic"``.
    """
    if mode not in ("full", "single_ligand"):
        raise ValueError(f"unknown mode {mode!r}")
    if derivative not in ("analytic", "numeric"):
        raise ValueError(f"unknown derivative scheme {derivative!r}")
    lam = tuple(float(v) for v in lam)
    if any(v < 0 for v in lam) or lam[0] <= 0:
        raise ValueError("concentrations must be positive")
    f_max = 1.0 / (2.0 * dt)
    n = 1 if mode == "single_ligand" else 2
    iu = np.triu_indices(n)

    def integrand(f):
        f = max(f, 1e-300)
        S, dS = _psd_derivatives(np.array([f]), lam, model, mode, derivative)
        J = np.array([d[0] for d in dS]) / S[0]
        return np.outer(J, J)[iu]

    # Split at the relaxation corners so the adaptive rule sees the structure.
    from .kinetics import characteristic_frequencies

    c_i = lam[1] if n == 2 else 0.0
    corners = [fc for fc in characteristic_frequencies(lam[0], c_i, model.kinetics) if fc < f_max]
    edges = [0.0] + sorted(corners) + [f_max]
    total = np.zeros(len(iu[0]))
    for a, b in zip(edges[:-1], edges[1:]):
        part, _ = integrate.quad_vec(integrand, a, b, epsrel=epsrel, epsabs=0.0, limit=500)
        total += part
    F = np.zeros((n, n))
    F[iu] = total
    F = F + np.triu(F, 1).T
    F *= N * dt / 2.0
    if n == 2:
        det = F[0, 0] * F[1, 1] - F[0, 1] ** 2
        if det < 1e-12 * F[0, 0] * F[1, 1]:
            raise NonIdentifiableError(
                f"Fisher matrix singular at c_m={lam[0]:.3e}, c_i={lam[1]:.3e} "
                f"(det/F11F22 = {det / (F[0, 0] * F[1, 1]):.2e})"
            )
    return FisherMatrix(matrix=F, lam=lam, N=N, dt=dt, mode=mode)


def estimator_variances(cfg, mode: str = "full", derived=None):
    """Variances of the ``c_m`` estimate for bit 0 and bit 1.

    ``full``: two-ligand model at ``(c_m|s, mu_ci)``, with the interferer
    as a nuisance parameter. ``single_ligand``: interference-free model at
    ``c_m|s`` (what a receiver unaware of the interferer assumes).
    """
    from .params import derive_all

    derived = derive_all(cfg) if derived is None else derived
    model = PsdModel.from_config(cfg, derived)
    out = []
    for c_m in (derived.c_m0, derived.c_m1):
        if mode == "full":
            F = fisher_matrix((c_m, derived.mu_ci), cfg.N, cfg.dt, model, mode="full")
        else:
            F = fisher_matrix((c_m,), cfg.N, cfg.dt, model, mode="single_ligand")
        out.append(F.variance(0))
    return tuple(out)


def fisher_trapezoid(lam, N, dt, model, mode="full", points=200001):
    """Dense trapezoid evaluation of the Fisher integral (cross-check route)."""
    f = np.linspace(0.0, 1.0 / (2.0 * dt), points)[1:]
    S, dS = _psd_derivatives(f, tuple(lam), model, mode, "numeric")
    J = np.stack([d / S for d in dS])
    integrand = J[:, None, :] * J[None, :, :]
    # The integrand vanishes at f = 0 for any beta > 0.
    f = np.concatenate([[0.0], f])
    integrand = np.concatenate([np.zeros(integrand.shape[:2] + (1,)), integrand], axis=-1)
    return (N * dt / 2.0) * integrate.trapezoid(integrand, f, axis=-1)
