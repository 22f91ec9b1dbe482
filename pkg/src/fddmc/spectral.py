"""Noise spectra of the receiver output and the periodogram machinery around them.

All spectra are single-sided (A^2/Hz): integrating over f in (0, inf) gives
the variance.

The binding-noise PSD is the real part of ``u^T (j w I - Omega)^{-1} Gamma u``
for ``u = [1, 1]``. For the 2x2 system this reduces to a ratio of
polynomials in ``w^2`` whose coefficients are all positive::

    S_b = 4 N_r zeta^2 (1 - p_b) (n_r * Delta + w^2 * h) / (Delta^2 + w^2 * q + w^4)

with ``Delta = det(-Omega)``. Evaluating it this way avoids both complex
arithmetic and cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .kinetics import LigandKinetics


@dataclass(frozen=True)
class PsdModel:
    """Everything needed to evaluate the output-noise PSD for given ``(c_m, c_i)``."""

    kinetics: LigandKinetics
    zeta: float
    N_r: int
    S_1Hz: float
    beta: float

    @classmethod
    def from_config(cls, cfg, derived) -> "PsdModel":
        return cls(LigandKinetics.from_config(cfg), derived.zeta, cfg.N_r, cfg.S_1Hz, cfg.beta)

    @property
    def amplitude(self) -> float:
        return 4.0 * self.N_r * self.zeta**2

    def binding(self, f, c_m, c_i):
        return binding_noise_psd(f, c_m, c_i, self)

    def one_over_f(self, f):
        return one_over_f_psd(f, self.S_1Hz, self.beta)

    def total(self, f, c_m, c_i):
        return total_psd(f, (c_m, c_i), self)

    def single_ligand(self, f, c_m):
        return single_ligand_psd(f, c_m, self)


def _check_freq(f):
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ValueError("PSD is defined for f > 0 only")
    return f


def _terms(c_m, c_i, kin: LigandKinetics):
    c_m = np.asarray(c_m, dtype=float)
    c_i = np.asarray(c_i, dtype=float)
    x = c_m / kin.K_Dm
    y = c_i / kin.K_Di
    den = 1.0 + x + y
    p_m = x / den
    p_i = y / den
    b_m = kin.k_on_m * c_m
    b_i = kin.k_on_i * c_i
    a_m = b_m + kin.k_off_m
    a_i = b_i + kin.k_off_i
    return x, y, den, p_m, p_i, b_m, b_i, a_m, a_i


def binding_noise_psd(f, c_m, c_i, model: PsdModel):
    """Binding-noise PSD; ``f``, ``c_m`` and ``c_i`` broadcast against each other."""
    f = _check_freq(f)
    kin = model.kinetics
    _, _, den, p_m, p_i, b_m, b_i, a_m, a_i = _terms(c_m, c_i, kin)
    w2 = (2.0 * math.pi * f) ** 2
    delta = kin.k_off_m * b_i + kin.k_off_i * b_m + kin.k_off_m * kin.k_off_i
    n_r = kin.k_off_i * p_m + kin.k_off_m * p_i
    h = a_m * p_m + a_i * p_i + b_m * p_i + b_i * p_m
    q = a_m**2 + a_i**2 + 2.0 * b_m * b_i
    num = n_r * delta + w2 * h
    dnm = delta**2 + w2 * q + w2**2
    out = model.amplitude * num / (den * dnm)
    return out[()] if out.ndim == 0 else out


def binding_noise_gradient(f, c_m, c_i, model: PsdModel):
    """Analytic ``(dS/dc_m, dS/dc_i)`` of the binding (and total) PSD."""
    f = _check_freq(f)
    kin = model.kinetics
    x, y, den, p_m, p_i, b_m, b_i, a_m, a_i = _terms(c_m, c_i, kin)
    w2 = (2.0 * math.pi * f) ** 2
    delta = kin.k_off_m * b_i + kin.k_off_i * b_m + kin.k_off_m * kin.k_off_i
    n_r = kin.k_off_i * p_m + kin.k_off_m * p_i
    h = a_m * p_m + a_i * p_i + b_m * p_i + b_i * p_m
    q = a_m**2 + a_i**2 + 2.0 * b_m * b_i
    num = n_r * delta + w2 * h
    dnm = delta**2 + w2 * q + w2**2
    den2 = den**2

    grads = []
    for dx, dy, db_m, db_i in (
        (1.0 / kin.K_Dm, 0.0, kin.k_on_m, 0.0),
        (0.0, 1.0 / kin.K_Di, 0.0, kin.k_on_i),
    ):
        dw = -(dx + dy) / den2  # d(1/den)
        dp_m = (dx * (1.0 + y) - x * dy) / den2
        dp_i = (dy * (1.0 + x) - y * dx) / den2
        d_delta = kin.k_off_m * db_i + kin.k_off_i * db_m
        dn_r = kin.k_off_i * dp_m + kin.k_off_m * dp_i
        dh = (
            db_m * p_m + a_m * dp_m + db_i * p_i + a_i * dp_i
            + db_m * p_i + b_m * dp_i + db_i * p_m + b_i * dp_m
        )
        dq = 2.0 * (a_m * db_m + a_i * db_i + db_m * b_i + b_m * db_i)
        dnum = dn_r * delta + n_r * d_delta + w2 * dh
        ddnm = 2.0 * delta * d_delta + w2 * dq
        g = model.amplitude * (dw * num / dnm + (dnum * dnm - num * ddnm) / (den * dnm**2))
        grads.append(g[()] if g.ndim == 0 else g)
    return tuple(grads)


def one_over_f_psd(f, S_1Hz: float, beta: float):
    f = _check_freq(f)
    out = S_1Hz / f**beta
    return out[()] if out.ndim == 0 else out


def total_psd(f, lam, model: PsdModel):
    c_m, c_i = lam
    return binding_noise_psd(f, c_m, c_i, model) + one_over_f_psd(f, model.S_1Hz, model.beta)


def single_ligand_psd(f, c_m, model: PsdModel):
    """Interference-free PSD, the ``c_i = 0`` case of :func:`total_psd`.

    The binding term reduces to one Lorentzian with corner ``1/(2 pi tau_m)``.
    """
    return total_psd(f, (c_m, 0.0), model)


def single_ligand_gradient(f, c_m, model: PsdModel):
    """Analytic ``dS/dc_m`` of :func:`single_ligand_psd`."""
    f = _check_freq(f)
    kin = model.kinetics
    c_m = np.asarray(c_m, dtype=float)
    p = c_m / (kin.K_Dm + c_m)
    dp = kin.K_Dm / (kin.K_Dm + c_m) ** 2
    rate = c_m * kin.k_on_m + kin.k_off_m
    w2 = (2.0 * math.pi * f) ** 2
    # tau / (1 + w^2 tau^2) == rate / (rate^2 + w^2)
    lor = rate / (rate**2 + w2)
    dlor = kin.k_on_m * (w2 - rate**2) / (rate**2 + w2) ** 2
    out = model.amplitude * ((1 - 2 * p) * dp * lor + p * (1 - p) * dlor)
    return out[()] if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class Periodogram:
    values: np.ndarray
    freqs: np.ndarray
    N: int
    dt: float


def fourier_grid(N: int, dt: float) -> np.ndarray:
    """Periodogram frequencies ``k / (N dt)`` strictly between DC and Nyquist.

    That is ``k = 1 .. N/2 - 1`` for even ``N`` and ``k = 1 .. (N-1)/2`` for odd.
    """
    return np.arange(1, (N + 1) // 2) / (N * dt)


def periodogram(samples, dt: float) -> Periodogram:
    """Raw single-sided periodogram of mean-removed samples, DC and Nyquist dropped."""
    x = np.asarray(samples, dtype=float)
    N = x.shape[-1]
    if N < 8:
        raise ValueError("periodogram needs at least 8 samples")
    x = x - x.mean(axis=-1, keepdims=True)
    X = np.fft.rfft(x, axis=-1)
    Y = (2.0 * dt / N) * np.abs(X[..., 1 : (N + 1) // 2]) ** 2
    return Periodogram(values=Y, freqs=fourier_grid(N, dt), N=N, dt=dt)


def synthesize_one_over_f(
    N: int,
    dt: float,
    S_1Hz: float,
    beta: float,
    rng: np.random.Generator,
    total_variance: float | None = None,
) -> np.ndarray:
    """Gaussian 1/f^beta noise by spectral shaping of white noise.

    The expected periodogram equals ``one_over_f_psd`` on the Fourier grid.
    If ``total_variance`` is given, the power the grid cannot represent
    (below the first bin and above Nyquist) is added as a constant offset
    so one sample has that variance; the offset vanishes from any
    mean-removed spectrum.
    """
    even = N % 2 == 0
    freqs = np.fft.rfftfreq(N, dt)
    psd = np.zeros_like(freqs)
    psd[1:] = S_1Hz / freqs[1:] ** beta
    # E|X_k|^2 = N * S / (2 dt) for interior bins; the Nyquist bin is real.
    scale = np.sqrt(N * psd / (4.0 * dt))
    X = (rng.standard_normal(freqs.size) + 1j * rng.standard_normal(freqs.size)) * scale
    X[0] = 0.0
    if even:
        X[-1] = X[-1].real * math.sqrt(2.0)
    x = np.fft.irfft(X, n=N)
    if total_variance is not None:
        nyquist = 0.5 * psd[-1] if even else 0.0
        interior = psd[1:-1] if even else psd[1:]
        in_band = (interior.sum() + nyquist) / (N * dt)
        extra = total_variance - in_band
        if extra > 0:
            x += math.sqrt(extra) * rng.standard_normal()
    return x


def lowpass_design(cutoff_fraction: float = 0.8, numtaps: int = 129) -> np.ndarray:
    if not 0 < cutoff_fraction < 1:
        raise ValueError("cutoff_fraction must lie in (0, 1)")
    return signal.firwin(numtaps, cutoff_fraction)


def lowpass_filter(samples, cutoff_fraction: float = 0.8, numtaps: int = 129) -> np.ndarray:
    """Zero-phase windowed-sinc low-pass (forward-backward), length preserving."""
    x = np.asarray(samples, dtype=float)
    taps = lowpass_design(cutoff_fraction, numtaps)
    padlen = min(3 * numtaps, x.shape[-1] - 1)
    return signal.filtfilt(taps, [1.0], x, axis=-1, padlen=padlen)


def mean_periodogram(realizations, dt: float) -> Periodogram:
    """Average raw periodograms over realizations (rows); diagnostic only."""
    pg = periodogram(np.atleast_2d(realizations), dt)
    return Periodogram(values=pg.values.mean(axis=0), freqs=pg.freqs, N=pg.N, dt=dt)


def log_bin(freqs, values, f_max=None, min_count: int = 8, per_decade: int = 10):
    """Average ``values`` in logarithmic frequency bins.

    Adjacent log bins are merged until each holds ``min_count`` points.
    Returns ``(centers, averages, counts, edges)`` where ``edges`` are the
    (lowest, highest) frequencies in each bin.
    """
    freqs = np.asarray(freqs, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = freqs <= (f_max if f_max is not None else freqs.max())
    freqs, values = freqs[keep], values[keep]
    logs = np.floor(np.log10(freqs / freqs[0]) * per_decade).astype(int)
    groups, current = [], []
    for i, b in enumerate(logs):
        if current and b != logs[current[-1]] and len(current) >= min_count:
            groups.append(current)
            current = []
        current.append(i)
    if current:
        if groups and len(current) < min_count:
            groups[-1].extend(current)
        else:
            groups.append(current)
    centers = np.array([np.exp(np.log(freqs[g]).mean()) for g in groups])
    averages = np.array([values[g].mean() for g in groups])
    counts = np.array([len(g) for g in groups])
    edges = np.array([(freqs[g[0]], freqs[g[-1]]) for g in groups])
    return centers, averages, counts, edges
