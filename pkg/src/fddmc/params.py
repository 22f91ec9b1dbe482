"""System configuration and derived physical quantities.

Concentrations are molecules/m^3 everywhere. The ionic strength ``c_ion`` is
the only mol-based input and is converted where it is used.
"""

from __future__ import annotations

import dataclasses
import hashlib
import logging
import math
from dataclasses import dataclass, field, fields

from . import constants
from .channel import peak_concentration

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Raised for malformed configuration text or invalid parameter values."""

    def __init__(self, message: str, *, line: int | None = None, key: str | None = None):
        self.line = line
        self.key = key
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if key is not None:
            prefix += f"{key}: "
        super().__init__(prefix + message)


@dataclass(frozen=True)
class SystemConfig:
    """All user-facing parameters; defaults are the reference system values."""

    T: float = 300.0  # K
    h_ch: float = 5e-6  # m
    w_ch: float = 10e-6  # m
    u: float = 10e-6  # m/s
    x_R: float = 1e-3  # m
    c_ion: float = 30.0  # mol/m^3
    eps_r: float = 80.0
    D_0: float = 2e-11  # m^2/s
    k_on_m: float = 4e-17  # m^3/s
    k_on_i: float = 4e-17  # m^3/s
    k_off_m: float = 2.0  # 1/s
    k_off_i: float = 8.0  # 1/s
    N_e: float = 3.0
    N_r: int = 120
    r: float = 2e-9  # m
    g: float = 1.9044e-4  # A/V
    l_gr: float = 10e-6  # m
    c_q: float = 2e-2  # F/m^2
    N_m0: float = 1000.0
    N_m1: float = 5000.0
    N: int = 700
    dt: float = 0.005  # s
    gamma: float = 0.7
    mu_sigma_ratio: float = 10.0
    S_1Hz: float = 1e-23  # A^2/Hz
    beta: float = 1.0
    f_L: float = 1e-8  # Hz
    f_H: float = 1e7  # Hz
    # Overrides for quantities the reference parameter set leaves open.
    l_ch: float | None = None  # m, defaults to w_ch
    A_Gr: float | None = None  # m^2, defaults to l_gr**2
    burn_in: float | None = None  # s, defaults to 10 * slowest relaxation time
    lpf_cutoff: float = 0.8  # fraction of Nyquist
    mu_ci_scale: float = 1.0  # multiplies gamma * c_m1 (similarity sweeps)

    def __post_init__(self):
        validate(self)

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    @property
    def eta(self) -> float:
        """Similarity parameter K_Di / K_Dm."""
        return (self.k_off_i / self.k_on_i) / (self.k_off_m / self.k_on_m)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_text(self) -> str:
        lines = []
        for key, value in self.as_dict().items():
            if value is None:
                continue
            lines.append(f"{key} = {_format_value(value)}")
        return "\n".join(lines) + "\n"

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]


_INT_KEYS = {"N_r", "N"}
_OPTIONAL_KEYS = {"l_ch", "A_Gr", "burn_in"}
_POSITIVE_KEYS = (
    "T", "h_ch", "w_ch", "u", "x_R", "c_ion", "eps_r", "D_0", "k_on_m", "k_on_i",
    "k_off_m", "k_off_i", "r", "g", "l_gr", "c_q", "N_m1", "dt",
    "mu_sigma_ratio", "S_1Hz", "f_L", "f_H", "N_r", "N", "mu_ci_scale",
)


def _format_value(value) -> str:
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def validate(cfg: SystemConfig) -> None:
    for key in _POSITIVE_KEYS:
        value = getattr(cfg, key)
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            raise ConfigError(f"must be a finite positive number, got {value!r}", key=key)
    if cfg.N_e < 0:
        raise ConfigError("must be non-negative", key="N_e")
    for key in ("N_m0", "gamma"):
        if not getattr(cfg, key) >= 0:
            raise ConfigError("must be non-negative", key=key)
    for key in _INT_KEYS:
        if int(getattr(cfg, key)) != getattr(cfg, key):
            raise ConfigError("must be an integer", key=key)
    if cfg.N < 8:
        raise ConfigError("sample count must be at least 8", key="N")
    if cfg.N_m0 > cfg.N_m1:
        raise ConfigError("bit-0 molecule count exceeds bit-1 count", key="N_m0")
    if cfg.f_L >= cfg.f_H:
        raise ConfigError("f_L must be below f_H", key="f_L")
    for key in _OPTIONAL_KEYS:
        value = getattr(cfg, key)
        if value is not None and not (math.isfinite(value) and value >= 0):
            raise ConfigError(f"must be non-negative, got {value!r}", key=key)
    if cfg.l_ch is not None and cfg.l_ch == 0:
        raise ConfigError("must be positive", key="l_ch")
    if cfg.A_Gr is not None and cfg.A_Gr == 0:
        raise ConfigError("must be positive", key="A_Gr")
    if not 0 < cfg.lpf_cutoff < 1:
        raise ConfigError("must lie in (0, 1)", key="lpf_cutoff")
    if not 0.8 <= cfg.beta <= 1.2:
        logger.warning("noise exponent beta=%g outside the typical range [0.8, 1.2]", cfg.beta)


def load_config(text: str) -> SystemConfig:
    """Parse a ``key = value`` document; missing keys keep their defaults."""
    known = {f.name for f in fields(SystemConfig)}
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in known:
            raise ConfigError("unknown key", line=lineno, key=key)
        if key in values:
            raise ConfigError("duplicate key", line=lineno, key=key)
        if not value:
            raise ConfigError("missing value", line=lineno, key=key)
        if value.lower() == "none" and key in _OPTIONAL_KEYS:
            values[key] = None
            continue
        try:
            number = float(value)
        except ValueError:
            raise ConfigError(f"not a number: {value!r}", line=lineno, key=key) from None
        if key in _INT_KEYS:
            if number != int(number):
                raise ConfigError(f"must be an integer, got {value!r}", line=lineno, key=key)
            number = int(number)
        values[key] = number
    return SystemConfig(**values)


def read_config(path) -> SystemConfig:
    with open(path, encoding="utf-8") as fh:
        return load_config(fh.read())


def debye_length(eps_r: float, T: float, c_ion: float) -> float:
    """Debye screening length in m; ``c_ion`` in mol/m^3."""
    eps = eps_r * constants.VACUUM_PERMITTIVITY
    q = constants.ELEMENTARY_CHARGE
    return math.sqrt(eps * constants.BOLTZMANN * T / (2 * constants.AVOGADRO * q**2 * c_ion))


def effective_charge(r: float, debye: float) -> float:
    return constants.ELEMENTARY_CHARGE * math.exp(-r / debye)


def effective_diffusion(D_0: float, u: float, h_ch: float, l_ch: float) -> float:
    """Taylor-dispersion corrected diffusion coefficient for a rectangular channel."""
    dispersion = 8.5 * u**2 * h_ch**2 * l_ch**2 / (
        210 * D_0**2 * (h_ch**2 + 2.4 * h_ch * l_ch + l_ch**2)
    )
    return (1 + dispersion) * D_0


def gate_capacitance(C_Gr: float, C_Q: float) -> float:
    return 1.0 / (1.0 / C_Gr + 1.0 / C_Q)


def transduction_gain(q_eff: float, N_e: float, g: float, C_Gr: float, C_Q: float) -> float:
    """Current change per bound receptor (A)."""
    return q_eff * N_e * g / gate_capacitance(C_Gr, C_Q)


def one_over_f_variance(S_1Hz: float, beta: float, f_L: float, f_H: float) -> float:
    """Variance of 1/f^beta noise, flat below ``f_L`` and cut off above ``f_H``."""
    if not 0 < f_L <= f_H:
        raise ValueError("need 0 < f_L <= f_H")
    flat = f_L * S_1Hz / f_L**beta
    a = 1.0 - beta
    span = math.log(f_H / f_L)
    if abs(a * span) < 1e-12:
        band = S_1Hz * span
    else:
        band = S_1Hz * f_L**a * math.expm1(a * span) / a
    return flat + band


@dataclass(frozen=True)
class DerivedParams:
    K_Dm: float
    K_Di: float
    debye_length: float
    q_eff: float
    A_Gr: float
    C_Gr: float
    C_Q: float
    C_G: float
    zeta: float
    l_ch: float
    D: float
    A_ch: float
    t_D: float
    c_m0: float
    c_m1: float
    mu_ci: float
    sigma_ci: float
    sigma2_f: float
    A_Gr_assumed: bool = field(default=True)

    def c_m(self, bit: int) -> float:
        return self.c_m1 if bit else self.c_m0

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_text(self) -> str:
        out = []
        for key, value in self.as_dict().items():
            if isinstance(value, bool):
                out.append(f"{key} = {str(value).lower()}")
            else:
                out.append(f"{key} = {value:.17e}")
        return "\n".join(out) + "\n"


def derive_all(cfg: SystemConfig) -> DerivedParams:
    K_Dm = cfg.k_off_m / cfg.k_on_m
    K_Di = cfg.k_off_i / cfg.k_on_i
    lam = debye_length(cfg.eps_r, cfg.T, cfg.c_ion)
    q_eff = effective_charge(cfg.r, lam)
    A_Gr = cfg.l_gr**2 if cfg.A_Gr is None else cfg.A_Gr
    eps = cfg.eps_r * constants.VACUUM_PERMITTIVITY
    C_Gr = A_Gr * eps / lam
    C_Q = cfg.c_q * A_Gr
    l_ch = cfg.w_ch if cfg.l_ch is None else cfg.l_ch
    D = effective_diffusion(cfg.D_0, cfg.u, cfg.h_ch, l_ch)
    A_ch = cfg.h_ch * cfg.w_ch
    t_D = cfg.x_R / cfg.u
    c_m0 = peak_concentration(cfg.N_m0, A_ch, D, t_D)
    c_m1 = peak_concentration(cfg.N_m1, A_ch, D, t_D)
    mu_ci = cfg.mu_ci_scale * cfg.gamma * c_m1
    return DerivedParams(
        K_Dm=K_Dm,
        K_Di=K_Di,
        debye_length=lam,
        q_eff=q_eff,
        A_Gr=A_Gr,
        C_Gr=C_Gr,
        C_Q=C_Q,
        C_G=gate_capacitance(C_Gr, C_Q),
        zeta=transduction_gain(q_eff, cfg.N_e, cfg.g, C_Gr, C_Q),
        l_ch=l_ch,
        D=D,
        A_ch=A_ch,
        t_D=t_D,
        c_m0=c_m0,
        c_m1=c_m1,
        mu_ci=mu_ci,
        sigma_ci=mu_ci / cfg.mu_sigma_ratio,
        sigma2_f=one_over_f_variance(cfg.S_1Hz, cfg.beta, cfg.f_L, cfg.f_H),
        A_Gr_assumed=cfg.A_Gr is None,
    )


def with_similarity(cfg: SystemConfig, eta: float) -> SystemConfig:
    """Set K_Di = eta * K_Dm by adjusting the interferer unbinding rate."""
    K_Dm = cfg.k_off_m / cfg.k_on_m
    return cfg.replace(k_off_i=eta * K_Dm * cfg.k_on_i)
