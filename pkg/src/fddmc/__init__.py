"""Time- and frequency-domain detection for bioFET molecular receivers with
cross-reactive interferers: receptor kinetics, noise spectra, Whittle
estimation, detectors and a Monte Carlo harness."""

from ._core import BACKEND
from .params import ConfigError, DerivedParams, SystemConfig, derive_all, load_config, read_config

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConfigError",
    "DerivedParams",
    "SystemConfig",
    "derive_all",
    "load_config",
    "read_config",
    "__version__",
]
