"""Hot kernels: compiled extension when available, pure Python otherwise.

Set ``FDDMC_BACKEND=python`` to force the fallback.
"""

import os

from . import _ssa_py

_BACKENDS = {"python": _ssa_py.ssa_advance}

try:
    from . import _ssa
except ImportError:  # extension not built
    _ssa = None
else:
    _BACKENDS["cython"] = _ssa.ssa_advance

if os.environ.get("FDDMC_BACKEND", "").lower() == "python" or _ssa is None:
    BACKEND = "python"
else:
    BACKEND = "cython"


def available_backends():
    return sorted(_BACKENDS)


def get_ssa_kernel(name=None):
    name = BACKEND if name is None else name
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable backend {name!r}") from None
