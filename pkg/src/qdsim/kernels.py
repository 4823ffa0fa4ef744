"""Kernel backend selection.

The compiled extension is used when importable; set ``QDSIM_KERNEL=python``
to force the numpy fallback.
"""

import os

from . import _kernels_py

try:
    if os.environ.get("QDSIM_KERNEL", "").lower() == "python":
        raise ImportError("compiled kernels disabled by QDSIM_KERNEL")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _kernels_py


def noisy_propagate(h, charges, noise, psi0, dt, watch):
    return _impl.noisy_propagate(h, charges, noise, psi0, dt, watch)


def available_backends():
    out = {"python": _kernels_py.noisy_propagate}
    if _compiled is not None:
        out["cython"] = _compiled.noisy_propagate
    return out
