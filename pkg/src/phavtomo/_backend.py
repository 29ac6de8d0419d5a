"""Kernel backend selection.

The compiled extension is used when importable; set ``PHAVTOMO_PURE_PYTHON=1``
to force the NumPy fallback.  ``BACKENDS`` lists every importable backend so
tests and benchmarks can compare them regardless of the active one.
"""

import os

from phavtomo import _kernels_py

BACKENDS = {"python": _kernels_py}
try:
    from phavtomo import _kernels

    BACKENDS["cython"] = _kernels
except ImportError:
    pass

if "cython" in BACKENDS and os.environ.get("PHAVTOMO_PURE_PYTHON", "") in ("", "0"):
    BACKEND = "cython"
else:
    BACKEND = "python"
_impl = BACKENDS[BACKEND]

fock_density_matrix = _impl.fock_density_matrix
mle_iterate = _impl.mle_iterate
