"""Hot kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly and the environment
variable ``DEXTRA_DISABLE_NUMBA`` is unset (or ``0``).  Both implementations
stay importable as ``dextra.kernels.numpy_impl`` and
``dextra.kernels.numba_impl`` (``None`` without numba) for benchmarking and
cross-checks.
"""

import os

from . import _numpy as numpy_impl

try:
    from . import _numba as numba_impl
except ImportError:  # pragma: no cover - numba is a soft dependency
    numba_impl = None

_disabled = os.environ.get("DEXTRA_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")

if numba_impl is not None and not _disabled:
    active = numba_impl
    BACKEND = "numba"
else:
    active = numpy_impl
    BACKEND = "numpy"

csr_mix = active.csr_mix
csr_mix_vec = active.csr_mix_vec
dextra_update = active.dextra_update
ls_grad = active.ls_grad
ls_values = active.ls_values
residual = active.residual
consensus_spread = active.consensus_spread

__all__ = [
    "BACKEND",
    "numpy_impl",
    "numba_impl",
    "csr_mix",
    "csr_mix_vec",
    "dextra_update",
    "ls_grad",
    "ls_values",
    "residual",
    "consensus_spread",
]
