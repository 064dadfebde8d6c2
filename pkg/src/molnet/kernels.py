"""Kernel backend selection.

The Cython extension is used when it imports; set ``MOLNET_KERNELS=python``
to force the numpy implementation.
"""
import os

import numpy as np

from molnet import _kernels_py

BACKEND = "python"
_ext = None
if os.environ.get("MOLNET_KERNELS", "").lower() != "python":
    try:
        from molnet import _kernels as _ext
        BACKEND = "cython"
    except ImportError:
        _ext = None


def accumulate_interference(d, slot, weight, t_slot, group, n_groups, D, mu, r0, backend=None):
    """Per-group sums of ``weight * g(t_slot[slot], d)``; see ``_kernels_py``."""
    use = backend or BACKEND
    if use == "cython":
        if _ext is None:
            raise RuntimeError("Cython kernels are not built")
        return _ext.accumulate_interference(
            np.ascontiguousarray(d, dtype=np.float64),
            np.ascontiguousarray(slot, dtype=np.int64),
            np.ascontiguousarray(weight, dtype=np.float64),
            np.ascontiguousarray(t_slot, dtype=np.float64),
            np.ascontiguousarray(group, dtype=np.int64),
            int(n_groups), float(D), float(mu), float(r0),
        )
    return _kernels_py.accumulate_interference(d, slot, weight, t_slot, group, n_groups, D, mu, r0)


def available_backends():
    return ["python"] + (["cython"] if _ext is not None else [])
