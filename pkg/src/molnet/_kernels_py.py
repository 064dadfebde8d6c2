"""Numpy implementations of the hot kernels.

This module is the reference the Cython build in ``_kernels.pyx`` must match;
``molnet.kernels`` picks whichever is available.
"""
import math

import numpy as np
from scipy import special

_SQRT_PI = math.sqrt(math.pi)
# below this distance (um) the 1/d term is replaced by its analytic limit
D_SINGULAR = 1e-9


def observation_probability(t, d, D, mu, r0):
    """Probability that a molecule released ``d`` um from the centre of a
    transparent sphere of radius ``r0`` is inside it ``t`` seconds later.

    Broadcasts over ``t`` and ``d``.
    """
    t = np.asarray(t, dtype=float)
    d = np.asarray(d, dtype=float)
    t, d = np.broadcast_arrays(t, d)
    s = np.sqrt(D * t)
    c = 2.0 * s
    far = d > r0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # erfc form for d > r0 keeps the far tail free of 1 - 1 cancellation
        mass = np.where(
            far,
            0.5 * (special.erfc((d - r0) / c) - special.erfc((d + r0) / c)),
            0.5 * (special.erf((r0 - d) / c) + special.erf((r0 + d) / c)),
        )
        # exp(-(r0+d)^2/c^2) - exp(-(r0-d)^2/c^2), factored to avoid cancellation
        edge = -s / (_SQRT_PI * d) * np.exp(-((d - r0) / c) ** 2) * -np.expm1(-4.0 * r0 * d / (c * c))
        origin = special.erf(r0 / c) - r0 / (_SQRT_PI * s) * np.exp(-(r0 / c) ** 2)
    val = np.where(d < D_SINGULAR, origin, mass + edge)
    val = np.maximum(val, 0.0) * np.exp(-mu * t)
    return val if val.ndim else float(val)


def accumulate_interference(d, slot, weight, t_slot, group, n_groups, D, mu, r0):
    """``out[g] = sum(weight[n] * g(t_slot[slot[n]], d[n]) for n with group[n] == g)``."""
    t_slot = np.asarray(t_slot, dtype=float)
    p = observation_probability(t_slot[slot], d, D, mu, r0)
    return np.bincount(group, weights=np.asarray(weight) * p, minlength=n_groups).astype(float)
