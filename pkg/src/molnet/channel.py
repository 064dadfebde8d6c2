"""Diffusion channel: observation probabilities of a transparent spherical receiver.

Units are micrometres and seconds throughout (D in um^2/s).
"""
from dataclasses import dataclass

import numpy as np

from molnet._kernels_py import observation_probability as _g


@dataclass(frozen=True)
class ChannelParams:
    D: float = 40.0
    mu: float = 0.1
    r0: float = 5.0
    T: float = 0.5

    def __post_init__(self):
        if not self.D > 0:
            raise ValueError("diffusion coefficient D must be positive")
        if not self.mu >= 0:
            raise ValueError("degradation rate mu must be non-negative")
        if not self.r0 > 0:
            raise ValueError("receiver radius r0 must be positive")
        if not self.T > 0:
            raise ValueError("slot duration T must be positive")


def observation_probability_g(t, d, params: ChannelParams):
    """Probability that a molecule released at distance ``d`` is inside the
    receiver after ``t`` seconds, including first-order degradation."""
    if np.any(np.asarray(t) <= 0):
        raise ValueError("elapsed time must be positive")
    if np.any(np.asarray(d) <= 0):
        raise ValueError("distance must be positive")
    return _g(t, d, params.D, params.mu, params.r0)


def elapsed_time(i: int, L: int, T: float) -> float:
    """Time between the start of slot ``i`` and the end of slot ``L``."""
    return (L - i + 1) * T


def p_iL(i: int, L: int, d, params: ChannelParams):
    """Observation probability at the end of slot ``L`` of a release in an
    earlier slot ``i`` (1 <= i <= L-1)."""
    if not 1 <= i <= L - 1:
        raise IndexError(f"slot index i={i} outside 1..{L - 1}")
    return observation_probability_g(elapsed_time(i, L, params.T), d, params)


def p_LL(d, params: ChannelParams):
    """Observation probability of a release in the current slot."""
    return observation_probability_g(params.T, d, params)
