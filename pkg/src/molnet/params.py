"""System parameters; defaults reproduce the reference operating point."""
from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

from molnet.channel import ChannelParams


@dataclass(frozen=True)
class SystemParams:
    """Physical and network constants. Lengths in um, times in s.

    ``lambda_0`` (noise molecules per second) has no published value. The
    default 0.1/s is an assumption, chosen so the slot-length optima of the
    reference curves are reproduced; it is recorded with every result.
    """

    lambda_p: float = 2e-6          # cluster-centre intensity, um^-3
    r0: float = 5.0                 # receiver radius
    sigma: float = 20.0             # offspring scatter
    D: float = 40.0                 # um^2/s, i.e. 40e-12 m^2/s
    mu: float = 0.1                 # degradation rate, 1/s
    T: float = 0.5                  # slot duration
    L: int = 5                      # current slot index
    constellation: tuple = (0.0, 60.0)
    lambda_0: float = 0.1           # assumed, see class docstring
    y0_norm: float = 10.0           # reference transmitter distance (2 r0)

    def __post_init__(self):
        object.__setattr__(self, "constellation", tuple(float(x) for x in self.constellation))
        object.__setattr__(self, "L", int(self.L))
        x = np.asarray(self.constellation)
        if x.size < 2:
            raise ValueError("constellation needs at least two symbols")
        if np.any(np.diff(x) <= 0):
            raise ValueError("constellation must be strictly increasing")
        if np.any(x < 0):
            raise ValueError("molecule counts must be non-negative")
        if self.L < 1:
            raise ValueError("L must be >= 1")
        if self.lambda_p < 0:
            raise ValueError("lambda_p must be non-negative")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.lambda_0 < 0:
            raise ValueError("lambda_0 must be non-negative")
        if not self.y0_norm > self.r0:
            raise ValueError("reference transmitter must lie outside the receiver (y0_norm > r0)")
        ChannelParams(self.D, self.mu, self.r0, self.T)

    @property
    def M(self) -> int:
        return len(self.constellation)

    @property
    def channel(self) -> ChannelParams:
        return ChannelParams(D=self.D, mu=self.mu, r0=self.r0, T=self.T)

    @property
    def noise_mean(self) -> float:
        return self.lambda_0 * self.T

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def table1() -> SystemParams:
    return SystemParams()
