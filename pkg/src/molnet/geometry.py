"""Distances from the origin to cluster members.

For a cluster centred ``x`` away from the origin, ``distance_pdf_general``
evaluates the density of ``|x + Y|`` for any isotropic offspring density by
double quadrature; ``distance_pdf_tcp`` is the closed form for Gaussian
scatter and ``distance_pdf_origin_tcp`` its limit ``x -> 0`` (a Maxwell law).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from molnet.numerics import (
    DEFAULT_SPEC,
    IntegrationSpec,
    integrate,
    integrate_semi_infinite,
)

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class OffspringDensity:
    """Density of a member's displacement from its cluster centre (um^-3)."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    isotropic: bool = True
    scale: float = 1.0

    def __call__(self, v):
        return self.evaluator(np.asarray(v, dtype=float))


def gaussian_offspring(sigma: float) -> OffspringDensity:
    norm = 1.0 / ((2.0 * math.pi) ** 1.5 * sigma ** 3)

    def density(v):
        return norm * np.exp(-np.sum(v * v, axis=-1) / (2.0 * sigma * sigma))

    return OffspringDensity(density, isotropic=True, scale=sigma)


def distance_pdf_tcp(y, parent_distance, sigma):
    """Density of the distance to the origin of a Gaussian-scattered member of
    a cluster whose centre is ``parent_distance`` away."""
    x = np.asarray(parent_distance, dtype=float)
    if np.any(x <= 0):
        raise ValueError("parent_distance must be positive; use distance_pdf_origin_tcp at 0")
    y = np.asarray(y, dtype=float)
    # y/(sqrt(2 pi) s x) * [exp(-(y-x)^2/2s^2) - exp(-(y+x)^2/2s^2)]
    val = (y / (_SQRT_2PI * sigma * x) * np.exp(-((y - x) ** 2) / (2.0 * sigma ** 2))
           * -np.expm1(-2.0 * x * y / sigma ** 2))
    val = np.where(y >= 0, val, 0.0)
    return val if val.ndim else float(val)


def distance_pdf_origin_tcp(y, sigma):
    """Maxwell density of ``|Y|`` for Gaussian scatter with per-axis std ``sigma``."""
    y = np.asarray(y, dtype=float)
    val = math.sqrt(2.0 / math.pi) * y ** 2 / sigma ** 3 * np.exp(-(y ** 2) / (2.0 * sigma ** 2))
    val = np.where(y >= 0, val, 0.0)
    return val if val.ndim else float(val)


def distance_pdf_general(y: float, parent, density: OffspringDensity,
                         spec: IntegrationSpec = DEFAULT_SPEC) -> float:
    """Density of ``|x + Y|`` at ``y`` by direct quadrature over the sphere of radius ``y``.

    ``parent`` is either the centre's distance (centre placed on the first
    axis) or an explicit 3-vector. The sphere is parametrised by the first
    coordinate ``z1`` and an angle ``theta`` with ``z2 = rho sin(theta)``,
    ``z3 = +-rho cos(theta)``, ``rho = sqrt(y^2 - z1^2)``; this removes the
    inverse-square-root edge weight of the Cartesian form.
    """
    if y < 0:
        raise ValueError("y must be non-negative")
    if not density.isotropic and np.ndim(parent) == 0:
        raise ValueError("a scalar parent distance needs an isotropic offspring density")
    if y == 0:
        return 0.0
    centre = (np.array([float(parent), 0.0, 0.0]) if np.ndim(parent) == 0
              else np.asarray(parent, dtype=float))

    def over_z1(z1):
        rho = np.sqrt(np.maximum(y * y - z1 * z1, 0.0))

        def over_theta(theta):
            st = np.sin(theta)[:, None]
            ct = np.cos(theta)[:, None]
            pts_up = np.stack(np.broadcast_arrays(z1[None, :], rho * st, rho * ct), axis=-1)
            pts_dn = pts_up * np.array([1.0, 1.0, -1.0])
            return y * (density(pts_up - centre) + density(pts_dn - centre))

        return integrate(over_theta, -0.5 * math.pi, 0.5 * math.pi, spec)

    return float(integrate(over_z1, -y, y, spec))


@dataclass(frozen=True)
class DistanceDistribution:
    """Distance to the origin of a member of a cluster centred ``parent_distance``
    away, with the part inside the receiver ball of radius ``r0`` removed."""

    parent_distance: float
    sigma: float
    r0: float
    spec: IntegrationSpec = DEFAULT_SPEC
    normalizer_beyond_r0: float = field(init=False)

    def __post_init__(self):
        if self.parent_distance < 0:
            raise ValueError("parent_distance must be non-negative")
        object.__setattr__(self, "normalizer_beyond_r0", survival_beyond(self.r0, self, self.spec))

    def pdf(self, y):
        """Unconditioned density (integrates to one over [0, inf))."""
        if self.parent_distance == 0:
            return distance_pdf_origin_tcp(y, self.sigma)
        return distance_pdf_tcp(y, self.parent_distance, self.sigma)

    def conditional_pdf(self, y):
        """Density conditioned on the distance exceeding ``r0``."""
        y = np.asarray(y, dtype=float)
        val = np.where(y > self.r0, self.pdf(y) / self.normalizer_beyond_r0, 0.0)
        return val if val.ndim else float(val)

    def conditional_mean(self) -> float:
        num = integrate_semi_infinite(lambda t: t * self.pdf(t), self.r0, self.spec, scale=self.sigma)
        return num / self.normalizer_beyond_r0


def survival_beyond(r: float, dist: DistanceDistribution, spec: IntegrationSpec = DEFAULT_SPEC) -> float:
    """``P(d > r)`` under the unconditioned distance density."""
    if r < 0:
        raise ValueError("r must be non-negative")
    lo = max(r, dist.parent_distance - 12.0 * dist.sigma)
    # mass below lo is below exp(-72) when lo > r
    return float(integrate_semi_infinite(dist.pdf, lo, spec, scale=dist.sigma))


def sample_distance(dist: DistanceDistribution, rng: np.random.Generator, size=None,
                    min_acceptance: float = 1e-6):
    """Draw distances conditioned on exceeding ``r0`` by rejection from
    Gaussian displacements around a centre on the first axis."""
    n = 1 if size is None else int(np.prod(size))
    out = np.empty(n)
    filled = 0
    proposed = 0
    centre = np.array([dist.parent_distance, 0.0, 0.0])
    while filled < n:
        batch = max(2 * (n - filled), 64)
        pts = centre + dist.sigma * rng.standard_normal((batch, 3))
        d = np.sqrt(np.einsum("ij,ij->i", pts, pts))
        d = d[d > dist.r0]
        proposed += batch
        take = min(d.size, n - filled)
        out[filled:filled + take] = d[:take]
        filled += take
        if proposed > 1000 and filled / proposed < min_acceptance:
            raise RuntimeError(f"rejection sampler acceptance {filled / proposed:.2e} below {min_acceptance}")
    if size is None:
        return float(out[0])
    return out.reshape(size)
