"""Threshold detector that plugs the mean interference into the Poisson likelihood."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from molnet.channel import p_LL
from molnet.interference import InterferenceStats
from molnet.numerics import DomainError, lambert_w
from molnet.params import SystemParams

# quotients this close to an integer are snapped before the ceiling
INTEGER_SNAP = 1e-12


class RegimeError(ValueError):
    """The single-threshold (th_1 = 1) regime does not exist for these inputs."""


@dataclass(frozen=True)
class DetectorThresholds:
    th: tuple
    p_ll: float
    mean_interference: float
    noise_mean: float

    @property
    def background(self) -> float:
        return self.mean_interference + self.noise_mean


def _ceil_snapped(q: float) -> int:
    r = round(q)
    if abs(q - r) <= INTEGER_SNAP * max(1.0, abs(q)):
        q = r
    return math.ceil(q)


def compute_thresholds(params: SystemParams, stats: InterferenceStats) -> DetectorThresholds:
    """Integer decision boundaries between neighbouring constellation points.

    ``th_j = ceil(p (x_{j+1} - x_j) / ln((p x_{j+1} + a) / (p x_j + a)))`` with
    ``a`` the mean interference plus noise. A zero background makes the
    quotient zero; the threshold is then floored at 1 so that a zero count
    still decodes as the smallest symbol.
    """
    p = float(p_LL(params.y0_norm, params.channel))
    if not p > 0:
        raise ValueError("reference link observation probability is zero")
    a = stats.e_total + params.noise_mean
    xs = params.constellation
    th = []
    for lo, hi in zip(xs[:-1], xs[1:]):
        if hi == lo:
            raise ZeroDivisionError("coincident constellation points")
        base = p * lo + a
        q = 0.0 if base == 0 else p * (hi - lo) / math.log1p(p * (hi - lo) / base)
        th.append(max(1, _ceil_snapped(q)))
    return DetectorThresholds(tuple(th), p, stats.e_total, params.noise_mean)


def decide(y, th: DetectorThresholds, constellation=None):
    """Index of the decoded symbol: ``j`` such that ``th_{j-1} <= y < th_j``
    (``th_0 = 0``, ``th_M = inf``). Works elementwise on arrays."""
    cells = np.searchsorted(np.asarray(th.th), y, side="right")
    if constellation is not None and len(constellation) != len(th.th) + 1:
        raise ValueError("constellation size does not match thresholds")
    return int(cells) if np.ndim(cells) == 0 else cells


def likelihood_argmax(y, params: SystemParams, th: DetectorThresholds):
    """Brute-force maximiser of the mean-interference Poisson likelihood
    (ties go to the larger symbol, matching the ceiling convention)."""
    from molnet.numerics import log_poisson_pmf

    means = th.p_ll * np.asarray(params.constellation) + th.background
    ll = [log_poisson_pmf(y, m) if m > 0 else (0.0 if y == 0 else -math.inf) for m in means]
    best = max(ll)
    return max(j for j, v in enumerate(ll) if v >= best - 1e-12 * max(1.0, abs(best)))


def ook_regime_threshold_xi(params: SystemParams, stats: InterferenceStats) -> float:
    """Largest ON-symbol molecule count for which ``th_1 = 1`` in ON/OFF keying.

    Solves ``(p xi + a) / a = exp(p xi)`` for its non-zero root through the
    Lambert W function. Only backgrounds ``a < 1`` admit such a root; for
    ``a >= 1`` every ``xi > 0`` gives ``th_1 >= 2`` and a ``RegimeError`` is raised.
    """
    if params.M != 2 or params.constellation[0] != 0:
        raise ValueError("requires two symbols with x_1 = 0")
    p = float(p_LL(params.y0_norm, params.channel))
    a = stats.e_total + params.noise_mean
    if a == 0:
        return math.inf
    if a >= 1:
        raise RegimeError(f"regime condition undefined: background {a:.6g} >= 1 gives th_1 >= 2 for all xi > 0")
    z = -a * math.exp(-a)
    try:
        w = lambert_w("minus_one", z)
    except DomainError as exc:
        raise RegimeError(f"regime condition undefined: {exc}") from None
    xi0 = (-a - w) / p
    if not xi0 > 0:
        raise RegimeError("regime condition undefined: no positive boundary")
    return xi0
