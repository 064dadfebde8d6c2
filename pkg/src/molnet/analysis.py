"""Symbol error probability of the threshold detector.

``error_prob_exact`` expands the conditional Poisson probabilities into
derivatives of the interference Laplace transform at ``s = 1``;
``error_prob_upper`` is the closed-form bound built from the transform at
``eta_j k``; ``error_prob_ook`` is the single-threshold ON/OFF special case.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from molnet.detector import (
    DetectorThresholds,
    RegimeError,
    compute_thresholds,
    ook_regime_threshold_xi,
)
from molnet.interference import DerivativeBudgetError, model_for
from molnet.numerics import DEFAULT_SPEC, IntegrationSpec, compositions
from molnet.params import SystemParams

log = logging.getLogger(__name__)

RAW_SLACK = 1e-6
ILL_CONDITIONED = 1e12


class NumericalFailure(RuntimeError):
    pass


@dataclass
class ErrorReport:
    per_symbol: list
    method: str
    thresholds: DetectorThresholds | None = None
    derivative_budget_hit: bool = False
    notes: list = field(default_factory=list)

    @property
    def total(self) -> float:
        return float(sum(self.per_symbol) / len(self.per_symbol))


@dataclass(frozen=True)
class AlzerConstants:
    eta: tuple


def alzer_constants(th) -> AlzerConstants:
    """``eta_j = (th_j!)^(-1/th_j)``."""
    return AlzerConstants(tuple(math.exp(-math.lgamma(t + 1) / t) for t in th))


def _clamp(raw: float, what: str) -> float:
    if not -RAW_SLACK <= raw <= 1 + RAW_SLACK:
        raise NumericalFailure(f"{what}: raw probability {raw!r} outside [0, 1]")
    return min(1.0, max(0.0, raw))


def _symbol_offset(params: SystemParams, th: DetectorThresholds, j: int) -> float:
    return th.p_ll * params.constellation[j] + params.noise_mean


def _weighted_derivatives(c, intra, inter, kmax):
    """``(-1)^k/k! d^k/ds^k [exp(-s c) L(s)]`` at ``s = 1`` for ``k = 0..kmax``;
    the multinomial over ``(k1, k2, k3)`` splits the exponential factor and
    the two transforms. Every term is non-negative."""
    a = [(-1) ** k * intra[k] / math.factorial(k) for k in range(kmax + 1)]
    b = [(-1) ** k * inter[k] / math.factorial(k) for k in range(kmax + 1)]
    out = []
    for k in range(kmax + 1):
        acc = math.fsum(c ** k1 / math.factorial(k1) * a[k2] * b[k3]
                        for k1, k2, k3 in compositions(k, 3))
        out.append(math.exp(-c) * acc)
    return out


def conditional_error_exact(j: int, params: SystemParams, th: DetectorThresholds,
                            spec: IntegrationSpec = DEFAULT_SPEC) -> float:
    """``P(error | symbol j)`` (0-based ``j``) without approximation.

    For the top symbol the probability of ``y >= th_{M-1}`` is obtained as the
    complement of the finite sum over ``0..th_{M-1}-1``.
    """
    M = params.M
    if not 0 <= j < M:
        raise IndexError(f"symbol index {j} outside 0..{M - 1}")
    lower = th.th[j - 1] if j > 0 else 0
    upper = th.th[j] if j < M - 1 else None
    kmax = (upper if upper is not None else lower) - 1
    if kmax < 0:
        return 1.0 if upper is None else 1.0
    model = model_for(params, spec)
    intra = model.intra_derivatives(kmax)
    inter = model.inter_derivatives(kmax)
    w = _weighted_derivatives(_symbol_offset(params, th, j), intra, inter, kmax)
    if upper is None:
        raw = math.fsum(w[:lower])
    else:
        raw = 1.0 - math.fsum(w[lower:upper])
    return _clamp(raw, f"exact P(E | x_{j + 1})")


def _stats_and_thresholds(params, spec):
    model = model_for(params, spec)
    stats = model.stats()
    return stats, compute_thresholds(params, stats)


def error_prob_exact(params: SystemParams, spec: IntegrationSpec = DEFAULT_SPEC) -> ErrorReport:
    """Average of the exact conditional error probabilities; falls back to
    the upper bound (flagged) when the derivative budget is exceeded."""
    _, th = _stats_and_thresholds(params, spec)
    try:
        per = [conditional_error_exact(j, params, th, spec) for j in range(params.M)]
    except DerivativeBudgetError as exc:
        log.warning("exact error probability unavailable (%s); reporting the upper bound", exc)
        rep = error_prob_upper(params, spec)
        rep.derivative_budget_hit = True
        rep.notes.append(str(exc))
        return rep
    return ErrorReport(per, "exact", th)


def _alternating_sum(terms) -> float:
    """Compensated sum with a higher-precision retry when badly conditioned."""
    total = math.fsum(terms)
    magnitude = math.fsum(abs(t) for t in terms)
    if magnitude and (total == 0 or magnitude / abs(total) > ILL_CONDITIONED):
        with mpmath.workdps(50):
            total = float(mpmath.fsum(mpmath.mpf(t) for t in terms))
    return total


def _bound_sum(n: int, eta: float, c: float, lt: dict) -> float:
    """``sum_{k=1}^{n} (-1)^{k+1} C(n,k) exp(-eta c k) L(eta k)``, i.e.
    ``1 - E[(1 - exp(-eta (c + I)))^n]``."""
    terms = [(-1) ** (k + 1) * math.comb(n, k) * math.exp(-eta * c * k) * lt[(eta, k)]
             for k in range(1, n + 1)]
    return _alternating_sum(terms)


def error_prob_upper(params: SystemParams, spec: IntegrationSpec = DEFAULT_SPEC) -> ErrorReport:
    """Closed-form bound from the Alzer inequality for gamma distributions."""
    _, th = _stats_and_thresholds(params, spec)
    eta = alzer_constants(th.th).eta
    args = sorted({(e, k) for e, t in zip(eta, th.th) for k in range(1, t + 1)})
    values = model_for(params, spec).lt_total(np.array([e * k for e, k in args]))
    lt = dict(zip(args, np.atleast_1d(values).tolist()))
    M = params.M
    per = []
    for j in range(M):
        c = _symbol_offset(params, th, j)
        if j < M - 1:
            val = 1.0 - _bound_sum(th.th[j], eta[j], c, lt)
            if j > 0:
                val += _bound_sum(th.th[j - 1], eta[j - 1], c, lt)
        else:
            val = _bound_sum(th.th[M - 2], eta[M - 2], c, lt)
        per.append(min(1.0, max(0.0, val)))
    return ErrorReport(per, "upper_bound", th)


def error_prob_ook(params: SystemParams, spec: IntegrationSpec = DEFAULT_SPEC) -> ErrorReport:
    """ON/OFF keying in the ``th_1 = 1`` regime:
    ``P(E|0) = 1 - exp(-lambda_0 T) L(1)``, ``P(E|xi) = exp(-(p xi + lambda_0 T)) L(1)``."""
    if params.M != 2 or params.constellation[0] != 0:
        raise ValueError("ON/OFF keying needs constellation (0, xi)")
    stats, th = _stats_and_thresholds(params, spec)
    xi = params.constellation[1]
    if th.th[0] != 1:
        try:
            xi0 = ook_regime_threshold_xi(params, stats)
            why = f"xi = {xi} exceeds the regime boundary {xi0:.6g}"
        except RegimeError as exc:
            why = str(exc)
        raise RegimeError(f"th_1 = {th.th[0]} != 1: {why}")
    lt1 = model_for(params, spec).lt_total(1.0)
    n = params.noise_mean
    per = [1.0 - math.exp(-n) * lt1, math.exp(-(th.p_ll * xi + n)) * lt1]
    return ErrorReport(per, "ook_closed_form", th)
