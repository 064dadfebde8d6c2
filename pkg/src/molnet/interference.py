"""Interference at the reference receiver: means, Laplace transforms and
their derivatives.

Intra-cluster interference comes from the ``L-1`` earlier transmissions of
the reference cluster, whose distances follow the Maxwell law conditioned on
lying outside the receiver. Inter-cluster interference comes from the ``L``
transmissions of every other cluster; cluster centres form a Poisson process
of intensity ``lambda_p`` at distances ``x >= 2 r0``.

All integrals for one parameter set are computed in fused vector-valued
passes and cached on an :class:`InterferenceModel`.
"""
from __future__ import annotations

import functools
import math
import threading
from dataclasses import dataclass

import numpy as np

from molnet._kernels_py import observation_probability
from molnet.geometry import distance_pdf_origin_tcp, distance_pdf_tcp
from molnet.numerics import (
    DEFAULT_SPEC,
    IntegrationSpec,
    composition_array,
    count_compositions,
    integrate,
    integrate_semi_infinite,
    multinomial,
    partition_multiplicities,
)
from molnet.params import SystemParams

__all__ = [
    "InterferenceStats",
    "DerivativeBudgetError",
    "InterferenceModel",
    "model_for",
    "interference_stats",
    "expected_intra",
    "expected_inter",
    "lt_intra",
    "lt_inter",
    "lt_total",
    "lt_intra_derivatives",
    "lt_inter_derivatives",
    "lt_total_derivatives",
]

MAX_DERIVATIVE_ORDER = 30
COMPOSITION_BUDGET = 10 ** 7
# inner distance integrals cover parent_distance +- INNER_HALF_WIDTH sigma
INNER_HALF_WIDTH = 10.0


class DerivativeBudgetError(RuntimeError):
    """The combinatorial derivative expansion would exceed its term budget."""


@dataclass(frozen=True)
class InterferenceStats:
    e_intra: float
    e_inter: float

    @property
    def e_total(self) -> float:
        return self.e_intra + self.e_inter


@functools.lru_cache(maxsize=None)
def _composition_terms(k: int, parts: int):
    comps = composition_array(k, parts)
    coef = np.array([float(multinomial(c)) for c in comps]) if parts else np.ones(1)
    return comps, coef


@functools.lru_cache(maxsize=None)
def _faa_di_bruno_terms(k: int):
    terms = []
    for mult in partition_multiplicities(k):
        denom = 1
        for l, m in enumerate(mult, start=1):
            denom *= math.factorial(m) * math.factorial(l) ** m
        terms.append((mult, math.factorial(k) / denom))
    return terms


def _slot_times(params: SystemParams, n_slots: int) -> np.ndarray:
    """Elapsed times ``(L - i + 1) T`` for slots ``i = 1..n_slots``."""
    return np.array([(params.L - i + 1) * params.T for i in range(1, n_slots + 1)])


def _moments(p, xs, svals, kmax):
    """``sum_j (x_j p)^m exp(-s x_j p)`` and ``sum_j (1 - exp(-s x_j p))``.

    ``p`` has shape ``(..., S)``; results have shapes ``(..., S, kmax+1, ns)``
    and ``(..., S, ns)``.
    """
    xp = p[..., None] * xs                                    # (..., S, M)
    arg = xp[..., None] * svals                               # (..., S, M, ns)
    e = np.exp(-arg)
    pw = xp[..., None] ** np.arange(kmax + 1)                 # (..., S, M, K+1)
    mom = np.einsum("...mk,...mq->...kq", pw, e)
    com = (-np.expm1(-arg)).sum(axis=-2)
    return mom, com


def _product_derivative(b, comps, coef):
    """Leibniz sum over weak compositions of ``prod_i b_i``'s derivative.

    ``b`` has shape ``(..., S, K+1, ns)`` holding ``(-1)^m``-free derivative
    factors; the caller applies the overall sign.
    """
    if comps.shape[1] == 0:
        return np.ones(b.shape[:-3] + b.shape[-1:])
    acc = None
    for i in range(comps.shape[1]):
        factor = b[..., i, comps[:, i], :]                    # (..., C, ns)
        acc = factor if acc is None else acc * factor
    return np.einsum("...cq,c->...q", acc, coef)


class InterferenceModel:
    """Cached interference integrals for one ``(params, spec)`` pair."""

    def __init__(self, params: SystemParams, spec: IntegrationSpec = DEFAULT_SPEC,
                 max_order: int = MAX_DERIVATIVE_ORDER, budget: int = COMPOSITION_BUDGET,
                 x_quantum: float = 1e-9):
        self.params = params
        self.spec = spec
        self.max_order = max_order
        self.budget = budget
        self.x_quantum = x_quantum
        self._lock = threading.Lock()
        self._origin = {}
        self._inter = {}
        self._inner = {}
        self._xs = np.asarray(params.constellation)

    # -- bookkeeping -------------------------------------------------------
    def _check_budget(self, k: int, parts: int):
        if k > self.max_order:
            raise DerivativeBudgetError(
                f"derivative order {k} exceeds the cap {self.max_order}; use the upper bound")
        n = count_compositions(k, parts)
        if n > self.budget:
            raise DerivativeBudgetError(
                f"order-{k} expansion over {parts} slots needs {n} terms (budget {self.budget}); "
                "use the upper bound")

    @staticmethod
    def _lookup(cache, svals, kmax):
        for (sv, k), val in cache.items():
            if sv == svals and k >= kmax:
                return val
        return None

    # -- reference cluster -------------------------------------------------
    def origin_block(self, svals=(1.0,), kmax=0):
        """Integrals against the Maxwell law over ``[r0, inf)`` for the
        ``L-1`` earlier slots of the reference cluster."""
        svals = tuple(float(s) for s in svals)
        with self._lock:
            hit = self._lookup(self._origin, svals, kmax)
        if hit is not None:
            return hit
        prm = self.params
        n_slots = prm.L - 1
        times = _slot_times(prm, n_slots)
        sv = np.asarray(svals)
        ns, K1 = len(svals), kmax + 1

        def integrand(y):
            psi = distance_pdf_origin_tcp(y, prm.sigma)
            p = observation_probability(times[None, :], y[:, None], prm.D, prm.mu, prm.r0)
            mom, com = _moments(p, self._xs, sv, kmax)
            n = y.size
            return np.concatenate([
                psi[:, None],
                p * psi[:, None],
                (mom * psi[:, None, None, None]).reshape(n, -1),
                (com * psi[:, None, None]).reshape(n, -1),
            ], axis=1)

        flat = np.atleast_1d(integrate_semi_infinite(integrand, prm.r0, self.spec, scale=prm.sigma))
        n0 = flat[0]
        off = 1
        f1 = flat[off:off + n_slots]
        off += n_slots
        mom = flat[off:off + n_slots * K1 * ns].reshape(n_slots, K1, ns)
        off += n_slots * K1 * ns
        com = flat[off:off + n_slots * ns].reshape(n_slots, ns)
        block = {"n0": n0, "f1": f1, "mom": mom, "com": com, "svals": svals, "kmax": kmax}
        with self._lock:
            self._origin[(svals, kmax)] = block
        return block

    # -- other clusters ----------------------------------------------------
    def _inner_rows(self, X, sv, kmax):
        """Per-centre integrals over member distance for centres at ``X``.

        Returns an array ``(len(X), F)``: normaliser, first moments, moment
        table and complements, matching ``origin_block``'s layout.
        """
        prm = self.params
        n_slots = prm.L
        times = _slot_times(prm, n_slots)
        key_base = (tuple(sv.tolist()), kmax)
        keys = [(round(x / self.x_quantum),) + key_base for x in X]
        with self._lock:
            rows = [self._inner.get(k) for k in keys]
        missing = [i for i, r in enumerate(rows) if r is None]
        if missing:
            Xm = X[missing]
            lo = np.maximum(prm.r0, Xm - INNER_HALF_WIDTH * prm.sigma)
            hi = Xm + INNER_HALF_WIDTH * prm.sigma
            width = hi - lo

            def integrand(u):
                y = lo[None, :] + u[:, None] * width[None, :]           # (nu, nx)
                f = distance_pdf_tcp(y, Xm[None, :], prm.sigma) * width[None, :]
                p = observation_probability(times, y[..., None], prm.D, prm.mu, prm.r0)
                mom, com = _moments(p, self._xs, sv, kmax)
                nu, nx = y.shape
                out = np.concatenate([
                    f[..., None],
                    p * f[..., None],
                    (mom * f[..., None, None, None]).reshape(nu, nx, -1),
                    (com * f[..., None, None]).reshape(nu, nx, -1),
                ], axis=2)
                return out.reshape(nu, -1)

            res = np.asarray(integrate(integrand, 0.0, 1.0, self.spec)).reshape(len(missing), -1)
            with self._lock:
                for j, i in enumerate(missing):
                    rows[i] = res[j]
                    self._inner[keys[i]] = res[j]
        return np.stack(rows)

    def inter_block(self, svals=(1.0,), kmax=0):
        """Integrals over the cluster-centre distance ``x in [2 r0, inf)``."""
        svals = tuple(float(s) for s in svals)
        with self._lock:
            hit = self._lookup(self._inter, svals, kmax)
        if hit is not None:
            return hit
        prm = self.params
        ns, K1, S, M = len(svals), kmax + 1, prm.L, prm.M
        sv = np.asarray(svals)
        if prm.lambda_p == 0:
            block = {"e": 0.0, "h": np.zeros(ns), "hder": np.zeros((K1, ns)),
                     "svals": svals, "kmax": kmax}
            with self._lock:
                self._inter[(svals, kmax)] = block
            return block
        for l in range(1, kmax + 1):
            self._check_budget(l, S)
        terms = [_composition_terms(l, S) for l in range(1, kmax + 1)]

        def integrand(X):
            rows = self._inner_rows(X, sv, kmax)
            nx = X.size
            norm = rows[:, 0]
            off = 1
            f1 = rows[:, off:off + S]
            off += S
            mom = rows[:, off:off + S * K1 * ns].reshape(nx, S, K1, ns)
            off += S * K1 * ns
            com = rows[:, off:off + S * ns].reshape(nx, S, ns)
            x2 = X * X
            e_part = x2 * f1.sum(axis=1) / norm
            c = com / (M * norm[:, None, None])
            lt_part = x2[:, None] * -np.expm1(np.log1p(-c).sum(axis=1))
            b = mom / (M * norm[:, None, None, None])
            b[:, :, 0, :] = 1.0 - c
            der = np.empty((nx, kmax, ns))
            for l, (comps, coef) in enumerate(terms, start=1):
                der[:, l - 1, :] = (-1) ** l * _product_derivative(b, comps, coef)
            der *= x2[:, None, None]
            return np.concatenate([e_part[:, None], lt_part, der.reshape(nx, -1)], axis=1)

        scale = max(prm.sigma, math.sqrt(2.0 * prm.D * prm.L * prm.T))
        flat = np.atleast_1d(integrate_semi_infinite(integrand, 2.0 * prm.r0, self.spec, scale=scale))
        coef = 4.0 * math.pi * prm.lambda_p
        e = coef * float(np.mean(self._xs)) * flat[0]
        h = -coef * flat[1:1 + ns]
        hder = np.empty((K1, ns))
        hder[0] = h
        hder[1:] = coef * flat[1 + ns:].reshape(kmax, ns)
        block = {"e": e, "h": h, "hder": hder, "svals": svals, "kmax": kmax}
        with self._lock:
            self._inter[(svals, kmax)] = block
        return block

    # -- public quantities -------------------------------------------------
    def stats(self) -> InterferenceStats:
        prm = self.params
        if prm.L == 1:
            e_intra = 0.0
        else:
            ob = self.origin_block()
            e_intra = float(np.mean(self._xs) * ob["f1"].sum() / ob["n0"])
        return InterferenceStats(e_intra=e_intra, e_inter=float(self.inter_block()["e"]))

    def lt_intra(self, s):
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        if self.params.L == 1:
            out = np.ones_like(s_arr)
        else:
            ob = self.origin_block(tuple(s_arr.tolist()))
            c = ob["com"] / (self.params.M * ob["n0"])
            out = np.exp(np.log1p(-c).sum(axis=0))
        return out if np.ndim(s) else float(out[0])

    def lt_inter(self, s):
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.exp(self.inter_block(tuple(s_arr.tolist()))["h"])
        return out if np.ndim(s) else float(out[0])

    def lt_total(self, s):
        return self.lt_intra(s) * self.lt_inter(s)

    def intra_derivatives(self, kmax: int, s: float = 1.0) -> np.ndarray:
        """``d^k/ds^k`` of the intra-cluster transform at ``s`` for ``k = 0..kmax``."""
        prm = self.params
        S = prm.L - 1
        out = np.zeros(kmax + 1)
        if S == 0:
            out[0] = 1.0
            return out
        for k in range(1, kmax + 1):
            self._check_budget(k, S)
        ob = self.origin_block((float(s),), kmax)
        norm = prm.M * ob["n0"]
        a = ob["mom"][:, :kmax + 1, :] / norm
        a[:, 0, :] = 1.0 - ob["com"] / norm
        for k in range(kmax + 1):
            comps, coef = _composition_terms(k, S)
            out[k] = (-1) ** k * _product_derivative(a, comps, coef)[0]
        return out

    def inter_derivatives(self, kmax: int, s: float = 1.0) -> np.ndarray:
        """``d^k/ds^k`` of the inter-cluster transform at ``s`` (Faa di Bruno)."""
        blk = self.inter_block((float(s),), kmax)
        h = blk["hder"][:, 0]
        value = math.exp(h[0])
        out = np.empty(kmax + 1)
        out[0] = value
        for k in range(1, kmax + 1):
            total = 0.0
            for mult, c in _faa_di_bruno_terms(k):
                term = c
                for l, m in enumerate(mult, start=1):
                    if m:
                        term *= h[l] ** m
                total += term
            out[k] = value * total
        return out

    def total_derivatives(self, kmax: int, s: float = 1.0) -> np.ndarray:
        a = self.intra_derivatives(kmax, s)
        b = self.inter_derivatives(kmax, s)
        return np.array([sum(math.comb(k, r) * a[r] * b[k - r] for r in range(k + 1))
                         for k in range(kmax + 1)])


@functools.lru_cache(maxsize=64)
def model_for(params: SystemParams, spec: IntegrationSpec = DEFAULT_SPEC) -> InterferenceModel:
    return InterferenceModel(params, spec)


def interference_stats(params: SystemParams, spec: IntegrationSpec = DEFAULT_SPEC) -> InterferenceStats:
    return model_for(params, spec).stats()


def expected_intra(params: SystemParams, spec: IntegrationSpec = DEFAULT_SPEC) -> float:
    return interference_stats(params, spec).e_intra


def expected_inter(params: SystemParams, spec: IntegrationSpec = DEFAULT_SPEC) -> float:
    return interference_stats(params, spec).e_inter


def lt_intra(s, params: SystemParams, spec: IntegrationSpec = DEFAULT_SPEC):
    """``E[exp(-s I_intra)]``; ``s`` may be a scalar or an array."""
    return model_for(params, spec).lt_intra(s)


def lt_inter(s, params: SystemParams, spec: IntegrationSpec = DEFAULT_SPEC):
    """``E[exp(-s I_inter)]`` from the probability generating functional of the centres."""
    return model_for(params, spec).lt_inter(s)


def lt_total(s, params: SystemParams, spec: IntegrationSpec = DEFAULT_SPEC):
    return model_for(params, spec).lt_total(s)


def lt_intra_derivatives(k: int, params: SystemParams, spec: IntegrationSpec = DEFAULT_SPEC,
                         s: float = 1.0) -> float:
    if k < 0:
        raise ValueError("k must be non-negative")
    return float(model_for(params, spec).intra_derivatives(k, s)[k])


def lt_inter_derivatives(k: int, params: SystemParams, spec: IntegrationSpec = DEFAULT_SPEC,
                         s: float = 1.0) -> float:
    if k < 0:
        raise ValueError("k must be non-negative")
    return float(model_for(params, spec).inter_derivatives(k, s)[k])


def lt_total_derivatives(k: int, params: SystemParams, spec: IntegrationSpec = DEFAULT_SPEC,
                         s: float = 1.0) -> float:
    if k < 0:
        raise ValueError("k must be non-negative")
    return float(model_for(params, spec).total_derivatives(k, s)[k])
