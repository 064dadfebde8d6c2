"""Special functions, adaptive quadrature and integer enumerations.

The quadrature routines work on vectorised, optionally vector-valued
integrands: ``f`` receives a 1-D array of nodes of shape ``(n,)`` and returns
an array of shape ``(n,)`` or ``(n, *out_shape)``. All components share one
panel partition, which keeps results that are later finite-differenced
(e.g. Laplace transforms at neighbouring ``s``) smooth in their parameters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np
from scipy import special

__all__ = [
    "IntegrationSpec",
    "QuadratureError",
    "DomainError",
    "erf",
    "lambert_w",
    "integrate",
    "integrate_semi_infinite",
    "compositions",
    "iter_compositions",
    "composition_array",
    "count_compositions",
    "partition_multiplicities",
    "log_poisson_pmf",
    "multinomial",
]


class QuadratureError(RuntimeError):
    """Adaptive integration did not reach the requested tolerance.

    ``partial`` holds the best estimate available when the routine gave up.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


@dataclass(frozen=True)
class IntegrationSpec:
    """Tolerance policy shared by every integral in the package."""

    abs_tol: float = 1e-15
    rel_tol: float = 1e-10
    max_subdivisions: int = 4000
    # fraction of the integrand mass allowed to be dropped when truncating [a, inf)
    tail_cutoff_mass: float = 1e-13

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be a positive integer")
        if not 0 < self.tail_cutoff_mass < 1e-8:
            raise ValueError("tail_cutoff_mass must lie in (0, 1e-8)")


DEFAULT_SPEC = IntegrationSpec()


# ---------------------------------------------------------------------------
# special functions

def erf(x):
    """Error function; scalars go through :func:`math.erf`, arrays through scipy."""
    if np.ndim(x) == 0:
        return math.erf(float(x))
    return special.erf(np.asarray(x, dtype=float))


_INV_E = math.exp(-1.0)


def _halley(w, z, iters=60):
    for _ in range(iters):
        ew = math.exp(w)
        f = w * ew - z
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        if denom == 0.0:
            break
        step = f / denom
        w_new = w - step
        if not math.isfinite(w_new):
            break
        if abs(step) <= 4e-16 * max(1.0, abs(w_new)):
            return w_new
        w = w_new
    return w


def lambert_w(branch: str, z: float) -> float:
    """Real Lambert W on the ``"principal"`` (W0) or ``"minus_one"`` (W-1) branch.

    Halley iteration seeded from the branch-point series near ``-1/e`` and from
    the logarithmic asymptotics elsewhere.
    """
    z = float(z)
    if not math.isfinite(z) and not (branch == "principal" and z == math.inf):
        raise DomainError(f"lambert_w: non-finite argument {z}")
    branch_slack = 4 * np.finfo(float).eps
    if branch == "principal":
        if z < -_INV_E - branch_slack:
            raise DomainError(f"W0 undefined for z={z} < -1/e")
        if z == math.inf:
            return math.inf
        if z == 0.0:
            return 0.0
        if z <= -_INV_E:
            return -1.0
        p2 = 2.0 * (math.e * z + 1.0)
        if p2 < 0.5:
            p = math.sqrt(p2)
            w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
        elif z < 3.0:
            w = math.log1p(z) * (1.0 - math.log1p(math.log1p(z)) / (2.0 + math.log1p(z)))
        else:
            lz = math.log(z)
            llz = math.log(lz)
            w = lz - llz + llz / lz
        return _halley(w, z)
    if branch == "minus_one":
        if z < -_INV_E - branch_slack or z >= 0.0:
            raise DomainError(f"W-1 undefined for z={z}; need -1/e <= z < 0")
        if z <= -_INV_E:
            return -1.0
        p2 = 2.0 * (math.e * z + 1.0)
        if p2 < 0.5:
            p = math.sqrt(p2)
            w = -1.0 - p - p * p / 3.0 - 11.0 / 72.0 * p ** 3
        else:
            l1 = math.log(-z)
            l2 = math.log(-l1)
            w = l1 - l2 + l2 / l1
        return _halley(w, z)
    raise ValueError(f"unknown branch {branch!r}")


def log_poisson_pmf(k, mean):
    """``log P(N = k)`` for ``N ~ Poisson(mean)``, evaluated without factorials."""
    if np.ndim(k) == 0 and np.ndim(mean) == 0:
        k = int(k)
        if k < 0:
            raise ValueError("k must be non-negative")
        if not mean > 0:
            raise ValueError("mean must be positive")
        return k * math.log(mean) - mean - math.lgamma(k + 1)
    k = np.asarray(k)
    mean = np.asarray(mean, dtype=float)
    return special.xlogy(k, mean) - mean - special.gammaln(k + 1.0)


# ---------------------------------------------------------------------------
# Gauss-Kronrod (7, 15) rule; abscissae and weights from QUADPACK qk15

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[-2::-1]])
_KW = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[-2::-1]])
_GW = np.zeros(15)
_GW[[1, 3, 5]] = _WG[:3]
_GW[7] = _WG[3]
_GW[[13, 11, 9]] = _WG[:3]

_EPS = np.finfo(float).eps
_TINY = np.finfo(float).tiny


def _gk15(f, lo, hi):
    """Apply the 15-point rule to each panel ``[lo[p], hi[p]]``."""
    centre = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = (centre[:, None] + half[:, None] * _NODES[None, :]).ravel()
    fx = np.asarray(f(x), dtype=float)
    if fx.shape[0] != x.shape[0]:
        raise ValueError("integrand must return one row per node")
    out_shape = fx.shape[1:]
    fx = fx.reshape((lo.size, 15, -1))
    h = half[:, None]
    resk = np.einsum("pnc,n->pc", fx, _KW)
    resg = np.einsum("pnc,n->pc", fx, _GW)
    resabs = np.einsum("pnc,n->pc", np.abs(fx), _KW)
    reskh = 0.5 * resk
    resasc = np.einsum("pnc,n->pc", np.abs(fx - reskh[:, None, :]), _KW)
    est = resk * h
    err = np.abs((resk - resg) * h)
    resasc = resasc * np.abs(h)
    resabs = resabs * np.abs(h)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc != 0) & (err != 0), scaled, err)
    floor = 50.0 * _EPS * resabs
    err = np.where(resabs > _TINY / (50.0 * _EPS), np.maximum(err, floor), err)
    if not np.all(np.isfinite(est)):
        raise QuadratureError("integrand returned non-finite values")
    return est, err, out_shape


def integrate(f: Callable, a: float, b: float, spec: IntegrationSpec = DEFAULT_SPEC):
    """Globally adaptive Gauss-Kronrod integral of ``f`` over ``[a, b]``.

    Every component must satisfy ``err <= max(abs_tol, rel_tol * |value|)``.
    Returns a float for scalar integrands, an array otherwise.
    """
    a = float(a)
    b = float(b)
    if a == b:
        probe = np.asarray(f(np.array([a])), dtype=float)
        zero = np.zeros(probe.shape[1:])
        return float(zero) if zero.ndim == 0 else zero
    lo = np.array([a])
    hi = np.array([b])
    est, err, out_shape = _gk15(f, lo, hi)
    while True:
        total = est.sum(axis=0)
        total_err = err.sum(axis=0)
        tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(total))
        if np.all(total_err <= tol):
            break
        if lo.size >= spec.max_subdivisions:
            value = total.reshape(out_shape)
            raise QuadratureError(
                f"no convergence on [{a}, {b}] after {lo.size} panels "
                f"(worst error ratio {np.max(total_err / tol):.3g})",
                partial=float(value) if value.ndim == 0 else value,
            )
        ratio = (err / tol[None, :]).max(axis=1)
        split = ratio >= 0.25 * ratio.max()
        budget = spec.max_subdivisions - lo.size
        if split.sum() > budget:
            keep = np.argsort(ratio)[::-1][:max(budget, 1)]
            split = np.zeros_like(split)
            split[keep] = True
        mid = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[split], mid])
        new_hi = np.concatenate([mid, hi[split]])
        new_est, new_err, _ = _gk15(f, new_lo, new_hi)
        keep = ~split
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        est = np.concatenate([est[keep], new_est])
        err = np.concatenate([err[keep], new_err])
    value = total.reshape(out_shape)
    return float(value) if value.ndim == 0 else value


def integrate_semi_infinite(f: Callable, a: float, spec: IntegrationSpec = DEFAULT_SPEC,
                            scale: float = 1.0, max_doublings: int = 80):
    """Integral of a decaying ``f`` over ``[a, inf)``.

    The range is covered by adjacent chunks of doubling width starting at
    ``scale``; integration stops after two consecutive chunks each contribute
    less than ``max(abs_tol, tail_cutoff_mass * |total|)`` in every component.
    """
    if not scale > 0:
        raise ValueError("scale must be positive")
    total = None
    lo = float(a)
    width = float(scale)
    quiet = 0
    for _ in range(max_doublings):
        try:
            inc = np.asarray(integrate(f, lo, lo + width, spec))
        except QuadratureError as exc:
            partial = np.asarray(exc.partial) if total is None else total + exc.partial
            raise QuadratureError(str(exc), partial=partial) from None
        total = inc if total is None else total + inc
        limit = np.maximum(spec.abs_tol, spec.tail_cutoff_mass * np.abs(total))
        quiet = quiet + 1 if np.all(np.abs(inc) <= limit) else 0
        if quiet >= 2:
            return float(total) if total.ndim == 0 else total
        lo += width
        width *= 2.0
    raise QuadratureError(f"tail of integral from {a} did not decay", partial=total)


# ---------------------------------------------------------------------------
# integer enumerations

def count_compositions(k: int, parts: int) -> int:
    """Number of ordered ``parts``-tuples of non-negative integers summing to ``k``."""
    if parts == 0:
        return 1 if k == 0 else 0
    return math.comb(k + parts - 1, parts - 1)


def iter_compositions(k: int, parts: int) -> Iterator[tuple[int, ...]]:
    """Lexicographic stream of weak compositions of ``k`` into ``parts`` parts."""
    if k < 0 or parts < 0:
        raise ValueError("k and parts must be non-negative")
    if parts == 0:
        if k == 0:
            yield ()
        return
    if parts == 1:
        yield (k,)
        return
    for first in range(k + 1):
        for rest in iter_compositions(k - first, parts - 1):
            yield (first,) + rest


def compositions(k: int, parts: int) -> list[tuple[int, ...]]:
    if parts < 1:
        raise ValueError("parts must be >= 1")
    return list(iter_compositions(k, parts))


def composition_array(k: int, parts: int) -> np.ndarray:
    """Weak compositions as an ``(count, parts)`` integer array (same order)."""
    n = count_compositions(k, parts)
    out = np.empty((n, parts), dtype=np.int64)
    if parts == 0:
        return out
    for row, comp in enumerate(iter_compositions(k, parts)):
        out[row] = comp
    return out


def _partitions(k: int, largest: int) -> Iterator[list[int]]:
    if k == 0:
        yield []
        return
    for first in range(min(k, largest), 0, -1):
        for rest in _partitions(k - first, first):
            yield [first] + rest


def partition_multiplicities(k: int) -> list[tuple[int, ...]]:
    """All ``(m_1, ..., m_k)`` with ``sum(l * m_l) == k``; one per integer partition of ``k``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    out = []
    for parts in _partitions(k, k):
        mult = [0] * k
        for p in parts:
            mult[p - 1] += 1
        out.append(tuple(mult))
    return out


def multinomial(parts) -> int:
    """``(sum parts)! / prod(parts_i!)`` as an exact integer."""
    total = 0
    out = 1
    for p in parts:
        total += p
        out *= math.comb(total, p)
    return out
