"""Independent reference implementations built on scipy.

Nothing here imports the package's quadrature or closed forms: the
observation probability comes from the noncentral chi-squared law of a
Brownian displacement, and expectations use ``scipy.integrate.quad``.
"""
import math

import numpy as np
from scipy import integrate, stats


def g_ncx2(t, d, D, mu, r0):
    """P(|d e1 + sqrt(2 D t) Z| < r0) e^{-mu t}."""
    s2 = 2.0 * D * t
    return math.exp(-mu * t) * stats.ncx2.cdf(r0 * r0 / s2, 3, d * d / s2)


def g_brownian(t, d, D, mu, r0, n, rng):
    """Monte Carlo: final positions of free diffusion, survival by degradation."""
    pos = rng.normal(0.0, math.sqrt(2 * D * t), size=(n, 3))
    pos[:, 0] += d
    inside = np.einsum("ij,ij->i", pos, pos) < r0 * r0
    alive = rng.random(n) < math.exp(-mu * t)
    return float(np.mean(inside & alive))


def tcp_pdf(y, x, sigma):
    """Distance density of a Gaussian offspring about a centre at distance x."""
    return y / (math.sqrt(2 * math.pi) * sigma * x) * (
        math.exp(-(y - x) ** 2 / (2 * sigma ** 2)) - math.exp(-(y + x) ** 2 / (2 * sigma ** 2)))


def maxwell_pdf(y, sigma):
    return stats.maxwell.pdf(y, scale=sigma)


def _g(t, y, p):
    return g_ncx2(t, y, p.D, p.mu, p.r0)


def _slot_mix(s, t, y, p):
    return np.mean([math.exp(-s * x * _g(t, y, p)) for x in p.constellation])


def intra_reference(p, s=None):
    """Mean intra-cluster interference, or its Laplace transform at ``s``."""
    norm = stats.maxwell.sf(p.r0, scale=p.sigma)
    xbar = float(np.mean(p.constellation))
    out = 0.0 if s is None else 1.0
    for i in range(1, p.L):
        t = (p.L - i + 1) * p.T
        if s is None:
            f = lambda y: maxwell_pdf(y, p.sigma) * xbar * _g(t, y, p)
        else:
            f = lambda y: maxwell_pdf(y, p.sigma) * _slot_mix(s, t, y, p)
        v = integrate.quad(f, p.r0, p.r0 + 12 * p.sigma, epsabs=1e-13, epsrel=1e-11, limit=200)[0] / norm
        out = out + v if s is None else out * v
    return out


def inter_reference(p, s=None, x_max_sigmas=30.0):
    """Mean inter-cluster interference, or its Laplace transform at ``s``."""
    xbar = float(np.mean(p.constellation))
    times = [(p.L - i + 1) * p.T for i in range(1, p.L + 1)]

    def cluster(x):
        lo, hi = max(p.r0, x - 12 * p.sigma), x + 12 * p.sigma
        pts = [x] if lo < x < hi else None
        norm = integrate.quad(lambda y: tcp_pdf(y, x, p.sigma), lo, hi, points=pts, limit=200)[0]
        if s is None:
            val = 0.0
            for t in times:
                val += integrate.quad(lambda y: tcp_pdf(y, x, p.sigma) * xbar * _g(t, y, p),
                                      lo, hi, points=pts, limit=200)[0]
            return val / norm
        prod = 1.0
        for t in times:
            prod *= integrate.quad(lambda y: tcp_pdf(y, x, p.sigma) * _slot_mix(s, t, y, p),
                                   lo, hi, points=pts, limit=200)[0] / norm
        return 1.0 - prod

    upper = 2 * p.r0 + x_max_sigmas * p.sigma
    total = integrate.quad(lambda x: x * x * cluster(x), 2 * p.r0, upper, limit=200,
                           epsabs=1e-14, epsrel=1e-9)[0]
    total *= 4 * math.pi * p.lambda_p
    return total if s is None else math.exp(-total)


def poisson_error_no_interference(p, th):
    """Error probability without interference (pure Poisson noise + signal)."""
    pll = g_ncx2(p.T, p.y0_norm, p.D, p.mu, p.r0)
    means = [pll * x + p.lambda_0 * p.T for x in p.constellation]
    bounds = [0, *th, math.inf]
    err = []
    for j, m in enumerate(means):
        lo, hi = bounds[j], bounds[j + 1]
        ok = stats.poisson.cdf(hi - 1, m) if math.isfinite(hi) else 1.0
        ok -= stats.poisson.cdf(lo - 1, m) if lo > 0 else 0.0
        err.append(1.0 - ok)
    return float(np.mean(err))


def error_one_intra_slot(p, th):
    """L = 2, no other clusters: a single earlier transmitter from the own
    cluster; the conditional Poisson error integrated over its distance."""
    pll = g_ncx2(p.T, p.y0_norm, p.D, p.mu, p.r0)
    norm = stats.maxwell.sf(p.r0, scale=p.sigma)
    bounds = [0, *th, math.inf]
    xs = p.constellation
    err = []
    for j, xj in enumerate(xs):
        lo, hi = bounds[j], bounds[j + 1]

        def correct(y):
            val = 0.0
            for xi in xs:
                m = pll * xj + p.lambda_0 * p.T + xi * _g(2 * p.T, y, p)
                c = stats.poisson.cdf(hi - 1, m) if math.isfinite(hi) else 1.0
                c -= stats.poisson.cdf(lo - 1, m) if lo > 0 else 0.0
                val += c / len(xs)
            return maxwell_pdf(y, p.sigma) * val

        ok = integrate.quad(correct, p.r0, p.r0 + 12 * p.sigma, epsabs=1e-13, epsrel=1e-11, limit=200)[0] / norm
        err.append(1.0 - ok)
    return float(np.mean(err))
