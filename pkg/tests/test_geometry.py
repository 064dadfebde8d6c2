import math

import numpy as np
import pytest
from scipy import integrate, stats

from molnet.geometry import (
    DistanceDistribution,
    distance_pdf_general,
    distance_pdf_origin_tcp,
    distance_pdf_tcp,
    gaussian_offspring,
    sample_distance,
    survival_beyond,
)

from oracles import tcp_pdf

SIGMA = 20.0


@pytest.mark.parametrize("x", [2.0, 20.0, 70.0])
def test_tcp_closed_form_matches_direct_formula(x):
    for y in (0.5, 10.0, 40.0, 90.0):
        assert distance_pdf_tcp(y, x, SIGMA) == pytest.approx(tcp_pdf(y, x, SIGMA), rel=1e-12)


def test_tcp_closed_form_is_a_density():
    for x in (0.5, 30.0, 100.0):
        tot = integrate.quad(lambda y: distance_pdf_tcp(y, x, SIGMA), 0, x + 15 * SIGMA, points=[x])[0]
        assert tot == pytest.approx(1.0, abs=1e-10)


def test_origin_form_is_maxwell():
    y = np.linspace(0.1, 100, 50)
    assert np.allclose(distance_pdf_origin_tcp(y, SIGMA), stats.maxwell.pdf(y, scale=SIGMA), rtol=1e-13)


def test_general_form_with_vector_parent_is_isotropic():
    dens = gaussian_offspring(SIGMA)
    x = 35.0
    a = distance_pdf_general(30.0, np.array([x, 0, 0]), dens)
    b = distance_pdf_general(30.0, np.array([0, x / math.sqrt(2), x / math.sqrt(2)]), dens)
    assert a == pytest.approx(b, rel=1e-9)
    assert a == pytest.approx(distance_pdf_tcp(30.0, x, SIGMA), rel=1e-9)


def test_tcp_rejects_nonpositive_parent():
    with pytest.raises(ValueError):
        distance_pdf_tcp(1.0, 0.0, SIGMA)


def test_conditional_distribution_normalised_and_mean():
    dist = DistanceDistribution(50.0, SIGMA, 5.0)
    tot = integrate.quad(dist.conditional_pdf, 5.0, 50 + 15 * SIGMA, points=[50.0])[0]
    assert tot == pytest.approx(1.0, abs=1e-10)
    mean = integrate.quad(lambda y: y * dist.conditional_pdf(y), 5.0, 50 + 15 * SIGMA, points=[50.0])[0]
    assert dist.conditional_mean() == pytest.approx(mean, rel=1e-9)
    assert dist.conditional_pdf(4.0) == 0.0


def test_survival_at_origin_parent():
    dist = DistanceDistribution(0.0, SIGMA, 5.0)
    assert dist.normalizer_beyond_r0 == pytest.approx(stats.maxwell.sf(5.0, scale=SIGMA), rel=1e-11)
    assert survival_beyond(0.0, dist) == pytest.approx(1.0, abs=1e-12)


def test_sampled_distances_follow_conditional_pdf():
    dist = DistanceDistribution(50.0, SIGMA, 5.0)
    rng = np.random.default_rng(3)
    d = sample_distance(dist, rng, size=40_000)
    assert d.min() > 5.0
    edges = np.linspace(5.0, 130.0, 26)
    counts, _ = np.histogram(d, bins=np.append(edges, np.inf))
    cdf = [integrate.quad(dist.conditional_pdf, 5.0, e, points=[50.0])[0] if e > 5 else 0.0 for e in edges]
    probs = np.diff(np.append(cdf, 1.0))
    chi2 = np.sum((counts - d.size * probs) ** 2 / (d.size * probs))
    assert chi2 < stats.chi2.ppf(0.99, counts.size - 1)
