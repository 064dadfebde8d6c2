import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from molnet.numerics import (
    DomainError,
    IntegrationSpec,
    QuadratureError,
    composition_array,
    compositions,
    count_compositions,
    erf,
    integrate,
    integrate_semi_infinite,
    iter_compositions,
    lambert_w,
    log_poisson_pmf,
    multinomial,
    partition_multiplicities,
)


def test_integrate_polynomial_and_exp():
    assert integrate(lambda x: x ** 3, 0.0, 2.0) == pytest.approx(4.0, rel=1e-14)
    assert integrate(np.exp, -1.0, 1.0) == pytest.approx(math.e - 1 / math.e, rel=1e-13)


def test_integrate_peaked_integrand():
    val = integrate(lambda x: np.exp(-((x - 0.3) / 1e-3) ** 2), 0.0, 1.0)
    assert val == pytest.approx(math.sqrt(math.pi) * 1e-3, rel=1e-9)


def test_integrate_vector_valued():
    # the cosine component is zero, so only the absolute tolerance can be met
    spec = IntegrationSpec(abs_tol=1e-13)
    val = integrate(lambda x: np.stack([np.sin(x), np.cos(x)], axis=-1), 0.0, math.pi, spec)
    assert np.allclose(val, [2.0, 0.0], atol=1e-13)


def test_integrate_reversed_and_empty():
    assert integrate(lambda x: x, 1.0, 0.0) == pytest.approx(-0.5)
    assert integrate(lambda x: x, 1.0, 1.0) == 0.0


def test_semi_infinite_gaussian_tail():
    val = integrate_semi_infinite(lambda x: np.exp(-x * x / 2), 1.0, scale=1.0)
    assert val == pytest.approx(math.sqrt(math.pi / 2) * special.erfc(1 / math.sqrt(2)), rel=1e-10)


def test_semi_infinite_non_decaying_fails():
    with pytest.raises(QuadratureError):
        integrate_semi_infinite(lambda x: np.ones_like(x), 0.0, scale=1.0, max_doublings=10)


def test_integration_spec_validation():
    with pytest.raises(ValueError):
        IntegrationSpec(rel_tol=-1)
    with pytest.raises(ValueError):
        IntegrationSpec(tail_cutoff_mass=1e-3)


def test_erf_scalar_and_array():
    assert erf(0.5) == pytest.approx(math.erf(0.5), rel=1e-15)
    xs = np.linspace(-3, 3, 13)
    assert np.allclose(erf(xs), special.erf(xs), rtol=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.floats(-1 / math.e + 1e-12, 50.0))
def test_lambert_principal_matches_scipy(z):
    w = lambert_w("principal", z)
    assert w == pytest.approx(special.lambertw(z, 0).real, rel=1e-12, abs=1e-13)
    assert w * math.exp(w) == pytest.approx(z, rel=1e-11, abs=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.floats(-1 / math.e + 1e-12, -1e-300))
def test_lambert_minus_one_matches_mpmath(z):
    # scipy loses accuracy next to the branch point; mpmath is the reference
    w = lambert_w("minus_one", z)
    assert w <= -1.0
    assert w == pytest.approx(float(mpmath.lambertw(mpmath.mpf(z), -1)), rel=1e-10)


def test_lambert_domain():
    with pytest.raises(DomainError):
        lambert_w("principal", -0.5)
    with pytest.raises(DomainError):
        lambert_w("minus_one", 0.1)
    with pytest.raises(ValueError):
        lambert_w("other", 0.1)
    assert lambert_w("principal", -1 / math.e) == pytest.approx(-1.0, abs=1e-7)


def test_log_poisson_pmf():
    from scipy.stats import poisson
    for k, m in [(0, 0.3), (5, 2.5), (40, 60.0)]:
        assert log_poisson_pmf(k, m) == pytest.approx(poisson.logpmf(k, m), rel=1e-12)


@pytest.mark.parametrize("k,parts", [(0, 1), (3, 2), (4, 3), (6, 4), (5, 1)])
def test_composition_counts(k, parts):
    comps = compositions(k, parts)
    assert len(comps) == count_compositions(k, parts) == math.comb(k + parts - 1, parts - 1)
    assert len(set(comps)) == len(comps)
    assert all(sum(c) == k and len(c) == parts and min(c) >= 0 for c in comps)
    assert comps == sorted(comps)
    assert np.array_equal(composition_array(k, parts), np.array(comps).reshape(-1, parts))


def test_composition_edge_cases():
    assert list(iter_compositions(0, 0)) == [()]
    assert list(iter_compositions(2, 0)) == []
    with pytest.raises(ValueError):
        compositions(2, 0)


def _euler_partitions(n):
    # pentagonal number recurrence
    p = [1] + [0] * n
    for m in range(1, n + 1):
        k, total = 1, 0
        while True:
            g1 = k * (3 * k - 1) // 2
            if g1 > m:
                break
            sign = 1 if k % 2 else -1
            total += sign * p[m - g1]
            g2 = k * (3 * k + 1) // 2
            if g2 <= m:
                total += sign * p[m - g2]
            k += 1
        p[m] = total
    return p


def test_partition_counts_match_euler_recurrence():
    ref = _euler_partitions(20)
    for k in range(1, 21):
        mults = partition_multiplicities(k)
        assert len(mults) == ref[k]
        assert all(sum((i + 1) * m for i, m in enumerate(mu)) == k for mu in mults)


def test_multinomial():
    assert multinomial([2, 1, 1]) == 12
    assert multinomial([0, 0]) == 1
    assert multinomial([5]) == 1
