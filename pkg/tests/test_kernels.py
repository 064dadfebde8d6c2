import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from molnet import _kernels_py, kernels
from molnet.channel import ChannelParams, observation_probability_g

P = ChannelParams()
HAVE_EXT = "cython" in kernels.available_backends()


def _inputs(rng, n, groups=7):
    d = 5.0 + rng.exponential(40.0, n)
    slot = rng.integers(0, 5, n)
    w = rng.choice([0.0, 60.0], n)
    t_slot = np.array([2.5, 2.0, 1.5, 1.0, 0.5])
    grp = rng.integers(0, groups, n)
    return d, slot, w, t_slot, grp, groups


def test_python_kernel_matches_channel():
    rng = np.random.default_rng(0)
    d, slot, w, t_slot, grp, ng = _inputs(rng, 500)
    out = _kernels_py.accumulate_interference(d, slot, w, t_slot, grp, ng, P.D, P.mu, P.r0)
    ref = np.zeros(ng)
    for di, si, wi, gi in zip(d, slot, w, grp):
        ref[gi] += wi * observation_probability_g(t_slot[si], di, P)
    assert np.allclose(out, ref, rtol=1e-13, atol=0)


@pytest.mark.skipif(not HAVE_EXT, reason="compiled kernels not built")
@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2000), st.integers(0, 2 ** 32 - 1))
def test_backends_agree(n, seed):
    args = _inputs(np.random.default_rng(seed), n)
    a = kernels.accumulate_interference(*args, P.D, P.mu, P.r0, backend="python")
    b = kernels.accumulate_interference(*args, P.D, P.mu, P.r0, backend="cython")
    assert np.allclose(a, b, rtol=1e-13, atol=1e-300)


@pytest.mark.skipif(not HAVE_EXT, reason="compiled kernels not built")
def test_backends_agree_near_origin():
    from molnet import _kernels
    d = np.array([1e-12, 1e-8, 1e-3, 4.999, 5.0, 5.001])
    a = _kernels_py.observation_probability(0.7, d, P.D, P.mu, P.r0)
    b = _kernels.observation_probability_1d(0.7, d, P.D, P.mu, P.r0)
    assert np.allclose(a, b, rtol=1e-14)


def test_empty_input():
    out = kernels.accumulate_interference(np.empty(0), np.empty(0, int), np.empty(0), np.array([0.5]),
                                          np.empty(0, int), 3, P.D, P.mu, P.r0)
    assert np.array_equal(out, np.zeros(3))


def test_backend_listing():
    assert "python" in kernels.available_backends()
    assert kernels.BACKEND in kernels.available_backends()
