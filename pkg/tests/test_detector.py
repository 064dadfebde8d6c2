import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from molnet.detector import (
    DetectorThresholds,
    RegimeError,
    compute_thresholds,
    decide,
    likelihood_argmax,
    ook_regime_threshold_xi,
)
from molnet.interference import InterferenceStats, interference_stats
from molnet.params import table1

P = table1()


def test_table1_thresholds():
    th = compute_thresholds(P, interference_stats(P))
    assert th.th == (2,)
    assert th.noise_mean == pytest.approx(P.lambda_0 * P.T)
    assert th.background == pytest.approx(th.mean_interference + th.noise_mean)


@settings(max_examples=150, deadline=None)
@given(
    st.floats(0.0, 3.0),
    st.floats(0.0, 2.0),
    st.lists(st.floats(1.0, 400.0), min_size=1, max_size=3, unique=True),
)
def test_thresholds_agree_with_likelihood_argmax(e_int, lam0, xs):
    xs = sorted(set(round(x, 6) for x in xs))
    params = P.with_(constellation=(0.0, *xs), lambda_0=lam0)
    th = compute_thresholds(params, InterferenceStats(e_int, 0.0))
    assert all(t >= 1 for t in th.th)
    assert list(th.th) == sorted(th.th)
    for y in range(0, th.th[-1] + 5):
        if th.background == 0 and y == 0:
            continue    # every symbol with zero mean explains y = 0 equally
        assert decide(y, th) == likelihood_argmax(y, params, th)


def test_zero_background_floor():
    params = P.with_(lambda_0=0.0)
    th = compute_thresholds(params, InterferenceStats(0.0, 0.0))
    assert th.th == (1,)
    assert decide(0, th) == 0 and decide(1, th) == 1


def test_decide_cells():
    th = DetectorThresholds((2, 5), 0.1, 0.3, 0.05)
    assert [decide(y, th) for y in range(8)] == [0, 0, 1, 1, 1, 2, 2, 2]
    assert np.array_equal(decide(np.array([0, 2, 9]), th), [0, 1, 2])
    with pytest.raises(ValueError):
        decide(1, th, constellation=(0, 1))


def test_ook_boundary_brackets_transition():
    stats = interference_stats(P)
    xi0 = ook_regime_threshold_xi(P, stats)
    below = compute_thresholds(P.with_(constellation=(0.0, xi0 * (1 - 1e-6))), stats)
    above = compute_thresholds(P.with_(constellation=(0.0, xi0 * (1 + 1e-6))), stats)
    assert below.th == (1,) and above.th == (2,)


def test_ook_boundary_fixed_point():
    stats = interference_stats(P)
    xi0 = ook_regime_threshold_xi(P, stats)
    th = compute_thresholds(P, stats)
    a = th.background
    assert (th.p_ll * xi0 + a) / a == pytest.approx(math.exp(th.p_ll * xi0), rel=1e-10)


def test_ook_regime_absent_for_large_background():
    with pytest.raises(RegimeError):
        ook_regime_threshold_xi(P.with_(lambda_0=4.0), interference_stats(P))
    assert ook_regime_threshold_xi(P.with_(lambda_0=0.0), InterferenceStats(0.0, 0.0)) == math.inf
