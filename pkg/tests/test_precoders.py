import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from precodekit.errors import RankDeficient, ZeroChannel
from precodekit.metrics import sinr
from precodekit.model import HybridPair, PhaseVector
from precodekit.precoders import (PowerBudget, ce_project, mrt, one_bit_quantize, random_precoder,
                                  rzf, slnr, zf)

from conftest import crandn


def unit_cols(W):
    return W / np.linalg.norm(W, axis=0)


def chordal(a, b):
    """Column-wise sine of the angle between directions, phase-insensitive."""
    ua, ub = unit_cols(a), unit_cols(b)
    inner = np.sum(ub.conj() * ua, axis=0)
    return np.linalg.norm(ua - ub * inner, axis=0)


def power(W):
    return float(np.sum(np.abs(W) ** 2))


def test_mrt_examples(rng):
    W = mrt(np.array([[1.0, 0.0]]), 2.0).W
    np.testing.assert_allclose(W, [[math.sqrt(2)], [0]], atol=1e-15)
    H = np.array([[1.0, 0, 0], [0, 2.0, 0]])
    W = mrt(H, 1.0).W
    assert abs(H[0] @ W[:, 1]) == 0 and abs(H[1] @ W[:, 0]) == 0
    assert power(mrt(crandn(rng, 2, 4), 3.0).W) == pytest.approx(3.0, abs=1e-12)
    with pytest.raises(ZeroChannel):
        mrt(np.zeros((1, 3)), 1.0)


def test_zf_examples(rng):
    np.testing.assert_allclose(zf(np.eye(3), 3.0).W, np.eye(3), atol=1e-14)
    H = np.array([[1.0, 1j, 0], [0, 0, 2.0]])
    assert np.all(chordal(zf(H, 1).W, mrt(H, 1).W) < 1e-8)
    H = crandn(rng, 4, 8)
    G = H @ zf(H, 1.0).W
    assert np.max(np.abs(G - np.diag(np.diag(G)))) <= 1e-8 * np.linalg.norm(H)
    assert power(zf(H, 1.0).W) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(RankDeficient):
        zf(np.ones((2, 3)), 1.0)


def test_rzf_limits(rng):
    H = crandn(rng, 3, 6)
    assert np.all(chordal(rzf(H, 1.0, 1e-12).W, zf(H, 1.0).W) < 1e-4)
    assert np.all(chordal(rzf(H, 1.0, 1e12).W, mrt(H, 1.0).W) < 1e-4)
    assert power(rzf(H, 2.0, 0.3).W) == pytest.approx(2.0, abs=1e-12)


def slnr_of(H, w, k, sigma2, p):
    K = H.shape[0]
    leak = sum(abs(H[j] @ w) ** 2 for j in range(K) if j != k)
    return abs(H[k] @ w) ** 2 / (leak + sigma2 * np.linalg.norm(w) ** 2 * K / p)


def test_slnr_examples(rng):
    h = crandn(rng, 1, 4)
    assert chordal(slnr(h, 1.0, 0.1).W, mrt(h, 1.0).W)[0] < 1e-8
    H = np.array([[1.0, 0, 0, 0], [0, 1j, 0, 0]])
    assert np.all(chordal(slnr(H, 1.0, 0.1).W, zf(H, 1.0).W) < 1e-8)
    H = crandn(rng, 2, 4)
    Ws, Wm = slnr(H, 1.0, 0.5).W, mrt(H, 1.0).W
    for k in range(2):
        assert slnr_of(H, Ws[:, k], k, 0.5, 1.0) >= slnr_of(H, Wm[:, k], k, 0.5, 1.0) - 1e-12
    assert power(Ws) == pytest.approx(1.0, abs=1e-12)


def test_ce_project_examples():
    np.testing.assert_array_equal(ce_project(np.array([1.0, 2.0, 0.5]), 1.0).theta, 0.0)
    np.testing.assert_allclose(ce_project(1j * np.ones(4), 1.0).theta, math.pi / 2)
    x = np.array([1 + 2j, -3 + 0.1j, -1j])
    p = ce_project(x, 2.0)
    np.testing.assert_allclose(ce_project(p.signal(), 2.0).theta, p.theta, atol=1e-15)
    np.testing.assert_allclose(np.abs(p.signal()), math.sqrt(2.0 / 3))


def test_one_bit_examples():
    np.testing.assert_allclose(one_bit_quantize([1 + 1j], 1.0).signal(),
                               [math.sqrt(0.5) * (1 + 1j)])
    x = one_bit_quantize([-2 + 0.5j, 0.0, 1 - 1j], 3.0).signal()
    assert x[0] == pytest.approx((-1 + 1j) * math.sqrt(3.0 / 6))
    assert x[1] == pytest.approx((1 + 1j) * math.sqrt(3.0 / 6))     # sign(0) = +1


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 16), p=st.floats(1e-3, 1e3), seed=st.integers(0, 2 ** 32 - 1))
def test_one_bit_power_and_fixed_point(n, p, seed):
    x = crandn(np.random.default_rng(seed), n)
    q = one_bit_quantize(x, p)
    assert q.power() == pytest.approx(p, rel=1e-12)
    np.testing.assert_array_equal(one_bit_quantize(q.signal(), p).signal(), q.signal())


@settings(max_examples=40, deadline=None)
@given(K=st.integers(1, 4), extra=st.integers(0, 4), p=st.floats(0.01, 100),
       s2=st.floats(1e-3, 10), seed=st.integers(0, 2 ** 32 - 1))
def test_baselines_power_feasible(K, extra, p, s2, seed):
    H = crandn(np.random.default_rng(seed), K, K + extra)
    for W in (mrt(H, p).W, zf(H, p).W, rzf(H, p, s2).W, slnr(H, p, s2).W):
        assert power(W) <= p + 1e-9 * max(p, 1)


def test_random_precoder():
    for arch, dims in [("FullyDigital", (4, 2)), ("ConstantEnvelope", (4, 2)),
                       ("OneBit", (4, 2)), ("Hybrid", (8, 2, 4))]:
        a = random_precoder(dims, 2.0, 9, arch)
        b = random_precoder(dims, 2.0, 9, arch)
        assert a.power(np.ones(2)) == b.power(np.ones(2))
        if not isinstance(a, HybridPair):
            assert a.power() == pytest.approx(2.0, abs=1e-12)
        else:
            np.testing.assert_array_equal(a.F_rf, b.F_rf)
    ce = random_precoder((5, 2), 1.0, 3, "ConstantEnvelope")
    assert isinstance(ce, PhaseVector)
    np.testing.assert_allclose(np.abs(ce.signal()), math.sqrt(1 / 5))


def test_power_budget_rejects_nonpositive():
    with pytest.raises(ValueError):
        PowerBudget(0.0)


def test_zf_is_interference_free(rng):
    H = crandn(rng, 3, 5)
    s = sinr(H, zf(H, 1.0).W, 1e-3)
    assert np.all(s > 0)
