import math

import numpy as np
import pytest

from precodekit.errors import (DegenerateNullspace, Infeasible, NotConverged, TooLarge,
                               UnknownStrategy)
from precodekit.harness import feasibility_check
from precodekit.metrics import (interference_power, normalized_margin, robust_interference_power,
                                secrecy_rate, sinr, sum_rate)
from precodekit.precoders import mrt, one_bit_quantize, rzf, slnr, zf
from precodekit.scenarios import instantiate_scenario, psk_symbols
from precodekit.solvers import (Hyperparams, SolverStrategy, StrategyId, ce_phase_coordinate_descent,
                                cr_robust_sumrate, cr_sumrate_proj_ascent, exhaustive_oracle,
                                fd_power_min, hybrid_robust_ci_altmin, one_bit_greedy_cd,
                                registered_ids, registry_lookup, secrecy_nullspace_maxmin,
                                sinr_power_min_duality, solve_default, wmmse_sumrate)
from precodekit.solvers.hybrid import ci_power_min_digital
from precodekit.baselines import rate_scaled_zf

from conftest import crandn


def defaults(strategy):
    return registry_lookup(strategy).defaults


def power(W):
    return float(np.sum(np.abs(W) ** 2))


def qpsk(rng, K):
    return psk_symbols(4, K, rng)


def monotone(trace, direction, tol=1e-8):
    d = np.diff(trace)
    return bool(np.all(d >= -tol) if direction == "max" else np.all(d <= tol))


# duality power-min ------------------------------------------------------------
def test_duality_single_user_closed_form(rng):
    h = crandn(rng, 1, 4)
    out = sinr_power_min_duality(h, [2.0], 0.5)
    assert out.objective == pytest.approx(2.0 * 0.5 / np.linalg.norm(h) ** 2, rel=1e-9)
    w = out.solution.W[:, 0]
    assert abs(abs(np.vdot(w, h.conj().ravel())) / np.linalg.norm(w) - np.linalg.norm(h)) < 1e-9


def test_duality_orthogonal_users():
    H = np.array([[1.0, 0, 0], [0, 2.0, 0]])
    out = sinr_power_min_duality(H, [1.0, 3.0], 0.1)
    assert out.objective == pytest.approx(1.0 * 0.1 / 1 + 3.0 * 0.1 / 4, rel=1e-9)


@pytest.mark.parametrize("seed", range(3))
def test_duality_matches_grid_oracle(seed):
    rng = np.random.default_rng(seed)
    H = crandn(rng, 2, 2)
    gammas, s2 = np.array([1.0, 1.0]), 0.5
    out = sinr_power_min_duality(H, gammas, s2)
    ref = exhaustive_oracle("power_min", {"H": H, "gammas": gammas, "sigma2": s2}, grid=40)
    assert out.objective == pytest.approx(ref.objective, rel=1e-3)
    assert out.objective <= ref.objective * (1 + 1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_duality_active_targets_and_zf_ordering(seed):
    _, theta = instantiate_scenario(1, 0, seed)
    gammas = theta.sinr_targets()
    out = sinr_power_min_duality(theta.H, gammas, theta.sigma2)
    s = sinr(theta.H, out.solution.W, theta.sigma2)
    np.testing.assert_allclose(s, gammas, rtol=1e-6)
    assert out.objective <= power(rate_scaled_zf(theta.H, gammas, theta.sigma2)) * (1 + 1e-12)


def test_duality_infeasible_and_not_converged(rng):
    H = np.array([[1.0, 0.0], [1.0, 1e-9]])
    with pytest.raises(Infeasible):
        sinr_power_min_duality(H, [10.0, 10.0], 1.0)
    with pytest.raises(NotConverged) as exc:
        sinr_power_min_duality(crandn(rng, 3, 4), [1, 1, 1], 1.0, {"max_iter": 1})
    assert exc.value.outcome.iterations == 1


# full-duplex power-min --------------------------------------------------------
def test_fd_reduces_to_duality(rng):
    H = crandn(rng, 3, 6)
    ref = sinr_power_min_duality(H, [1, 1, 1], 0.2)
    for G, eta in [(np.zeros((1, 6)), 0.01), (crandn(rng, 1, 6), 1e12)]:
        out = fd_power_min(H, [1, 1, 1], G, eta, 0.2)
        assert out.objective == pytest.approx(ref.objective, rel=1e-9)


def test_fd_binding_self_interference():
    found = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        H, G = crandn(rng, 2, 4), crandn(rng, 1, 4)
        free = sinr_power_min_duality(H, [1, 1], 0.1)
        si = power(G @ free.solution.W)
        eta = 0.5 * si
        out = fd_power_min(H, [1, 1], G, eta, 0.1)
        W = out.solution.W
        assert eta - 1e-6 <= power(G @ W) <= eta + 1e-12
        assert np.all(sinr(H, W, 0.1) >= 1 - 1e-6)
        found += 1
    assert found == 20


# constant envelope ------------------------------------------------------------
def test_ce_single_user_analytic(rng):
    h = crandn(rng, 1, 5)
    s = np.exp(1j * math.pi / 4) * np.ones(1)
    out = ce_phase_coordinate_descent(h, s, 1.0, 0.3, 4)
    expect = math.sin(math.pi / 4) * math.sqrt(1 / 5) * np.sum(np.abs(h)) / 0.3
    assert out.objective == pytest.approx(expect, rel=1e-9)


def test_ce_sigma_homogeneity():
    _, theta = instantiate_scenario(2, 0, 4)
    a = ce_phase_coordinate_descent(theta.H, theta.ch.symbols, 1.0, 1.0, 4)
    b = ce_phase_coordinate_descent(theta.H, theta.ch.symbols, 1.0, 0.5, 4)
    assert b.objective == pytest.approx(2 * a.objective, rel=1e-12)
    np.testing.assert_array_equal(a.solution.theta, b.solution.theta)


@pytest.mark.parametrize("seed", range(3))
def test_ce_vs_exhaustive_grid(seed):
    rng = np.random.default_rng(100 + seed)
    H, s = crandn(rng, 2, 3), qpsk(rng, 2)
    out = ce_phase_coordinate_descent(H, s, 1.0, 1.0, 4)
    ref = exhaustive_oracle("ce", {"H": H, "symbols": s, "M": 4, "p_max": 1.0}, grid=64)
    assert out.objective >= ref.objective * 0.99


# 1-bit greedy -----------------------------------------------------------------
def test_one_bit_scalar_tie_break():
    out = one_bit_greedy_cd(np.ones((1, 1)), np.ones(1), 1.0, 1.0, 4)
    assert out.solution.signal()[0] == pytest.approx(math.sqrt(0.5) * (1 + 1j))


@pytest.mark.parametrize("seed", range(5))
def test_one_bit_enumeration(seed):
    rng = np.random.default_rng(200 + seed)
    H, s = crandn(rng, 2, 6), qpsk(rng, 2)
    out = one_bit_greedy_cd(H, s, 1.0, 1.0, 4)
    assert monotone(out.trace, "max")
    ref = exhaustive_oracle("one_bit", {"H": H, "symbols": s, "M": 4, "p_max": 1.0})
    mrt_q = one_bit_quantize(H.conj().T @ s, 1.0).signal()
    assert ref.objective >= out.objective - 1e-12
    assert out.objective >= normalized_margin(H, mrt_q, s, 4, 1.0) - 1e-12


# secrecy ----------------------------------------------------------------------
def test_secrecy_orthogonal_eavesdropper(rng):
    H = np.zeros((2, 4), complex)
    H[:, :2] = crandn(rng, 2, 2)
    h_eve = np.array([[0, 0, 1.0, 0]])
    a = secrecy_nullspace_maxmin(H, h_eve, 1.0, 0.1)
    b = secrecy_nullspace_maxmin(H, h_eve, 1.0, 0.1, project=False)
    assert a.objective == pytest.approx(b.objective, rel=1e-4)


def test_secrecy_eavesdropper_on_user(rng):
    H = crandn(rng, 2, 4)
    out = secrecy_nullspace_maxmin(H, H[:1], 1.0, 0.1)
    assert abs(H[0] @ out.solution.W[:, 0]) < 1e-8
    assert out.objective == pytest.approx(0.0, abs=1e-12)


def test_secrecy_degenerate(rng):
    h = crandn(rng, 1, 3)
    with pytest.raises(DegenerateNullspace):
        secrecy_nullspace_maxmin(np.vstack([h, 2 * h]), h, 1.0, 0.1)


@pytest.mark.parametrize("seed", range(3))
def test_secrecy_grid_oracle(seed):
    rng = np.random.default_rng(300 + seed)
    H, h_eve = crandn(rng, 2, 3), crandn(rng, 1, 3)
    out = secrecy_nullspace_maxmin(H, h_eve, 1.0, 0.1, defaults("SecrecyNullspaceMaxMin"))
    ref = exhaustive_oracle("secrecy", {"H": H, "h_eve": h_eve, "p_max": 1.0, "sigma2": 0.1},
                            grid=400)
    assert out.objective >= ref.objective * 0.98
    assert secrecy_rate(H, h_eve, out.solution.W, 0.1) == pytest.approx(out.objective, rel=1e-9)


# cognitive radio --------------------------------------------------------------
def test_cr_single_user_no_primary(rng):
    h = crandn(rng, 1, 4)
    out = cr_sumrate_proj_ascent(h, np.zeros((1, 4)), 2.0, 1.0, 0.5)
    assert out.objective == pytest.approx(math.log2(1 + 2.0 * np.linalg.norm(h) ** 2 / 0.5),
                                          abs=1e-4)


@pytest.mark.parametrize("seed", range(5))
def test_cr_feasible_monotone_and_beats_zf(seed):
    _, theta = instantiate_scenario(6, 10, seed)
    g, p = theta.ch.g, theta.p_max
    out = cr_sumrate_proj_ascent(theta.H, g, p, 1e12, theta.sigma2)
    assert monotone(out.trace, "max")
    assert out.objective >= sum_rate(theta.H, zf(theta.H, p).W, theta.sigma2) - 1e-9
    i_th = theta.first("InterferenceTemperature")["i_th"]
    out = cr_sumrate_proj_ascent(theta.H, g, p, i_th, theta.sigma2)
    assert monotone(out.trace, "max")
    W = out.solution.W
    assert power(W) <= p * (1 + 1e-8) and interference_power(g, W) <= i_th * (1 + 1e-8)


@pytest.mark.parametrize("seed", range(3))
def test_cr_robust(seed):
    _, theta = instantiate_scenario(7, 10, seed)
    g, p, eps = theta.ch.g, theta.p_max, theta.ch.epsilon
    i_th = theta.first("RobustInterferenceTemperature")["i_th"]
    hp = defaults("CrRobustSumRate")
    nominal = cr_sumrate_proj_ascent(theta.H, g, p, i_th, theta.sigma2, hp)
    zero = cr_robust_sumrate(theta.H, g, 0.0, p, i_th, theta.sigma2, hp)
    assert zero.objective == pytest.approx(nominal.objective, rel=1e-12)
    out = cr_robust_sumrate(theta.H, g, eps, p, i_th, theta.sigma2, hp)
    assert out.objective <= nominal.objective + 1e-9
    W = out.solution.W
    assert robust_interference_power(g, W, eps) <= i_th * (1 + 1e-8)
    rng = np.random.default_rng(seed)
    for _ in range(1000):
        d = crandn(rng, 1, g.shape[1])
        d *= eps * rng.uniform() ** (1 / (2 * g.shape[1])) / np.linalg.norm(d)
        assert interference_power(g + d, W) <= i_th + 1e-8
    with pytest.raises(Infeasible):
        cr_robust_sumrate(theta.H, g, 1.0, 10.0, 1.0, theta.sigma2)


# WMMSE ------------------------------------------------------------------------
def test_wmmse_single_user(rng):
    h = crandn(rng, 1, 4)
    out = wmmse_sumrate(h, 1.0, 0.1)
    assert out.objective == pytest.approx(math.log2(1 + np.linalg.norm(h) ** 2 / 0.1), rel=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_wmmse_monotone_and_dominant(seed):
    _, theta = instantiate_scenario(8, 0, seed)
    H, p, s2 = theta.H, theta.p_max, theta.sigma2
    out = wmmse_sumrate(H, p, s2)
    assert monotone(out.trace, "max")
    best = max(sum_rate(H, f(H, p).W if f is zf else f(H, p, s2).W, s2) for f in (zf, rzf, slnr))
    assert out.objective >= best - 1e-9
    assert power(out.solution.W) <= p * (1 + 1e-9)


# hybrid -----------------------------------------------------------------------
def _hybrid_args(theta):
    c = theta.first("RobustCiMargin")
    return dict(M=int(c["M"]), delta=c["threshold"] * theta.sigma, n_rf=theta.sys.N_rf,
                p_max=theta.p_max)


@pytest.mark.parametrize("seed", range(3))
def test_hybrid_feasible_and_monotone(seed):
    _, theta = instantiate_scenario(9, 10, seed)
    out = hybrid_robust_ci_altmin(theta.H, theta.ch.symbols, theta.ch.epsilon,
                                  **_hybrid_args(theta))
    assert monotone(out.trace, "min")
    assert feasibility_check(out.solution, theta, 1e-6) == []


def test_hybrid_full_rf_matches_digital(rng):
    H, s = crandn(rng, 3, 6), qpsk(rng, 3)
    _, digital = ci_power_min_digital(H, s, 4, 0.0, 1.0)
    out = hybrid_robust_ci_altmin(H, s, 0.0, M=4, delta=1.0, n_rf=6)
    assert out.objective <= 1.05 * digital + 1e-6


# oracle and registry ----------------------------------------------------------
def test_oracle_too_large(rng):
    with pytest.raises(TooLarge):
        exhaustive_oracle("one_bit", {"H": crandn(rng, 1, 12), "symbols": np.ones(1), "M": 4,
                                      "p_max": 1.0})


def test_registry():
    h = registry_lookup("SinrDualityPowerMin")
    assert h.defaults.max_iter == 500 and h.defaults.tol == 1e-9
    with pytest.raises(UnknownStrategy):
        registry_lookup("Nope")
    with pytest.raises(UnknownStrategy):
        registry_lookup(StrategyId.SEMIDEFINITE_RELAXATION)
    for sid in registered_ids():
        s = registry_lookup(sid).strategy()
        assert SolverStrategy.model_validate_json(s.model_dump_json()) == s
    with pytest.raises(ValueError):
        Hyperparams(max_iter=10 ** 6)
    with pytest.raises(ValueError):
        Hyperparams(tol=0)


@pytest.mark.parametrize("sid, strategy", [
    (1, "SinrDualityPowerMin"), (2, "CePhaseCoordinateDescent"), (3, "OneBitGreedyCD"),
    (4, "SecrecyNullspaceMaxMin"), (5, "FdPowerMin"), (6, "CrSumRateProjAscent"),
    (7, "CrRobustSumRate"), (8, "WmmseSumRate"), (9, "HybridRobustCiAltMin")])
def test_converged_outcomes_are_feasible(sid, strategy):
    _, theta = instantiate_scenario(sid, 10, 1)
    out = solve_default(strategy, theta)
    assert out.converged
    assert feasibility_check(out.solution, theta, 1e-6) == []
    assert len(out.trace) == out.iterations
