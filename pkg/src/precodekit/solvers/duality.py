"""SINR-constrained power minimization via uplink-downlink duality, and its
full-duplex extension with a self-interference cap."""

from __future__ import annotations

import math

import numpy as np

from ..errors import Infeasible, NotConverged
from ..model import BeamformerMatrix, as_complex_matrix
from ..precoders import power_control
from .base import SolverOutcome, as_hyperparams


def _uplink_fixed_point(H, gammas, noise_cov, max_iter, tol, q0=None):
    """Iterate q_k <- gamma_k / ((1 + gamma_k) h_k S^{-1} h_k^H) with
    S = noise_cov + sum_j q_j h_j^H h_j (the sum includes j = k).

    Returns (q, S^{-1} H^H, trace, converged).
    """
    K, N = H.shape
    Hh = H.conj().T
    ratio = gammas / (1.0 + gammas)
    q = np.zeros(K) if q0 is None else np.array(q0, dtype=float)
    blowup = 1e3 * float(np.real(np.trace(noise_cov))) / N * K
    trace = []
    converged = False
    SinvHh = None
    for _ in range(max_iter):
        S = noise_cov + (Hh * q) @ H
        SinvHh = np.linalg.solve(S, Hh)
        b = np.real(np.einsum("kn,nk->k", H, SinvHh))
        q_new = ratio / b
        trace.append(float(q_new.sum()))
        if not np.all(np.isfinite(q_new)) or q_new.sum() > blowup:
            raise Infeasible("uplink fixed point diverges; SINR targets unachievable")
        delta = np.max(np.abs(q_new - q) / np.maximum(q_new, 1e-300))
        q = q_new
        if delta <= tol:
            converged = True
            break
    S = noise_cov + (Hh * q) @ H
    SinvHh = np.linalg.solve(S, Hh)
    return q, SinvHh, trace, converged


def sinr_power_min_duality(H, gammas, sigma2: float, opts=None, noise_cov=None,
                           _q0=None) -> SolverOutcome:
    """Minimum-power beamformers meeting SINR_k >= gamma_k.

    Parameters
    ----------
    H : (K, N_t) complex array
    gammas : length-K SINR targets (linear)
    sigma2 : noise power in W
    opts : Hyperparams or mapping, optional
        ``max_iter`` and ``tol`` control the fixed point; ``target_scale``
        inflates every target.
    noise_cov : (N_t, N_t) array, optional
        Uplink noise covariance; defaults to ``sigma2 * I``. A weighted
        power objective sum_k w_k^H Q w_k corresponds to ``sigma2 * Q``.

    Raises
    ------
    Infeasible
        When the fixed point diverges or downlink powers come out negative.
    NotConverged
        When ``max_iter`` iterations do not reach ``tol``.
    """
    opts = as_hyperparams(opts)
    H = as_complex_matrix(H, name="H")
    K, N = H.shape
    gammas = np.asarray(gammas, dtype=float).reshape(-1) * opts.target_scale
    if gammas.size != K:
        raise ValueError(f"need {K} SINR targets, got {gammas.size}")
    if noise_cov is None:
        noise_cov = sigma2 * np.eye(N)
    q, SinvHh, trace, converged = _uplink_fixed_point(
        H, gammas, noise_cov, opts.max_iter, opts.tol, _q0)
    W = power_control(H, SinvHh, gammas, sigma2)
    power = float(np.sum(np.abs(W) ** 2))
    outcome = SolverOutcome(BeamformerMatrix(W), power, len(trace), converged, trace,
                            info={"uplink_powers": q})
    if not converged:
        raise NotConverged(f"duality fixed point not converged in {opts.max_iter} iterations",
                           outcome)
    return outcome


def fd_power_min(H, gammas, G_si, eta: float, sigma2: float, opts=None) -> SolverOutcome:
    """Power minimization with SINR targets and a self-interference cap.

    The cap ||G_si W||_F^2 <= eta is handled by adding mu * G_si^H G_si to
    the uplink noise covariance and bisecting the multiplier mu in
    [0, 1e6] until the cap is active (within 1e-6 W) or slack at mu = 0.
    """
    opts = as_hyperparams(opts)
    H = as_complex_matrix(H, name="H")
    N = H.shape[1]
    base = sigma2 * np.eye(N)
    first = sinr_power_min_duality(H, gammas, sigma2, opts)
    if G_si is None or not math.isfinite(eta):
        return first
    G = as_complex_matrix(G_si, name="G_si")
    GG = G.conj().T @ G

    def si(outcome):
        return float(np.sum(np.abs(G @ outcome.solution.W) ** 2))

    if si(first) <= eta:
        return first

    def solve(mu, q0=None):
        return sinr_power_min_duality(H, gammas, sigma2, opts, noise_cov=base + mu * GG, _q0=q0)

    # bracket the multiplier geometrically before bisecting
    lo, hi = 0.0, 1e-3 * sigma2
    q_warm = first.info["uplink_powers"]
    hi_out = solve(hi, q_warm)
    while si(hi_out) > eta:
        lo = hi
        hi *= 4.0
        if hi > 1e6:
            hi = 1e6
            hi_out = solve(hi, hi_out.info["uplink_powers"])
            if si(hi_out) > eta:
                raise Infeasible("self-interference cap unreachable for mu <= 1e6")
            break
        hi_out = solve(hi, hi_out.info["uplink_powers"])
    steps = 0
    while si(hi_out) < eta - 1e-6 and steps < 200:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        out = solve(mid, hi_out.info["uplink_powers"])
        if si(out) > eta:
            lo = mid
        else:
            hi, hi_out = mid, out
        steps += 1
    info = dict(hi_out.info, mu=hi, bisection_steps=steps, self_interference=si(hi_out))
    return SolverOutcome(hi_out.solution, hi_out.objective, hi_out.iterations,
                         hi_out.converged, hi_out.trace, info)
