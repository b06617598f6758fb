"""Weighted-MMSE sum-rate maximization under a total power budget."""

from __future__ import annotations

import math

import numpy as np

from .. import metrics
from ..errors import NotConverged
from ..model import BeamformerMatrix, as_complex_matrix
from .base import SolverOutcome, as_hyperparams


def _transmit_update(H, a, b, p_max):
    """W = (sum_k a_k h_k^H h_k + mu I)^{-1} H^H diag(b), mu >= 0 the smallest
    multiplier giving ||W||_F^2 <= p_max (found by bisection)."""
    A = (H.conj().T * a) @ H
    lam, U = np.linalg.eigh(A)
    C = U.conj().T @ (H.conj().T * b)
    c2 = np.sum(np.abs(C) ** 2, axis=1)
    active = lam > 1e-12 * max(lam[-1], 1e-300)

    def power(mu):
        if mu == 0:
            return float(np.sum(c2[active] / lam[active] ** 2))
        return float(np.sum(c2 / (lam + mu) ** 2))

    if power(0.0) <= p_max:
        mu = 0.0
    else:
        lo, hi = 0.0, math.sqrt(c2.sum() / p_max)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if power(mid) > p_max:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-15 * hi:
                break
        mu = hi
    if mu == 0:
        inv = np.where(active, 1.0 / np.where(active, lam, 1.0), 0.0)
    else:
        inv = 1.0 / (lam + mu)
    return U @ (inv[:, None] * C)


def wmmse_step(H, W, sigma2: float, p_max: float) -> np.ndarray:
    """One receive/weight/transmit WMMSE update of ``W``."""
    Y = H @ W
    total = np.sum(np.abs(Y) ** 2, axis=1) + sigma2
    d = np.diag(Y)
    u = d / total
    v = 1.0 / (1.0 - np.real(np.conj(u) * d))
    return _transmit_update(H, v * np.abs(u) ** 2, u * v, p_max)


def wmmse_sumrate(H, budget, sigma2: float, opts=None, init=None) -> SolverOutcome:
    """Maximize the sum rate with the three-block WMMSE alternation.

    Receive scalars u_k, MSE weights v_k = 1/e_k and the transmit matrix are
    updated in turn; the transmit step is a regularized inverse whose
    multiplier meets the power budget. Stops when the sum-rate gain of one
    iteration drops below ``opts.tol`` (relative). The start is the best of
    ``init`` (default ZF, RZF, SLNR and MRT at full power).
    """
    from ..precoders import mrt, rzf, slnr, zf

    opts = as_hyperparams(opts)
    H = as_complex_matrix(H, name="H")
    K, N = H.shape
    p = float(getattr(budget, "p_max", budget))
    if init is None:
        init = []
        try:
            init.append(zf(H, p).W)
        except Exception:
            pass
        init += [rzf(H, p, sigma2).W, slnr(H, p, sigma2).W, mrt(H, p).W]
    scored = [(metrics.sum_rate(H, W0, sigma2), np.asarray(W0, dtype=complex)) for W0 in init]
    f, W = max(scored, key=lambda c: c[0])
    trace = [f]
    converged = False
    while len(trace) < opts.max_iter:
        W_new = wmmse_step(H, W, sigma2, p)
        f_new = metrics.sum_rate(H, W_new, sigma2)
        gain = f_new - f
        W, f = W_new, f_new
        trace.append(f)
        if abs(gain) <= opts.tol * max(abs(f), 1.0):
            converged = True
            break
    outcome = SolverOutcome(BeamformerMatrix(W), f, len(trace), converged, trace)
    if not converged:
        raise NotConverged(f"WMMSE not converged in {opts.max_iter} iterations", outcome)
    return outcome
