"""Sum-rate maximization under a power budget and an interference-temperature
cap at a primary user (nominal and worst-case robust variants)."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .. import metrics
from ..errors import Infeasible, NotConverged
from ..model import BeamformerMatrix, as_complex_matrix
from .base import SolverOutcome, as_hyperparams
from .wmmse import wmmse_sumrate


def sum_rate_gradient(H, W, sigma2: float) -> np.ndarray:
    """Wirtinger gradient d(sum rate)/dW^* in bps/Hz per unit W."""
    Y = H @ W
    G = np.abs(Y) ** 2
    total = G.sum(axis=1) + sigma2
    interf = total - np.diag(G)
    C = Y / total[:, None]
    off = Y / interf[:, None]
    np.fill_diagonal(off, 0.0)
    return H.conj().T @ (C - off) / metrics.LOG2


class InterferenceProjector:
    """Maps W onto {||W||^2 <= p, I(W) <= i_th}.

    Power is handled by scaling; the interference cap by shrinking the part
    of W aligned with g, W_perp + beta W_par, with beta in closed form for
    the nominal cap and by a bracketed root search for the robust one
    (shrinking never increases power, so the power cap stays satisfied).
    """

    def __init__(self, g, p_max: float, i_th: float, epsilon: float = 0.0):
        self.p_max = float(p_max)
        self.i_th = float(i_th)
        self.epsilon = float(epsilon)
        self.g = None if g is None else as_complex_matrix(g, name="g").reshape(1, -1)
        # with g = 0 the power scaling alone enforces the cap (given the check below)
        self._null = self.g is None or not np.any(self.g)
        if self.epsilon ** 2 * self.p_max > self.i_th:
            raise Infeasible("epsilon^2 * p_max exceeds the interference temperature")

    def interference(self, W) -> float:
        if self.g is None:
            return 0.0
        if self.epsilon > 0:
            return metrics.robust_interference_power(self.g, W, self.epsilon)
        return metrics.interference_power(self.g, W)

    def __call__(self, W) -> np.ndarray:
        power = float(np.sum(np.abs(W) ** 2))
        if power > self.p_max:
            W = W * math.sqrt(self.p_max / power)
        if self._null or not math.isfinite(self.i_th) or self.interference(W) <= self.i_th:
            return W
        g = self.g
        W_par = g.conj().T @ (g @ W) / float(np.vdot(g, g).real)
        W_perp = W - W_par
        if self.epsilon == 0:
            # interference of W_perp + beta W_par is beta^2 I(W)
            return W_perp + math.sqrt(self.i_th / self.interference(W)) * (1 - 1e-15) * W_par
        # robust cap as a scalar function of beta from per-column constants
        a = np.abs(g @ W_par).reshape(-1)
        perp2 = np.sum(np.abs(W_perp) ** 2, axis=0)
        par2 = np.sum(np.abs(W_par) ** 2, axis=0)
        eps = self.epsilon

        def cap(beta):
            return float(np.sum((beta * a + eps * np.sqrt(perp2 + beta ** 2 * par2)) ** 2))

        lo = brentq(lambda b: cap(b) - self.i_th, 0.0, 1.0, xtol=1e-15, rtol=1e-15)
        # guard against round-off in the scalar model
        while lo > 0 and self.interference(W_perp + lo * W_par) > self.i_th:
            lo *= 1 - 1e-12
        return W_perp + lo * W_par


def _ascent(H, sigma2, project, starts, opts, label):
    K, N = H.shape
    cands = []
    for W0 in starts:
        W0 = project(np.asarray(W0, dtype=complex).reshape(N, K))
        cands.append((metrics.sum_rate(H, W0, sigma2), W0))
    # earliest start wins ties
    f, W = max(cands, key=lambda c: c[0])
    trace = [f]
    step = opts.step_init * math.sqrt(project.p_max)
    grad = sum_rate_gradient(H, W, sigma2)
    converged = False
    while len(trace) < opts.max_iter:
        if not np.any(grad):
            converged = True
            break
        while step > 1e-14:
            trial = project(W + step * grad / np.linalg.norm(grad))
            ft = metrics.sum_rate(H, trial, sigma2)
            if ft >= f:
                break
            step *= 0.5
        else:
            # no ascent step left: stationary for the projected problem
            trace.append(f)
            converged = True
            break
        gain = ft - f
        new_grad = sum_rate_gradient(H, trial, sigma2)
        # Barzilai-Borwein guess for the next step length (ascent form)
        sv = (trial - W).ravel()
        yv = (grad - new_grad).ravel()
        sy = float(np.real(np.vdot(sv, yv)))
        gn = np.linalg.norm(new_grad)
        step = (float(np.real(np.vdot(sv, sv))) / sy * gn) if sy > 0 else 2.0 * step
        step = min(max(step, 1e-10), 1e3 * math.sqrt(project.p_max))
        W, f, grad = trial, ft, new_grad
        trace.append(f)
        if gain <= opts.tol * max(abs(f), 1.0):
            converged = True
            break
    info = {"interference": project.interference(W),
            "power": float(np.sum(np.abs(W) ** 2))}
    outcome = SolverOutcome(BeamformerMatrix(W), f, len(trace), converged, trace, info)
    if not converged:
        raise NotConverged(f"{label} not converged in {opts.max_iter} iterations", outcome)
    return outcome


def default_starts(H, g, p_max: float, sigma2: float) -> list[np.ndarray]:
    """MRT, ZF, RZF, g-nulling ZF and g-nulling WMMSE starting points."""
    from ..precoders import mrt, rzf, zf

    starts = [mrt(H, p_max).W]
    try:
        starts.append(zf(H, p_max).W)
    except Exception:
        pass
    starts.append(rzf(H, p_max, sigma2).W)
    if g is not None and np.any(g):
        from ..baselines import nulling_zf
        try:
            starts.append(nulling_zf(H, g, p_max))
        except Exception:
            pass
        # WMMSE on the channel seen through the projector onto g's complement
        g = np.asarray(g, dtype=complex).reshape(1, -1)
        P = np.eye(H.shape[1]) - g.conj().T @ g / float(np.vdot(g, g).real)
        try:
            starts.append(wmmse_sumrate(H @ P, p_max, sigma2, {"max_iter": 200, "tol": 1e-6}).solution.W)
        except NotConverged as exc:
            starts.append(exc.outcome.solution.W)
    return starts


def cr_sumrate_proj_ascent(H, g, budget, i_th: float, sigma2: float, opts=None,
                           init=None) -> SolverOutcome:
    """Maximize the sum rate subject to ||W||^2 <= p_max and
    sum_k |g w_k|^2 <= i_th.

    Projected gradient ascent: the step (normalized to the power radius)
    starts at ``opts.step_init`` and is halved until the projected point does
    not lower the sum rate, so the trace is nondecreasing and every iterate
    is feasible. Trial steps follow the Barzilai-Borwein length of the
    previous move. Stops when the gain falls below ``opts.tol`` (relative) or
    no ascent step exists. The start is the best projected point among
    ``init`` (default: see :func:`default_starts`).
    """
    return _cr(H, g, 0.0, budget, i_th, sigma2, opts, init, "projected ascent")


def cr_robust_sumrate(H, g, epsilon: float, budget, i_th: float, sigma2: float, opts=None,
                      init=None) -> SolverOutcome:
    """Same ascent as :func:`cr_sumrate_proj_ascent` with the worst-case cap
    sum_k (|g w_k| + epsilon ||w_k||)^2 <= i_th over ||dg|| <= epsilon.

    Raises ``Infeasible`` when epsilon^2 p_max > i_th.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    return _cr(H, g, epsilon, budget, i_th, sigma2, opts, init, "robust projected ascent")


def _cr(H, g, epsilon, budget, i_th, sigma2, opts, init, label):
    opts = as_hyperparams(opts)
    H = as_complex_matrix(H, name="H")
    p = float(getattr(budget, "p_max", budget))
    project = InterferenceProjector(g, p, i_th, epsilon)
    starts = list(init) if init is not None else default_starts(H, g, p, sigma2)
    return _ascent(H, sigma2, project, starts, opts, label)
