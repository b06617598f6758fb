"""Max-min secrecy multicast beamforming restricted to the eavesdropper's
null space."""

from __future__ import annotations

import math

import numpy as np

from .. import metrics
from ..errors import DegenerateNullspace, NotConverged
from ..model import BeamformerMatrix, as_complex_matrix
from .base import SolverOutcome, as_hyperparams


def nullspace_basis(h_eve) -> np.ndarray:
    """Orthonormal basis (N x (N-1)) of {w : h_eve w = 0}."""
    h = as_complex_matrix(h_eve, name="h_eve").reshape(1, -1)
    _, _, Vh = np.linalg.svd(h)
    return Vh[1:].conj().T


def _softmin_rates(Hb, v, sigma2, t):
    snr = np.abs(Hb @ v) ** 2 / sigma2
    r = np.log2(1.0 + snr)
    lo = r.min()
    w = np.exp(-t * (r - lo))
    return lo - math.log(w.sum()) / t, w / w.sum(), snr


def _hard(Hb, v, sigma2):
    return float(np.min(np.log2(1 + np.abs(Hb @ v) ** 2 / sigma2)))


def _maxmin_on_sphere(Hb, v, p, sigma2, opts, t, iters, trace, best_v):
    """Projected gradient ascent of the annealed soft-min rate over
    {||v||^2 = p}, appending the best hard max-min value per iteration to
    ``trace``. Returns (v, best_v, t, converged)."""
    best = trace[-1]
    step = opts.step_init
    stage_start = best
    for _ in range(iters):
        if len(trace) >= opts.max_iter:
            return v, best_v, t, False
        val, w, snr = _softmin_rates(Hb, v, sigma2, t)
        # d r_k / d v^* = h_k^H h_k v / (ln2 (sigma2 + |h_k v|^2))
        coeff = w * (Hb @ v) / (metrics.LOG2 * sigma2 * (1.0 + snr))
        grad = Hb.conj().T @ coeff
        while step > 1e-14:
            trial = v + step * grad
            trial *= math.sqrt(p) / np.linalg.norm(trial)
            if _softmin_rates(Hb, trial, sigma2, t)[0] >= val:
                v = trial
                step *= 2.0
                break
            step *= 0.5
        hard = _hard(Hb, v, sigma2)
        if hard > best:
            best, best_v = hard, v
        trace.append(best)
        if len(trace) % 50 == 0:
            if len(trace) >= 100 and best - stage_start <= opts.tol * max(abs(best), 1.0):
                return v, best_v, t, True
            stage_start = best
            t *= 2.0
            step = opts.step_init
    return v, best_v, t, False


def secrecy_nullspace_maxmin(H, h_eve, budget, sigma2: float, opts=None, init=None,
                             project: bool = True) -> SolverOutcome:
    """Maximize the minimum secrecy rate of a multicast beamformer.

    The beamformer lives in the null space of ``h_eve`` so the eavesdropper
    receives nothing; inside it, the soft-min of the user rates (temperature
    ``opts.penalty``, doubled every 50 iterations) is climbed by projected
    gradient ascent on the power sphere. The reported objective is the hard
    max-min secrecy rate of the best iterate. With ``project=False`` the
    eavesdropper is ignored (secrecy-unaware design).

    Several starts are screened for one annealing stage (the projected sum
    of normalized user channels, each user's projected channel, the dominant
    eigenvector of the projected Gram matrix, plus any ``init``) and the best
    one is continued. A stage that improves the max-min rate by less than
    ``opts.tol`` (relative) ends the run.
    """
    opts = as_hyperparams(opts)
    H = as_complex_matrix(H, name="H")
    K, N = H.shape
    h_eve = as_complex_matrix(h_eve, name="h_eve").reshape(1, -1)
    p = float(getattr(budget, "p_max", budget))
    if project:
        if N < 2:
            raise DegenerateNullspace("need N_t > 1 for a non-trivial null space")
        B = nullspace_basis(h_eve)
    else:
        B = np.eye(N, dtype=complex)
    Hb = H @ B
    norms = np.linalg.norm(Hb, axis=1)
    if norms.max() <= 1e-12 * max(np.linalg.norm(H), 1e-300):
        raise DegenerateNullspace("every user channel is parallel to the eavesdropper")

    starts = []
    unit = Hb.conj().T / np.where(norms > 0, norms, 1.0)
    starts.append(unit.sum(axis=1))
    starts.extend(unit[:, k] for k in range(K) if norms[k] > 0)
    _, vecs = np.linalg.eigh(Hb.conj().T @ Hb)
    starts.append(vecs[:, -1])
    for w0 in init or []:
        starts.append(B.conj().T @ np.asarray(w0, dtype=complex).reshape(-1))
    starts = [s for s in starts if np.linalg.norm(s) > 1e-12]

    # screen the starts with one annealing stage, then continue the best
    screened = []
    for v0 in starts:
        v0 = v0 * math.sqrt(p) / np.linalg.norm(v0)
        tr = [_hard(Hb, v0, sigma2)]
        v, bv, t, _ = _maxmin_on_sphere(Hb, v0, p, sigma2, opts, opts.penalty, 49, tr, v0)
        screened.append((tr[-1], v, bv, t, tr))
    _, v, best_v, t, trace = max(screened, key=lambda c: c[0])
    v, best_v, t, converged = _maxmin_on_sphere(Hb, v, p, sigma2, opts, t, opts.max_iter,
                                                trace, best_v)
    v = best_v
    w = (B @ v).reshape(-1, 1)
    if project:
        # remove round-off leakage toward the eavesdropper
        w -= h_eve.conj().T @ (h_eve @ w) / np.vdot(h_eve, h_eve).real
    objective = metrics.secrecy_rate(H, h_eve, w, sigma2)
    eve_rate = math.log2(1 + float(metrics.multicast_snr(h_eve, w, sigma2)[0]))
    trace = [max(r - eve_rate, 0.0) for r in trace]
    outcome = SolverOutcome(BeamformerMatrix(w), objective, len(trace), converged, trace,
                            {"eve_snr": float(metrics.multicast_snr(h_eve, w, sigma2)[0])})
    if not converged:
        raise NotConverged(f"secrecy ascent not converged in {opts.max_iter} iterations", outcome)
    return outcome
