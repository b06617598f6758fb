"""Constructive-interference solvers for constant-envelope and 1-bit
transmitters.

Both work on un-normalized margins so that the iterate path does not depend
on the noise level; the returned objective is the min margin divided by
``sigma``, which makes it exactly 1/sigma-homogeneous.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import NotConverged
from ..model import PhaseVector, QuantizedVector, as_complex_matrix, one_bit_alphabet
from ..precoders import ce_project, one_bit_quantize, zf, mrt
from .base import SolverOutcome, as_hyperparams


def _margin_matrix(Y, M):
    """Margins for rotated outputs ``Y`` (any shape); un-normalized."""
    a = math.pi / M
    return Y.real * math.sin(a) - np.abs(Y.imag) * math.cos(a)


def _rotated_channel(H, symbols):
    return np.exp(-1j * np.angle(np.asarray(symbols)))[:, None] * H


_OVERLOADED_STARTS = 8


def _ce_starts(H, symbols, p_max):
    """ZF and MRT composite starts; with K >= N_t (many local optima, ZF
    unavailable or poor) also fixed-seed uniform random phases."""
    starts = []
    K, N = H.shape
    try:
        starts.append(ce_project(zf(H, p_max).W @ symbols, p_max).theta)
    except Exception:
        pass
    starts.append(ce_project(mrt(H, p_max).W @ symbols, p_max).theta)
    if K >= N:
        rng = np.random.default_rng(0)
        starts += [rng.uniform(-math.pi, math.pi, N) for _ in range(_OVERLOADED_STARTS)]
    return starts


def _pieces(y, M):
    """The 2K linear pieces whose minimum is the min-user CI margin."""
    a = math.pi / M
    sa, ca = math.sin(a), math.cos(a)
    return np.concatenate([sa * y.real - ca * y.imag, sa * y.real + ca * y.imag])


def _softmin(m, t):
    lo = m.min()
    w = np.exp(-t * (m - lo))
    total = w.sum()
    return lo - math.log(total) / t, w / total


def _smoothed_ascent(Hr, theta, amp, M, t, iters):
    """Gradient ascent on the soft-min of the margin pieces (all phases at
    once), with backtracking; returns the new phases."""
    a = math.pi / M
    sa, ca = math.sin(a), math.cos(a)

    def value(th):
        return _softmin(_pieces(amp * Hr @ np.exp(1j * th), M), t)

    val, w = value(theta)
    step = 0.1
    for _ in range(iters):
        dY = 1j * amp * Hr * np.exp(1j * theta)[None, :]
        grad = w @ np.concatenate([sa * dY.real - ca * dY.imag, sa * dY.real + ca * dY.imag])
        while True:
            trial = theta + step * grad
            tv, tw = value(trial)
            if tv >= val:
                break
            step *= 0.5
            if step < 1e-12:
                return theta
        gain = tv - val
        theta, val, w = trial, tv, tw
        step *= 2.0
        if gain <= 1e-12 * abs(val):
            break
    return theta


def _coordinate_candidates(A, B, grid):
    """Phases where min_i (A_i + Re(B_i e^{j phi})) can peak: the uniform
    grid, every piece maximum, and every pairwise crossing."""
    cands = [grid, -np.angle(B)]
    i, j = np.triu_indices(len(A), k=1)
    D = B[i] - B[j]
    r = np.abs(D)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = (A[j] - A[i]) / r
    ok = (r > 0) & (np.abs(c) <= 1)
    ac = np.arccos(c[ok])
    ang = np.angle(D[ok])
    cands += [ac - ang, -ac - ang]
    return np.concatenate(cands)


def _ce_sweeps(Hr, theta, amp, M, opts):
    """Cyclic exact coordinate maximization of the hard min margin."""
    a = math.pi / M
    sa, ca = math.sin(a), math.cos(a)
    K, N = Hr.shape
    grid = np.linspace(-math.pi, math.pi, opts.grid_points, endpoint=False)
    theta = theta.copy()
    y = amp * Hr @ np.exp(1j * theta)
    best = float(_pieces(y, M).min())
    trace = [best]
    converged = False
    while len(trace) < opts.max_iter:
        start_val = best
        for n in range(N):
            col = amp * Hr[:, n]
            rest = y - col * np.exp(1j * theta[n])
            A = _pieces(rest, M)
            B = np.concatenate([(sa + 1j * ca) * col, (sa - 1j * ca) * col])
            phis = _coordinate_candidates(A, B, grid)
            vals = np.min(A[:, None] + np.real(B[:, None] * np.exp(1j * phis)[None, :]), axis=0)
            g = int(np.argmax(vals))
            if vals[g] > best:
                theta[n] = (phis[g] + math.pi) % (2 * math.pi) - math.pi
                y = rest + col * np.exp(1j * theta[n])
                best = float(_pieces(y, M).min())
        trace.append(best)
        if best - start_val <= opts.tol * max(abs(start_val), 1e-300):
            converged = True
            break
    return theta, best, trace, converged


def ce_phase_coordinate_descent(H, symbols, budget, sigma: float, M: int, opts=None,
                                init=None, anneal_stages: int = 8) -> SolverOutcome:
    """Maximize the min-user normalized CI margin over antenna phases.

    Each start first climbs a soft-min surrogate of the margin (temperature
    ``opts.penalty`` over the channel scale, doubled every 50 steps for
    ``anneal_stages`` stages), then runs cyclic coordinate sweeps on the hard
    minimum: each phase is set to the best of a uniform grid of
    ``opts.grid_points`` points and the closed-form breakpoints of the
    per-antenna margin curves. A sweep improving the un-normalized margin by
    less than ``opts.tol`` (relative) ends the run. The best start wins;
    default starts are the CE projections of the ZF and MRT composite
    signals, plus seeded random phases when K >= N. ``trace`` holds the
    normalized margin after each sweep.
    """
    opts = as_hyperparams(opts)
    H = as_complex_matrix(H, name="H")
    symbols = np.asarray(symbols, dtype=complex).reshape(-1)
    p_max = float(getattr(budget, "p_max", budget))
    K, N = H.shape
    amp = math.sqrt(p_max / N)
    Hr = _rotated_channel(H, symbols)
    # sigma-free temperature scale keeps the iterates independent of the noise level
    ref = amp * np.linalg.norm(H) / math.sqrt(K)
    starts = list(init) if init is not None else _ce_starts(H, symbols, p_max)
    best = None
    for theta0 in starts:
        start = np.asarray(theta0, dtype=float).copy()
        theta = start
        for stage in range(anneal_stages):
            theta = _smoothed_ascent(Hr, theta, amp, M, opts.penalty / ref * 2.0 ** stage, 50)
        # annealing may end below a strong start; sweep from the start then
        if _pieces(Hr @ (amp * np.exp(1j * start)), M).min() > \
                _pieces(Hr @ (amp * np.exp(1j * theta)), M).min():
            theta = start
        res = _ce_sweeps(Hr, theta, amp, M, opts)
        if best is None or res[1] > best[1]:
            best = res
    theta, value, trace, converged = best
    trace = [v / sigma for v in trace]
    outcome = SolverOutcome(PhaseVector(theta, p_max), value / sigma, len(trace), converged, trace)
    if not converged:
        raise NotConverged(f"CE coordinate descent not converged in {opts.max_iter} sweeps", outcome)
    return outcome


def _greedy_run(Hr, u, scale, M, alphabet, max_iter):
    N = Hr.shape[1]
    u = u.copy()
    y = scale * Hr @ u
    best = float(np.min(_margin_matrix(y, M)))
    trace = [best]
    changed = True
    while changed and len(trace) < max_iter + 1:
        changed = False
        for n in range(N):
            col = scale * Hr[:, n]
            rest = y - col * u[n]
            vals = np.min(_margin_matrix(rest[:, None] + col[:, None] * alphabet[None, :], M), axis=0)
            c = int(np.argmax(vals))
            if vals[c] > best:
                u[n] = alphabet[c]
                y = rest + col * u[n]
                best = float(vals[c])
                changed = True
        trace.append(best)
    return u, best, trace, not changed


def one_bit_greedy_cd(H, symbols, budget, sigma: float, M: int, opts=None,
                      init=None) -> SolverOutcome:
    """Greedy antenna-wise search over the 1-bit alphabet.

    Starts from the quantized MRT composite signal (or from each vector in
    ``init``, keeping the best run) and, antenna by antenna, moves to the
    alphabet point with the largest min-user margin when it strictly
    improves. A run stops after a sweep with no change. Ties go to the
    point with the smallest phase in [0, 2 pi).
    """
    opts = as_hyperparams(opts)
    H = as_complex_matrix(H, name="H")
    symbols = np.asarray(symbols, dtype=complex).reshape(-1)
    p_max = float(getattr(budget, "p_max", budget))
    K, N = H.shape
    scale = math.sqrt(p_max / (2 * N))
    alphabet = one_bit_alphabet()
    Hr = _rotated_channel(H, symbols)

    if init is None:
        init = [one_bit_quantize(H.conj().T @ symbols, p_max).signal()]
    best = None
    for x0 in init:
        u0 = one_bit_quantize(np.asarray(x0, dtype=complex).reshape(-1), p_max).signal() / scale
        run = _greedy_run(Hr, u0, scale, M, alphabet, opts.max_iter)
        if best is None or run[1] > best[1]:
            best = run
    u, value, trace, converged = best
    trace = [v / sigma for v in trace]
    x = QuantizedVector((scale * u).reshape(-1, 1), p_max)
    return SolverOutcome(x, value / sigma, len(trace), converged, trace)
