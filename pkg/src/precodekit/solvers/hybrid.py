"""Hybrid analog/digital power minimization under robust constructive-
interference constraints.

All margin terms are positively homogeneous in the transmit vector x, so
minimizing power subject to ``robust margin >= delta`` is the same as
maximizing ``tau(x) = min_i Re(b_i x) / ||x||`` and then scaling x to meet
``delta`` exactly. The iterate path therefore never depends on ``delta``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import nnls

from ..errors import Infeasible, NotConverged
from ..model import HybridPair, as_complex_matrix
from .base import SolverOutcome, as_hyperparams


def piece_rows(H, symbols, M: int) -> np.ndarray:
    """Rows b_i (2K x N) with Re(b_i x) the two CI margin pieces per user."""
    a = math.pi / M
    Hr = np.exp(-1j * np.angle(np.asarray(symbols).reshape(-1)))[:, None] * H
    return np.vstack([(math.sin(a) + 1j * math.cos(a)) * Hr,
                      (math.sin(a) - 1j * math.cos(a)) * Hr])


def robust_loss(M: int, epsilon: float) -> float:
    a = math.pi / M
    return epsilon * (math.sin(a) + math.cos(a))


def least_distance_direction(A, F=None):
    """Solve min ||F v|| s.t. Re(A v) >= 1 exactly.

    Uses the Lawson-Hanson reduction of least-distance programming to NNLS.
    Returns ``v`` or None when the constraints admit no solution.
    """
    A = np.asarray(A, dtype=complex)
    R = A.shape[1]
    if F is None:
        L = np.eye(R)
    else:
        L = np.linalg.cholesky(F.conj().T @ F).conj().T     # F^H F = L^H L
    AL = np.linalg.solve(L.T, A.T).T                          # A L^{-1}
    G = np.hstack([AL.real, -AL.imag])
    E = np.vstack([G.T, np.ones((1, G.shape[0]))])
    f = np.zeros(E.shape[0])
    f[-1] = 1.0
    u, _ = nnls(E, f, maxiter=50 * E.shape[1])
    r = E @ u - f
    if abs(r[-1]) < 1e-14:
        return None
    z = -r[:-1] / r[-1]
    zc = z[:R] + 1j * z[R:]
    return np.linalg.solve(L, zc)


def _tau(B, x):
    n = np.linalg.norm(x)
    return float(np.min((B @ x).real) / n) if n > 0 else -math.inf


def ci_power_min_digital(H, symbols, M: int, epsilon: float, delta: float, F=None):
    """Minimum-power x = F v meeting the robust margins (fully digital when
    ``F`` is None). Returns ``(x, power)``; raises ``Infeasible``."""
    H = as_complex_matrix(H, name="H")
    B = piece_rows(H, symbols, M)
    A = B if F is None else B @ F
    v = least_distance_direction(A, F)
    if v is None:
        raise Infeasible("CI constraints cannot be met in this subspace")
    x = v if F is None else F @ v
    t = _tau(B, x) - robust_loss(M, epsilon)
    if t <= 0:
        raise Infeasible("robust CI margin cannot be made positive")
    x = x / np.linalg.norm(x) * (delta / t)
    return x, float(np.sum(np.abs(x) ** 2))


def _softmin(m, t):
    lo = m.min()
    w = np.exp(-t * (m - lo))
    total = w.sum()
    return lo - math.log(total) / t, w / total


def _analog_ascent(B, F, v, t, iters, step0):
    """Gradient ascent of softmin_i Re(b_i F v) / ||F v|| over the phases of F."""
    phase = np.angle(F)

    def value(ph):
        x = np.exp(1j * ph) @ v
        n = np.linalg.norm(x)
        m, w = _softmin((B @ x).real, t)
        return m / n, m, w, x, n

    val, m, w, x, n = value(phase)
    step = step0
    for _ in range(iters):
        P = 1j * np.exp(1j * phase) * v[None, :]
        c = w @ B
        grad = (np.real(c[:, None] * P) / n
                - m * np.real(x.conj()[:, None] * P) / n ** 3)
        gn = np.linalg.norm(grad)
        if gn == 0:
            break
        while step > 1e-12:
            trial = phase + step * grad / gn
            tv = value(trial)
            if tv[0] >= val:
                break
            step *= 0.5
        else:
            break
        gain = tv[0] - val
        phase = trial
        val, m, w, x, n = tv
        step *= 2.0
        if gain <= 1e-12 * abs(val):
            break
    return np.exp(1j * phase)


_TEMP_DOUBLINGS = 8


def phase_matched_analog(H, n_rf: int) -> np.ndarray:
    """Unit-modulus F_rf whose column r < K follows the phases of h_r^H;
    columns r >= K are DFT columns, so F_rf keeps full column rank."""
    Hh = np.asarray(H).conj().T
    N, K = Hh.shape
    F = np.exp(2j * math.pi * np.outer(np.arange(N), np.arange(n_rf)) / N)
    m = min(K, n_rf)
    F[:, :m] = np.exp(1j * np.angle(Hh[:, :m]))
    return F


def hybrid_robust_ci_altmin(H, symbols, epsilon: float, *, M: int, delta: float, n_rf: int,
                            p_max: float = math.inf, opts=None, init=None) -> SolverOutcome:
    """Minimize ||F_rf F_bb s||^2 subject to robust CI margins >= ``delta``.

    Alternates an analog step (gradient ascent of the soft-min margin-to-norm
    ratio over all phases of F_rf, temperature ``opts.penalty`` over the
    channel scale, doubled per alternation up to 2^8 times) with an exact
    digital step (least-distance program for v with F_rf fixed). A new F_rf
    is kept only when the re-solved digital step raises the ratio, so power
    is nonincreasing. Once the temperature is at its cap, a relative power
    change below ``opts.tol`` ends the run. F_bb = v s^H/||s||^2 so that
    F_bb s = v.

    Raises
    ------
    Infeasible
        When the robust margin cannot be made positive or the required power
        exceeds ``p_max``.
    NotConverged
        After ``opts.max_iter`` alternations.
    """
    opts = as_hyperparams(opts)
    H = as_complex_matrix(H, name="H")
    symbols = np.asarray(symbols, dtype=complex).reshape(-1)
    K, N = H.shape
    if not 1 <= n_rf <= N:
        raise ValueError(f"need 1 <= N_rf <= N_t, got N_rf={n_rf}, N_t={N}")
    B = piece_rows(H, symbols, M)
    loss = robust_loss(M, epsilon)
    F = np.array(init, dtype=complex) if init is not None else phase_matched_analog(H, n_rf)
    F = np.exp(1j * np.angle(F))

    def power_of(tau):
        return (delta / (tau - loss)) ** 2 if tau > loss else math.inf

    v = least_distance_direction(B @ F, F)
    if v is None:
        raise Infeasible("CI constraints cannot be met with the initial analog precoder")
    tau = _tau(B, F @ v)
    trace = [power_of(tau)]
    # temperature relative to the channel scale keeps the path free of delta
    ref = np.linalg.norm(B) / math.sqrt(B.shape[0])
    temp = opts.penalty / ref
    stage = 0
    converged = False
    while len(trace) < opts.max_iter:
        F_new = _analog_ascent(B, F, v, temp, 50, 0.1)
        v_new = least_distance_direction(B @ F_new, F_new)
        if v_new is not None and _tau(B, F_new @ v_new) > tau:
            F, v = F_new, v_new
            tau = _tau(B, F @ v)
        trace.append(power_of(tau))
        prev = trace[-2]
        if (stage >= _TEMP_DOUBLINGS and math.isfinite(prev)
                and prev - trace[-1] <= opts.tol * prev):
            converged = True
            break
        if stage < _TEMP_DOUBLINGS:
            stage += 1
            temp *= 2.0
    if tau <= loss:
        raise Infeasible("robust CI margin cannot be made positive")
    x = F @ v
    scale = delta / ((tau - loss) * np.linalg.norm(x))
    v = v * scale
    F_bb = np.outer(v, symbols.conj()) / np.vdot(symbols, symbols).real
    outcome = SolverOutcome(HybridPair(F, F_bb), trace[-1], len(trace), converged, trace,
                            {"tau": tau})
    if trace[-1] > p_max * (1 + 1e-9):
        raise Infeasible(f"required power {trace[-1]:.4g} W exceeds the {p_max:g} W budget")
    if not converged:
        raise NotConverged(f"hybrid alternation not converged in {opts.max_iter} steps", outcome)
    return outcome
