"""Brute-force oracles over small discrete grids.

These are deliberately naive: they enumerate the whole grid and are used to
check the heuristics. ``exhaustive_oracle`` refuses grids with more than
1e7 points.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import TooLarge
from ..model import (BeamformerMatrix, PhaseVector, QuantizedVector, as_complex_matrix,
                     one_bit_alphabet)
from .base import SolverOutcome

MAX_POINTS = 10 ** 7


def _check_size(points: float) -> None:
    if points > MAX_POINTS:
        raise TooLarge(f"grid has {points:.3g} points (limit {MAX_POINTS:.0e})")


def _min_margin_rows(H, symbols, X, M):
    """min_k margin for every candidate signal in the rows of X."""
    Y = X @ np.asarray(H).T * np.exp(-1j * np.angle(symbols))[None, :]
    a = math.pi / M
    return np.min(Y.real * math.sin(a) - np.abs(Y.imag) * math.cos(a), axis=1)


def _enumerate(values: np.ndarray, N: int) -> np.ndarray:
    """All len(values)**N vectors, first coordinate most significant."""
    idx = np.indices((len(values),) * N).reshape(N, -1).T
    return values[idx]


def _one_bit(inst, grid):
    H = as_complex_matrix(inst["H"])
    N = H.shape[1]
    _check_size(4.0 ** N)
    p = float(inst["p_max"])
    X = math.sqrt(p / (2 * N)) * _enumerate(one_bit_alphabet(), N)
    vals = _min_margin_rows(H, inst["symbols"], X, inst["M"])
    i = int(np.argmax(vals))
    sigma = float(inst.get("sigma", 1.0))
    return SolverOutcome(QuantizedVector(X[i].reshape(-1, 1), p), float(vals[i]) / sigma,
                         1, True, [float(vals[i]) / sigma], {"evaluated": len(vals)})


def _ce(inst, grid):
    H = as_complex_matrix(inst["H"])
    N = H.shape[1]
    _check_size(float(grid) ** N)
    p = float(inst["p_max"])
    phases = np.linspace(-math.pi, math.pi, grid, endpoint=False)
    Theta = _enumerate(phases, N)
    X = math.sqrt(p / N) * np.exp(1j * Theta)
    vals = _min_margin_rows(H, inst["symbols"], X, inst["M"])
    i = int(np.argmax(vals))
    sigma = float(inst.get("sigma", 1.0))
    return SolverOutcome(PhaseVector(Theta[i], p), float(vals[i]) / sigma, 1, True,
                         [float(vals[i]) / sigma], {"evaluated": len(vals)})


def _unit_directions(grid):
    """Unit vectors [cos a, sin a e^{j phi}] on a grid over (a, phi)."""
    a = np.linspace(0, math.pi / 2, grid)
    phi = np.linspace(-math.pi, math.pi, grid, endpoint=False)
    A, P = np.meshgrid(a, phi, indexing="ij")
    return np.stack([np.cos(A).ravel(), (np.sin(A) * np.exp(1j * P)).ravel()], axis=1)


def _min_power_two_users(H, U1, U2, gammas, sigma2):
    """Closed-form 2x2 power control for every pair (U1[i], U2[i]).

    Returns total power (inf where infeasible).
    """
    # U @ h_k = h_k w for beamformers stored as rows of U
    g11 = np.abs(U1 @ H[0]) ** 2
    g12 = np.abs(U2 @ H[0]) ** 2
    g21 = np.abs(U1 @ H[1]) ** 2
    g22 = np.abs(U2 @ H[1]) ** 2
    a11, a22 = g11 / gammas[0], g22 / gammas[1]
    det = a11 * a22 - g12 * g21
    with np.errstate(divide="ignore", invalid="ignore"):
        p1 = sigma2 * (a22 + g12) / det
        p2 = sigma2 * (a11 + g21) / det
    total = p1 + p2
    bad = ~((p1 > 0) & (p2 > 0) & np.isfinite(total))
    total[bad] = np.inf
    return total, p1, p2


def _power_min(inst, grid):
    """Grid over both beam directions (N_t = 2, K = 2) with exact power
    control per grid point, followed by a local polish of the best cell."""
    import scipy.optimize

    H = as_complex_matrix(inst["H"])
    if H.shape != (2, 2):
        raise TooLarge("power-min grid oracle supports K = N_t = 2 only")
    _check_size(float(grid) ** 4)
    gammas = np.asarray(inst["gammas"], dtype=float)
    sigma2 = float(inst["sigma2"])
    D = _unit_directions(grid)
    n = len(D)
    best_total, best_pair = np.inf, None
    for i in range(n):
        U1 = np.broadcast_to(D[i], (n, 2))
        tot, _, _ = _min_power_two_users(H, U1, D, gammas, sigma2)
        j = int(np.argmin(tot))
        if tot[j] < best_total:
            best_total, best_pair = tot[j], (i, j)
    if not np.isfinite(best_total):
        return SolverOutcome(BeamformerMatrix(np.zeros((2, 2))), math.inf, 1, False, [math.inf])

    def direction(a, phi):
        return np.array([math.cos(a), math.sin(a) * np.exp(1j * phi)])

    a_grid = np.linspace(0, math.pi / 2, grid)
    phi_grid = np.linspace(-math.pi, math.pi, grid, endpoint=False)
    i, j = best_pair
    x0 = np.array([a_grid[i // grid], phi_grid[i % grid], a_grid[j // grid], phi_grid[j % grid]])

    def total(x):
        t, _, _ = _min_power_two_users(H, direction(x[0], x[1])[None, :],
                                       direction(x[2], x[3])[None, :], gammas, sigma2)
        return float(t[0]) if np.isfinite(t[0]) else 1e30

    res = scipy.optimize.minimize(total, x0, method="Nelder-Mead",
                                  options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 20000})
    x = res.x if res.fun <= best_total else x0
    u1, u2 = direction(x[0], x[1]), direction(x[2], x[3])
    tot, p1, p2 = _min_power_two_users(H, u1[None, :], u2[None, :], gammas, sigma2)
    W = np.stack([u1 * math.sqrt(p1[0]), u2 * math.sqrt(p2[0])], axis=1)
    return SolverOutcome(BeamformerMatrix(W), float(tot[0]), 1, True, [float(tot[0])],
                         {"grid_best": float(best_total)})


def _mrt_power(inst, grid):
    """Grid over per-user power levels with MRT directions; smallest total
    power meeting every SINR target."""
    H = as_complex_matrix(inst["H"])
    K = H.shape[0]
    _check_size(float(grid) ** K)
    gammas = np.asarray(inst["gammas"], dtype=float)
    sigma2 = float(inst["sigma2"])
    lo, hi = inst.get("power_range", (1e-4, 40.0))
    levels = np.geomspace(lo, hi, grid)
    U = H.conj().T / np.linalg.norm(H, axis=1)
    G = np.abs(H @ U) ** 2
    P = _enumerate(levels, K)
    rx = P @ G.T                      # rows: candidates, cols: users
    sig = P * np.diag(G)[None, :]
    sinr = sig / (rx - sig + sigma2)
    ok = np.all(sinr >= gammas[None, :] * (1 - 1e-12), axis=1)
    if not np.any(ok):
        return SolverOutcome(BeamformerMatrix(U), math.inf, 1, False, [math.inf])
    totals = np.where(ok, P.sum(axis=1), np.inf)
    i = int(np.argmin(totals))
    return SolverOutcome(BeamformerMatrix(U * np.sqrt(P[i])), float(totals[i]), 1, True,
                         [float(totals[i])])


def _secrecy(inst, grid):
    """Grid over unit-norm null-space coefficients (N_t = 3, 2-dim null space)."""

    H = as_complex_matrix(inst["H"])
    h_eve = as_complex_matrix(inst["h_eve"]).reshape(1, -1)
    N = H.shape[1]
    if N != 3:
        raise TooLarge("secrecy grid oracle supports N_t = 3 only")
    _check_size(float(grid) ** 2)
    p = float(inst["p_max"])
    sigma2 = float(inst["sigma2"])
    _, _, Vh = np.linalg.svd(h_eve)
    B = Vh[1:].conj().T
    D = _unit_directions(grid)
    Wc = math.sqrt(p) * (D @ B.T)                 # candidates as rows
    snr = np.abs(Wc @ H.T) ** 2 / sigma2
    eve = np.abs(Wc @ h_eve.T)[:, 0] ** 2 / sigma2
    vals = np.maximum(np.min(np.log2(1 + snr), axis=1) - np.log2(1 + eve), 0.0)
    i = int(np.argmax(vals))
    w = Wc[i].reshape(-1, 1)
    return SolverOutcome(BeamformerMatrix(w), float(vals[i]), 1, True, [float(vals[i])])


_KINDS = {
    "one_bit": _one_bit,
    "ce": _ce,
    "power_min": _power_min,
    "mrt_power": _mrt_power,
    "secrecy": _secrecy,
}


def exhaustive_oracle(kind: str, instance, grid: int = 64) -> SolverOutcome:
    """Global optimum over a discrete grid.

    Parameters
    ----------
    kind : {"one_bit", "ce", "power_min", "mrt_power", "secrecy"}
    instance : mapping
        Needs ``H`` plus the fields of the chosen kind (``symbols``, ``M``,
        ``p_max``, ``sigma``, ``gammas``, ``sigma2``, ``h_eve``).
    grid : points per grid dimension (ignored for ``one_bit``).

    Raises
    ------
    TooLarge
        If the grid would exceed 1e7 points.
    """
    try:
        fn = _KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown oracle kind {kind!r}; choose from {sorted(_KINDS)}") from None
    return fn(instance, int(grid))
