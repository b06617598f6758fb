"""Closed-form performance formulas shared by solvers and the harness."""

from __future__ import annotations

import math

import numpy as np

LOG2 = math.log(2.0)


def gains(H, W) -> np.ndarray:
    """|h_k w_j|^2 as a K x K' matrix (row = receiver, column = stream)."""
    return np.abs(np.asarray(H) @ np.asarray(W)) ** 2


def sinr(H, W, sigma2: float) -> np.ndarray:
    """Per-user SINR of linear precoder ``W`` (user k decodes stream k)."""
    G = gains(H, W)
    signal = np.diag(G)
    interference = G.sum(axis=1) - signal
    return signal / (interference + sigma2)


def rates(H, W, sigma2: float) -> np.ndarray:
    return np.log2(1.0 + sinr(H, W, sigma2))


def sum_rate(H, W, sigma2: float) -> float:
    return float(np.sum(rates(H, W, sigma2)))


def rotated_outputs(H, x, symbols) -> np.ndarray:
    """Noiseless received samples rotated onto the intended symbol phase."""
    y = np.asarray(H) @ np.asarray(x).reshape(-1)
    return y * np.exp(-1j * np.angle(symbols))


def ci_margins(H, x, symbols, M: int) -> np.ndarray:
    """Un-normalized constructive-interference margin of every user.

    ``Re(y) sin(pi/M) - |Im(y)| cos(pi/M)`` for the rotated sample ``y``.
    """
    y = rotated_outputs(H, x, symbols)
    a = math.pi / M
    return y.real * math.sin(a) - np.abs(y.imag) * math.cos(a)


def robust_ci_margins(H, x, symbols, M: int, epsilon: float) -> np.ndarray:
    """CI margins minus the worst-case loss for channel errors of norm <= epsilon.

    Uses the bound epsilon * ||x|| * (sin(pi/M) + cos(pi/M)).
    """
    a = math.pi / M
    x = np.asarray(x).reshape(-1)
    return ci_margins(H, x, symbols, M) - epsilon * np.linalg.norm(x) * (math.sin(a) + math.cos(a))


def normalized_margin(H, x, symbols, M: int, sigma: float) -> float:
    return float(np.min(ci_margins(H, x, symbols, M)) / sigma)


def multicast_snr(H, w, sigma2: float) -> np.ndarray:
    return np.abs(np.asarray(H) @ np.asarray(w).reshape(-1)) ** 2 / sigma2


def secrecy_rate(H, h_eve, w, sigma2: float) -> float:
    """min_k [log2(1 + SNR_k) - log2(1 + SNR_eve)]^+ for one multicast stream."""
    user = np.log2(1.0 + multicast_snr(H, w, sigma2))
    eve = math.log2(1.0 + float(multicast_snr(h_eve, w, sigma2)[0]))
    return float(max(np.min(user) - eve, 0.0))


def interference_power(g, W) -> float:
    return float(np.sum(np.abs(np.asarray(g) @ np.asarray(W)) ** 2))


def robust_interference_power(g, W, epsilon: float) -> float:
    """Worst-case sum_k (|g w_k| + eps ||w_k||)^2 over ||dg|| <= eps."""
    W = np.asarray(W)
    return float(np.sum((np.abs(np.asarray(g) @ W).reshape(-1)
                         + epsilon * np.linalg.norm(W, axis=0)) ** 2))
