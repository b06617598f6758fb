"""Closed-form baseline precoders and hardware projections."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import Infeasible, ZeroChannel
from .model import (BeamformerMatrix, HybridPair, PhaseVector, QuantizedVector,
                    as_complex_matrix, hermitian_solve, pseudo_inverse)

__all__ = [
    "PowerBudget", "mrt", "zf", "rzf", "slnr", "ce_project", "one_bit_quantize",
    "random_precoder", "power_control", "scale_to_power",
]


@dataclass(frozen=True)
class PowerBudget:
    p_max: float

    def __post_init__(self):
        if not (self.p_max > 0 and math.isfinite(self.p_max)):
            raise ValueError(f"p_max must be positive and finite, got {self.p_max}")


def _p(budget) -> float:
    return budget.p_max if isinstance(budget, PowerBudget) else PowerBudget(float(budget)).p_max


def scale_to_power(W, p: float) -> np.ndarray:
    W = np.asarray(W, dtype=complex)
    norm2 = float(np.sum(np.abs(W) ** 2))
    if norm2 == 0:
        raise ZeroChannel("cannot scale an all-zero precoder")
    return W * math.sqrt(p / norm2)


def _unit_columns(W) -> np.ndarray:
    norms = np.linalg.norm(W, axis=0)
    if np.any(norms == 0):
        raise ZeroChannel("precoder has a zero column")
    return W / norms


def mrt(H, budget) -> BeamformerMatrix:
    """Matched-filter columns h_k^H with an equal p_max/K power split."""
    H = as_complex_matrix(H, name="H")
    p = _p(budget)
    if np.any(np.linalg.norm(H, axis=1) == 0):
        raise ZeroChannel("a user channel is identically zero")
    K = H.shape[0]
    return BeamformerMatrix(_unit_columns(H.conj().T) * math.sqrt(p / K))


def zf(H, budget) -> BeamformerMatrix:
    """Zero-forcing W proportional to the right pseudo-inverse of H."""
    H = as_complex_matrix(H, name="H")
    return BeamformerMatrix(scale_to_power(pseudo_inverse(H), _p(budget)))


def rzf(H, budget, sigma2: float) -> BeamformerMatrix:
    """Regularized ZF, H^H (H H^H + (K sigma2 / p_max) I)^{-1} at full power."""
    H = as_complex_matrix(H, name="H")
    p = _p(budget)
    K = H.shape[0]
    A = H @ H.conj().T + (K * sigma2 / p) * np.eye(K)
    # (A^{-1} H)^H = H^H A^{-1} because A is Hermitian
    W = hermitian_solve(A, H).conj().T
    return BeamformerMatrix(scale_to_power(W, p))


def slnr(H, budget, sigma2: float) -> BeamformerMatrix:
    """Max-SLNR columns with an equal power split.

    For a rank-one numerator the dominant generalized eigenvector is
    (sum_{j != k} h_j^H h_j + (K sigma2 / p_max) I)^{-1} h_k^H.
    """
    H = as_complex_matrix(H, name="H")
    p = _p(budget)
    K, N = H.shape
    R = H.conj().T @ H
    W = np.empty((N, K), dtype=complex)
    for k in range(K):
        hk = H[k]
        A = R - np.outer(hk.conj(), hk) + (K * sigma2 / p) * np.eye(N)
        W[:, k] = hermitian_solve(A, hk.conj())
    return BeamformerMatrix(_unit_columns(W) * math.sqrt(p / K))


def ce_project(x, budget) -> PhaseVector:
    """Keep only the phases of ``x``; zero entries map to phase 0."""
    x = np.asarray(x, dtype=complex).reshape(-1)
    return PhaseVector(np.where(x == 0, 0.0, np.angle(x)), _p(budget))


def one_bit_quantize(x, budget) -> QuantizedVector:
    x = np.asarray(x, dtype=complex).reshape(-1)
    p = _p(budget)
    sgn_re = np.where(x.real >= 0, 1.0, -1.0)
    sgn_im = np.where(x.imag >= 0, 1.0, -1.0)
    scale = math.sqrt(p / (2 * x.size))
    return QuantizedVector((scale * (sgn_re + 1j * sgn_im)).reshape(-1, 1), p)


def random_precoder(dims, budget, seed, architecture: str = "FullyDigital"):
    """Architecture-respecting random solution at full budget.

    ``dims`` is ``(N_t, K)`` or ``(N_t, K, N_rf)``.
    """
    N_t, K = int(dims[0]), int(dims[1])
    p = _p(budget)
    rng = np.random.default_rng(seed)
    arch = getattr(architecture, "value", architecture)
    if arch == "FullyDigital":
        W = rng.standard_normal((N_t, K)) + 1j * rng.standard_normal((N_t, K))
        return BeamformerMatrix(scale_to_power(W, p))
    if arch == "ConstantEnvelope":
        return PhaseVector(rng.uniform(-math.pi, math.pi, N_t), p)
    if arch == "OneBit":
        z = rng.standard_normal(N_t) + 1j * rng.standard_normal(N_t)
        return one_bit_quantize(z, p)
    if arch == "Hybrid":
        N_rf = int(dims[2]) if len(dims) > 2 else K
        F_rf = np.exp(1j * rng.uniform(-math.pi, math.pi, (N_t, N_rf)))
        F_bb = rng.standard_normal((N_rf, K)) + 1j * rng.standard_normal((N_rf, K))
        F_bb *= math.sqrt(p / np.sum(np.abs(F_rf @ F_bb) ** 2))
        return HybridPair(F_rf, F_bb)
    raise ValueError(f"unknown architecture {architecture!r}")


def power_control(H, U, gammas, sigma2: float) -> np.ndarray:
    """Minimum per-stream powers making fixed directions meet SINR targets.

    Solves p_k |h_k u_k|^2 / gamma_k - sum_{j != k} p_j |h_k u_j|^2 = sigma2
    for unit-norm columns of ``U`` and returns the scaled precoder.

    Raises ``Infeasible`` if the targets cannot be met with these directions.
    """
    H = np.asarray(H)
    U = _unit_columns(np.asarray(U, dtype=complex))
    gammas = np.asarray(gammas, dtype=float)
    G = np.abs(H @ U) ** 2
    A = -G.copy()
    np.fill_diagonal(A, np.diag(G) / gammas)
    try:
        p = np.linalg.solve(A, np.full(len(gammas), sigma2))
    except np.linalg.LinAlgError:
        raise Infeasible("power-control system is singular") from None
    if not np.all(np.isfinite(p)) or np.any(p <= 0):
        raise Infeasible("SINR targets unreachable with these directions")
    return U * np.sqrt(p)
