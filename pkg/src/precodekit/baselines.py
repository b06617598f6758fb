"""The named baseline methods of every catalog scenario.

``baseline_solution(name, theta)`` returns the solution the baseline
produces on one instance. Random baselines draw from a stream derived from
the instance seed, so every method sees the same channel and the random
draw is reproducible.
"""

from __future__ import annotations

import math

import numpy as np

from . import metrics
from .errors import Infeasible, NotConverged, UnknownStrategy
from .model import BeamformerMatrix, HybridPair, pseudo_inverse
from .precoders import (ce_project, mrt, one_bit_quantize, power_control, random_precoder,
                        rzf, scale_to_power, slnr, zf)


def nulling_zf(H, g, p_max: float) -> np.ndarray:
    """ZF on the channels projected orthogonally to ``g`` at full power;
    the primary user receives no interference."""
    g = np.asarray(g, dtype=complex).reshape(1, -1)
    P = np.eye(H.shape[1]) - g.conj().T @ g / float(np.vdot(g, g).real)
    return scale_to_power(P @ pseudo_inverse(H @ P), p_max)


def rate_scaled_zf(H, gammas, sigma2: float) -> np.ndarray:
    """ZF directions with the least per-user power meeting the targets."""
    U = pseudo_inverse(H)
    U = U / np.linalg.norm(U, axis=0)
    gain = np.abs(np.diag(H @ U)) ** 2
    return U * np.sqrt(np.asarray(gammas) * sigma2 / gain)


def _power_controlled(H, U, gammas, sigma2, p_max):
    """Directions U with exact power control; saturate at p_max when the
    targets are out of reach."""
    try:
        return power_control(H, U, gammas, sigma2)
    except Infeasible:
        return scale_to_power(U, p_max)


def _random_seed(theta) -> np.random.SeedSequence:
    return np.random.SeedSequence([theta.seed, theta.sys.scenario_id, 7919])


def _scale_hybrid(theta, F_rf, F_bb) -> HybridPair:
    """Scale F_bb so the robust CI constraint holds with equality, or to
    full budget when no scaling can satisfy it."""
    c = theta.first("RobustCiMargin")
    s = theta.ch.symbols
    x = F_rf @ (F_bb @ s)
    margin = metrics.robust_ci_margins(theta.H, x / np.linalg.norm(x), s, int(c["M"]),
                                       c["epsilon"]).min()
    delta = c["threshold"] * theta.sigma
    if margin > 0:
        alpha = delta / (margin * np.linalg.norm(x))
    else:
        alpha = math.sqrt(theta.p_max) / np.linalg.norm(x)
    return HybridPair(F_rf, F_bb * alpha)


def _mrt_multicast(H, p):
    return math.sqrt(p) * _unit(np.sum(H.conj().T / np.linalg.norm(H, axis=1), axis=1))


def _unit(w):
    w = np.asarray(w).reshape(-1, 1)
    return w / np.linalg.norm(w)


def baseline_solution(name: str, theta):
    """Solution of baseline ``name`` on instance ``theta``."""
    from .solvers import registry

    sid = theta.sys.scenario_id
    H, p, s2 = theta.H, theta.p_max, theta.sigma2
    arch = theta.sys.architecture
    dims = (theta.sys.N_t, theta.sys.K) + ((theta.sys.N_rf,) if theta.sys.N_rf else ())
    gammas = theta.sinr_targets()
    s = theta.ch.symbols

    if name in ("random", "random_ce", "random_1bit", "random_hybrid"):
        sol = random_precoder(dims, p, _random_seed(theta), arch)
        if isinstance(sol, HybridPair):
            return _scale_hybrid(theta, sol.F_rf, sol.F_bb)
        return sol
    if sid in (1, 5):
        if name == "zf":
            return BeamformerMatrix(rate_scaled_zf(H, gammas, s2))
        if name == "rmmse":
            return BeamformerMatrix(_power_controlled(H, rzf(H, p, s2).W, gammas, s2, p))
        if name in ("exhaustive_mrt", "mrt_power"):
            return BeamformerMatrix(_power_controlled(H, mrt(H, p).W, gammas, s2, p))
        if name in ("socp_surrogate", "sinr_only"):
            return registry.solve_default("SinrDualityPowerMin", theta).solution
    if sid in (2, 3):
        composite = {"mrt_ce": mrt, "zf_ce": zf, "mrt_1bit": mrt, "zf_1bit": zf}
        if name in composite:
            x = composite[name](H, p).W @ s
            return ce_project(x, p) if sid == 2 else one_bit_quantize(x, p)
        if name == "cd_ce":
            return registry.solve_default("CePhaseCoordinateDescent", theta).solution
        if name == "cd_greedy_1bit":
            return registry.solve_default("OneBitGreedyCD", theta).solution
    if sid == 4:
        h_eve = theta.ch.h_eve
        if name == "mrt_multicast":
            return BeamformerMatrix(_mrt_multicast(H, p))
        if name == "nullspace_mrt":
            P = np.eye(H.shape[1]) - h_eve.conj().T @ h_eve / float(np.vdot(h_eve, h_eve).real)
            return BeamformerMatrix(math.sqrt(p) * _unit(P @ _mrt_multicast(H, p)))
        if name == "secrecy_unaware":
            from .solvers.secrecy import secrecy_nullspace_maxmin
            try:
                return secrecy_nullspace_maxmin(H, h_eve, p, s2, project=False).solution
            except NotConverged as exc:
                return exc.outcome.solution
    if sid in (6, 7, 8):
        simple = {"mrt": lambda: mrt(H, p).W, "zf": lambda: zf(H, p).W,
                  "rzf": lambda: rzf(H, p, s2).W, "slnr": lambda: slnr(H, p, s2).W}
        if name in simple and (sid == 8 or name in ("mrt", "zf")):
            return BeamformerMatrix(simple[name]())
        if name == "equal_power" and sid == 6:
            U = pseudo_inverse(H)
            return BeamformerMatrix(U / np.linalg.norm(U, axis=0) * math.sqrt(p / H.shape[0]))
        if name in ("interference_aware", "interference_nulling") and sid != 8:
            return BeamformerMatrix(nulling_zf(H, theta.ch.g, p))
    if sid == 9:
        from .solvers.hybrid import phase_matched_analog
        F_rf = phase_matched_analog(H, theta.sys.N_rf)
        He = H @ F_rf
        if name == "phase_matched_hybrid":
            return _scale_hybrid(theta, F_rf, pseudo_inverse(He))
        if name == "rzf_hybrid":
            return _scale_hybrid(theta, F_rf, rzf(He, p, s2).W)
        if name == "limited_alternating":
            try:
                return registry.solve_default("HybridRobustCiAltMin", theta,
                                              {"max_iter": 3}).solution
            except NotConverged as exc:
                return exc.outcome.solution
    raise UnknownStrategy(f"{name!r} is not a baseline of scenario {sid}")


def baseline_names(theta) -> list[str]:
    from .scenarios import load_catalog
    return list(load_catalog().entry(theta.sys.scenario_id)["baselines"])
