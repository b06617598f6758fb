"""Scenario catalog: turns ``(scenario_id, snr_db, seed)`` into a task
description plus a structured descriptor holding system, channel,
objective and constraint information.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

from .errors import ShapeError, UnknownScenario
from .model import (Architecture, Constraint, ConstraintKind, ObjectiveKind,
                    as_complex_matrix, matrix_from_pairs, matrix_to_pairs)

__all__ = [
    "SystemParams", "ChannelState", "ScenarioDescriptor", "TaskDescription",
    "Catalog", "load_catalog", "noise_variance", "generate_channel",
    "instantiate_scenario", "psk_symbols", "PRESENCE",
]

# optional channel fields each built-in scenario carries
PRESENCE: dict[int, frozenset[str]] = {
    1: frozenset(),
    2: frozenset({"symbols"}),
    3: frozenset({"symbols"}),
    4: frozenset({"h_eve"}),
    5: frozenset({"G_si"}),
    6: frozenset({"g"}),
    7: frozenset({"g", "epsilon"}),
    8: frozenset({"G_si"}),
    9: frozenset({"symbols", "epsilon"}),
}

_OPTIONAL_FIELDS = ("h_eve", "g", "G_si", "epsilon", "symbols")


@dataclass(frozen=True)
class SystemParams:
    scenario_id: int
    N_t: int
    K: int
    architecture: Architecture
    N_rf: int | None = None
    M: int | None = None
    N_r: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "architecture", Architecture(self.architecture))
        if self.N_t < 1 or self.K < 1:
            raise ValueError("N_t and K must be positive")
        if self.N_rf is not None and not 1 <= self.N_rf <= self.N_t:
            raise ValueError("need 1 <= N_rf <= N_t")


@dataclass(frozen=True)
class ChannelState:
    H: np.ndarray
    sigma2: float
    h_eve: np.ndarray | None = None
    g: np.ndarray | None = None
    G_si: np.ndarray | None = None
    epsilon: float | None = None
    symbols: np.ndarray | None = None

    def __post_init__(self):
        if not (self.sigma2 > 0 and math.isfinite(self.sigma2)):
            raise ValueError(f"sigma2 must be positive and finite, got {self.sigma2}")
        object.__setattr__(self, "H", as_complex_matrix(self.H, name="H"))
        for name in ("h_eve", "g", "G_si"):
            value = getattr(self, name)
            if value is not None:
                value = as_complex_matrix(value, name=name)
                if value.shape[0] == value.size and name != "G_si":
                    value = value.reshape(1, -1)
                object.__setattr__(self, name, value)
        if self.symbols is not None:
            object.__setattr__(self, "symbols", np.array(self.symbols, dtype=complex).reshape(-1))
        if self.epsilon is not None and self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")

    def present(self) -> frozenset[str]:
        return frozenset(n for n in _OPTIONAL_FIELDS if getattr(self, n) is not None)


@dataclass(frozen=True)
class TaskDescription:
    text: str

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("task description must be non-empty")


@dataclass(frozen=True)
class ScenarioDescriptor:
    sys: SystemParams
    ch: ChannelState
    obj: ObjectiveKind
    con: tuple[Constraint, ...]
    seed: int | None = None
    snr_db: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "obj", ObjectiveKind(self.obj))
        object.__setattr__(self, "con", tuple(self.con))
        s, ch = self.sys, self.ch
        if ch.H.shape != (s.K, s.N_t):
            raise ShapeError(f"H must be {(s.K, s.N_t)}, got {ch.H.shape}")
        for name in ("h_eve", "g"):
            v = getattr(ch, name)
            if v is not None and v.shape != (1, s.N_t):
                raise ShapeError(f"{name} must be {(1, s.N_t)}, got {v.shape}")
        if ch.G_si is not None and ch.G_si.shape[1] != s.N_t:
            raise ShapeError(f"G_si must have {s.N_t} columns, got {ch.G_si.shape}")
        if ch.symbols is not None and ch.symbols.size != s.K:
            raise ShapeError(f"need {s.K} symbols, got {ch.symbols.size}")
        expected = PRESENCE.get(s.scenario_id)
        if expected is not None and ch.present() != expected:
            raise ValueError(
                f"scenario {s.scenario_id} requires channel fields {sorted(expected)}, "
                f"got {sorted(ch.present())}")

    # convenience accessors
    @property
    def H(self) -> np.ndarray:
        return self.ch.H

    @property
    def sigma2(self) -> float:
        return self.ch.sigma2

    @property
    def sigma(self) -> float:
        return math.sqrt(self.ch.sigma2)

    def constraints_of(self, kind: ConstraintKind | str) -> list[Constraint]:
        kind = ConstraintKind(kind)
        return [c for c in self.con if c.kind is kind]

    def first(self, kind: ConstraintKind | str) -> Constraint | None:
        found = self.constraints_of(kind)
        return found[0] if found else None

    @property
    def p_max(self) -> float:
        c = self.first(ConstraintKind.TOTAL_POWER)
        return float("inf") if c is None else c["p_max"]

    def sinr_targets(self) -> np.ndarray | None:
        """Per-user SINR targets from PerUserSinr / PerUserRate constraints."""
        gammas = np.full(self.sys.K, np.nan)
        for c in self.con:
            if c.kind is ConstraintKind.PER_USER_SINR:
                gammas[c.user] = c["gamma"]
            elif c.kind is ConstraintKind.PER_USER_RATE:
                gammas[c.user] = 2.0 ** c["rate"] - 1.0
        if np.all(np.isnan(gammas)):
            return None
        return np.nan_to_num(gammas, nan=0.0)

    def to_dict(self) -> dict[str, Any]:
        s, ch = self.sys, self.ch
        out = {
            "sys": {"scenario_id": s.scenario_id, "N_t": s.N_t, "K": s.K, "N_rf": s.N_rf,
                    "M": s.M, "N_r": s.N_r, "architecture": s.architecture.value},
            "ch": {"H": matrix_to_pairs(ch.H), "sigma2": ch.sigma2},
            "obj": self.obj.value,
            "con": [c.to_dict() for c in self.con],
            "seed": self.seed,
            "snr_db": self.snr_db,
        }
        for name in ("h_eve", "g", "G_si"):
            v = getattr(ch, name)
            out["ch"][name] = None if v is None else matrix_to_pairs(v)
        out["ch"]["epsilon"] = ch.epsilon
        out["ch"]["symbols"] = (None if ch.symbols is None
                                else [[float(z.real), float(z.imag)] for z in ch.symbols])
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ScenarioDescriptor":
        ch = dict(data["ch"])
        kwargs = {"H": matrix_from_pairs(ch["H"]), "sigma2": float(ch["sigma2"]),
                  "epsilon": ch.get("epsilon")}
        for name in ("h_eve", "g", "G_si"):
            if ch.get(name) is not None:
                kwargs[name] = matrix_from_pairs(ch[name])
        if ch.get("symbols") is not None:
            pairs = np.asarray(ch["symbols"], dtype=float)
            kwargs["symbols"] = pairs[:, 0] + 1j * pairs[:, 1]
        return cls(
            sys=SystemParams(**data["sys"]),
            ch=ChannelState(**kwargs),
            obj=ObjectiveKind(data["obj"]),
            con=tuple(Constraint.from_dict(c) for c in data["con"]),
            seed=data.get("seed"),
            snr_db=data.get("snr_db"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ScenarioDescriptor":
        return cls.from_dict(json.loads(text))


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# Catalog
# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
class Catalog:
    """Immutable mapping ``scenario_id -> entry`` loaded from JSON."""

    def __init__(self, entries: Iterable[Mapping[str, Any]]):
        self._entries = {int(e["scenario_id"]): dict(e) for e in entries}

    def __contains__(self, scenario_id) -> bool:
        return scenario_id in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def ids(self) -> list[int]:
        return sorted(self._entries)

    def entry(self, scenario_id: int) -> dict[str, Any]:
        try:
            return dict(self._entries[int(scenario_id)])
        except (KeyError, ValueError, TypeError):
            raise UnknownScenario(f"UnknownScenario: {scenario_id!r}") from None

    def merged(self, entries: Iterable[Mapping[str, Any]]) -> "Catalog":
        new = dict(self._entries)
        for e in entries:
            new[int(e["scenario_id"])] = dict(e)
        return Catalog(new.values())


_DEFAULT: Catalog | None = None


def load_catalog(override: str | Path | None = None) -> Catalog:
    """Return the built-in catalog, optionally merged with a JSON override
    file (same layout as the built-in ``catalog.json``)."""
    global _DEFAULT
    if _DEFAULT is None:
        text = resources.files("precodekit").joinpath("catalog.json").read_text()
        _DEFAULT = Catalog(json.loads(text)["scenarios"])
    if override is None:
        return _DEFAULT
    data = json.loads(Path(override).read_text())
    entries = data["scenarios"] if isinstance(data, dict) else data
    return _DEFAULT.merged(entries)


def noise_variance(snr_db: float) -> float:
    """Noise power in W for a 1 W reference transmit power."""
    if not math.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    return 10.0 ** (-snr_db / 10.0)


def generate_channel(dims, seed) -> np.ndarray:
    """I.i.d. CN(0, 1) matrix of shape ``dims``, reproducible from ``seed``.

    ``seed`` may be an int, a sequence of ints, or a ``numpy`` Generator.
    """
    rows, cols = (dims, 1) if np.isscalar(dims) else tuple(dims)
    if rows < 1 or cols < 1:
        raise ValueError("dims must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    z = rng.standard_normal((rows, cols, 2))
    return (z[..., 0] + 1j * z[..., 1]) / math.sqrt(2.0)


def psk_symbols(M: int, K: int, rng: np.random.Generator) -> np.ndarray:
    """K random M-PSK symbols at phases (2m + 1) pi / M."""
    idx = rng.integers(0, M, size=K)
    return np.exp(1j * (2 * idx + 1) * math.pi / M)


def _format_value(v):
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return f"{v:g}" if isinstance(v, float) else str(v)


def instantiate_scenario(scenario_id: int, snr_db: float, seed: int,
                         catalog: Catalog | None = None) -> tuple[TaskDescription, ScenarioDescriptor]:
    """Build ``(D, theta)`` for one catalog row.

    The random draws depend on ``(seed, scenario_id)`` only, so every SNR
    point and every method sees the same channel for a given seed.
    """
    catalog = catalog or load_catalog()
    entry = catalog.entry(scenario_id)
    sid = int(entry["scenario_id"])
    N_t, K = int(entry["N_t"]), int(entry["K"])
    M = entry.get("M")
    N_r = entry.get("N_r")
    wanted = set(entry.get("channels", []))
    epsilon = entry.get("epsilon")

    # independent streams per field, so adding a field never shifts H
    streams = np.random.SeedSequence([int(seed), sid]).spawn(5)
    rng_h, rng_eve, rng_g, rng_si, rng_sym = (np.random.default_rng(s) for s in streams)
    sigma2 = noise_variance(snr_db)
    ch = {"H": generate_channel((K, N_t), rng_h), "sigma2": sigma2}
    if "h_eve" in wanted:
        ch["h_eve"] = generate_channel((1, N_t), rng_eve)
    if "g" in wanted:
        ch["g"] = generate_channel((1, N_t), rng_g)
    if "G_si" in wanted:
        ch["G_si"] = generate_channel((int(N_r or 1), N_t), rng_si)
    if "symbols" in wanted:
        ch["symbols"] = psk_symbols(int(M), K, rng_sym)
    if epsilon is not None:
        ch["epsilon"] = float(epsilon)

    constraints = []
    fill = {"N_t": N_t, "K": K, "N_rf": entry.get("N_rf"), "M": M, "N_r": N_r,
            "snr_db": snr_db, "epsilon": epsilon}
    for spec in entry["constraints"]:
        params = dict(spec.get("params", {}))
        fill.update(params)
        if spec.get("per_user"):
            constraints.extend(Constraint(spec["kind"], {**params, "user": k}) for k in range(K))
        else:
            constraints.append(Constraint(spec["kind"], params))

    theta = ScenarioDescriptor(
        sys=SystemParams(scenario_id=sid, N_t=N_t, K=K, architecture=entry["architecture"],
                         N_rf=entry.get("N_rf"), M=M, N_r=N_r),
        ch=ChannelState(**ch),
        obj=ObjectiveKind(entry["objective"]),
        con=tuple(constraints),
        seed=int(seed),
        snr_db=float(snr_db),
    )
    text = entry["description"].format(**{k: _format_value(v) for k, v in fill.items()})
    return TaskDescription(text), theta
