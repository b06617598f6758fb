"""Domain types for the generic precoding problem and the small amount of
dense linear algebra the solvers rely on.

Complex matrices are plain ``numpy`` arrays of dtype ``complex128``; the
helpers here validate them and convert to/from the JSON representation
(nested lists of ``[re, im]`` pairs).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.linalg

from .errors import NotPositiveDefinite, RankDeficient, ShapeError

__all__ = [
    "ObjectiveKind", "ConstraintKind", "Architecture", "Constraint",
    "BeamformerMatrix", "PhaseVector", "QuantizedVector", "HybridPair",
    "Solution", "as_complex_matrix", "matrix_to_pairs", "matrix_from_pairs",
    "hermitian_solve", "pseudo_inverse", "one_bit_alphabet",
]


class ObjectiveKind(str, enum.Enum):
    POWER_MIN = "PowerMin"
    CI_MARGIN_MAX = "CiMarginMax"
    SECRECY_MAX_MIN = "SecrecyMaxMin"
    SUM_RATE_MAX = "SumRateMax"

    @property
    def direction(self) -> str:
        return "min" if self is ObjectiveKind.POWER_MIN else "max"


class Architecture(str, enum.Enum):
    FULLY_DIGITAL = "FullyDigital"
    CONSTANT_ENVELOPE = "ConstantEnvelope"
    ONE_BIT = "OneBit"
    HYBRID = "Hybrid"


class ConstraintKind(str, enum.Enum):
    TOTAL_POWER = "TotalPower"
    PER_USER_SINR = "PerUserSinr"
    PER_USER_RATE = "PerUserRate"
    INTERFERENCE_TEMPERATURE = "InterferenceTemperature"
    ROBUST_INTERFERENCE_TEMPERATURE = "RobustInterferenceTemperature"
    SELF_INTERFERENCE = "SelfInterference"
    UNIT_MODULUS = "UnitModulus"
    ONE_BIT = "OneBit"
    CI_MARGIN = "CiMargin"
    ROBUST_CI_MARGIN = "RobustCiMargin"
    EAVESDROPPER_RATE = "EavesdropperRate"


# Parameters each constraint kind must carry.
#   p_max [W], gamma [-], rate [bps/Hz], i_th [W], epsilon [-], eta [W],
#   M [symbol-set order], threshold [normalized margin], r_max [bps/Hz]
REQUIRED_PARAMS: dict[ConstraintKind, tuple[str, ...]] = {
    ConstraintKind.TOTAL_POWER: ("p_max",),
    ConstraintKind.PER_USER_SINR: ("user", "gamma"),
    ConstraintKind.PER_USER_RATE: ("user", "rate"),
    ConstraintKind.INTERFERENCE_TEMPERATURE: ("i_th",),
    ConstraintKind.ROBUST_INTERFERENCE_TEMPERATURE: ("i_th", "epsilon"),
    ConstraintKind.SELF_INTERFERENCE: ("eta",),
    ConstraintKind.UNIT_MODULUS: (),
    ConstraintKind.ONE_BIT: (),
    ConstraintKind.CI_MARGIN: ("M", "threshold"),
    ConstraintKind.ROBUST_CI_MARGIN: ("M", "threshold", "epsilon"),
    ConstraintKind.EAVESDROPPER_RATE: ("r_max",),
}

# threshold may be negative; everything else is a budget/target/radius
_SIGNED_PARAMS = {"threshold"}


@dataclass(frozen=True)
class Constraint:
    kind: ConstraintKind
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        kind = ConstraintKind(self.kind)
        object.__setattr__(self, "kind", kind)
        params = {k: float(v) for k, v in dict(self.params).items()}
        for name in REQUIRED_PARAMS[kind]:
            if name not in params:
                raise ValueError(f"{kind.value} constraint requires parameter {name!r}")
        for name, value in params.items():
            if not math.isfinite(value):
                raise ValueError(f"{kind.value}.{name} must be finite, got {value}")
            if name not in _SIGNED_PARAMS and value < 0:
                raise ValueError(f"{kind.value}.{name} must be nonnegative, got {value}")
        object.__setattr__(self, "params", params)

    def __getitem__(self, name: str) -> float:
        return self.params[name]

    @property
    def user(self) -> int | None:
        return int(self.params["user"]) if "user" in self.params else None

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, data: Mapping) -> "Constraint":
        return cls(ConstraintKind(data["kind"]), dict(data.get("params", {})))


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# Complex matrix helpers
# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
def as_complex_matrix(a, shape: tuple[int, int] | None = None, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D complex128 array (row-major copy).

    1-D input is promoted to a column vector.
    """
    arr = np.array(a, dtype=np.complex128, order="C")
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if shape is not None and arr.shape != tuple(shape):
        raise ShapeError(f"{name} must have shape {tuple(shape)}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def matrix_to_pairs(a: np.ndarray) -> list:
    a = np.asarray(a)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def matrix_from_pairs(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ShapeError("complex matrix must be encoded as rows of [re, im] pairs")
    return as_complex_matrix(arr[..., 0] + 1j * arr[..., 1])


def one_bit_alphabet() -> np.ndarray:
    """The four unit-less 1-bit points ordered by phase in [0, 2*pi)."""
    return np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j])


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# Solutions
# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
@dataclass(frozen=True)
class BeamformerMatrix:
    """Linear precoder; column ``k`` is the beamformer of stream ``k``."""

    W: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "W", as_complex_matrix(self.W, name="W"))

    tag = "BeamformerMatrix"
    architecture = "FullyDigital"

    @property
    def n_t(self) -> int:
        return self.W.shape[0]

    def power(self, symbols=None) -> float:
        return float(np.sum(np.abs(self.W) ** 2))

    def transmit(self, symbols) -> np.ndarray:
        return self.W @ np.asarray(symbols, dtype=complex)

    def check_shape(self, n_t: int, n_streams: int, n_rf: int | None = None) -> None:
        if self.W.shape != (n_t, n_streams):
            raise ShapeError(f"W must be {(n_t, n_streams)}, got {self.W.shape}")


@dataclass(frozen=True)
class PhaseVector:
    """Constant-envelope signal: antenna ``n`` sends sqrt(p_max/N_t) e^{j theta_n}."""

    theta: np.ndarray
    p_max: float

    tag = "PhaseVector"
    architecture = "ConstantEnvelope"

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float).reshape(-1)
        if not np.all(np.isfinite(theta)):
            raise ValueError("phases must be finite")
        if not self.p_max > 0:
            raise ValueError("p_max must be positive")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "p_max", float(self.p_max))

    @property
    def n_t(self) -> int:
        return self.theta.size

    def signal(self) -> np.ndarray:
        return math.sqrt(self.p_max / self.n_t) * np.exp(1j * self.theta)

    def power(self, symbols=None) -> float:
        return float(np.sum(np.abs(self.signal()) ** 2))

    def transmit(self, symbols=None) -> np.ndarray:
        return self.signal()

    def check_shape(self, n_t: int, n_streams: int, n_rf: int | None = None) -> None:
        if self.theta.size != n_t:
            raise ShapeError(f"theta must have length {n_t}, got {self.theta.size}")


@dataclass(frozen=True)
class QuantizedVector:
    """1-bit DAC output; entries lie in sqrt(p_max/(2 N_t)) * {+-1 +- j}."""

    x: np.ndarray
    p_max: float

    tag = "QuantizedVector"
    architecture = "OneBit"

    def __post_init__(self):
        x = as_complex_matrix(self.x, name="x")
        if x.shape[1] != 1:
            raise ShapeError(f"x must be a column vector, got {x.shape}")
        n_t = x.shape[0]
        scale = math.sqrt(self.p_max / (2 * n_t))
        units = x[:, 0] / scale
        on_grid = np.isclose(np.abs(units.real), 1.0, rtol=0, atol=1e-12) & np.isclose(
            np.abs(units.imag), 1.0, rtol=0, atol=1e-12)
        if not np.all(on_grid):
            raise ValueError("QuantizedVector entries must be drawn from the 1-bit alphabet")
        # snap to the exact alphabet so power is exactly p_max
        x = scale * (np.sign(units.real) + 1j * np.sign(units.imag))
        object.__setattr__(self, "x", x.reshape(-1, 1))
        object.__setattr__(self, "p_max", float(self.p_max))

    @property
    def n_t(self) -> int:
        return self.x.shape[0]

    def signal(self) -> np.ndarray:
        return self.x[:, 0]

    def power(self, symbols=None) -> float:
        return float(np.sum(np.abs(self.x) ** 2))

    def transmit(self, symbols=None) -> np.ndarray:
        return self.signal()

    def check_shape(self, n_t: int, n_streams: int, n_rf: int | None = None) -> None:
        if self.x.shape != (n_t, 1):
            raise ShapeError(f"x must be {(n_t, 1)}, got {self.x.shape}")


@dataclass(frozen=True)
class HybridPair:
    """Analog network ``F_rf`` (unit-modulus) cascaded with digital ``F_bb``."""

    F_rf: np.ndarray
    F_bb: np.ndarray

    tag = "HybridPair"
    architecture = "Hybrid"

    def __post_init__(self):
        F_rf = as_complex_matrix(self.F_rf, name="F_rf")
        F_bb = as_complex_matrix(self.F_bb, name="F_bb")
        if F_rf.shape[1] != F_bb.shape[0]:
            raise ShapeError(f"F_rf {F_rf.shape} and F_bb {F_bb.shape} do not chain")
        if not np.allclose(np.abs(F_rf), 1.0, rtol=0, atol=1e-12):
            raise ValueError("analog precoder entries must have unit modulus")
        object.__setattr__(self, "F_rf", F_rf)
        object.__setattr__(self, "F_bb", F_bb)

    @property
    def n_t(self) -> int:
        return self.F_rf.shape[0]

    def transmit(self, symbols) -> np.ndarray:
        return self.F_rf @ (self.F_bb @ np.asarray(symbols, dtype=complex))

    def power(self, symbols=None) -> float:
        # symbol-level transmit power when the symbols are known
        if symbols is None:
            return float(np.sum(np.abs(self.F_rf @ self.F_bb) ** 2))
        return float(np.sum(np.abs(self.transmit(symbols)) ** 2))

    def check_shape(self, n_t: int, n_streams: int, n_rf: int | None = None) -> None:
        n_rf = self.F_rf.shape[1] if n_rf is None else n_rf
        if self.F_rf.shape != (n_t, n_rf) or self.F_bb.shape != (n_rf, n_streams):
            raise ShapeError(
                f"hybrid pair must be {(n_t, n_rf)} x {(n_rf, n_streams)}, "
                f"got {self.F_rf.shape} x {self.F_bb.shape}")


Solution = BeamformerMatrix | PhaseVector | QuantizedVector | HybridPair


def solution_to_dict(sol: Solution) -> dict:
    if isinstance(sol, BeamformerMatrix):
        return {"tag": sol.tag, "W": matrix_to_pairs(sol.W)}
    if isinstance(sol, PhaseVector):
        return {"tag": sol.tag, "theta": sol.theta.tolist(), "p_max": sol.p_max}
    if isinstance(sol, QuantizedVector):
        return {"tag": sol.tag, "x": matrix_to_pairs(sol.x), "p_max": sol.p_max}
    if isinstance(sol, HybridPair):
        return {"tag": sol.tag, "F_rf": matrix_to_pairs(sol.F_rf),
                "F_bb": matrix_to_pairs(sol.F_bb)}
    raise TypeError(f"not a solution: {type(sol).__name__}")


def solution_from_dict(data: Mapping) -> Solution:
    tag = data["tag"]
    if tag == "BeamformerMatrix":
        return BeamformerMatrix(matrix_from_pairs(data["W"]))
    if tag == "PhaseVector":
        return PhaseVector(np.asarray(data["theta"], dtype=float), data["p_max"])
    if tag == "QuantizedVector":
        return QuantizedVector(matrix_from_pairs(data["x"]), data["p_max"])
    if tag == "HybridPair":
        return HybridPair(matrix_from_pairs(data["F_rf"]), matrix_from_pairs(data["F_bb"]))
    raise ValueError(f"unknown solution tag {tag!r}")


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
# Linear algebra
# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
def hermitian_solve(A, B) -> np.ndarray:
    """Solve ``A X = B`` for Hermitian positive-definite ``A``.

    Parameters
    ----------
    A : array_like, shape (n, n)
        Hermitian (within 1e-10 relative) positive-definite matrix.
    B : array_like, shape (n,) or (n, m)

    Returns
    -------
    X : numpy.ndarray, same shape as ``B``

    Raises
    ------
    NotPositiveDefinite
        If the Cholesky factorization meets a non-positive pivot.
    """
    A = np.asarray(A, dtype=complex)
    B_arr = np.asarray(B, dtype=complex)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ShapeError(f"A must be square, got {A.shape}")
    if B_arr.shape[0] != n:
        raise ShapeError(f"B has {B_arr.shape[0]} rows, expected {n}")
    scale = max(np.max(np.abs(A)), 1e-300)
    if np.max(np.abs(A - A.conj().T)) > 1e-10 * scale:
        raise NotPositiveDefinite("matrix is not Hermitian")
    try:
        factor = scipy.linalg.cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    if np.any(np.diag(factor[0]).real <= 0):
        raise NotPositiveDefinite("non-positive pivot")
    return scipy.linalg.cho_solve(factor, B_arr, check_finite=False)


def pseudo_inverse(H, tol: float = 1e-10) -> np.ndarray:
    """Right pseudo-inverse of a full-row-rank ``K x N`` matrix (K <= N).

    Raises ``RankDeficient`` when the smallest singular value falls below
    ``tol`` times the largest.
    """
    H = as_complex_matrix(H, name="H")
    K, N = H.shape
    if K > N:
        raise RankDeficient(f"need K <= N for a right inverse, got {H.shape}")
    U, s, Vh = np.linalg.svd(H, full_matrices=False)
    if s.size == 0 or s[-1] < tol * s[0] or s[0] == 0:
        raise RankDeficient(f"singular values {s} below tolerance {tol}")
    return (Vh.conj().T / s) @ U.conj().T
