"""State containers and thermal-reset primitives for qubit registers.

A register holds ``n + 1`` two-level systems: ``n`` storage qubits plus one
designated reset slot that exchanges population with an external bath.  All
protocol bookkeeping happens on computational-basis populations, so states
are plain nonnegative vectors:

* full register: length ``2**(n+1)`` (:class:`DiagonalState`),
* reset slot traced out: length ``2**n`` (:class:`ReducedState`).

Basis convention, fixed here and used everywhere: entry ``i`` corresponds to
the bits of ``i`` written big-endian with ``g = 0`` and ``e = 1``, and the
reset slot is the least significant bit.  Entry 0 is therefore the all-ground
label and entry 1 is all ground except the reset slot.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

DEFAULT_MAX_EXPONENT = 24
_MAX_EXPONENT_ENV = "ICO_HBAC_MAX_N"

NORM_TOLERANCE = 1e-12


def max_register_exponent() -> int:
    """Largest allowed ``n``, read from ``ICO_HBAC_MAX_N`` (default 24)."""
    raw = os.environ.get(_MAX_EXPONENT_ENV)
    if raw is None:
        return DEFAULT_MAX_EXPONENT
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(
            f"{_MAX_EXPONENT_ENV} must be an integer, got {raw!r}"
        ) from exc
    if value < 1:
        raise ValueError(f"{_MAX_EXPONENT_ENV} must be >= 1, got {value}")
    return value


@dataclass(frozen=True)
class ThermalParams:
    """Bath parameters: gap ``epsilon`` in units of k_B*T, ``z = 2*cosh(epsilon)``.

    A slot thermalized against the bath carries populations
    ``(exp(epsilon)/z, exp(-epsilon)/z)`` on ``(|g>, |e>)``.
    """

    epsilon: float
    z: float

    def __post_init__(self):
        if not (isinstance(self.epsilon, (int, float)) and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be a finite number, got {self.epsilon!r}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        expected = 2.0 * math.cosh(self.epsilon)
        if not math.isfinite(expected):
            raise ValueError(f"epsilon={self.epsilon} overflows the partition constant")
        if abs(self.z - expected) > 1e-12 * expected:
            raise ValueError(f"z={self.z} is not 2*cosh(epsilon)={expected}")

    @property
    def ground_population(self) -> float:
        """Thermal weight of |g>, i.e. exp(epsilon)/z, evaluated without cancellation."""
        return 1.0 / (1.0 + math.exp(-2.0 * self.epsilon))

    @property
    def excited_population(self) -> float:
        """Thermal weight of |e>, i.e. exp(-epsilon)/z."""
        return 1.0 / (1.0 + math.exp(2.0 * self.epsilon))


def make_thermal_params(epsilon: float) -> ThermalParams:
    """Validate the gap and build :class:`ThermalParams` with ``z = 2*cosh(epsilon)``."""
    if isinstance(epsilon, bool) or not isinstance(epsilon, (int, float)):
        raise ValueError(f"epsilon must be a number, got {epsilon!r}")
    if not math.isfinite(epsilon) or epsilon <= 0:
        raise ValueError(f"epsilon must be finite and > 0, got {epsilon}")
    return ThermalParams(epsilon=float(epsilon), z=2.0 * math.cosh(float(epsilon)))


def _population_vector(values, what: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 1:
        raise ValueError(f"{what} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite entries")
    if arr.size and float(arr.min()) < 0.0:
        raise ValueError(f"{what} contains negative entries")
    return arr


def _check_norm(total: float, norm: float, what: str) -> None:
    if not (isinstance(norm, (int, float)) and math.isfinite(norm)) or norm < 0:
        raise ValueError(f"{what} norm must be finite and >= 0, got {norm!r}")
    if abs(total - norm) > NORM_TOLERANCE * max(1.0, norm):
        raise ValueError(f"{what} entries sum to {total}, expected norm {norm}")


@dataclass(frozen=True, eq=False)
class DiagonalState:
    """Computational-basis populations of the full ``n + 1``-qubit register.

    ``norm`` is the total probability carried: 1 for normalized states and
    less for unnormalized post-measurement branches.
    """

    n: int
    populations: np.ndarray
    norm: float = 1.0

    def __post_init__(self):
        arr = _population_vector(self.populations, "populations")
        cap = max_register_exponent()
        if not 0 <= self.n <= cap:
            raise ValueError(f"n={self.n} outside [0, {cap}]")
        if arr.size != 2 ** (self.n + 1):
            raise ValueError(f"expected 2**{self.n + 1} populations, got {arr.size}")
        _check_norm(float(arr.sum()), self.norm, "DiagonalState")
        arr.setflags(write=False)
        object.__setattr__(self, "populations", arr)
        object.__setattr__(self, "norm", float(self.norm))

    @classmethod
    def from_vector(cls, values, norm: float | None = None) -> "DiagonalState":
        """Build a state from a raw vector, inferring ``n`` from the length."""
        arr = _population_vector(values, "populations")
        size = arr.size
        if size < 2 or size & (size - 1):
            raise ValueError(f"population length must be a power of two >= 2, got {size}")
        n = size.bit_length() - 2
        return cls(n=n, populations=arr, norm=float(arr.sum()) if norm is None else norm)

    @property
    def dim(self) -> int:
        return self.populations.size

    def normalized(self) -> "DiagonalState":
        if self.norm <= 0.0:
            raise ValueError("cannot normalize a zero-norm state")
        return DiagonalState(self.n, self.populations / self.norm, 1.0)


@dataclass(frozen=True, eq=False)
class ReducedState:
    """Populations of the ``n`` storage qubits after tracing out the reset slot."""

    n: int
    populations: np.ndarray
    norm: float = 1.0

    def __post_init__(self):
        arr = _population_vector(self.populations, "populations")
        cap = max_register_exponent()
        if not 0 <= self.n <= cap:
            raise ValueError(f"n={self.n} outside [0, {cap}]")
        if arr.size != 2**self.n:
            raise ValueError(f"expected 2**{self.n} populations, got {arr.size}")
        _check_norm(float(arr.sum()), self.norm, "ReducedState")
        arr.setflags(write=False)
        object.__setattr__(self, "populations", arr)
        object.__setattr__(self, "norm", float(self.norm))

    @classmethod
    def from_vector(cls, values, norm: float | None = None) -> "ReducedState":
        """Build a state from a raw vector, inferring ``n`` from the length."""
        arr = _population_vector(values, "populations")
        size = arr.size
        if size < 1 or size & (size - 1):
            raise ValueError(f"population length must be a power of two >= 1, got {size}")
        n = size.bit_length() - 1
        return cls(n=n, populations=arr, norm=float(arr.sum()) if norm is None else norm)

    @property
    def dim(self) -> int:
        return self.populations.size

    def normalized(self) -> "ReducedState":
        if self.norm <= 0.0:
            raise ValueError("cannot normalize a zero-norm state")
        return ReducedState(self.n, self.populations / self.norm, 1.0)


@dataclass(frozen=True)
class BasisLabel:
    """Bit pattern of one basis index; the last bit is the reset slot.

    ``g`` is 0 and ``e`` is 1; the most significant bit belongs to the qubit
    farthest from the reset slot.
    """

    bits: tuple[int, ...]

    def __post_init__(self):
        if len(self.bits) < 1 or any(bit not in (0, 1) for bit in self.bits):
            raise ValueError(f"bits must be a nonempty 0/1 tuple, got {self.bits!r}")

    @classmethod
    def from_index(cls, index: int, n: int) -> "BasisLabel":
        width = n + 1
        if not 0 <= index < 2**width:
            raise ValueError(f"index {index} outside [0, {2 ** width})")
        return cls(tuple((index >> shift) & 1 for shift in range(width - 1, -1, -1)))

    def to_index(self) -> int:
        value = 0
        for bit in self.bits:
            value = (value << 1) | bit
        return value

    def __str__(self) -> str:
        return "".join("ge"[bit] for bit in self.bits)


def ground_state(n: int) -> DiagonalState:
    """All ``n + 1`` qubits in |g>: unit population on entry 0."""
    vec = np.zeros(2 ** (n + 1))
    vec[0] = 1.0
    return DiagonalState(n, vec, 1.0)


def uniform_full(n: int) -> DiagonalState:
    """Maximally mixed diagonal over the full register."""
    size = 2 ** (n + 1)
    return DiagonalState(n, np.full(size, 1.0 / size), 1.0)


def uniform_reduced(n: int) -> ReducedState:
    """Maximally mixed diagonal over the storage qubits."""
    size = 2**n
    return ReducedState(n, np.full(size, 1.0 / size), 1.0)


def _thermal_product(factors: int, params: ThermalParams) -> np.ndarray:
    weights = np.array([params.ground_population, params.excited_population])
    vec = np.ones(1)
    for _ in range(factors):
        vec = np.kron(vec, weights)
    return vec


def thermal_full(n: int, params: ThermalParams) -> DiagonalState:
    """Every qubit independently thermalized against the bath."""
    return DiagonalState(n, _thermal_product(n + 1, params), 1.0)


def thermal_reduced(n: int, params: ThermalParams) -> ReducedState:
    """Storage qubits independently thermalized against the bath."""
    return ReducedState(n, _thermal_product(n, params), 1.0)


def reduce(state: DiagonalState) -> ReducedState:
    """Trace out the reset slot: pairwise sums of adjacent populations."""
    lam = state.populations
    return ReducedState(state.n, lam[0::2] + lam[1::2], state.norm)


def reset(state: ReducedState, params: ThermalParams) -> DiagonalState:
    """Attach a freshly thermalized reset slot to the reduced register.

    Entry ``2k`` of the result is ``p_k * exp(epsilon)/z`` and entry ``2k+1``
    is ``p_k * exp(-epsilon)/z``; the carried norm is unchanged.
    """
    p = state.populations
    out = np.empty(2 * p.size)
    out[0::2] = p * params.ground_population
    out[1::2] = p * params.excited_population
    return DiagonalState(state.n, out, state.norm)
