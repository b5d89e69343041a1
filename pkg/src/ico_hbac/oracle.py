"""Dense density-matrix ground truth for the diagonal fast path.

Everything here builds literal complex matrices: the block-diagonal unitaries,
the four-product switch channel, and the thermal reset as a partial trace
followed by a tensor product.  Sizes are capped by default at ``n = 6``
(128 x 128); this module exists for correctness checks, not scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .register import DiagonalState, ThermalParams
from .switch import (
    ONE,
    SIGNS,
    PLUS,
    BlockUnitarySpec,
    ideal_pair,
    k_pair,
    standard_pair,
    switch_branches,
    tree_pair,
)

DENSE_EXPONENT_CAP = 6

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

_ROLE_BLOCKS = {"A": SIGMA_Y, "B": SIGMA_Z, "two-sort": SIGMA_X}


def materialize(
    spec: BlockUnitarySpec, which: str, max_exponent: int = DENSE_EXPONENT_CAP
) -> np.ndarray:
    """Literal block-diagonal unitary for role ``"A"``, ``"B"``, or ``"two-sort"``."""
    if which not in _ROLE_BLOCKS:
        raise ValueError(f"which must be one of {sorted(_ROLE_BLOCKS)}, got {which!r}")
    if spec.n > max_exponent:
        raise ValueError(f"dense unitaries are capped at n={max_exponent}, got n={spec.n}")
    pauli = _ROLE_BLOCKS[which]
    unitary = np.zeros((spec.dim, spec.dim), dtype=complex)
    i = 0
    for blk in spec.blocks:
        if blk == ONE:
            unitary[i, i] = 1.0
            i += 1
        else:
            unitary[i : i + 2, i : i + 2] = pauli
            i += 2
    return unitary


def unitarity_defect(unitary: np.ndarray) -> float:
    """Max-abs deviation of ``U U^dagger`` from the identity."""
    eye = np.eye(unitary.shape[0], dtype=complex)
    return float(np.abs(unitary @ unitary.conj().T - eye).max())


def density_defects(rho: np.ndarray, norm: float = 1.0) -> dict[str, float]:
    """Hermiticity, trace, and positivity diagnostics of a density matrix."""
    hermiticity = float(np.abs(rho - rho.conj().T).max())
    trace = float(abs(np.trace(rho).real - norm) + abs(np.trace(rho).imag))
    symmetrized = (rho + rho.conj().T) / 2.0
    min_eigenvalue = float(np.linalg.eigvalsh(symmetrized).min())
    return {"hermiticity": hermiticity, "trace": trace, "min_eigenvalue": min_eigenvalue}


def offdiagonal_magnitude(rho: np.ndarray) -> float:
    """Largest absolute off-diagonal element."""
    stripped = rho - np.diag(np.diag(rho))
    return float(np.abs(stripped).max())


def dense_from_diagonal(state: DiagonalState) -> np.ndarray:
    """Embed a population vector as a diagonal density matrix."""
    return np.diag(state.populations).astype(complex)


def conjugate(unitary: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """``U rho U^dagger``."""
    return unitary @ rho @ unitary.conj().T


def dense_reset(rho: np.ndarray, params: ThermalParams) -> np.ndarray:
    """Partial trace over the reset slot followed by attaching a thermal slot.

    The reset slot is the least significant tensor factor, matching the
    register index convention.
    """
    dim = rho.shape[0]
    if rho.shape != (dim, dim) or dim < 2 or dim & (dim - 1):
        raise ValueError(f"density matrix must be square with power-of-two size, got {rho.shape}")
    half = dim // 2
    blocks = rho.reshape(half, 2, half, 2)
    traced = np.einsum("ajbj->ab", blocks)
    thermal = np.diag(
        [params.ground_population, params.excited_population]
    ).astype(complex)
    return np.kron(traced, thermal)


def switch_channel(
    rho: np.ndarray,
    spec_a: BlockUnitarySpec,
    spec_b: BlockUnitarySpec,
    sign: str,
    max_exponent: int = DENSE_EXPONENT_CAP,
) -> np.ndarray:
    """Dense two-order interference channel conditioned on one control outcome.

    Returns the literal four-term combination

        (U_A U_B rho U_B' U_A' + U_B U_A rho U_A' U_B'
         +/- U_A U_B rho U_A' U_B' +/- U_B U_A rho U_B' U_A') / 4

    (primes denoting adjoints), unnormalized: its trace is the outcome
    probability.
    """
    if sign not in SIGNS:
        raise ValueError(f"sign must be one of {SIGNS}, got {sign!r}")
    if spec_a.dim != spec_b.dim:
        raise ValueError(f"spec dimensions differ: {spec_a.dim} vs {spec_b.dim}")
    if rho.shape != (spec_a.dim, spec_a.dim):
        raise ValueError(f"density matrix shape {rho.shape} does not match dimension {spec_a.dim}")
    u_a = materialize(spec_a, "A", max_exponent=max_exponent)
    u_b = materialize(spec_b, "B", max_exponent=max_exponent)
    ab = u_a @ u_b
    ba = u_b @ u_a
    direct = ab @ rho @ ab.conj().T + ba @ rho @ ba.conj().T
    cross = ab @ rho @ ba.conj().T + ba @ rho @ ab.conj().T
    factor = 1.0 if sign == PLUS else -1.0
    return (direct + factor * cross) / 4.0


def spec_families(n: int) -> list[tuple[str, BlockUnitarySpec]]:
    """Every block-unitary family at register exponent ``n``, labeled."""
    families = [("standard", standard_pair(n)), ("ideal", ideal_pair(n))]
    families += [(f"k={k}", k_pair(n, k)) for k in range(1, n + 1)]
    families += [(f"tree level={level}", tree_pair(n, level)) for level in range(n)]
    return families


@dataclass(frozen=True, eq=False)
class CompareReport:
    """Worst-case deviations of the fast path from the dense channel."""

    max_abs_deviation: float
    max_offdiagonal: float
    by_case: dict[tuple[str, str], float]


def compare(
    nmax: int = 3,
    trials: int = 100,
    seed: int = 7,
    max_exponent: int = DENSE_EXPONENT_CAP,
) -> CompareReport:
    """Fast-path branch outputs vs dense channel diagonals on random states.

    Runs every family at every ``n <= nmax`` on ``trials`` seeded random
    diagonal states, tracking the worst diagonal deviation per (family, sign)
    and the worst off-diagonal magnitude (which must vanish for diagonal
    inputs under these block unitaries).  Deterministic for a fixed seed.
    """
    if nmax > max_exponent:
        raise ValueError(f"nmax={nmax} exceeds the dense cap {max_exponent}")
    rng = np.random.default_rng(seed)
    by_case: dict[tuple[str, str], float] = {}
    max_offdiagonal = 0.0
    for n in range(1, nmax + 1):
        for label, spec in spec_families(n):
            for _ in range(trials):
                vec = rng.random(spec.dim)
                vec /= vec.sum()
                state = DiagonalState.from_vector(vec)
                rho = np.diag(vec).astype(complex)
                for outcome in switch_branches(state, spec):
                    dense = switch_channel(rho, spec, spec, outcome.sign, max_exponent=max_exponent)
                    diagonal = np.diag(dense).real
                    deviation = float(np.abs(diagonal - outcome.state.populations).max())
                    deviation = max(deviation, abs(float(np.trace(dense).real) - outcome.probability))
                    key = (label, outcome.sign)
                    by_case[key] = max(by_case.get(key, 0.0), deviation)
                    max_offdiagonal = max(max_offdiagonal, offdiagonal_magnitude(dense))
    return CompareReport(max(by_case.values()), max_offdiagonal, by_case)
