"""Executable purification protocols and their bookkeeping.

Five schemes are modeled.  Plain bath cooling converges to the geometric
stationary profile and never produces an exactly pure qubit.  The
switch-augmented variants condition on a control measurement: a plus outcome
heralds pure output qubits, a minus outcome triggers a retry policy.  Each
scheme exposes a closed-form per-attempt success probability, a resource
summary, and a seeded Monte Carlo trajectory sampler.

Retry policies:

* bath schemes keep the register and apply the minus-branch update (plus an
  optional number of plain cooling rounds, ``repump_rounds``, to re-pump
  toward the stationary profile); note that the k-switch branch maps are
  diagonal on the reduced register, so after a failure the heralding weight
  is exactly zero until at least one re-pump round runs;
* the bath-free switch scheme re-prepares the input, because its minus branch
  empties the heralding labels;
* the tree-sort scheme succeeds on either outcome, so it always uses one
  trial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hbac_core import fixed_point, hbac_round, iterate, two_sort
from .register import (
    DiagonalState,
    ReducedState,
    ThermalParams,
    ground_state,
    make_thermal_params,
    max_register_exponent,
    reduce,
    reset,
    thermal_full,
    thermal_reduced,
    uniform_full,
)
from .switch import (
    MINUS,
    PLUS,
    BlockUnitarySpec,
    BranchOutcome,
    ideal_pair,
    k_pair,
    standard_pair,
    switch_branches,
    tree_pair,
)

HBAC = "hbac"
HBAC_ICO = "hbac-ico"
ICO_ALONE = "ico-alone"
ICO_TREE_SORT = "ico-tree-sort"
HBAC_KICO = "hbac-kico"
SCHEMES = (HBAC, HBAC_ICO, ICO_ALONE, ICO_TREE_SORT, HBAC_KICO)

BATH_SCHEMES = frozenset({HBAC, HBAC_ICO, HBAC_KICO})
HERALDED_SCHEMES = frozenset({HBAC_ICO, HBAC_KICO, ICO_ALONE})

STANDARD = "standard"
IDEAL = "ideal"
PAIR_CHOICES = (STANDARD, IDEAL)

SUPPORT_TOLERANCE = 1e-12


class MaxAttemptsError(RuntimeError):
    """A trajectory exhausted its attempt budget without a plus outcome."""

    def __init__(self, message: str, trajectory: "Trajectory"):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass(frozen=True, eq=False)
class SchemeConfig:
    """Everything needed to evaluate or sample one purification scheme.

    ``epsilon`` is required for bath schemes and optional otherwise (used only
    to build thermal default initial states).  ``k`` is required exactly for
    the k-switch scheme.  ``initial`` overrides the scheme default evaluation
    state: the stationary profile for bath switch schemes, a thermal product
    for the bath-free ones.
    """

    scheme: str
    n: int
    epsilon: float | None = None
    k: int | None = None
    initial: DiagonalState | ReducedState | None = None
    desired_success: float | None = None
    seed: int = 0
    pair: str = STANDARD
    level: int = 0
    nondemolition: bool = False
    repump_rounds: int = 0
    max_attempts: int = 100_000

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        cap = max_register_exponent()
        if not 1 <= self.n <= cap:
            raise ValueError(f"n must be in [1, {cap}], got {self.n}")
        if self.scheme == HBAC_KICO:
            if self.k is None:
                raise ValueError(f"k is required for {HBAC_KICO}")
            if not 1 <= self.k <= self.n:
                raise ValueError(f"k must be in [1, {self.n}], got {self.k}")
        elif self.k is not None:
            raise ValueError(f"k is only meaningful for {HBAC_KICO}")
        if self.scheme in BATH_SCHEMES and self.epsilon is None:
            raise ValueError(f"{self.scheme} needs epsilon")
        if self.epsilon is not None:
            make_thermal_params(self.epsilon)
        if self.desired_success is not None and not 0.0 < self.desired_success < 1.0:
            raise ValueError(f"desired_success must be in (0, 1), got {self.desired_success}")
        if self.pair not in PAIR_CHOICES:
            raise ValueError(f"pair must be one of {PAIR_CHOICES}, got {self.pair!r}")
        if not 0 <= self.level <= self.n - 1:
            raise ValueError(f"level must be in [0, {self.n - 1}], got {self.level}")
        if self.repump_rounds < 0:
            raise ValueError(f"repump_rounds must be >= 0, got {self.repump_rounds}")
        if self.max_attempts < 1:
            raise ValueError(f"max_attempts must be >= 1, got {self.max_attempts}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.initial is not None:
            if self.scheme in BATH_SCHEMES:
                if not isinstance(self.initial, ReducedState):
                    raise TypeError("bath schemes take a ReducedState initial")
            elif not isinstance(self.initial, DiagonalState):
                raise TypeError("bath-free schemes take a DiagonalState initial")
            if self.initial.n != self.n:
                raise ValueError(
                    f"initial state has n={self.initial.n}, config has n={self.n}"
                )

    @property
    def params(self) -> ThermalParams | None:
        return None if self.epsilon is None else make_thermal_params(self.epsilon)


@dataclass(frozen=True, eq=False)
class SchemeReport:
    """Resource row and success law for one scheme configuration."""

    success_probability: float
    output_pure_qubits: int
    input_pure_qubits: int
    bath_used: bool
    expected_trials: float
    final_state: DiagonalState
    trials_for_desired: int | None = None


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One repeat-until-success run: (pre-measurement state, outcome) pairs.

    ``trials_used`` is the index of the first plus outcome for heralded
    schemes; the deterministic schemes (plain cooling, tree sort) always use
    one trial, and for tree sort each recorded attempt is one level of the
    cascade.
    """

    attempts: tuple
    terminal: bool
    trials_used: int


def scheme_spec(config: SchemeConfig) -> BlockUnitarySpec | None:
    """Block-unitary family used by the scheme's switch step (None for plain cooling)."""
    if config.scheme == HBAC:
        return None
    if config.scheme == HBAC_ICO:
        return standard_pair(config.n)
    if config.scheme == HBAC_KICO:
        return k_pair(config.n, config.k)
    if config.scheme == ICO_ALONE:
        return standard_pair(config.n) if config.pair == STANDARD else ideal_pair(config.n)
    return tree_pair(config.n, config.level)


def initial_reduced(config: SchemeConfig) -> ReducedState:
    """Evaluation state for bath schemes: explicit initial or the scheme default."""
    if config.scheme not in BATH_SCHEMES:
        raise ValueError(f"{config.scheme} does not act on reduced states")
    if config.initial is not None:
        return config.initial
    if config.scheme == HBAC:
        return thermal_reduced(config.n, config.params)
    return fixed_point(config.n, config.params)


def initial_full(config: SchemeConfig) -> DiagonalState:
    """Evaluation state for bath-free schemes: explicit, thermal, or uniform."""
    if config.scheme in BATH_SCHEMES:
        raise ValueError(f"{config.scheme} acts on reduced states")
    if config.initial is not None:
        return config.initial
    if config.epsilon is not None:
        return thermal_full(config.n, config.params)
    return uniform_full(config.n)


def plus_weight_vector(config: SchemeConfig) -> np.ndarray:
    """Weights whose dot with the evaluation state gives the plus-branch norm.

    For bath schemes the weights act on reduced populations (the thermal
    reset is folded in); for bath-free schemes they act on full-register
    populations.
    """
    spec = scheme_spec(config)
    if spec is None:
        raise ValueError("plain bath cooling has no switch step")
    mask = spec.one_mask
    if config.scheme in BATH_SCHEMES:
        params = config.params
        return (
            params.ground_population * mask[0::2] + params.excited_population * mask[1::2]
        )
    return mask.astype(np.float64)


def success_probability(config: SchemeConfig) -> float:
    """Closed-form per-attempt success probability.

    Heralded schemes return the plus-branch norm at the evaluation state; the
    deterministic schemes return 1 since every outcome heralds success.
    """
    scheme = config.scheme
    if scheme in (HBAC, ICO_TREE_SORT):
        return 1.0
    if scheme == ICO_ALONE:
        lam = initial_full(config)
        vec = lam.populations
        weight = vec[0] + (vec[-1] if config.pair == STANDARD else vec[1])
        return float(weight / lam.norm)
    params = config.params
    eps = params.epsilon
    if scheme == HBAC_ICO:
        if config.initial is None:
            decay = math.exp(-2.0 * eps * 2**config.n)
            return (
                -math.expm1(-2.0 * eps)
                * (1.0 + decay)
                / ((1.0 + math.exp(-2.0 * eps)) * -math.expm1(-2.0 * eps * 2**config.n))
            )
        p = config.initial
        return float(
            (
                params.ground_population * p.populations[0]
                + params.excited_population * p.populations[-1]
            )
            / p.norm
        )
    # HBAC_KICO: the plus branch keeps the first 2**(k-1) reduced entries
    if config.initial is None:
        return math.expm1(-eps * 2**config.k) / math.expm1(-eps * 2 ** (config.n + 1))
    p = config.initial
    return float(p.populations[: 2 ** (config.k - 1)].sum() / p.norm)


def expected_trials(success_probability: float, desired: float) -> int:
    """Smallest attempt count whose cumulative success reaches ``desired``."""
    if not 0.0 <= success_probability <= 1.0:
        raise ValueError(f"success probability must be in [0, 1], got {success_probability}")
    if not 0.0 < desired < 1.0:
        raise ValueError(f"desired success must be in (0, 1), got {desired}")
    if success_probability == 0.0:
        raise ValueError("success probability is 0: no attempt count suffices")
    if success_probability == 1.0:
        return 1
    failure_log = math.log1p(-success_probability)

    def reached(count: int) -> bool:
        return -math.expm1(count * failure_log) >= desired

    m = max(1, math.ceil(math.log1p(-desired) / failure_log))
    while not reached(m):
        m += 1
    while m > 1 and reached(m - 1):
        m -= 1
    return m


def run_round(
    state: DiagonalState | ReducedState, config: SchemeConfig
) -> tuple[BranchOutcome, BranchOutcome]:
    """One protocol round: thermal reset (bath schemes only), then the switch split."""
    spec = scheme_spec(config)
    if spec is None:
        raise ValueError("plain bath cooling has no switch round")
    if config.scheme in BATH_SCHEMES:
        reduced = reduce(state) if isinstance(state, DiagonalState) else state
        if reduced.n != config.n:
            raise ValueError(f"state has n={reduced.n}, config has n={config.n}")
        lam = reset(reduced, config.params)
    else:
        if not isinstance(state, DiagonalState):
            raise TypeError("bath-free schemes act on the full register")
        if state.n != config.n:
            raise ValueError(f"state has n={state.n}, config has n={config.n}")
        lam = state
    return switch_branches(lam, spec)


def failure_update(
    state: ReducedState, params: ThermalParams, spec: BlockUnitarySpec
) -> ReducedState:
    """Renormalized reduced state after a minus outcome of reset-then-switch."""
    _plus, minus = switch_branches(reset(state, params), spec)
    survivor = reduce(minus.state)
    if survivor.norm <= 0.0:
        raise ValueError("minus branch carries zero probability; cannot condition on it")
    return survivor.normalized()


def pi_pulse_correct(state: DiagonalState, measured_qubit_outcome: str) -> DiagonalState:
    """Collapse a heralded extremal state to pure ground on the unmeasured qubits.

    The reset-slot qubit is read out in the energy basis.  A ``"g"`` result
    leaves the rest all ground; an ``"e"`` result leaves them all excited, and
    the deterministic flip maps that to all ground.  The surviving register of
    one fewer qubit is returned as a normalized pure ground state.
    """
    if measured_qubit_outcome not in ("g", "e"):
        raise ValueError(f"outcome must be 'g' or 'e', got {measured_qubit_outcome!r}")
    if state.n < 1:
        raise ValueError("need at least two qubits to measure one away")
    lam = state.populations
    leak = float(lam[1:-1].sum())
    if leak > SUPPORT_TOLERANCE * max(state.norm, 1e-300):
        raise ValueError(
            f"state is not supported on the two extremal labels (leak {leak:.3e})"
        )
    weight = lam[0] if measured_qubit_outcome == "g" else lam[-1]
    if weight <= 0.0:
        raise ValueError(f"measured outcome {measured_qubit_outcome!r} has zero probability")
    return ground_state(state.n - 1)


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Independent counter-based random stream for one trajectory."""
    key = np.array([seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


class _AttemptChain:
    """Deterministic retry chain shared by a batch of heralded trajectories.

    Attempt ``i`` of every trajectory sees the same pre-measurement state, so
    states and plus probabilities are computed once and reused.
    """

    def __init__(self, config: SchemeConfig):
        self.config = config
        self.spec = scheme_spec(config)
        self.params = config.params
        self.weights = plus_weight_vector(config)
        if config.scheme in BATH_SCHEMES:
            first = initial_reduced(config).normalized()
        else:
            first = initial_full(config).normalized()
        self.states = [first]
        self.probabilities = [self._plus_probability(first)]

    def _plus_probability(self, state) -> float:
        return float(self.weights @ state.populations)

    def _next_state(self, state):
        if self.config.scheme == ICO_ALONE:
            return self.states[0]  # retry re-prepares the input
        nxt = failure_update(state, self.params, self.spec)
        for _ in range(self.config.repump_rounds):
            nxt = hbac_round(nxt, self.params)
        return nxt

    def at(self, attempt: int):
        """(state, plus probability) for 1-based attempt number."""
        while len(self.states) < attempt:
            nxt = self._next_state(self.states[-1])
            self.states.append(nxt)
            self.probabilities.append(self._plus_probability(nxt))
        return self.states[attempt - 1], self.probabilities[attempt - 1]


def _heralded_trajectory(config: SchemeConfig, chain: _AttemptChain, index: int) -> Trajectory:
    rng = trajectory_rng(config.seed, index)
    attempts = []
    for attempt in range(1, config.max_attempts + 1):
        state, probability = chain.at(attempt)
        outcome = PLUS if rng.random() < probability else MINUS
        attempts.append((state, outcome))
        if outcome == PLUS:
            return Trajectory(tuple(attempts), True, attempt)
    raise MaxAttemptsError(
        f"no plus outcome within {config.max_attempts} attempts",
        Trajectory(tuple(attempts), False, config.max_attempts),
    )


def _tree_trajectory(config: SchemeConfig, index: int) -> Trajectory:
    rng = trajectory_rng(config.seed, index)
    state = initial_full(config).normalized()
    attempts = []
    for level in range(config.n):
        plus, minus = switch_branches(state, tree_pair(config.n, level))
        chosen = plus if rng.random() < plus.probability else minus
        attempts.append((state, chosen.sign))
        state = chosen.state.normalized()
    return Trajectory(tuple(attempts), True, 1)


def sample_batch(config: SchemeConfig, count: int, start_index: int = 0) -> list[Trajectory]:
    """Simulate ``count`` trajectories with independent per-index streams.

    Trajectory ``i`` draws from the stream keyed by ``(config.seed,
    start_index + i)``, so results are identical however a batch is split.
    """
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    if config.scheme == HBAC:
        converged, _steps = iterate(initial_reduced(config), config.params)
        template = Trajectory(((converged, PLUS),), True, 1)
        return [template] * count
    if config.scheme == ICO_TREE_SORT:
        return [_tree_trajectory(config, start_index + i) for i in range(count)]
    assert config.scheme in HERALDED_SCHEMES
    chain = _AttemptChain(config)
    return [_heralded_trajectory(config, chain, start_index + i) for i in range(count)]


def sample_trajectory(config: SchemeConfig, index: int = 0) -> Trajectory:
    """Simulate one seeded run of the scheme's repeat-until-success loop."""
    return sample_batch(config, 1, start_index=index)[0]


def run_scheme(config: SchemeConfig) -> SchemeReport:
    """Evaluate the scheme's resource row, success law, and final state."""
    probability = success_probability(config)
    n = config.n
    scheme = config.scheme
    if scheme == HBAC:
        input_pure, output_pure = 0, 0
    elif scheme == ICO_TREE_SORT:
        input_pure, output_pure = (1 if config.nondemolition else n), n
    elif scheme == HBAC_KICO:
        input_pure, output_pure = 1, n + 1 - config.k
    else:
        input_pure, output_pure = 1, n
    bath_used = scheme in BATH_SCHEMES
    expected = math.inf if probability == 0.0 else 1.0 / probability
    trials_for_desired = (
        None
        if config.desired_success is None
        else expected_trials(probability, config.desired_success)
    )
    if scheme == HBAC:
        final = two_sort(reset(fixed_point(n, config.params), config.params))
    else:
        final = ground_state(output_pure - 1)
    return SchemeReport(
        success_probability=probability,
        output_pure_qubits=output_pure,
        input_pure_qubits=input_pure,
        bath_used=bath_used,
        expected_trials=expected,
        final_state=final,
        trials_for_desired=trials_for_desired,
    )
