"""Register cooling simulator: bath-assisted sorting dynamics, switch-heralded
purification schemes, a dense density-matrix oracle, and a CLI."""

from .hbac_core import (
    ConvergenceError,
    TransferMatrix,
    build_transfer,
    fixed_point,
    hbac_round,
    iterate,
    spectral_gap,
    two_sort,
)
from .register import (
    BasisLabel,
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
    uniform_reduced,
)
from .schemes import (
    HBAC,
    HBAC_ICO,
    HBAC_KICO,
    ICO_ALONE,
    ICO_TREE_SORT,
    SCHEMES,
    MaxAttemptsError,
    SchemeConfig,
    SchemeReport,
    Trajectory,
    expected_trials,
    failure_update,
    pi_pulse_correct,
    run_round,
    run_scheme,
    sample_batch,
    sample_trajectory,
    success_probability,
)
from .switch import (
    MINUS,
    ONE,
    PAIR,
    PLUS,
    BlockUnitarySpec,
    BranchOutcome,
    branch_population_matrix,
    branch_transfer,
    ideal_pair,
    k_pair,
    standard_pair,
    switch_branches,
    tree_pair,
    unity_branch_transfer,
)

__version__ = "0.1.0"

__all__ = [
    "BasisLabel",
    "BlockUnitarySpec",
    "BranchOutcome",
    "ConvergenceError",
    "DiagonalState",
    "HBAC",
    "HBAC_ICO",
    "HBAC_KICO",
    "ICO_ALONE",
    "ICO_TREE_SORT",
    "MINUS",
    "MaxAttemptsError",
    "ONE",
    "PAIR",
    "PLUS",
    "ReducedState",
    "SCHEMES",
    "SchemeConfig",
    "SchemeReport",
    "ThermalParams",
    "Trajectory",
    "TransferMatrix",
    "branch_population_matrix",
    "branch_transfer",
    "build_transfer",
    "expected_trials",
    "failure_update",
    "fixed_point",
    "ground_state",
    "hbac_round",
    "ideal_pair",
    "iterate",
    "k_pair",
    "make_thermal_params",
    "max_register_exponent",
    "pi_pulse_correct",
    "reduce",
    "reset",
    "run_round",
    "run_scheme",
    "sample_batch",
    "sample_trajectory",
    "spectral_gap",
    "standard_pair",
    "success_probability",
    "switch_branches",
    "thermal_full",
    "thermal_reduced",
    "tree_pair",
    "two_sort",
    "uniform_full",
    "uniform_reduced",
    "unity_branch_transfer",
]
