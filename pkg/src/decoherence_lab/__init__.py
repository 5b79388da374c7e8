"""Numerical laboratory for decoherence-driven measurement models:
states on labelled tensor factors, correlation measures, a closest-
separable-state solver, and a seeded evolution engine with CLI plumbing.
"""

__version__ = "0.1.0"

from .engine import (
    CorrelationBudget,
    EvolutionConfig,
    SweepSpec,
    TrajectoryRecord,
    TrajectoryRow,
    assemble_hamiltonian,
    correlation_budget,
    estimate_decoherence_time,
    evolve_trajectory,
    run_sweep,
)
from .measurement import (
    DegenerateOutcomeError,
    MeasurementScenario,
    PointerSuperpositionSpec,
    build_epr_scenario,
    build_pointer_superposition,
    build_premeasurement_state,
    build_preselection_state,
    dephase_pointer_superposition,
    dephased_pointer_mixture,
    postselect,
)
from .measures import (
    BipartiteSplit,
    MeasureValue,
    chsh_max,
    coherence_block_norm,
    mutual_information,
    negativity,
    partial_transpose,
    pointer_distinguishability,
    ppt_check,
    quantum_relative_entropy,
    trace_distance,
    trace_norm,
    von_neumann_entropy,
)
from .quantum_core import (
    CapacityError,
    DensityOperator,
    HermitianOperator,
    RngStream,
    StateVector,
    SubsystemLayout,
    evolve,
    gue_sample,
    haar_random_state,
    partial_trace,
    pinch,
    reduced_density,
    reorder_factors,
    tensor_product,
)
from .separability import (
    ProductEnsemble,
    SolverReport,
    SolverSettings,
    classical_correlation,
    closest_separable,
    pure_state_oracle,
    ree,
)

__all__ = [
    "BipartiteSplit",
    "CapacityError",
    "CorrelationBudget",
    "DegenerateOutcomeError",
    "DensityOperator",
    "EvolutionConfig",
    "HermitianOperator",
    "MeasureValue",
    "MeasurementScenario",
    "PointerSuperpositionSpec",
    "ProductEnsemble",
    "RngStream",
    "SolverReport",
    "SolverSettings",
    "StateVector",
    "SubsystemLayout",
    "SweepSpec",
    "TrajectoryRecord",
    "TrajectoryRow",
    "assemble_hamiltonian",
    "build_epr_scenario",
    "build_pointer_superposition",
    "build_premeasurement_state",
    "build_preselection_state",
    "chsh_max",
    "classical_correlation",
    "closest_separable",
    "coherence_block_norm",
    "correlation_budget",
    "dephase_pointer_superposition",
    "dephased_pointer_mixture",
    "estimate_decoherence_time",
    "evolve",
    "evolve_trajectory",
    "gue_sample",
    "haar_random_state",
    "mutual_information",
    "negativity",
    "partial_trace",
    "partial_transpose",
    "pinch",
    "pointer_distinguishability",
    "postselect",
    "ppt_check",
    "pure_state_oracle",
    "quantum_relative_entropy",
    "reduced_density",
    "ree",
    "reorder_factors",
    "run_sweep",
    "tensor_product",
    "trace_distance",
    "trace_norm",
    "von_neumann_entropy",
]
