"""Variational Bayes for Gaussian mixtures with deterministic and
quantum-annealed hidden states."""

from .annealing import AnnealingSchedule, davb_schedule_at, schedule_at
from .datasets import (
    Dataset,
    GenerativeSpec,
    default_benchmark_spec,
    generate,
    load_dataset,
    save_dataset,
)
from .engine import (
    IterationRecord,
    RunResult,
    Solver,
    SolverConfig,
    run,
    variational_objective,
)
from .errors import (
    DatasetFormatError,
    DegeneratePosteriorError,
    NumericalError,
    QavbError,
    ValidationError,
)
from .gmm import (
    PriorHyperParams,
    SufficientStats,
    ThetaPosterior,
    accumulate_stats,
    default_prior,
    expected_energies,
    expected_log_pi,
    update_theta,
)
from .metrics import (
    bayes_optimal_labels,
    bayes_optimal_rate,
    effective_cluster_count,
    ground_state_overlap,
    success_rate,
)
from .quantum import (
    build_hopping_hamiltonian,
    check_partial_trace_kraus,
    maximally_mixed_states,
    purity,
    responsibilities,
    update_hidden_one,
)

__version__ = "0.1.0"

__all__ = [
    "AnnealingSchedule",
    "Dataset",
    "DatasetFormatError",
    "DegeneratePosteriorError",
    "GenerativeSpec",
    "IterationRecord",
    "NumericalError",
    "PriorHyperParams",
    "QavbError",
    "RunResult",
    "Solver",
    "SolverConfig",
    "SufficientStats",
    "ThetaPosterior",
    "ValidationError",
    "accumulate_stats",
    "bayes_optimal_labels",
    "bayes_optimal_rate",
    "build_hopping_hamiltonian",
    "check_partial_trace_kraus",
    "davb_schedule_at",
    "default_benchmark_spec",
    "default_prior",
    "effective_cluster_count",
    "expected_energies",
    "expected_log_pi",
    "generate",
    "ground_state_overlap",
    "load_dataset",
    "maximally_mixed_states",
    "purity",
    "responsibilities",
    "run",
    "save_dataset",
    "schedule_at",
    "success_rate",
    "update_hidden_one",
    "update_theta",
    "variational_objective",
]
