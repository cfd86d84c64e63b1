"""QUBO/Ising solvers and QUBO-filtered Monte Carlo RL on GridWorlds."""

from .experiment import (
    ExperimentConfig,
    batches_to_threshold,
    compare_runs,
    convergence_threshold,
    default_selection_config,
    emit_outputs,
    mc_qubo_train,
    rolling_mean,
    sample_complexity_diagnostics,
)
from .gridworld import Episode, Grid, GridSpec, build_grid, generate_episode
from .montecarlo import (
    Policy,
    QTable,
    RunRecord,
    act,
    first_visit_update,
    improve_policy,
    vanilla_mc_train,
)
from .qubo import (
    IsingProblem,
    QuboProblem,
    bits_to_spins,
    brute_force_solve,
    ising_energy,
    ising_to_qubo,
    load_problem,
    partition_qubo,
    qubo_energy,
    qubo_to_ising,
    save_problem,
    spins_to_bits,
)
from .samplers import (
    ExactConfig,
    SaConfig,
    SampleRecord,
    SampleSet,
    SbConfig,
    SqaConfig,
    best_sample,
    majority_vote,
    sample,
    save_samples,
)
from .selection import (
    SelectionConfig,
    SimilarityMatrix,
    build_selection_qubo,
    canonicalize,
    jaccard,
    normalize_rewards,
    select_episodes,
    similarity_from_episodes,
    suggest_alpha,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Episode",
    "ExactConfig",
    "ExperimentConfig",
    "Grid",
    "GridSpec",
    "IsingProblem",
    "Policy",
    "QTable",
    "QuboProblem",
    "RunRecord",
    "SaConfig",
    "SampleRecord",
    "SampleSet",
    "SbConfig",
    "SelectionConfig",
    "SimilarityMatrix",
    "SqaConfig",
    "act",
    "batches_to_threshold",
    "best_sample",
    "bits_to_spins",
    "brute_force_solve",
    "build_grid",
    "build_selection_qubo",
    "canonicalize",
    "compare_runs",
    "convergence_threshold",
    "default_selection_config",
    "emit_outputs",
    "first_visit_update",
    "generate_episode",
    "improve_policy",
    "ising_energy",
    "ising_to_qubo",
    "jaccard",
    "load_problem",
    "majority_vote",
    "mc_qubo_train",
    "normalize_rewards",
    "partition_qubo",
    "qubo_energy",
    "qubo_to_ising",
    "rolling_mean",
    "sample",
    "sample_complexity_diagnostics",
    "save_problem",
    "save_samples",
    "select_episodes",
    "similarity_from_episodes",
    "spins_to_bits",
    "suggest_alpha",
    "vanilla_mc_train",
]
