"""Heuristic QUBO samplers behind one oracle interface."""

from __future__ import annotations

import time

from ..qubo import QuboProblem, brute_force_solve
from .base import (
    ExactConfig,
    SaConfig,
    SampleRecord,
    SampleSet,
    SbConfig,
    SqaConfig,
    assemble_sample_set,
    best_sample,
    majority_vote,
    save_samples,
)
from .sa import sample_sa
from .sb import sample_sb, spectral_radius
from .sqa import interlayer_coupling, sample_sqa

__all__ = [
    "ExactConfig",
    "SaConfig",
    "SampleRecord",
    "SampleSet",
    "SbConfig",
    "SqaConfig",
    "best_sample",
    "interlayer_coupling",
    "majority_vote",
    "sample",
    "sample_sa",
    "sample_sb",
    "sample_sqa",
    "save_samples",
    "spectral_radius",
]

SamplerConfig = SaConfig | SbConfig | SqaConfig | ExactConfig


def sample(problem: QuboProblem, config: SamplerConfig) -> SampleSet:
    """Dispatch a problem to the solver selected by the config type."""
    if isinstance(config, SaConfig):
        return sample_sa(problem, config)
    if isinstance(config, SbConfig):
        return sample_sb(problem, config)
    if isinstance(config, SqaConfig):
        return sample_sqa(problem, config)
    if isinstance(config, ExactConfig):
        start_time = time.perf_counter()
        bits, _ = brute_force_solve(problem, max_n=config.max_n)
        return assemble_sample_set("exact", problem, [bits], time.perf_counter() - start_time)
    raise ValueError(f"unrecognized sampler config type: {type(config).__name__}")
