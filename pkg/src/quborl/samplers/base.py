"""Shared sampler contract: configs, sample sets, and post-processing.

Every solver returns a :class:`SampleSet` holding deduplicated assignments
with exact recomputed energies, sorted ascending by energy (ties broken by
lexicographic bit order).  Identical (problem, config, seed) inputs always
yield an identical SampleSet.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..qubo import QuboProblem, qubo_energy

__all__ = [
    "SampleRecord",
    "SampleSet",
    "SaConfig",
    "SbConfig",
    "SqaConfig",
    "ExactConfig",
    "best_sample",
    "majority_vote",
    "save_samples",
]


@dataclass
class SampleRecord:
    bits: np.ndarray
    energy: float
    occurrences: int


@dataclass
class SampleSet:
    """Pool of candidate assignments returned by a sampler."""

    samples: list[SampleRecord]
    problem_n: int
    solver_name: str
    wall_time: float

    def __post_init__(self) -> None:
        energies = [record.energy for record in self.samples]
        if any(e2 < e1 for e1, e2 in zip(energies, energies[1:])):
            raise ValueError("samples must be sorted ascending by energy")
        if any(record.occurrences < 1 for record in self.samples):
            raise ValueError("occurrences must be at least 1")

    @property
    def total_reads(self) -> int:
        return sum(record.occurrences for record in self.samples)


def assemble_sample_set(
    solver_name: str, problem: QuboProblem, bit_rows, wall_time: float
) -> SampleSet:
    """Merge raw per-read assignments into a deduplicated, sorted SampleSet.

    Energies are recomputed from scratch with :func:`qubo_energy` so reported
    values are honest regardless of any incremental bookkeeping inside the
    solver.
    """
    counts: dict[tuple[int, ...], int] = {}
    for bits in bit_rows:
        key = tuple(int(b) for b in bits)
        counts[key] = counts.get(key, 0) + 1
    records = [
        SampleRecord(
            bits=np.array(key, dtype=np.int64),
            energy=qubo_energy(problem, np.array(key, dtype=np.int64)),
            occurrences=occurrences,
        )
        for key, occurrences in counts.items()
    ]
    records.sort(key=lambda record: (record.energy, tuple(record.bits)))
    return SampleSet(
        samples=records,
        problem_n=problem.n,
        solver_name=solver_name,
        wall_time=float(wall_time),
    )


@dataclass
class SaConfig:
    """Simulated annealing: Metropolis single-flip with a geometric beta ramp."""

    sweeps: int = 200
    beta_schedule: tuple[float, float] = (0.05, 20.0)
    reads: int = 32
    seed: int = 0

    def __post_init__(self) -> None:
        if self.sweeps < 1:
            raise ValueError("sweeps must be at least 1")
        if self.reads < 1:
            raise ValueError("reads must be at least 1")
        start, end = self.beta_schedule
        if not (0 < start < end):
            raise ValueError("beta_schedule requires 0 < beta_start < beta_end")


@dataclass
class SbConfig:
    """Simulated bifurcation: damped second-order dynamics with a stiffness ramp.

    ``mu_ramp`` interpolates linearly from mu_start to mu_end; a mu_end of
    None resolves per problem to slightly past the critical value
    lambda + rho(J).  The defaults keep the post-critical tail short and
    overdamped so the readout preserves the configuration found while the
    positions were pinned at the |x| = 1 walls; a long underdamped tail
    oscillates the positions around the origin and scrambles the signs.
    """

    steps: int = 3000
    dt: float = 0.05
    lam: float = 5.0
    damping: float = 8.0
    mu_ramp: tuple[float, float | None] = (0.0, None)
    reads: int = 32
    seed: int = 0

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.damping < 0:
            raise ValueError("damping must be non-negative")
        if self.reads < 1:
            raise ValueError("reads must be at least 1")
        start, end = self.mu_ramp
        if end is not None and not start < end:
            raise ValueError("mu_ramp requires mu_start < mu_end")


@dataclass
class SqaConfig:
    """Simulated quantum annealing: path-integral Monte Carlo over Trotter replicas."""

    trotter_slices: int = 16
    sweeps: int = 200
    temperature: float = 0.05
    gamma_schedule: tuple[float, float] = (3.0, 0.01)
    reads: int = 16
    seed: int = 0

    def __post_init__(self) -> None:
        if self.trotter_slices < 2:
            raise ValueError("trotter_slices must be at least 2")
        if self.sweeps < 1:
            raise ValueError("sweeps must be at least 1")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.reads < 1:
            raise ValueError("reads must be at least 1")
        start, end = self.gamma_schedule
        if not (start > end > 0):
            raise ValueError("gamma_schedule requires gamma_start > gamma_end > 0")


@dataclass
class ExactConfig:
    """Exhaustive enumeration plugged in behind the sampler interface."""

    max_n: int = 24


def best_sample(sample_set: SampleSet) -> np.ndarray:
    """Lowest-energy assignment; ties already resolved lexicographically."""
    if not sample_set.samples:
        raise ValueError("sample set is empty")
    return sample_set.samples[0].bits


def majority_vote(sample_set: SampleSet, top_k: int) -> np.ndarray:
    """Per-bit majority over the top_k lowest-energy records.

    Votes are weighted by occurrences; a tied bit falls back to the value in
    the single best sample.
    """
    if not sample_set.samples:
        raise ValueError("sample set is empty")
    if top_k < 1:
        raise ValueError("top_k must be at least 1")
    pool = sample_set.samples[:top_k]
    ones = np.zeros(sample_set.problem_n)
    zeros = np.zeros(sample_set.problem_n)
    for record in pool:
        weight = record.occurrences
        ones += weight * record.bits
        zeros += weight * (1 - record.bits)
    best = sample_set.samples[0].bits
    return np.where(ones > zeros, 1, np.where(zeros > ones, 0, best)).astype(np.int64)


def save_samples(sample_set: SampleSet, path, seed=None, config=None) -> None:
    """Write a SampleSet to a structured-record text file."""
    lines = [
        f"solver {sample_set.solver_name}",
        f"problem_n {sample_set.problem_n}",
        f"seed {seed if seed is not None else ''}".rstrip(),
        f"wall_time {sample_set.wall_time:.6f}",
        f"config {config!r}" if config is not None else "config",
        "samples",
    ]
    for record in sample_set.samples:
        bits = "".join(str(int(b)) for b in record.bits)
        lines.append(f"{bits} {float(record.energy)!r} {record.occurrences}")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")
