"""Episode subset selection through a QUBO over batch membership bits.

A batch of rollout episodes is scored two ways: each episode carries a
normalized reward, and each pair carries a Jaccard overlap of the regions
they visited. Selecting episode subsets that are high-reward yet mutually
dissimilar is a quadratic binary problem, so the batch maps onto a QUBO
with one bit per episode and any sampler in this package can solve it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gridworld import Episode, visited_set
from .qubo import QuboProblem
from .samplers import (
    ExactConfig,
    SaConfig,
    SampleSet,
    SbConfig,
    SqaConfig,
    best_sample,
    majority_vote,
    sample,
)

__all__ = [
    "SIMILARITY_MODES",
    "SelectionConfig",
    "SimilarityMatrix",
    "jaccard",
    "similarity_from_episodes",
    "normalize_rewards",
    "build_selection_qubo",
    "suggest_alpha",
    "select_episodes",
    "canonicalize",
]

SIMILARITY_MODES = ("states", "state_action_pairs")

_ALPHA_SAFETY_FACTOR = 1.5
_ALPHA_FLOOR = 1e-6


@dataclass(frozen=True)
class SelectionConfig:
    """Weights and solver choice for episode subset selection.

    ``alpha`` scales the per-episode reward pull, ``gamma_sim`` scales the
    pairwise similarity push. An optional cardinality target ``k`` adds the
    soft penalty ``lambda * (sum(x) - k)**2``. ``top_k_vote`` switches the
    sample decoding from the single best sample to a per-bit majority vote
    over that many lowest-energy samples.
    """

    alpha: float
    gamma_sim: float = 1.0
    cardinality_k: int | None = None
    cardinality_lambda: float = 0.0
    similarity_mode: str = "states"
    solver: SaConfig | SbConfig | SqaConfig | ExactConfig = field(default_factory=ExactConfig)
    top_k_vote: int | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and self.alpha > 0.0):
            raise ValueError(f"alpha must be finite and positive, got {self.alpha}")
        if not (math.isfinite(self.gamma_sim) and self.gamma_sim >= 0.0):
            raise ValueError(f"gamma_sim must be finite and nonnegative, got {self.gamma_sim}")
        if self.cardinality_k is not None:
            if self.cardinality_k < 1:
                raise ValueError(f"cardinality_k must be at least 1, got {self.cardinality_k}")
            if not (math.isfinite(self.cardinality_lambda) and self.cardinality_lambda > 0.0):
                raise ValueError(
                    "cardinality_lambda must be positive when cardinality_k is set, "
                    f"got {self.cardinality_lambda}"
                )
        if self.similarity_mode not in SIMILARITY_MODES:
            raise ValueError(
                f"similarity_mode must be one of {SIMILARITY_MODES}, got {self.similarity_mode!r}"
            )
        if self.top_k_vote is not None and self.top_k_vote < 1:
            raise ValueError(f"top_k_vote must be at least 1, got {self.top_k_vote}")


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric pairwise overlap matrix with a unit diagonal."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError(f"similarity matrix must be square, got shape {values.shape}")
        if not np.array_equal(values, values.T):
            raise ValueError("similarity matrix must be exactly symmetric")
        if not np.all(np.diag(values) == 1.0):
            raise ValueError("similarity matrix must have a unit diagonal")
        if np.any(values < 0.0) or np.any(values > 1.0):
            raise ValueError("similarity entries must lie in [0, 1]")
        object.__setattr__(self, "values", values)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def offdiagonal_mean(self) -> float:
        if self.m < 2:
            return 0.0
        upper = self.values[np.triu_indices(self.m, k=1)]
        return float(np.mean(upper))


def jaccard(a: set, b: set) -> float:
    """Overlap of two sets as intersection size over union size.

    Two empty sets share no information, so the overlap is defined as 0.
    """
    union = len(a | b)
    if union == 0:
        return 0.0
    return len(a & b) / union


def similarity_from_episodes(episodes: list[Episode], mode: str = "states") -> SimilarityMatrix:
    """Build the pairwise Jaccard matrix over visited states or pairs."""
    if mode not in SIMILARITY_MODES:
        raise ValueError(f"mode must be one of {SIMILARITY_MODES}, got {mode!r}")
    visited = [visited_set(episode, mode=mode) for episode in episodes]
    m = len(visited)
    values = np.eye(m)
    for i in range(m):
        for j in range(i + 1, m):
            values[i, j] = values[j, i] = jaccard(visited[i], visited[j])
    return SimilarityMatrix(values)


def normalize_rewards(episodes: list[Episode]) -> np.ndarray:
    """Rescale batch rewards to [0, 1]; an all-equal batch maps to all ones."""
    if not episodes:
        raise ValueError("cannot normalize an empty batch")
    rewards = np.array([episode.total_reward for episode in episodes], dtype=np.float64)
    low = rewards.min()
    high = rewards.max()
    if high == low:
        return np.ones_like(rewards)
    return (rewards - low) / (high - low)


def build_selection_qubo(episodes: list[Episode], config: SelectionConfig) -> QuboProblem:
    """Encode subset selection over a batch as a QUBO.

    Bit i selects episode i. The linear coefficient is -alpha times the
    normalized reward, the quadratic coefficient is gamma_sim times the
    pairwise similarity, and an optional cardinality penalty
    lambda * (sum(x) - k)**2 unfolds into lambda * (1 - 2k) per bit,
    2 * lambda per pair, and a constant lambda * k**2.
    """
    m = len(episodes)
    if m == 0:
        raise ValueError("cannot build a selection problem from an empty batch")
    k = config.cardinality_k
    if k is not None and k > m:
        raise ValueError(f"cardinality_k ({k}) exceeds the batch size ({m})")

    scaled_rewards = normalize_rewards(episodes)
    similarity = similarity_from_episodes(episodes, mode=config.similarity_mode)

    linear = -config.alpha * scaled_rewards
    quadratic: dict[tuple[int, int], float] = {}
    offset = 0.0
    for i in range(m):
        for j in range(i + 1, m):
            coefficient = config.gamma_sim * similarity.values[i, j]
            if coefficient != 0.0:
                quadratic[(i, j)] = coefficient
    if k is not None:
        lam = config.cardinality_lambda
        linear = linear + lam * (1 - 2 * k)
        for i in range(m):
            for j in range(i + 1, m):
                quadratic[(i, j)] = quadratic.get((i, j), 0.0) + 2.0 * lam
        offset = lam * k * k
    return QuboProblem(n=m, linear=linear, quadratic=quadratic, offset=offset)


def suggest_alpha(episodes: list[Episode], config: SelectionConfig) -> float:
    """Pick a reward weight that keeps the reward term competitive.

    The heuristic balances the expected similarity cost of a size-k subset
    against the expected reward pull: alpha of 1.5 * gamma_sim * (k - 1)
    times the mean off-diagonal similarity over the mean normalized reward.
    The result never drops below 1e-6 so the reward term stays positive.
    """
    m = len(episodes)
    if m < 2:
        raise ValueError(f"suggest_alpha needs at least 2 episodes, got {m}")
    k = config.cardinality_k if config.cardinality_k is not None else math.ceil(m / 3)
    mean_similarity = similarity_from_episodes(episodes, mode=config.similarity_mode).offdiagonal_mean()
    mean_reward = float(np.mean(normalize_rewards(episodes)))
    alpha = (
        _ALPHA_SAFETY_FACTOR
        * config.gamma_sim
        * (k - 1)
        * mean_similarity
        / max(mean_reward, _ALPHA_FLOOR)
    )
    return max(alpha, _ALPHA_FLOOR)


def select_episodes(
    episodes: list[Episode], config: SelectionConfig
) -> tuple[set[int], SampleSet, QuboProblem]:
    """Solve the batch-selection QUBO and decode the chosen subset.

    Returns the selected index set plus the sample set and problem for
    diagnostics. An all-zero decode falls back to the single
    highest-reward episode so the caller always has something to learn from.
    """
    problem = build_selection_qubo(episodes, config)
    sample_set = sample(problem, config.solver)
    if config.top_k_vote is not None:
        bits = majority_vote(sample_set, config.top_k_vote)
    else:
        bits = best_sample(sample_set)
    indices = {int(i) for i in np.flatnonzero(bits)}
    if not indices:
        rewards = [episode.total_reward for episode in episodes]
        indices = {int(np.argmax(rewards))}
    return indices, sample_set, problem


def canonicalize(episode: Episode, trim_loops: bool = False) -> Episode:
    """Trim an episode at the first repeated (state, action) pair.

    With ``trim_loops`` off (the default) the episode is returned unchanged.
    With it on, everything from the second occurrence of a pair onward is
    dropped, the total reward is recomputed over the kept steps, and the
    final state becomes the state at the cut. A trimmed episode cannot have
    reached the goal, because the original kept acting past the cut point.
    """
    if not trim_loops:
        return episode
    seen: set[tuple[int, int]] = set()
    cut = None
    for t, (state, action, _) in enumerate(episode.steps):
        if (state, action) in seen:
            cut = t
            break
        seen.add((state, action))
    if cut is None:
        return episode
    kept = episode.steps[:cut]
    total = 0.0
    for _, _, reward in reversed(kept):
        total = reward + total
    return Episode(
        steps=kept,
        reached_goal=False,
        total_reward=total,
        final_state=episode.steps[cut][0],
    )
