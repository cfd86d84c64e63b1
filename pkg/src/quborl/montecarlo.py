"""Tabular first-visit Monte Carlo policy evaluation and greedy improvement.

The training loop alternates: generate a batch of episodes under the current
epsilon-greedy policy, update action values from (optionally a selected
subset of) the batch, then improve the policy greedily.  Returns are
undiscounted sums of future rewards within an episode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gridworld import ACTIONS, Episode, GridSpec, build_grid, generate_episode

__all__ = [
    "QTable",
    "Policy",
    "RunRecord",
    "first_visit_update",
    "improve_policy",
    "act",
    "run_training",
    "vanilla_mc_train",
]


@dataclass
class QTable:
    """Action-value estimates backed by per-(state, action) return histories.

    ``values[(s, a)]`` is always the arithmetic mean of ``histories[(s, a)]``.
    State-level first-visit returns are tracked alongside so state values can
    be recovered with the same estimator.
    """

    values: dict[tuple[int, int], float] = field(default_factory=dict)
    histories: dict[tuple[int, int], list[float]] = field(default_factory=dict)
    state_histories: dict[int, list[float]] = field(default_factory=dict)

    def q(self, state: int, action: int) -> float:
        return self.values.get((state, action), 0.0)

    def state_value(self, state: int) -> float:
        returns = self.state_histories.get(state)
        if not returns:
            return 0.0
        return sum(returns) / len(returns)


@dataclass
class Policy:
    """Greedy action per state plus an exploration probability."""

    greedy_action: dict[int, int]
    epsilon: float = 0.0

    def __post_init__(self) -> None:
        if not 0 <= self.epsilon <= 1:
            raise ValueError("epsilon must lie in [0, 1]")


def first_visit_update(qtable: QTable, episode: Episode) -> QTable:
    """Record the return from each first (state, action) visit; refresh means.

    The return G at step t is the sum of rewards from t to the episode end,
    accumulated from the back so repeated updates are bit-reproducible.
    Later occurrences of an already-seen pair are ignored; state-level first
    visits are recorded the same way for the state-value estimator.
    """
    suffix = np.zeros(len(episode.steps))
    acc = 0.0
    for t in range(len(episode.steps) - 1, -1, -1):
        acc = episode.steps[t][2] + acc
        suffix[t] = acc
    seen_pairs: set[tuple[int, int]] = set()
    seen_states: set[int] = set()
    for t, (state, action, _) in enumerate(episode.steps):
        if (state, action) not in seen_pairs:
            seen_pairs.add((state, action))
            history = qtable.histories.setdefault((state, action), [])
            history.append(float(suffix[t]))
            qtable.values[(state, action)] = sum(history) / len(history)
        if state not in seen_states:
            seen_states.add(state)
            qtable.state_histories.setdefault(state, []).append(float(suffix[t]))
    return qtable


def improve_policy(qtable: QTable, policy: Policy) -> Policy:
    """Greedy policy from the current Q estimates.

    Unvisited actions count as 0; ties break toward the lowest action index
    (up, down, left, right).  States with no recorded history at all keep
    their previous greedy action.
    """
    greedy = dict(policy.greedy_action)
    states_with_data = {state for (state, _) in qtable.histories}
    for state in states_with_data:
        best_action = 0
        best_value = -np.inf
        for action in ACTIONS:
            value = qtable.q(state, action)
            if value > best_value:
                best_value = value
                best_action = action
        greedy[state] = best_action
    return Policy(greedy_action=greedy, epsilon=policy.epsilon)


def act(policy: Policy, state: int, rng: np.random.Generator) -> int:
    """Epsilon-greedy action choice."""
    if policy.epsilon > 0 and rng.random() < policy.epsilon:
        return int(rng.integers(0, len(ACTIONS)))
    return policy.greedy_action[state]


@dataclass
class RunRecord:
    """Per-batch training metrics."""

    batch: int
    behavior_return: float
    greedy_return: float
    subset_size: int | None = None
    selected_indices: tuple[int, ...] | None = None
    solve_seconds: float | None = None


def _epsilon_at(batch: int, batches: int, start: float, end: float) -> float:
    if batches <= 1:
        return start
    return start + (end - start) * batch / (batches - 1)


def run_training(
    spec: GridSpec,
    batches: int,
    batch_size: int,
    *,
    seed: int = 0,
    epsilon_start: float = 0.2,
    epsilon_end: float = 0.02,
    eval_episodes: int = 5,
    select=None,
) -> tuple[Policy, QTable, list[RunRecord]]:
    """Shared batch-training loop.

    ``select`` is an optional hook called with the batch's episode list; it
    returns (indices, solve_seconds) and restricts the value update to those
    episodes.  Without it every episode is used.

    Random streams are derived per batch: episode generation from
    (seed, batch, 0) and greedy evaluation from (seed, batch, 2), so two
    methods trained with the same seed consume identical streams and diverge
    only through their policies.
    """
    if batches < 0 or batch_size < 1:
        raise ValueError("batches must be >= 0 and batch_size >= 1")
    grid = build_grid(spec)
    qtable = QTable()
    policy = Policy(
        greedy_action={state: 0 for state in grid.free_states()},
        epsilon=epsilon_start,
    )
    records: list[RunRecord] = []
    for batch in range(batches):
        policy.epsilon = _epsilon_at(batch, batches, epsilon_start, epsilon_end)
        behavior = policy

        def behavior_fn(state, rng, _p=behavior):
            return act(_p, state, rng)

        rollout_rng = np.random.default_rng((seed, batch, 0))
        episodes = [generate_episode(grid, behavior_fn, rollout_rng) for _ in range(batch_size)]
        behavior_return = float(np.mean([e.total_reward for e in episodes]))
        subset_size = None
        selected_indices = None
        solve_seconds = None
        if select is None:
            chosen = episodes
        else:
            indices, solve_seconds = select(episodes)
            selected_indices = tuple(sorted(indices))
            subset_size = len(selected_indices)
            chosen = [episodes[i] for i in selected_indices]
        for episode in chosen:
            first_visit_update(qtable, episode)
        policy = improve_policy(qtable, policy)
        eval_policy = Policy(greedy_action=dict(policy.greedy_action), epsilon=0.0)

        def eval_fn(state, rng, _p=eval_policy):
            return act(_p, state, rng)

        eval_rng = np.random.default_rng((seed, batch, 2))
        greedy_return = float(
            np.mean(
                [generate_episode(grid, eval_fn, eval_rng).total_reward for _ in range(eval_episodes)]
            )
        )
        records.append(
            RunRecord(
                batch=batch,
                behavior_return=behavior_return,
                greedy_return=greedy_return,
                subset_size=subset_size,
                selected_indices=selected_indices,
                solve_seconds=solve_seconds,
            )
        )
    return policy, qtable, records


def vanilla_mc_train(
    spec: GridSpec,
    batches: int,
    batch_size: int,
    *,
    seed: int = 0,
    epsilon_start: float = 0.2,
    epsilon_end: float = 0.02,
    eval_episodes: int = 5,
) -> tuple[Policy, QTable, list[RunRecord]]:
    """Baseline training: every episode in every batch updates the values."""
    return run_training(
        spec,
        batches,
        batch_size,
        seed=seed,
        epsilon_start=epsilon_start,
        epsilon_end=epsilon_end,
        eval_episodes=eval_episodes,
        select=None,
    )
