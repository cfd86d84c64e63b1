"""Finite-horizon stochastic GridWorld with slip and random obstacles.

States are cell indices ``y * width + x``.  Actions are integers 0..3 for
up, down, left, right.  Each step costs -0.01; reaching the goal adds +1.0
and ends the episode.  With probability ``slip_prob`` the executed move is
perpendicular to the intended one (either side, equiprobable); moves into
walls or obstacles leave the state unchanged but still cost the step.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ACTIONS",
    "ACTION_NAMES",
    "STEP_REWARD",
    "GOAL_REWARD",
    "GridSpec",
    "Grid",
    "Episode",
    "build_grid",
    "step",
    "generate_episode",
    "visited_set",
]

ACTION_NAMES = ("up", "down", "left", "right")
ACTIONS = (0, 1, 2, 3)
# (dy, dx) per action.
_DELTAS = ((-1, 0), (1, 0), (0, -1), (0, 1))
# Perpendicular pairs: slipping on a vertical move goes left/right and
# vice versa.
_PERPENDICULAR = ((2, 3), (2, 3), (0, 1), (0, 1))

STEP_REWARD = -0.01
GOAL_REWARD = 1.0

_MAX_LAYOUT_ATTEMPTS = 100


@dataclass
class GridSpec:
    """Parameters describing a GridWorld instance."""

    width: int
    height: int
    obstacle_density: float = 0.0
    slip_prob: float = 0.1
    horizon: int | None = None
    start: tuple[int, int] | None = None
    goal: tuple[int, int] | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("grid dimensions must be positive")
        if not 0 <= self.obstacle_density < 1:
            raise ValueError("obstacle_density must lie in [0, 1)")
        if not 0 <= self.slip_prob < 1:
            raise ValueError("slip_prob must lie in [0, 1)")
        if self.horizon is None:
            self.horizon = 4 * self.width * self.height
        if self.horizon < 1:
            raise ValueError("horizon must be positive")
        if self.start is None:
            self.start = (0, 0)
        if self.goal is None:
            self.goal = (self.width - 1, self.height - 1)
        for name, (x, y) in (("start", self.start), ("goal", self.goal)):
            if not (0 <= x < self.width and 0 <= y < self.height):
                raise ValueError(f"{name} cell {x, y} is outside the grid")
        if self.start == self.goal:
            raise ValueError("start and goal must differ")


@dataclass
class Grid:
    """A concrete layout: spec plus obstacle mask and derived cell indices."""

    spec: GridSpec
    obstacles: np.ndarray  # (height, width) bool
    start_state: int
    goal_state: int

    @property
    def n_states(self) -> int:
        return self.spec.width * self.spec.height

    def state_of(self, x: int, y: int) -> int:
        return y * self.spec.width + x

    def coords_of(self, state: int) -> tuple[int, int]:
        return state % self.spec.width, state // self.spec.width

    def is_free(self, state: int) -> bool:
        x, y = self.coords_of(state)
        return not self.obstacles[y, x]

    def free_states(self) -> list[int]:
        return [s for s in range(self.n_states) if self.is_free(s)]


@dataclass
class Episode:
    """One rollout: (state, action, reward) steps plus derived summaries."""

    steps: list[tuple[int, int, float]]
    reached_goal: bool
    total_reward: float
    final_state: int

    def __post_init__(self) -> None:
        if not self.steps:
            raise ValueError("episodes must contain at least one step")


def _connected(obstacles: np.ndarray, start: tuple[int, int], goal: tuple[int, int]) -> bool:
    height, width = obstacles.shape
    seen = np.zeros_like(obstacles, dtype=bool)
    queue = deque([start])
    seen[start[1], start[0]] = True
    while queue:
        x, y = queue.popleft()
        if (x, y) == goal:
            return True
        for dy, dx in _DELTAS:
            nx, ny = x + dx, y + dy
            if 0 <= nx < width and 0 <= ny < height and not seen[ny, nx] and not obstacles[ny, nx]:
                seen[ny, nx] = True
                queue.append((nx, ny))
    return False


def build_grid(spec: GridSpec) -> Grid:
    """Construct a connected layout deterministically from the spec seed.

    Obstacles are Bernoulli(density) per non-start/goal cell; layouts whose
    start and goal are disconnected are regenerated with seed+1, seed+2, ...
    up to 100 attempts.
    """
    for attempt in range(_MAX_LAYOUT_ATTEMPTS):
        rng = np.random.default_rng(spec.seed + attempt)
        draws = rng.random((spec.height, spec.width))
        obstacles = draws < spec.obstacle_density
        sx, sy = spec.start
        gx, gy = spec.goal
        obstacles[sy, sx] = False
        obstacles[gy, gx] = False
        if _connected(obstacles, spec.start, spec.goal):
            return Grid(
                spec=spec,
                obstacles=obstacles,
                start_state=sy * spec.width + sx,
                goal_state=gy * spec.width + gx,
            )
    raise RuntimeError(
        f"no connected layout found within {_MAX_LAYOUT_ATTEMPTS} attempts from seed {spec.seed}"
    )


def step(grid: Grid, state: int, action: int, rng: np.random.Generator):
    """Execute one environment transition.

    Returns ``(next_state, reward, done)``.  Raises on actions taken from
    the goal (terminal) state or from an obstacle cell.
    """
    if action not in ACTIONS:
        raise ValueError(f"action must be one of {ACTIONS}, got {action!r}")
    if state == grid.goal_state:
        raise ValueError("cannot step from the terminal goal state")
    if not grid.is_free(state):
        raise ValueError(f"state {state} is an obstacle cell")
    if grid.spec.slip_prob > 0 and rng.random() < grid.spec.slip_prob:
        side = _PERPENDICULAR[action]
        action = side[0] if rng.random() < 0.5 else side[1]
    x, y = grid.coords_of(state)
    dy, dx = _DELTAS[action]
    nx, ny = x + dx, y + dy
    if 0 <= nx < grid.spec.width and 0 <= ny < grid.spec.height and not grid.obstacles[ny, nx]:
        next_state = grid.state_of(nx, ny)
    else:
        next_state = state
    done = next_state == grid.goal_state
    reward = STEP_REWARD + (GOAL_REWARD if done else 0.0)
    return next_state, reward, done


def generate_episode(grid: Grid, policy, rng: np.random.Generator) -> Episode:
    """Roll out from the start cell until the goal or the horizon."""
    state = grid.start_state
    steps: list[tuple[int, int, float]] = []
    total = 0.0
    reached = False
    for _ in range(grid.spec.horizon):
        action = policy(state, rng)
        next_state, reward, done = step(grid, state, action, rng)
        steps.append((state, int(action), reward))
        total += reward
        state = next_state
        if done:
            reached = True
            break
    return Episode(steps=steps, reached_goal=reached, total_reward=total, final_state=state)


def visited_set(episode: Episode, mode: str = "states") -> set:
    """Deduplicated visited states (including the final one) or (s, a) pairs."""
    if mode == "states":
        visited = {s for s, _, _ in episode.steps}
        visited.add(episode.final_state)
        return visited
    if mode == "state_action_pairs":
        return {(s, a) for s, a, _ in episode.steps}
    raise ValueError(f"mode must be 'states' or 'state_action_pairs', got {mode!r}")
