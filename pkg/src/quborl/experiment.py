"""Paired training comparisons with CSV, summary, and SVG reporting.

The comparison harness trains the plain batch Monte Carlo learner and the
QUBO-filtered variant on identical environments and identical per-batch
random streams, so any difference between the two curves comes from the
episode filter alone. Results land in per-run CSV files, a JSON summary,
and one SVG chart per grid configuration.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .gridworld import GOAL_REWARD, STEP_REWARD, GridSpec
from .montecarlo import Policy, QTable, RunRecord, run_training
from .samplers import ExactConfig, SaConfig
from .selection import SelectionConfig, select_episodes

__all__ = [
    "METHOD_VANILLA",
    "METHOD_QUBO",
    "CSV_HEADER",
    "DEFAULT_SELECTION",
    "ExperimentConfig",
    "MethodResult",
    "GridComparison",
    "ComparisonReport",
    "default_selection_config",
    "mc_qubo_train",
    "rolling_mean",
    "sample_complexity_diagnostics",
    "empty_grid_optimal_return",
    "convergence_threshold",
    "batches_to_threshold",
    "grid_label",
    "compare_runs",
    "write_run_csv",
    "emit_outputs",
    "render_comparison_svg",
]

METHOD_VANILLA = "mc"
METHOD_QUBO = "mc-qubo"
CSV_HEADER = "batch,behavior_return,greedy_return,rolling_greedy,subset_size"

_METHOD_COLORS = {METHOD_VANILLA: "#1f77b4", METHOD_QUBO: "#ff7f0e"}
_THRESHOLD_FRACTION = 0.8


def default_selection_config(batch_size: int = 20) -> SelectionConfig:
    """Coverage-driven selection sized to the batch.

    Near-zero reward pull, full-strength diversity push over visited
    state-action pairs, and a hard cardinality target of one third of the
    batch (rounded up). Without the cardinality term the optimum collapses
    to a single episode on small grids, because every pair of long episodes
    overlaps far more than the tiny reward pull can offset; pinning the
    subset size turns the problem into picking the most mutually
    dissimilar third of the batch. The penalty weight sits just above the
    alpha + gamma_sim * batch_size bound that provably forces the target
    size.
    """
    alpha = 0.01
    gamma_sim = 1.0
    return SelectionConfig(
        alpha=alpha,
        gamma_sim=gamma_sim,
        cardinality_k=math.ceil(batch_size / 3),
        cardinality_lambda=alpha + gamma_sim * batch_size + 1.0,
        similarity_mode="state_action_pairs",
        solver=SaConfig(),
    )


class _DefaultSelection:
    """Sentinel: resolve the selection config from the batch size."""


DEFAULT_SELECTION = _DefaultSelection()


@dataclass
class ExperimentConfig:
    """Settings for a full paired comparison across grids and seeds.

    ``selection`` accepts an explicit config, ``None`` to disable filtering
    (making both methods identical, useful as a control), or the default
    sentinel, which resolves to ``default_selection_config(batch_size)``.
    """

    grids: tuple[GridSpec, ...]
    batches: int = 60
    batch_size: int = 20
    selection: SelectionConfig | None | _DefaultSelection = DEFAULT_SELECTION
    seeds: tuple[int, ...] = tuple(range(10))
    epsilon_start: float = 0.3
    epsilon_end: float = 0.02
    eval_episodes: int = 5
    rolling_window: int = 6
    output_dir: str = "results"

    def __post_init__(self) -> None:
        self.grids = tuple(self.grids)
        self.seeds = tuple(self.seeds)
        if not self.grids:
            raise ValueError("at least one grid spec is required")
        if self.batches < 1:
            raise ValueError(f"batches must be at least 1, got {self.batches}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be at least 1, got {self.batch_size}")
        if self.rolling_window < 1:
            raise ValueError(f"rolling_window must be at least 1, got {self.rolling_window}")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if isinstance(self.selection, _DefaultSelection):
            self.selection = default_selection_config(self.batch_size)


@dataclass(frozen=True)
class MethodResult:
    """One training run summarized for comparison."""

    method: str
    seed: int
    records: tuple[RunRecord, ...]
    rolling_greedy: np.ndarray
    final_rolling: float
    batches_to_threshold: int


@dataclass(frozen=True)
class GridComparison:
    """All paired runs for one grid configuration."""

    label: str
    threshold: float
    results: tuple[MethodResult, ...]
    qubo_final_wins: int
    mean_batches_to_threshold: dict[str, float]


@dataclass(frozen=True)
class ComparisonReport:
    config: ExperimentConfig
    grids: tuple[GridComparison, ...]


def _solver_for_batch(solver, batch: int):
    """Give each batch its own solver seed so reads never repeat verbatim."""
    if isinstance(solver, ExactConfig):
        return solver
    return replace(solver, seed=solver.seed + batch)


def mc_qubo_train(
    spec: GridSpec,
    batches: int,
    batch_size: int,
    selection: SelectionConfig | None,
    *,
    seed: int = 0,
    epsilon_start: float = 0.2,
    epsilon_end: float = 0.02,
    eval_episodes: int = 5,
) -> tuple[Policy, QTable, list[RunRecord]]:
    """Batch Monte Carlo training with QUBO episode filtering.

    Identical to the vanilla trainer except that each batch is filtered
    through the selection problem before the value update. Passing
    ``selection=None`` disables the filter entirely, which makes the run
    bit-for-bit equal to the vanilla trainer and is useful as a control.
    """
    if selection is None:
        return run_training(
            spec,
            batches,
            batch_size,
            seed=seed,
            epsilon_start=epsilon_start,
            epsilon_end=epsilon_end,
            eval_episodes=eval_episodes,
        )
    state = {"batch": 0}

    def select(episodes):
        batch = state["batch"]
        state["batch"] = batch + 1
        config = replace(selection, solver=_solver_for_batch(selection.solver, batch))
        start = time.perf_counter()
        indices, _, _ = select_episodes(episodes, config)
        return indices, time.perf_counter() - start

    return run_training(
        spec,
        batches,
        batch_size,
        seed=seed,
        epsilon_start=epsilon_start,
        epsilon_end=epsilon_end,
        eval_episodes=eval_episodes,
        select=select,
    )


def rolling_mean(series, window: int) -> np.ndarray:
    """Trailing mean over ``window`` points; the warm-up uses the prefix."""
    if window < 1:
        raise ValueError(f"window must be at least 1, got {window}")
    values = np.asarray(series, dtype=np.float64)
    out = np.empty(len(values))
    for i in range(len(values)):
        lo = max(0, i - window + 1)
        out[i] = values[lo : i + 1].mean()
    return out


def sample_complexity_diagnostics(
    sigma_r2: float,
    gamma_discount: float,
    n_states: int,
    epsilon: float,
    delta: float,
) -> tuple[float, float]:
    """Closed-form variance floor and PAC episode bound for tabular MC.

    Returns sigma_r2 / (1 - gamma**2) as the per-state return variance floor
    and ln(n_states / delta) / (2 * epsilon**2 * (1 - gamma)**2) as the
    episodes-per-state bound. Both blow up as gamma approaches 1, which is
    the scaling argument for being selective about which episodes to learn
    from.
    """
    if not 0.0 <= gamma_discount < 1.0:
        raise ValueError(f"gamma_discount must lie in [0, 1), got {gamma_discount}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if sigma_r2 < 0.0:
        raise ValueError(f"sigma_r2 must be nonnegative, got {sigma_r2}")
    if n_states < 1:
        raise ValueError(f"n_states must be at least 1, got {n_states}")
    variance_floor = sigma_r2 / (1.0 - gamma_discount**2)
    pac_bound = math.log(n_states / delta) / (2.0 * epsilon**2 * (1.0 - gamma_discount) ** 2)
    return variance_floor, pac_bound


def empty_grid_optimal_return(spec: GridSpec) -> float:
    """Best possible return on an obstacle-free grid of the same size."""
    shortest_path = (spec.width - 1) + (spec.height - 1)
    return GOAL_REWARD + STEP_REWARD * shortest_path


def convergence_threshold(spec: GridSpec) -> float:
    return _THRESHOLD_FRACTION * empty_grid_optimal_return(spec)


def batches_to_threshold(rolling: np.ndarray, threshold: float) -> int:
    """1-based index of the first rolling value at or above the threshold.

    A curve that never reaches the threshold reports one past the end, so
    smaller is always better and means stay finite.
    """
    hits = np.flatnonzero(rolling >= threshold)
    if hits.size == 0:
        return len(rolling) + 1
    return int(hits[0]) + 1


def grid_label(spec: GridSpec) -> str:
    return f"{spec.width}x{spec.height}"


def compare_runs(config: ExperimentConfig) -> ComparisonReport:
    """Run both methods over every (grid, seed) pair with shared streams."""
    grids = []
    for base_spec in config.grids:
        threshold = convergence_threshold(base_spec)
        results = []
        finals: dict[str, dict[int, float]] = {METHOD_VANILLA: {}, METHOD_QUBO: {}}
        batch_counts: dict[str, list[int]] = {METHOD_VANILLA: [], METHOD_QUBO: []}
        for seed in sorted(config.seeds):
            spec = replace(base_spec, seed=seed)
            for method in (METHOD_VANILLA, METHOD_QUBO):
                selection = config.selection if method == METHOD_QUBO else None
                _, _, records = mc_qubo_train(
                    spec,
                    config.batches,
                    config.batch_size,
                    selection,
                    seed=seed,
                    epsilon_start=config.epsilon_start,
                    epsilon_end=config.epsilon_end,
                    eval_episodes=config.eval_episodes,
                )
                rolling = rolling_mean(
                    [r.greedy_return for r in records], config.rolling_window
                )
                reached = batches_to_threshold(rolling, threshold)
                results.append(
                    MethodResult(
                        method=method,
                        seed=seed,
                        records=tuple(records),
                        rolling_greedy=rolling,
                        final_rolling=float(rolling[-1]),
                        batches_to_threshold=reached,
                    )
                )
                finals[method][seed] = float(rolling[-1])
                batch_counts[method].append(reached)
        wins = sum(
            finals[METHOD_QUBO][seed] >= finals[METHOD_VANILLA][seed]
            for seed in sorted(config.seeds)
        )
        grids.append(
            GridComparison(
                label=grid_label(base_spec),
                threshold=threshold,
                results=tuple(sorted(results, key=lambda r: (r.method, r.seed))),
                qubo_final_wins=int(wins),
                mean_batches_to_threshold={
                    method: float(np.mean(counts)) for method, counts in batch_counts.items()
                },
            )
        )
    return ComparisonReport(config=config, grids=tuple(grids))


def write_run_csv(path: Path, records, rolling: np.ndarray) -> None:
    """One row per batch; the subset column is empty for unfiltered runs."""
    lines = [CSV_HEADER]
    for record, smoothed in zip(records, rolling):
        subset = "" if record.subset_size is None else str(record.subset_size)
        lines.append(
            f"{record.batch},{record.behavior_return!r},{record.greedy_return!r},"
            f"{float(smoothed)!r},{subset}"
        )
    _write_text(path, "\n".join(lines) + "\n")


def _write_text(path: Path, content: str) -> None:
    try:
        path.write_text(content)
    except OSError as error:
        raise OSError(f"failed writing {path}: {error}") from error


def emit_outputs(report: ComparisonReport, out_dir: str | Path) -> list[Path]:
    """Write per-run CSVs, a JSON summary, and one SVG chart per grid."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    summary = {"batches": report.config.batches, "batch_size": report.config.batch_size,
               "rolling_window": report.config.rolling_window, "grids": []}
    for grid in report.grids:
        for result in grid.results:
            path = out / f"{grid.label}_{result.method}_{result.seed}.csv"
            write_run_csv(path, result.records, result.rolling_greedy)
            written.append(path)
        summary["grids"].append(
            {
                "grid": grid.label,
                "threshold": grid.threshold,
                "qubo_final_wins": grid.qubo_final_wins,
                "seeds": len({r.seed for r in grid.results}),
                "mean_batches_to_threshold": grid.mean_batches_to_threshold,
                "per_run": [
                    {
                        "method": r.method,
                        "seed": r.seed,
                        "final_rolling": r.final_rolling,
                        "batches_to_threshold": r.batches_to_threshold,
                    }
                    for r in grid.results
                ],
            }
        )
        svg_path = out / f"{grid.label}_compare.svg"
        _write_text(svg_path, render_comparison_svg(grid))
        written.append(svg_path)
    summary_path = out / "summary.json"
    _write_text(summary_path, json.dumps(summary, indent=2, sort_keys=True) + "\n")
    written.append(summary_path)
    return written


def _curve_matrix(grid: GridComparison, method: str) -> np.ndarray:
    rows = [r.rolling_greedy for r in grid.results if r.method == method]
    return np.vstack(rows)


def render_comparison_svg(grid: GridComparison) -> str:
    """Line chart of per-method mean rolling returns with min-max bands.

    Exactly one polyline (the mean curve) and one polygon (the band across
    seeds) per method; axes and the threshold marker use plain line
    elements so the structural counts stay meaningful.
    """
    width, height = 640, 400
    left, right, top, bottom = 60.0, 20.0, 30.0, 50.0
    plot_w = width - left - right
    plot_h = height - top - bottom

    curves = {m: _curve_matrix(grid, m) for m in (METHOD_VANILLA, METHOD_QUBO)}
    n_batches = curves[METHOD_VANILLA].shape[1]
    all_values = np.concatenate([c.ravel() for c in curves.values()])
    y_min = min(float(all_values.min()), grid.threshold)
    y_max = max(float(all_values.max()), grid.threshold)
    pad = 0.05 * (y_max - y_min) if y_max > y_min else 0.5
    y_min -= pad
    y_max += pad

    def x_at(batch_index: int) -> float:
        if n_batches == 1:
            return left + plot_w / 2
        return left + plot_w * batch_index / (n_batches - 1)

    def y_at(value: float) -> float:
        return top + plot_h * (1.0 - (value - y_min) / (y_max - y_min))

    def path_points(values) -> str:
        return " ".join(f"{x_at(i):.2f},{y_at(v):.2f}" for i, v in enumerate(values))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left}" y="18" font-family="sans-serif" font-size="14">'
        f"Greedy return (rolling mean), grid {grid.label}</text>",
    ]
    for method in (METHOD_VANILLA, METHOD_QUBO):
        color = _METHOD_COLORS[method]
        matrix = curves[method]
        upper = matrix.max(axis=0)
        lower = matrix.min(axis=0)
        band = (
            path_points(upper)
            + " "
            + " ".join(
                f"{x_at(i):.2f},{y_at(v):.2f}"
                for i, v in zip(range(n_batches - 1, -1, -1), lower[::-1])
            )
        )
        parts.append(f'<polygon points="{band}" fill="{color}" fill-opacity="0.18" stroke="none"/>')
    for method in (METHOD_VANILLA, METHOD_QUBO):
        color = _METHOD_COLORS[method]
        mean_curve = curves[method].mean(axis=0)
        parts.append(
            f'<polyline points="{path_points(mean_curve)}" fill="none" '
            f'stroke="{color}" stroke-width="2"/>'
        )
    ty = y_at(grid.threshold)
    parts.append(
        f'<line x1="{left}" y1="{ty:.2f}" x2="{left + plot_w}" y2="{ty:.2f}" '
        f'stroke="#666666" stroke-dasharray="6 4"/>'
    )
    parts.append(
        f'<text x="{left + plot_w - 4}" y="{ty - 5:.2f}" font-family="sans-serif" '
        f'font-size="11" fill="#666666" text-anchor="end">threshold {grid.threshold:.3f}</text>'
    )
    axis_y = top + plot_h
    parts.append(
        f'<line x1="{left}" y1="{axis_y}" x2="{left + plot_w}" y2="{axis_y}" stroke="black"/>'
    )
    parts.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{axis_y}" stroke="black"/>')
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        batch_index = round(frac * (n_batches - 1))
        x = x_at(batch_index)
        parts.append(f'<line x1="{x:.2f}" y1="{axis_y}" x2="{x:.2f}" y2="{axis_y + 5}" stroke="black"/>')
        parts.append(
            f'<text x="{x:.2f}" y="{axis_y + 18}" font-family="sans-serif" font-size="11" '
            f'text-anchor="middle">{batch_index + 1}</text>'
        )
        value = y_min + frac * (y_max - y_min)
        y = y_at(value)
        parts.append(f'<line x1="{left - 5}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="black"/>')
        parts.append(
            f'<text x="{left - 9}" y="{y + 4:.2f}" font-family="sans-serif" font-size="11" '
            f'text-anchor="end">{value:.2f}</text>'
        )
    parts.append(
        f'<text x="{left + plot_w / 2:.2f}" y="{height - 10}" font-family="sans-serif" '
        f'font-size="12" text-anchor="middle">batch</text>'
    )
    legend_x = left + 12
    for row, (method, label) in enumerate(
        ((METHOD_VANILLA, "MC"), (METHOD_QUBO, "MC+QUBO"))
    ):
        y = top + 14 + 18 * row
        parts.append(
            f'<rect x="{legend_x}" y="{y - 9}" width="14" height="10" '
            f'fill="{_METHOD_COLORS[method]}"/>'
        )
        parts.append(
            f'<text x="{legend_x + 20}" y="{y}" font-family="sans-serif" font-size="12">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
