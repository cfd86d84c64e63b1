"""Command-line front end for solving, training, and paired comparisons.

Three subcommands share one configuration story:

- ``solve`` reads a QUBO problem file, runs one sampler, prints the best
  energy, and writes the full sample set to the output directory.
- ``train`` runs a single training (vanilla or QUBO-filtered), writes the
  per-batch CSV, and prints an ASCII rendering of the learned greedy policy.
- ``compare`` runs the full paired comparison and writes CSV, JSON, and SVG
  outputs.

Values are resolved per field as: command-line flag, then JSON config file,
then (for the output directory only) the QUBORL_OUT environment variable,
then built-in defaults.  Exit codes: 0 success, 1 usage or configuration
error, 2 runtime or numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from dataclasses import fields as dataclass_fields
from pathlib import Path

from .experiment import (
    METHOD_QUBO,
    METHOD_VANILLA,
    ExperimentConfig,
    compare_runs,
    default_selection_config,
    emit_outputs,
    grid_label,
    mc_qubo_train,
    rolling_mean,
    write_run_csv,
)
from .gridworld import Grid, GridSpec, build_grid
from .montecarlo import Policy
from .qubo import load_problem
from .samplers import (
    ExactConfig,
    SaConfig,
    SbConfig,
    SqaConfig,
    best_sample,
    sample,
    save_samples,
)
from .selection import SelectionConfig

__all__ = [
    "OUTPUT_DIR_ENV",
    "POLICY_ARROWS",
    "default_obstacle_density",
    "main",
    "parse_grid_token",
    "render_policy_ascii",
]

OUTPUT_DIR_ENV = "QUBORL_OUT"
# One glyph per action index (up, down, left, right).
POLICY_ARROWS = "^v<>"

_SOLVER_TYPES = {
    "sa": SaConfig,
    "sb": SbConfig,
    "sqa": SqaConfig,
    "exact": ExactConfig,
}
# Flag name -> dataclass field it sets on the chosen solver config.
_SOLVER_FLAG_FIELDS = {
    "reads": "reads",
    "sweeps": "sweeps",
    "steps": "steps",
    "trotter": "trotter_slices",
}
_CONFIG_FILE_KEYS = frozenset(
    {
        "alpha",
        "batch_size",
        "batches",
        "epsilon",
        "gamma",
        "grids",
        "k",
        "lambda",
        "method",
        "out",
        "reads",
        "seed",
        "seeds",
        "selection",
        "solver",
        "steps",
        "sweeps",
        "trotter",
    }
)

_GRID_TOKEN = re.compile(r"(\d+)x(\d+)", re.IGNORECASE)


class CliError(Exception):
    """Usage or configuration problem; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    """Argparse parser whose usage failures raise instead of exiting with 2."""

    def error(self, message):
        raise CliError(message)


def default_obstacle_density(width: int, height: int) -> float:
    """Obstacle density used when a grid token omits one, by grid size."""
    size = max(width, height)
    if size <= 8:
        return 0.22
    if size <= 15:
        return 0.1
    return 0.01


def parse_grid_token(token: str, seed: int = 0) -> GridSpec:
    """Parse `WxH` or `WxH:density` into a GridSpec."""
    text = token.strip()
    density_text = None
    if ":" in text:
        text, _, density_text = text.partition(":")
    match = _GRID_TOKEN.fullmatch(text.strip())
    if match is None:
        raise CliError(f"bad grid {token!r}: expected WxH or WxH:density")
    width, height = int(match.group(1)), int(match.group(2))
    if density_text is None:
        density = default_obstacle_density(width, height)
    else:
        try:
            density = float(density_text)
        except ValueError:
            raise CliError(f"bad grid {token!r}: density must be a number") from None
    try:
        return GridSpec(width=width, height=height, obstacle_density=density, seed=seed)
    except ValueError as exc:
        raise CliError(f"bad grid {token!r}: {exc}") from None


def render_policy_ascii(grid: Grid, policy: Policy) -> str:
    """Draw the greedy policy: one arrow per free cell, '#' obstacle, 'G' goal."""
    rows = []
    for y in range(grid.spec.height):
        row = []
        for x in range(grid.spec.width):
            state = grid.state_of(x, y)
            if grid.obstacles[y, x]:
                row.append("#")
            elif state == grid.goal_state:
                row.append("G")
            else:
                row.append(POLICY_ARROWS[policy.greedy_action.get(state, 0)])
        rows.append("".join(row))
    return "\n".join(rows)


def _load_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as exc:
        raise CliError(f"cannot read config file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise CliError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise CliError(f"config file {path} must hold a JSON object")
    unknown = sorted(set(data) - _CONFIG_FILE_KEYS)
    if unknown:
        raise CliError(f"unknown config file keys: {', '.join(unknown)}")
    return data


class _Settings:
    """Per-field resolution: flag value, then config file, then default."""

    def __init__(self, args: argparse.Namespace, file_config: dict):
        self._args = args
        self._file = file_config

    def pick(self, key: str, default, attr: str | None = None):
        value = getattr(self._args, attr or key, None)
        if value is not None:
            return value
        if key in self._file:
            return self._file[key]
        return default

    def given(self, key: str, attr: str | None = None) -> bool:
        return getattr(self._args, attr or key, None) is not None or key in self._file

    def out_dir(self) -> Path:
        env_default = os.environ.get(OUTPUT_DIR_ENV) or "results"
        return Path(self.pick("out", env_default))


def _build_solver(settings: _Settings, default_seed: int):
    name = str(settings.pick("solver", "sa")).lower()
    if name not in _SOLVER_TYPES:
        raise CliError(f"unknown solver {name!r}: choose from sa, sb, sqa, exact")
    cls = _SOLVER_TYPES[name]
    field_names = {field.name for field in dataclass_fields(cls)}
    kwargs = {}
    for flag, field in _SOLVER_FLAG_FIELDS.items():
        if not settings.given(flag):
            continue
        if field not in field_names:
            raise CliError(f"solver {name!r} does not accept --{flag}")
        kwargs[field] = int(settings.pick(flag, None))
    if "seed" in field_names:
        kwargs["seed"] = int(settings.pick("seed", default_seed))
    try:
        return name, cls(**kwargs)
    except ValueError as exc:
        raise CliError(f"bad solver settings: {exc}") from None


def _build_selection(settings: _Settings, batch_size: int, seed: int) -> SelectionConfig:
    base = default_selection_config(batch_size)
    alpha = float(settings.pick("alpha", base.alpha))
    gamma_sim = float(settings.pick("gamma", base.gamma_sim))
    if settings.given("k"):
        k_raw = int(settings.pick("k", 0))
        cardinality_k = None if k_raw == 0 else k_raw
    else:
        cardinality_k = base.cardinality_k
    if settings.given("lambda", attr="lambda_"):
        if cardinality_k is None:
            raise CliError("--lambda requires a positive --k")
        cardinality_lambda = float(settings.pick("lambda", 0.0, attr="lambda_"))
    elif cardinality_k is None:
        cardinality_lambda = 0.0
    else:
        cardinality_lambda = alpha + gamma_sim * batch_size + 1.0
    _, solver = _build_solver(settings, seed)
    try:
        return SelectionConfig(
            alpha=alpha,
            gamma_sim=gamma_sim,
            cardinality_k=cardinality_k,
            cardinality_lambda=cardinality_lambda,
            similarity_mode=base.similarity_mode,
            solver=solver,
        )
    except ValueError as exc:
        raise CliError(f"bad selection settings: {exc}") from None


def _parse_grids(settings: _Settings, default_tokens: str, seed: int) -> list[GridSpec]:
    raw = settings.pick("grids", default_tokens)
    if isinstance(raw, str):
        tokens = [piece for piece in raw.split(",") if piece.strip()]
    else:
        tokens = [str(piece) for piece in raw]
    if not tokens:
        raise CliError("at least one grid is required")
    return [parse_grid_token(token, seed=seed) for token in tokens]


def cmd_solve(args: argparse.Namespace, file_config: dict) -> int:
    settings = _Settings(args, file_config)
    seed = int(settings.pick("seed", 0))
    try:
        problem = load_problem(args.problem)
    except OSError as exc:
        raise CliError(f"cannot read problem file {args.problem}: {exc}") from None
    except ValueError as exc:
        raise CliError(str(exc)) from None
    name, solver = _build_solver(settings, seed)
    sample_set = sample(problem, solver)
    bits = best_sample(sample_set)
    out_dir = settings.out_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    sample_path = out_dir / f"{Path(args.problem).stem}_{name}_samples.txt"
    save_samples(sample_set, sample_path, seed=seed, config=solver)
    print(f"solver {name}")
    print(f"problem_n {problem.n}")
    print(f"best_energy {float(sample_set.samples[0].energy)!r}")
    print(f"best_bits {''.join(str(int(b)) for b in bits)}")
    print(f"distinct_samples {len(sample_set.samples)}")
    print(f"wrote {sample_path}")
    return 0


def cmd_train(args: argparse.Namespace, file_config: dict) -> int:
    settings = _Settings(args, file_config)
    seed = int(settings.pick("seed", 0))
    grids = _parse_grids(settings, "3x3", seed)
    if len(grids) != 1:
        raise CliError("train runs a single grid: pass one WxH token")
    spec = grids[0]
    method = str(settings.pick("method", METHOD_VANILLA))
    if method not in (METHOD_VANILLA, METHOD_QUBO):
        raise CliError(f"unknown method {method!r}: choose {METHOD_VANILLA} or {METHOD_QUBO}")
    batches = int(settings.pick("batches", 60))
    if batches < 0:
        raise CliError("batches must be non-negative")
    batch_size = int(settings.pick("batch_size", 20))
    epsilon_start = float(settings.pick("epsilon", 0.3))
    # Validate solver flags against the chosen backend even when the vanilla
    # method will not use them, so inconsistent invocations fail loudly.
    _build_solver(settings, seed)
    selection = _build_selection(settings, batch_size, seed) if method == METHOD_QUBO else None
    policy, _, records = mc_qubo_train(
        spec,
        batches,
        batch_size,
        selection,
        seed=seed,
        epsilon_start=epsilon_start,
    )
    rolling = rolling_mean([record.greedy_return for record in records], 6)
    out_dir = settings.out_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{grid_label(spec)}_{method}_{seed}.csv"
    write_run_csv(csv_path, records, rolling)
    print(render_policy_ascii(build_grid(spec), policy))
    if records:
        print(f"final_greedy_return {float(records[-1].greedy_return)!r}")
    print(f"wrote {csv_path}")
    return 0


def cmd_compare(args: argparse.Namespace, file_config: dict) -> int:
    settings = _Settings(args, file_config)
    grids = tuple(_parse_grids(settings, "3x3,5x5", 0))
    if getattr(args, "seed", None) is not None:
        seeds = tuple(range(args.seed, args.seed + 10))
    elif "seeds" in file_config:
        seeds = tuple(int(s) for s in file_config["seeds"])
    elif "seed" in file_config:
        base = int(file_config["seed"])
        seeds = tuple(range(base, base + 10))
    else:
        seeds = tuple(range(10))
    batch_size = int(settings.pick("batch_size", 20))
    selection_fields = ("alpha", "gamma", "k", "solver", "reads", "sweeps", "steps", "trotter")
    wants_custom = settings.given("lambda", attr="lambda_") or any(
        settings.given(field) for field in selection_fields
    )
    if str(file_config.get("selection", "")).lower() in ("none", "identity") or (
        "selection" in file_config and file_config["selection"] is None
    ):
        selection = None
    elif wants_custom:
        selection = _build_selection(settings, batch_size, seeds[0])
    else:
        selection = default_selection_config(batch_size)
    try:
        config = ExperimentConfig(
            grids=grids,
            batches=int(settings.pick("batches", 60)),
            batch_size=batch_size,
            selection=selection,
            seeds=seeds,
            epsilon_start=float(settings.pick("epsilon", 0.3)),
        )
    except ValueError as exc:
        raise CliError(f"bad comparison settings: {exc}") from None
    report = compare_runs(config)
    out_dir = settings.out_dir()
    paths = emit_outputs(report, out_dir)
    for grid in report.grids:
        mc_btt = grid.mean_batches_to_threshold[METHOD_VANILLA]
        qubo_btt = grid.mean_batches_to_threshold[METHOD_QUBO]
        print(
            f"{grid.label}: qubo_final_wins {grid.qubo_final_wins}/{len(seeds)} "
            f"mean_batches_to_threshold {METHOD_VANILLA}={float(mc_btt)!r} "
            f"{METHOD_QUBO}={float(qubo_btt)!r}"
        )
    print(f"wrote {len(paths)} files to {out_dir}")
    return 0


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with defaults for any flag")
    parser.add_argument("--seed", type=int, help="base random seed")
    parser.add_argument(
        "--solver", choices=sorted(_SOLVER_TYPES), help="sampler backend"
    )
    parser.add_argument("--reads", type=int, help="independent sampler restarts")
    parser.add_argument("--sweeps", type=int, help="annealing sweeps (sa, sqa)")
    parser.add_argument("--steps", type=int, help="integration steps (sb)")
    parser.add_argument("--trotter", type=int, help="replica count (sqa)")
    parser.add_argument("--out", help="output directory (or set QUBORL_OUT)")


def _add_training_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--grids", "--grid", dest="grids", help="comma list of WxH[:density]")
    parser.add_argument("--batches", type=int, help="training batches")
    parser.add_argument("--batch-size", dest="batch_size", type=int, help="episodes per batch")
    parser.add_argument("--alpha", type=float, help="reward weight in the selection objective")
    parser.add_argument("--gamma", type=float, help="similarity weight in the selection objective")
    parser.add_argument("--k", type=int, help="selected subset size (0 disables the constraint)")
    parser.add_argument(
        "--lambda", dest="lambda_", type=float, help="subset size penalty strength"
    )
    parser.add_argument("--epsilon", type=float, help="initial exploration rate")


def build_parser() -> _Parser:
    parser = _Parser(prog="quborl", description=__doc__.splitlines()[0])
    subparsers = parser.add_subparsers(dest="command")

    solve = subparsers.add_parser(
        "solve", help="sample one QUBO problem file", add_help=True
    )
    solve.add_argument("problem", help="path to a QUBO problem file")
    _add_common_flags(solve)

    train = subparsers.add_parser("train", help="run one training on one grid")
    _add_common_flags(train)
    _add_training_flags(train)
    train.add_argument(
        "--method",
        choices=(METHOD_VANILLA, METHOD_QUBO),
        help="use all episodes (mc) or the filtered subset (mc-qubo)",
    )

    compare = subparsers.add_parser("compare", help="paired comparison across seeds")
    _add_common_flags(compare)
    _add_training_flags(compare)

    return parser


_DISPATCH = {"solve": cmd_solve, "train": cmd_train, "compare": cmd_compare}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            print("error: a subcommand is required", file=sys.stderr)
            return 1
        file_config = _load_config_file(args.config) if args.config else {}
        return _DISPATCH[args.command](args, file_config)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RuntimeError, ArithmeticError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
