"""Tests for the paired comparison harness and its outputs."""

import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from quborl.experiment import (
    CSV_HEADER,
    METHOD_QUBO,
    METHOD_VANILLA,
    ComparisonReport,
    ExperimentConfig,
    batches_to_threshold,
    compare_runs,
    convergence_threshold,
    default_selection_config,
    emit_outputs,
    empty_grid_optimal_return,
    mc_qubo_train,
    render_comparison_svg,
    rolling_mean,
    sample_complexity_diagnostics,
    write_run_csv,
)
from quborl.gridworld import GridSpec
from quborl.montecarlo import vanilla_mc_train
from quborl.samplers import ExactConfig, SaConfig
from quborl.selection import SelectionConfig


def tiny_selection():
    return SelectionConfig(
        alpha=0.5,
        gamma_sim=1.0,
        cardinality_k=2,
        cardinality_lambda=8.0,
        solver=ExactConfig(),
    )


def tiny_config(**overrides):
    defaults = dict(
        grids=(GridSpec(width=3, height=3, obstacle_density=0.0, slip_prob=0.1, seed=0),),
        batches=6,
        batch_size=4,
        selection=tiny_selection(),
        seeds=(0, 1),
    )
    defaults.update(overrides)
    return ExperimentConfig(**defaults)


class TestExperimentConfig:
    def test_default_selection_resolves_from_batch_size(self):
        config = ExperimentConfig(grids=(GridSpec(width=3, height=3),), batch_size=20)
        assert config.selection.cardinality_k == 7
        assert config.selection.cardinality_lambda == pytest.approx(21.01)
        assert config.selection.alpha == 0.01
        assert config.selection.gamma_sim == 1.0
        assert config.selection.similarity_mode == "state_action_pairs"

    def test_default_selection_scales_with_batch(self):
        assert default_selection_config(9).cardinality_k == 3
        assert default_selection_config(1).cardinality_k == 1

    def test_explicit_none_disables_filtering(self):
        config = ExperimentConfig(grids=(GridSpec(width=3, height=3),), selection=None)
        assert config.selection is None

    def test_validation(self):
        grid = (GridSpec(width=3, height=3),)
        with pytest.raises(ValueError, match="batches"):
            ExperimentConfig(grids=grid, batches=0)
        with pytest.raises(ValueError, match="batch_size"):
            ExperimentConfig(grids=grid, batch_size=0)
        with pytest.raises(ValueError, match="rolling_window"):
            ExperimentConfig(grids=grid, rolling_window=0)
        with pytest.raises(ValueError, match="seed"):
            ExperimentConfig(grids=grid, seeds=())
        with pytest.raises(ValueError, match="grid"):
            ExperimentConfig(grids=())


class TestMcQuboTrain:
    def test_zero_batches_untouched(self):
        spec = GridSpec(width=3, height=3, seed=0)
        policy, qtable, records = mc_qubo_train(spec, 0, 4, tiny_selection(), seed=0)
        assert records == []
        assert qtable.histories == {}
        assert set(policy.greedy_action.values()) == {0}

    def test_none_selection_equals_vanilla(self):
        spec = GridSpec(width=3, height=3, obstacle_density=0.2, seed=3)
        vp, vq, vr = vanilla_mc_train(spec, 8, 5, seed=4)
        qp, qq, qr = mc_qubo_train(spec, 8, 5, None, seed=4)
        assert vp.greedy_action == qp.greedy_action
        assert vq.values == qq.values
        assert [(r.behavior_return, r.greedy_return) for r in vr] == [
            (r.behavior_return, r.greedy_return) for r in qr
        ]

    def test_filtered_run_records_subsets(self):
        spec = GridSpec(width=3, height=3, seed=1)
        _, _, records = mc_qubo_train(spec, 5, 4, tiny_selection(), seed=2)
        for record in records:
            assert 1 <= record.subset_size <= 4
            assert record.subset_size == len(record.selected_indices)
            assert all(0 <= i < 4 for i in record.selected_indices)
            assert record.solve_seconds >= 0.0

    def test_batch_zero_behavior_matches_vanilla(self):
        # Both methods roll batch 0 from the same stream under the same
        # initial policy, so divergence can only start after the first update.
        spec = GridSpec(width=3, height=3, seed=5)
        _, _, vr = vanilla_mc_train(spec, 3, 6, seed=6)
        _, _, qr = mc_qubo_train(spec, 3, 6, tiny_selection(), seed=6)
        assert vr[0].behavior_return == qr[0].behavior_return

    def test_determinism(self):
        spec = GridSpec(width=3, height=3, seed=1)
        first = mc_qubo_train(spec, 5, 4, tiny_selection(), seed=9)
        second = mc_qubo_train(spec, 5, 4, tiny_selection(), seed=9)
        assert [(r.greedy_return, r.selected_indices) for r in first[2]] == [
            (r.greedy_return, r.selected_indices) for r in second[2]
        ]


class TestRollingMean:
    def test_window_one_identity(self):
        series = [3.0, -1.0, 4.0]
        assert np.array_equal(rolling_mean(series, 1), series)

    def test_prefix_warmup(self):
        assert np.allclose(rolling_mean([1, 2, 3], 6), [1.0, 1.5, 2.0])

    def test_constant_series(self):
        assert np.allclose(rolling_mean([2.5] * 10, 4), [2.5] * 10)

    def test_matches_independent_formula(self):
        rng = np.random.default_rng(0)
        series = rng.normal(size=40)
        out = rolling_mean(series, 6)
        assert len(out) == 40
        cumulative = np.concatenate([[0.0], np.cumsum(series)])
        for i in range(40):
            lo = max(0, i - 5)
            expected = (cumulative[i + 1] - cumulative[lo]) / (i + 1 - lo)
            assert out[i] == pytest.approx(expected, abs=1e-12)
            window = series[lo : i + 1]
            assert window.min() - 1e-12 <= out[i] <= window.max() + 1e-12

    def test_rejects_bad_window(self):
        with pytest.raises(ValueError, match="window"):
            rolling_mean([1.0], 0)


class TestSampleComplexity:
    def test_zero_variance_floor(self):
        floor, _ = sample_complexity_diagnostics(0.0, 0.5, 10, 0.1, 0.05)
        assert floor == 0.0

    def test_gamma_zero_specialization(self):
        floor, bound = sample_complexity_diagnostics(1.0, 0.0, 10, 0.1, 0.05)
        assert floor == 1.0
        assert bound == pytest.approx(math.log(10 / 0.05) / (2 * 0.01))

    def test_reference_value(self):
        _, bound = sample_complexity_diagnostics(1.0, 0.9, 25, 0.1, 0.05)
        assert abs(bound - 31073.0) < 0.1

    def test_rejects_gamma_one(self):
        with pytest.raises(ValueError, match="gamma"):
            sample_complexity_diagnostics(1.0, 1.0, 10, 0.1, 0.05)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError, match="epsilon"):
            sample_complexity_diagnostics(1.0, 0.5, 10, 0.0, 0.05)
        with pytest.raises(ValueError, match="delta"):
            sample_complexity_diagnostics(1.0, 0.5, 10, 0.1, 1.0)
        with pytest.raises(ValueError, match="sigma_r2"):
            sample_complexity_diagnostics(-1.0, 0.5, 10, 0.1, 0.05)
        with pytest.raises(ValueError, match="n_states"):
            sample_complexity_diagnostics(1.0, 0.5, 0, 0.1, 0.05)


class TestThreshold:
    def test_optimal_return_formula(self):
        assert empty_grid_optimal_return(GridSpec(width=5, height=5)) == pytest.approx(0.92)
        assert empty_grid_optimal_return(GridSpec(width=3, height=3)) == pytest.approx(0.96)

    def test_threshold_fraction(self):
        assert convergence_threshold(GridSpec(width=5, height=5)) == pytest.approx(0.736)

    def test_batches_to_threshold(self):
        assert batches_to_threshold(np.array([0.1, 0.5, 0.9, 0.8]), 0.75) == 3
        assert batches_to_threshold(np.array([0.9, 0.1]), 0.5) == 1
        assert batches_to_threshold(np.array([0.1, 0.2]), 0.5) == 3


class TestCompareRuns:
    def test_single_seed_single_batch(self):
        config = tiny_config(batches=1, seeds=(0,))
        report = compare_runs(config)
        assert len(report.grids) == 1
        grid = report.grids[0]
        assert len(grid.results) == 2
        assert {r.method for r in grid.results} == {METHOD_VANILLA, METHOD_QUBO}
        assert all(len(r.records) == 1 for r in grid.results)

    def test_identity_selection_zero_difference(self):
        config = tiny_config(selection=None)
        report = compare_runs(config)
        grid = report.grids[0]
        by_method = {
            m: sorted((r for r in grid.results if r.method == m), key=lambda r: r.seed)
            for m in (METHOD_VANILLA, METHOD_QUBO)
        }
        for vanilla, qubo in zip(by_method[METHOD_VANILLA], by_method[METHOD_QUBO]):
            assert np.array_equal(vanilla.rolling_greedy, qubo.rolling_greedy)
            assert vanilla.batches_to_threshold == qubo.batches_to_threshold
        assert grid.qubo_final_wins == len(config.seeds)
        assert (
            grid.mean_batches_to_threshold[METHOD_VANILLA]
            == grid.mean_batches_to_threshold[METHOD_QUBO]
        )

    def test_subset_sizes_bounded(self):
        report = compare_runs(tiny_config())
        for result in report.grids[0].results:
            if result.method == METHOD_QUBO:
                for record in result.records:
                    assert 1 <= record.subset_size <= 4

    def test_reproducible(self):
        first = compare_runs(tiny_config())
        second = compare_runs(tiny_config())
        for ga, gb in zip(first.grids, second.grids):
            for a, b in zip(ga.results, gb.results):
                assert a.method == b.method and a.seed == b.seed
                assert np.array_equal(a.rolling_greedy, b.rolling_greedy)
                assert a.final_rolling == b.final_rolling
                assert [r.selected_indices for r in a.records] == [
                    r.selected_indices for r in b.records
                ]

    def test_results_sorted(self):
        report = compare_runs(tiny_config())
        keys = [(r.method, r.seed) for r in report.grids[0].results]
        assert keys == sorted(keys)


@pytest.fixture(scope="module")
def report_and_dir(tmp_path_factory):
    report = compare_runs(tiny_config(batches=4))
    out = tmp_path_factory.mktemp("results")
    paths = emit_outputs(report, out)
    return report, out, paths


class TestEmitOutputs:
    def test_expected_files(self, report_and_dir):
        _, out, paths = report_and_dir
        names = {p.name for p in paths}
        expected = {
            "3x3_mc_0.csv",
            "3x3_mc_1.csv",
            "3x3_mc-qubo_0.csv",
            "3x3_mc-qubo_1.csv",
            "3x3_compare.svg",
            "summary.json",
        }
        assert names == expected
        assert all(p.exists() for p in paths)

    def test_csv_shape_and_header(self, report_and_dir):
        _, out, _ = report_and_dir
        lines = (out / "3x3_mc_0.csv").read_text().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 1 + 4
        for line in lines[1:]:
            assert line.endswith(",")

    def test_qubo_csv_has_subset_sizes(self, report_and_dir):
        _, out, _ = report_and_dir
        lines = (out / "3x3_mc-qubo_0.csv").read_text().splitlines()[1:]
        sizes = [int(line.split(",")[4]) for line in lines]
        assert all(1 <= s <= 4 for s in sizes)

    def test_rolling_column_consistent(self, report_and_dir):
        report, out, _ = report_and_dir
        lines = (out / "3x3_mc_1.csv").read_text().splitlines()[1:]
        greedy = [float(line.split(",")[2]) for line in lines]
        rolling = [float(line.split(",")[3]) for line in lines]
        assert np.allclose(rolling, rolling_mean(greedy, report.config.rolling_window))

    def test_summary_contents(self, report_and_dir):
        report, out, _ = report_and_dir
        summary = json.loads((out / "summary.json").read_text())
        assert summary["batches"] == 4
        entry = summary["grids"][0]
        assert entry["grid"] == "3x3"
        assert entry["threshold"] == pytest.approx(0.768)
        assert 0 <= entry["qubo_final_wins"] <= 2
        assert set(entry["mean_batches_to_threshold"]) == {METHOD_VANILLA, METHOD_QUBO}
        assert len(entry["per_run"]) == 4

    def test_deterministic_bytes(self, report_and_dir, tmp_path):
        report, out, _ = report_and_dir
        again = compare_runs(tiny_config(batches=4))
        emit_outputs(again, tmp_path)
        for name in ("3x3_mc_0.csv", "3x3_mc-qubo_1.csv", "3x3_compare.svg", "summary.json"):
            assert (tmp_path / name).read_bytes() == (out / name).read_bytes()

    def test_empty_records_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        write_run_csv(path, [], np.array([]))
        assert path.read_text() == CSV_HEADER + "\n"


class TestSvg:
    def test_structure(self):
        report = compare_runs(tiny_config(batches=3))
        markup = render_comparison_svg(report.grids[0])
        root = ET.fromstring(markup)
        tags = [tag.split("}")[-1] for tag in (el.tag for el in root.iter())]
        assert tags.count("polyline") == 2
        assert tags.count("polygon") == 2
        colors = {
            el.get("stroke") for el in root.iter() if el.tag.endswith("polyline")
        }
        assert colors == {"#1f77b4", "#ff7f0e"}

    def test_single_batch_chart_still_well_formed(self):
        report = compare_runs(tiny_config(batches=1, seeds=(0,)))
        markup = render_comparison_svg(report.grids[0])
        root = ET.fromstring(markup)
        tags = [el.tag.split("}")[-1] for el in root.iter()]
        assert tags.count("polyline") == 2
        assert tags.count("polygon") == 2
