import json

import numpy as np
import pytest

from partmerge.graph import Graph, dump_edge_list, generate_grid
from partmerge.harness import (
    SOLVE_COLUMNS,
    TIME_COLUMNS,
    ExperimentConfig,
    cutprob_campaign,
    default_K_list,
    load_config,
    load_graph,
    loglog_slope,
    run_experiment,
    scaling_benchmark,
)
from partmerge.mrf import random_mrf


@pytest.fixture
def grid_file(tmp_path):
    path = tmp_path / "grid.edges"
    path.write_text(dump_edge_list(generate_grid(3, 3)))
    return str(path)


@pytest.fixture
def mrf_file(tmp_path):
    path = tmp_path / "model.json"
    path.write_text(json.dumps(random_mrf(generate_grid(3, 3), 2, 5).to_dict()))
    return str(path)


class TestConfig:
    def test_bad_task(self):
        with pytest.raises(ValueError):
            ExperimentConfig(task="plot").validate()

    def test_zero_seeds(self):
        with pytest.raises(ValueError):
            ExperimentConfig(task="cluster", graph="grid:3x3", seeds=0).validate()

    def test_missing_graph(self):
        with pytest.raises(ValueError):
            ExperimentConfig(task="cluster").validate()

    def test_load_toml(self, tmp_path):
        path = tmp_path / "cfg.toml"
        path.write_text('task = "cluster"\ngraph = "grid:3x3"\nK = [1, 2]\nseeds = 2\n')
        cfg = load_config(path)
        assert (cfg.task, cfg.K, cfg.seeds) == ("cluster", [1, 2], 2)

    def test_unreadable_config_names_path(self, tmp_path):
        with pytest.raises(OSError, match="nope.toml"):
            load_config(tmp_path / "nope.toml")

    def test_unreadable_graph(self):
        with pytest.raises(OSError, match="missing.edges"):
            load_graph("missing.edges")

    def test_default_K(self):
        assert default_K_list(100) == [1, 2, 4, 8, 16, 32, 64]
        assert default_K_list(1) == [1]


class TestSweep:
    def test_single_row(self, grid_file):
        rep = run_experiment(ExperimentConfig("cluster", graph=grid_file, solver="exact", K=[2], eps=[0.5]))
        assert len(rep.rows) == 1

    def test_product_count(self, mrf_file):
        cfg = ExperimentConfig("map", mrf=mrf_file, solver="exact", K=[1, 2, 4], eps=[0.3], seeds=3)
        rep = run_experiment(cfg)
        assert len(rep.rows) == 9
        assert [(r["K"], r["seed"]) for r in rep.rows] == [(K, s) for K in (1, 2, 4) for s in range(3)]

    def test_rerun_byte_identical(self, mrf_file, tmp_path):
        cfg = ExperimentConfig("map", mrf=mrf_file, solver="icm", K=[1, 2], eps=[0.3, 0.6],
                               seeds=2, timings=False)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_experiment(cfg).write(a)
        run_experiment(cfg).write(b)
        assert a.read_bytes() == b.read_bytes()
        assert (tmp_path / "a.csv.json").read_bytes() == (tmp_path / "b.csv.json").read_bytes()
        assert a.read_text().splitlines()[0].split(",") == SOLVE_COLUMNS

    def test_timing_columns(self, grid_file):
        rep = run_experiment(ExperimentConfig("cluster", graph=grid_file, solver="greedy", K=[1], eps=[0.5]))
        assert rep.columns == SOLVE_COLUMNS + TIME_COLUMNS
        assert all(rep.rows[0][c] >= 0 for c in TIME_COLUMNS)

    def test_best_row_and_soundness(self, grid_file):
        rep = run_experiment(ExperimentConfig("cluster", graph=grid_file, solver="exact",
                                              K=[1, 2, 3], eps=[0.2, 0.7], seeds=2))
        best = max(r["objective"] for r in rep.rows)
        assert rep.summary["best"]["objective"] == best
        assert rep.rows[rep.summary["best_index"]]["objective"] == best
        for r in rep.rows:
            assert r["oracle"] is not None
            assert r["oracle"] <= r["implied_opt_upper"] + 1e-9

    def test_map_rows_sound(self, mrf_file):
        rep = run_experiment(ExperimentConfig("map", mrf=mrf_file, solver="exact", K=[1, 2], eps=[0.5], seeds=3))
        for r in rep.rows:
            assert r["objective"] >= r["oracle"] - r["penalty"] - 1e-9 * abs(r["oracle"])
            assert r["oracle"] <= r["implied_opt_upper"] + 1e-9

    def test_auto_params_echoed(self, grid_file):
        rep = run_experiment(ExperimentConfig("cluster", graph=grid_file, solver="greedy", delta=0.5))
        auto = rep.summary["auto_params"]
        assert (rep.rows[0]["K"], rep.rows[0]["eps"]) == (auto["K"], auto["epsilon"])

    def test_generator_graph(self):
        rep = run_experiment(ExperimentConfig("map", graph="grid:3x3", solver="icm", K=[2], eps=[0.3]))
        assert rep.rows[0]["instance"] == "grid:3x3|q=2"


class TestCutProb:
    def test_k2_never_cut(self):
        res = cutprob_campaign(Graph.from_edges(2, [(0, 1)]), 1, 0.5, 1000)
        assert res.frequency.tolist() == [0.0]
        assert res.passed

    def test_too_few_trials(self):
        with pytest.raises(ValueError):
            cutprob_campaign(generate_grid(2, 2), 2, 0.3, 999)

    def test_large_radius_mostly_whole(self):
        g = generate_grid(3, 3)
        res = cutprob_campaign(g, 6, 0.01, 1000, seed=3)
        assert res.passed
        assert np.all(res.frequency <= 1 - (1 - 0.01) ** 5 + res.tolerance)

    def test_thread_count_does_not_change_counts(self):
        g = generate_grid(4, 4)
        a = cutprob_campaign(g, 2, 0.3, 1000, threads=1, seed=9)
        b = cutprob_campaign(g, 2, 0.3, 1000, threads=3, seed=9)
        assert np.array_equal(a.frequency, b.frequency)

    def test_report(self):
        rep = run_experiment(ExperimentConfig("cutprob", graph="grid:4x4", K=[2], eps=[0.3], trials=1000))
        assert len(rep.rows) == generate_grid(4, 4).m
        assert rep.summary["passed"]


class TestScaling:
    def test_slope(self):
        assert loglog_slope([1, 10, 100], [3, 30, 300]) == pytest.approx(1.0)

    def test_unsorted_sizes(self):
        with pytest.raises(ValueError):
            scaling_benchmark("grid", [400, 100])

    def test_objective_reproducible(self):
        a = scaling_benchmark("grid", [100, 400], seed=2)
        b = scaling_benchmark("grid", [100, 400], seed=2)
        assert [r["objective"] for r in a.rows] == [r["objective"] for r in b.rows]

    def test_cluster_problem(self):
        res = scaling_benchmark("geometric", [100, 200], solver="greedy", problem="cluster")
        assert len(res.rows) == 2


def test_include_self_flag_shifts_by_constant():
    base = ExperimentConfig("cluster", graph="grid:3x3", solver="exact", K=[1, 2], eps=[0.5])
    off = ExperimentConfig("cluster", graph="grid:3x3", solver="exact", K=[1, 2], eps=[0.5],
                           include_self=False)
    a, b = run_experiment(base), run_experiment(off)
    g = generate_grid(3, 3)
    shift = sum(d * d for d in g.degrees) / (4 * g.m**2)
    for ra, rb in zip(a.rows, b.rows):
        for col in ("objective", "oracle", "implied_opt_upper"):
            assert rb[col] == pytest.approx(ra[col] + shift)
        assert rb["penalty"] == ra["penalty"]
