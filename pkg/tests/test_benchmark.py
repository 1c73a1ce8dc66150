"""Tests for repeated benchmark runs."""

import logging

import numpy as np
import pandas as pd
import pytest

from koopid import benchmark
from koopid.benchmark import (
    BENCHMARKS,
    RUN_COLUMNS,
    derive_seeds,
    run_benchmark,
    run_once,
    summarize,
)
from koopid.error import ConfigurationError, NumericalError, UnknownSystemError


class TestSeeds:
    def test_stable_and_distinct(self):
        seeds = derive_seeds(0, 5)
        assert seeds == derive_seeds(0, 5)
        assert len(set(seeds)) == 5
        assert seeds[:3] == derive_seeds(0, 3)
        assert seeds != derive_seeds(1, 5)


class TestRunBenchmark:
    def test_table(self):
        runs = run_benchmark("vdp", 2, seed=4)
        assert runs.columns.tolist() == list(RUN_COLUMNS)
        assert runs["run"].tolist() == [1, 2]
        assert runs["status"].tolist() == ["ok", "ok"]
        assert runs["seed"].tolist() == derive_seeds(4, 2)
        assert runs["tpr"].isna().all()
        assert "sigma_proc_hat" not in runs.columns

    def test_deterministic(self):
        pd.testing.assert_frame_equal(run_benchmark("vdp", 2), run_benchmark("vdp", 2))

    def test_parallel_matches_serial(self):
        serial = run_benchmark("unstable", 2, seed=1)
        parallel = run_benchmark("unstable", 2, seed=1, jobs=2)
        pd.testing.assert_frame_equal(serial, parallel)

    def test_trajectory_override(self):
        row = run_once("vdp", 1, seed=0, trajectories=40)
        assert row["status"] == "ok"

    def test_failures_are_recorded(self, monkeypatch):
        def fail(*args, **kwargs):
            raise NumericalError("no logarithm", stage="logarithm")

        monkeypatch.setattr(benchmark, "identify", fail)
        runs = run_benchmark("vdp", 2)
        assert runs["status"].tolist() == ["failed", "failed"]
        assert runs["error"].iloc[0] == "[logarithm] no logarithm"
        assert runs["rmse"].isna().all()

    def test_too_many_failures_are_logged(self, monkeypatch, caplog):
        def fail(*args, **kwargs):
            raise NumericalError("no logarithm", stage="logarithm")

        monkeypatch.setattr(benchmark, "identify", fail)
        with caplog.at_level(logging.WARNING, logger="koopid.benchmark"):
            run_benchmark("unstable", 2)
        assert "only 0 of 2 runs succeeded" in caplog.text

    def test_unknown_benchmark(self):
        with pytest.raises(UnknownSystemError):
            run_benchmark("nosuch", 1)

    def test_needs_a_run(self):
        with pytest.raises(ConfigurationError):
            run_benchmark("vdp", 0)

    def test_names(self):
        assert set(BENCHMARKS) == {
            "vdp",
            "unstable",
            "lorenz",
            "duffing-input",
            "duffing-noise",
            "network",
        }
        assert BENCHMARKS["network"].scores_links
        assert BENCHMARKS["lorenz"].min_success_rate < 1.0
        assert BENCHMARKS["vdp"].min_success_rate == 1.0


class TestSummarize:
    def test_failed_runs_only_counted(self):
        runs = pd.DataFrame(
            [
                {"benchmark": "vdp", "status": "ok", "rmse": 1.0, "nrmse": 0.5, "tpr": None, "fpr": None},
                {"benchmark": "vdp", "status": "ok", "rmse": 3.0, "nrmse": 1.5, "tpr": None, "fpr": None},
                {"benchmark": "vdp", "status": "failed", "rmse": None, "nrmse": None, "tpr": None, "fpr": None},
            ]
        )
        summary = summarize(runs).iloc[0]
        assert (summary["runs"], summary["succeeded"], summary["failed"]) == (3, 2, 1)
        assert summary["success_rate"] == pytest.approx(2 / 3)
        assert summary["mean_rmse"] == pytest.approx(2.0)
        assert summary["std_rmse"] == pytest.approx(1.0)
        assert summary["mean_nrmse"] == pytest.approx(1.0)
        assert summary["mean_tpr"] is None or np.isnan(summary["mean_tpr"])
