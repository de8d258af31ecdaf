"""Experiment harness: codebooks, hard families, diagnostics, determinism."""

import json
import math

import numpy as np
import pytest

from mallows_block import experiments as exp
from mallows_block.model import BlockPartition, MallowsBlockModel


class TestCodeBook:
    def test_minimum_viable_d(self):
        code = exp.build_code(8)
        assert len(code.codewords) >= 2
        assert code.min_distance >= 1

    def test_d16_guarantees(self):
        code = exp.build_code(16)
        assert len(code.codewords) >= 4
        assert code.min_distance >= 2

    def test_d24_pairwise_distances_exhaustively(self):
        code = exp.build_code(24)
        words = np.array(code.codewords)
        assert len(words) >= 8
        need = math.ceil(24 / 8)
        for i in range(len(words)):
            for j in range(i + 1, len(words)):
                assert int(np.abs(words[i] - words[j]).sum()) >= need

    def test_rejects_small_d(self):
        with pytest.raises(ValueError):
            exp.build_code(7)


class TestFanoBlockFamily:
    def test_respects_fano_budget(self):
        report = exp.build_fano_block_family(16, 8, eps=0.1)
        assert report["passed"]
        budget = 32 * 64 * 0.1**2
        assert all(row["kl"] <= budget for row in report["rows"])

    def test_family_size_from_code(self):
        report = exp.build_fano_block_family(64, 8, eps=0.05)
        assert len(report["models"]) >= 2

    def test_tv_separation_reported(self):
        report = exp.build_fano_block_family(64, 8, eps=0.05)
        sep = report["tv_separation"]
        assert 0.0 < sep["min_observed"] <= 1.0
        assert sep["asymptotic_target"] == pytest.approx(8 * 0.05 / 2)

    def test_rejects_bad_geometry(self):
        with pytest.raises(ValueError):
            exp.build_fano_block_family(65, 8, eps=0.05)  # 8 does not divide 65
        with pytest.raises(ValueError):
            exp.build_fano_block_family(16, 8, eps=0.2)  # spread would drop below 1/4


class TestFanoCenterFamily:
    def test_enumerable_sizes(self):
        for m, expected_models in ((4, 2), (6, 3)):
            report = exp.build_fano_center_family(m)
            assert len(report["models"]) == expected_models
            assert report["passed"]
            for row in report["rows"]:
                assert row["kl"] <= 2 * math.log(2) + 1e-12
                assert row["tv"] >= 0.25

    def test_centers_are_adjacent_transpositions(self):
        report = exp.build_fano_center_family(6)
        first = report["models"][0].center
        assert first.tolist() == [2, 1, 3, 4, 5, 6]

    def test_monte_carlo_path_beyond_enumeration(self):
        report = exp.build_fano_center_family(12, mc_draws=2000)
        assert report["rows"][0]["method"].startswith("monte_carlo")
        assert report["passed"]

    def test_rejects_tiny_m(self):
        with pytest.raises(ValueError):
            exp.build_fano_center_family(3)


class TestMadDiagnostic:
    def test_point_mass_block(self):
        part = BlockPartition([[1], [2, 3]])
        model = MallowsBlockModel([1, 2, 3], [0.7, 0.5], part)
        report = exp.mad_vs_std_diagnostic(model)
        row = report["rows"][0]
        assert row["mad"] == 0.0 and row["sd"] == 0.0
        assert report["passed"]

    def test_uniform_bernoulli_slot(self):
        part = BlockPartition([[2], [1, 3]])
        model = MallowsBlockModel([1, 2, 3], [1.0, 0.5], part)
        row = exp.mad_vs_std_diagnostic(model)["rows"][0]
        assert row["mad"] == pytest.approx(0.5)
        assert row["sd"] == pytest.approx(0.5)
        assert row["ratio"] == pytest.approx(1.0)

    def test_single_block_m16(self):
        model = MallowsBlockModel(np.arange(1, 17), 0.5)
        report = exp.mad_vs_std_diagnostic(model)
        row = report["rows"][0]
        assert 0.0 < row["ratio"] <= 1.0
        assert report["passed"]


class TestRunnerContracts:
    def test_recovery_negative_control(self):
        # nearly uniform spread at a single-sample budget: recovery must be poor
        cfg = exp.ExperimentConfig(
            kind="recovery", phi=0.99, m_grid=(8,), trials=100, recovery_constant=0.4
        )
        report = exp.run_recovery_sweep(cfg)
        assert report["rows"][-1]["n"] == 1
        assert report["rows"][-1]["recovery_rate"] < 0.5

    def test_point_mass_recovery_is_immediate(self):
        cfg = exp.ExperimentConfig(
            kind="recovery", phi=0.0, m_grid=(8,), trials=50, recovery_constant=0.4
        )
        report = exp.run_recovery_sweep(cfg)
        assert report["rows"][-1]["recovery_rate"] == 1.0

    def test_spread_scaling_small(self):
        cfg = exp.ExperimentConfig(
            kind="spread_scaling", m=8, d=2, n_grid=(50, 200, 800), trials=60
        )
        report = exp.run_spread_scaling(cfg)
        errs = [row["median_l2_error"] for row in report["rows"]]
        assert errs[0] > errs[-1]

    def test_spread_scaling_zero_spread_recovers_exactly(self):
        cfg = exp.ExperimentConfig(kind="spread_scaling", m=8, d=1, n_grid=(5,), trials=5)
        part = BlockPartition.single(8)
        model = MallowsBlockModel(np.arange(1, 9), 0.0)
        X = model.sample(5, random_state=0)
        T = model.sufficient_stats(X)
        from mallows_block.estimators import invert_block_means

        spread, _ = invert_block_means(T.mean(axis=0), part)
        assert spread[0] == 0.0

    def test_large_n_error_small(self):
        cfg = exp.ExperimentConfig(
            kind="spread_scaling", m=50, d=1, n_grid=(10_000,), trials=3
        )
        report = exp.run_spread_scaling(cfg)
        assert report["rows"][0]["median_l2_error"] < 0.02

    def test_concentration_small_grid(self):
        cfg = exp.ExperimentConfig(
            kind="concentration",
            m=8,
            phi_grid=(0.4, 0.6),
            phi_prime_grid=(0.5, 0.7),
            n_grid=(1, 5),
            trials=2000,
        )
        report = exp.run_concentration_check(cfg)
        assert report["passed"]

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            exp.ExperimentConfig(kind="nope")


class TestReportDeterminism:
    def test_identical_configs_write_identical_bytes(self, tmp_path):
        cfg = exp.ExperimentConfig(
            kind="recovery", phi=0.5, m_grid=(8,), trials=30, recovery_constant=8.0,
            master_seed=123,
        )
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        exp.write_report(exp.run_recovery_sweep(cfg), str(out_a))
        cfg2 = exp.ExperimentConfig(
            kind="recovery", phi=0.5, m_grid=(8,), trials=30, recovery_constant=8.0,
            master_seed=123,
        )
        exp.write_report(exp.run_recovery_sweep(cfg2), str(out_b))
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_json_summary_carries_assertions(self, tmp_path):
        cfg = exp.ExperimentConfig(
            kind="recovery", phi=0.5, m_grid=(8,), trials=20, recovery_constant=8.0
        )
        exp.write_report(exp.run_recovery_sweep(cfg), str(tmp_path / "r"))
        doc = json.loads((tmp_path / "r.json").read_text())
        assert {a["name"] for a in doc["assertions"]} == {
            "recovery_rate_nondecreasing_in_n",
            "log_m_budget_recovers",
        }
        assert "passed" in doc


def test_parallel_trials_match_serial(monkeypatch):
    cfg = exp.ExperimentConfig(
        kind="recovery", phi=0.5, m_grid=(8,), trials=16, recovery_constant=8.0
    )
    serial = exp.run_recovery_sweep(cfg)
    monkeypatch.setenv("MALLOWS_THREADS", "2")
    parallel = exp.run_recovery_sweep(cfg)
    assert serial["rows"] == parallel["rows"]
