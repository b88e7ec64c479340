import os

import numpy as np
import pytest

from mnarmc.cli import main
from mnarmc.matrixio import read_dense, read_observed, write_dense, write_triplets
from mnarmc.reportfmt import Document
from mnarmc.sim import DgpSpec, sample_instance


def run(argv):
    return main([str(a) for a in argv])


def read_report(path):
    return Document.read(path)


class TestSimulate:
    def test_files_and_triplet_count(self, tmp_path):
        out = tmp_path / "sim"
        assert run(["simulate", "--dgp", "dgp1", "--n1", 50, "--n2", 40, "--seed", 7, "--out-dir", out]) == 0
        for name in ("truth.csv", "observed.csv", "mask.csv"):
            assert (out / name).exists()
            assert (out / (name + ".meta")).exists()
        mask = read_dense(out / "mask.csv")
        with open(out / "observed.csv") as f:
            n_lines = sum(1 for _ in f) - 1  # header
        assert n_lines == int(mask.sum())

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        args = ["simulate", "--dgp", "dgp2", "--n1", 30, "--n2", 30, "--seed", 3]
        assert run(args + ["--out-dir", a]) == 0
        assert run(args + ["--out-dir", b]) == 0
        for name in ("truth.csv", "observed.csv", "mask.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_value_types_per_design(self, tmp_path):
        out1 = tmp_path / "d1"
        out2 = tmp_path / "d2"
        run(["simulate", "--dgp", "dgp1", "--n1", 30, "--n2", 30, "--seed", 1, "--out-dir", out1])
        run(["simulate", "--dgp", "dgp2", "--n1", 30, "--n2", 30, "--seed", 1, "--out-dir", out2])
        v1 = read_observed(out1 / "observed.csv").observed_values()
        v2 = read_observed(out2 / "observed.csv").observed_values()
        assert set(np.unique(v1)) <= {0.0, 1.0}
        assert np.unique(v2).size > v2.size // 2

    def test_round_trip_is_bit_exact(self, tmp_path):
        inst = sample_instance(DgpSpec(n1=25, n2=35, dgp="dgp2", seed=9))
        path = tmp_path / "obs.csv"
        write_triplets(path, inst.data)
        back = read_observed(path)
        assert np.array_equal(back.mask, inst.data.mask)
        assert back.values.tobytes() == inst.data.values.tobytes()

    def test_missing_shape_args(self):
        assert run(["simulate", "--dgp", "dgp1"]) == 2


class TestFit:
    @pytest.fixture()
    def sim_dir(self, tmp_path):
        out = tmp_path / "sim"
        run(["simulate", "--dgp", "dgp1", "--n1", 35, "--n2", 30, "--seed", 5, "--out-dir", out])
        return out

    def test_single_lambda_no_holdout(self, sim_dir, tmp_path):
        out = tmp_path / "fit"
        code = run([
            "fit", "--observations", sim_dir / "observed.csv", "--lambda-grid", "1.0",
            "--max-iter", 15, "--out-dir", out,
        ])
        assert code == 0
        doc = read_report(out / "fit_report.txt")
        assert doc.section("result")["chosen_lambda"] == 1.0
        assert "per_lambda" not in doc.tables
        m_hat = read_dense(out / "m_hat.csv")
        assert m_hat.shape == (35, 30)

    def test_grid_selection_records_table(self, sim_dir, tmp_path):
        out = tmp_path / "fit"
        code = run([
            "fit", "--observations", sim_dir / "observed.csv",
            "--lambda-grid", "0.25,1.0,4.0", "--max-iter", 12,
            "--selection-metric", "rmse_holdout", "--out-dir", out,
        ])
        assert code == 0
        doc = read_report(out / "fit_report.txt")
        chosen = doc.section("result")["chosen_lambda"]
        cols, rows = doc.tables["per_lambda"]
        grid = [r[0] for r in rows]
        metrics = [r[1] for r in rows]
        assert chosen in grid
        # the chosen penalty attains the best holdout metric in the table
        assert metrics[grid.index(chosen)] == min(metrics)
        # config embedded for provenance
        assert doc.section("config")["lambda_grid"] == "0.25,1,4"

    def test_report_carries_shift_identification(self, sim_dir, tmp_path):
        out = tmp_path / "fit"
        run(["fit", "--observations", sim_dir / "observed.csv", "--lambda-grid", "1.0",
             "--max-iter", 10, "--out-dir", out])
        rs = read_report(out / "fit_report.txt").section("result")
        assert "c_hat" in rs and "nuclear_at_c" in rs
        assert rs["transform_evals"] >= 3

    def test_rank_selection_metric(self, sim_dir, tmp_path):
        out = tmp_path / "fit"
        code = run([
            "fit", "--observations", sim_dir / "observed.csv",
            "--lambda-grid", "0.5,2.0", "--max-iter", 10,
            "--selection-metric", "rank3", "--out-dir", out,
        ])
        assert code == 0

    def test_missing_input_is_exit_2(self, tmp_path):
        assert run(["fit", "--observations", tmp_path / "nope.csv"]) == 2


class TestEval:
    def test_truth_recovery_and_constant_predictions(self, tmp_path):
        sim = tmp_path / "sim"
        run(["simulate", "--dgp", "dgp1", "--n1", 20, "--n2", 25, "--seed", 2, "--out-dir", sim])
        truth = read_dense(sim / "truth.csv")

        mhat_path = tmp_path / "mhat.csv"
        write_dense(mhat_path, truth)
        out = tmp_path / "r1.txt"
        assert run(["eval", "--m-hat", mhat_path, "--test", sim / "observed.csv",
                    "--truth", sim / "truth.csv", "--out", out]) == 0
        rs = read_report(out).section("result")
        assert rs["rmse_plain"] == 0.0

        write_dense(mhat_path, np.full((20, 25), 3.0))
        out2 = tmp_path / "r2.txt"
        assert run(["eval", "--m-hat", mhat_path, "--test", sim / "observed.csv", "--out", out2]) == 0
        rs2 = read_report(out2).section("result")
        assert (rs2["rank1"], rs2["rank2"], rs2["rank3"]) == (0.5, 0.5, 0.5)
        assert rs2["rmse_plain"] is None

    def test_zero_weight_test_reports_null_ranks(self, tmp_path):
        sim = tmp_path / "sim"
        run(["simulate", "--dgp", "dgp2", "--n1", 10, "--n2", 10, "--seed", 4, "--out-dir", sim])
        mhat_path = tmp_path / "mhat.csv"
        write_dense(mhat_path, np.zeros((10, 10)))
        out = tmp_path / "r.txt"
        # binarizing with a huge threshold zeroes every test weight
        assert run(["eval", "--m-hat", mhat_path, "--test", sim / "observed.csv",
                    "--binarize-threshold", 1e9, "--out", out]) == 0
        rs = read_report(out).section("result")
        assert rs["rank1"] is None and rs["rank3"] is None
        assert "rank_note" in rs

    def test_random_predictions_average_half(self, tmp_path):
        sim = tmp_path / "sim"
        run(["simulate", "--dgp", "dgp1", "--n1", 20, "--n2", 15, "--seed", 6, "--out-dir", sim])
        vals = []
        for seed in range(20):
            rng = np.random.default_rng(seed)
            mhat_path = tmp_path / f"mhat{seed}.csv"
            write_dense(mhat_path, rng.standard_normal((20, 15)))
            out = tmp_path / f"r{seed}.txt"
            assert run(["eval", "--m-hat", mhat_path, "--test", sim / "observed.csv", "--out", out]) == 0
            vals.append(read_report(out).section("result")["rank3"])
        assert 0.45 <= float(np.mean(vals)) <= 0.55


class TestBench:
    def test_shape_and_determinism(self, tmp_path):
        args = ["bench", "--dgp", "dgp1", "--n1", 30, "--n2", 30, "--seed", 13,
                "--replications", 2, "--lambda-grid", "0.5,1.0", "--max-iter", 10]
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(args + ["--out-dir", a]) == 0
        assert run(args + ["--out-dir", b]) == 0

        doc = read_report(a / "bench_report.txt")
        cols, rows = doc.tables["results"]
        assert [r[0] for r in rows] == ["pairwise_pgd", "pairwise_fista", "baseline_sq"]
        assert cols == ["method", "rmse_plain_mean", "rmse_plain_sd", "rmse_centered_mean", "rmse_centered_sd"]

        timing = read_report(a / "bench_timing.txt")
        tcols, trows = timing.tables["timing"]
        assert [r[0] for r in trows] == ["pairwise_pgd", "pairwise_fista", "baseline_sq"]
        assert tcols == ["method", "time_mean_s", "time_sd_s"]

        # metrics report is byte-reproducible; timings live in the sidecar
        assert (a / "bench_report.txt").read_bytes() == (b / "bench_report.txt").read_bytes()

    def test_replication_rows_indexed_in_order(self, tmp_path):
        out = tmp_path / "bench"
        assert run(["bench", "--dgp", "dgp2", "--n1", 20, "--n2", 20, "--seed", 1,
                    "--replications", 3, "--lambda-grid", "1.0", "--max-iter", 5,
                    "--threads", 2, "--out-dir", out]) == 0
        doc = read_report(out / "bench_report.txt")
        _, rows = doc.tables["replications"]
        assert [r[0] for r in rows] == [0, 0, 0, 1, 1, 1, 2, 2, 2]


class TestConfigFile:
    def test_config_supplies_defaults_and_flags_override(self, tmp_path):
        cfg = Document("config")
        cfg.set("common", "seed", 5)
        cfg.set("simulate", "n1", 12)
        cfg.set("simulate", "n2", 18)
        cfg_path = tmp_path / "cfg.txt"
        cfg.write(cfg_path)

        out1 = tmp_path / "s1"
        assert run(["simulate", "--config", cfg_path, "--dgp", "dgp1", "--out-dir", out1]) == 0
        assert read_dense(out1 / "truth.csv").shape == (12, 18)

        out2 = tmp_path / "s2"
        assert run(["simulate", "--config", cfg_path, "--dgp", "dgp1", "--n1", 7, "--out-dir", out2]) == 0
        assert read_dense(out2 / "truth.csv").shape == (7, 18)

    def test_thread_env_var_default(self, tmp_path, monkeypatch):
        monkeypatch.setenv("MNARMC_THREADS", "2")
        out = tmp_path / "bench"
        assert run(["bench", "--dgp", "dgp1", "--n1", 15, "--n2", 15, "--seed", 2,
                    "--replications", 2, "--lambda-grid", "1.0", "--max-iter", 3,
                    "--out-dir", out]) == 0
        doc = read_report(out / "bench_report.txt")
        assert doc.section("config")["threads"] == 2
