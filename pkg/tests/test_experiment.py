import json

import pandas as pd
import pytest
import yaml

import knockoff_rl.harness.experiment as experiment_module
import knockoff_rl.main as main_module
from knockoff_rl.errors import ConfigError
from knockoff_rl.harness.experiment import (
    SUMMARY_COLUMNS,
    ExperimentConfig,
    run_experiment,
    seed_log_path,
)
from knockoff_rl.knockoff.config import SelectionConfig
from knockoff_rl.main import main
from knockoff_rl.ppo.trainer import TrainConfig

TINY_TRAIN = {
    "total_steps": 400,
    "rollout_len": 200,
    "t_vs": 200,
    "minibatch": 64,
    "update_epochs": 1,
    "eval_every": 200,
    "eval_episodes": 1,
    "hidden_sizes": [8],
}


def _tiny_experiment(out_dir, methods=("ks", "all", "true"), n_seeds=2):
    return ExperimentConfig(
        env_name="lq-raw4-extra20",
        env_overrides={"horizon": 25},
        methods=list(methods),
        n_seeds=n_seeds,
        out_dir=str(out_dir),
        train=TrainConfig(**TINY_TRAIN),
        selection=SelectionConfig(k_folds=2),
    )


@pytest.fixture(scope="module")
def sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    return out, run_experiment(_tiny_experiment(out))


class TestRunExperiment:
    def test_outputs_written(self, sweep):
        out, result = sweep
        for name in ("final_metrics.csv", "summary.csv", "curves.csv"):
            assert (out / name).exists()
        for method in ("ks", "all", "true"):
            for k in range(2):
                assert (out / method / f"seed_{k}.jsonl").exists()
        assert (out / "ks" / "seed_0_selection.yaml").exists()
        assert result.log_paths["ks"] == [seed_log_path(str(out), "ks", 0), seed_log_path(str(out), "ks", 1)]

    def test_final_metrics_rows(self, sweep):
        _, result = sweep
        fm = result.final_metrics
        assert len(fm) == 6
        assert set(fm["method"]) == {"ks", "all", "true"}
        assert list(fm[fm["method"] == "ks"]["seed"]) == [0, 1]
        assert (fm["error"] == "").all()

    def test_baseline_selection_metrics_are_closed_form(self, sweep):
        _, result = sweep
        summary = result.summary.set_index("Selection")
        assert list(result.summary.columns) == SUMMARY_COLUMNS
        assert summary.loc["All", "TPR"] == 1.0
        assert summary.loc["All", "FDR"] == pytest.approx(20 / 24)
        assert summary.loc["All", "FPR"] == 1.0
        assert summary.loc["True", "TPR"] == 1.0
        assert summary.loc["True", "FDR"] == 0.0
        assert summary.loc["True", "FPR"] == 0.0
        assert set(result.summary["RL Algo"]) == {"PPO"}
        assert set(result.summary["p"]) == {24}

    def test_curves_cover_each_method(self, sweep):
        _, result = sweep
        assert set(result.curves["method"]) == {"ks", "all", "true"}
        assert set(result.curves["n_seeds"]) == {2}
        assert list(result.curves[result.curves["method"] == "all"]["step"]) == [200, 400]

    def test_summary_is_reproducible(self, sweep, tmp_path):
        out, _ = sweep
        run_experiment(_tiny_experiment(tmp_path))
        assert (tmp_path / "summary.csv").read_bytes() == (out / "summary.csv").read_bytes()

    def test_failed_selection_falls_back_to_all_actions(self, tmp_path):
        exp = _tiny_experiment(tmp_path, methods=["ks"], n_seeds=1)
        exp.train = TrainConfig(**{**TINY_TRAIN, "t_vs": 30})
        result = run_experiment(exp)
        # too few rows for two folds; training carries on unmasked
        row = result.final_metrics.iloc[0]
        assert row["error"] == ""
        assert row["TPR"] == 1.0
        assert row["FPR"] == 1.0
        assert not (tmp_path / "ks" / "seed_0_selection.yaml").exists()

    def test_unexpected_error_in_one_seed_is_recorded(self, tmp_path, monkeypatch):
        real_train = experiment_module.train

        def train_failing_second_seed(spec, config, **kwargs):
            if config.seed == 1:
                raise ValueError("design matrix rejected")
            return real_train(spec, config, **kwargs)

        monkeypatch.setattr(experiment_module, "train", train_failing_second_seed)
        result = run_experiment(_tiny_experiment(tmp_path, methods=["all"], n_seeds=2))
        assert list(result.final_metrics["error"]) == ["", "ValueError: design matrix rejected"]
        assert result.summary["n_failed"].iloc[0] == 1
        assert result.log_paths["all"] == [seed_log_path(str(tmp_path), "all", 0)]

    def test_true_method_on_null_env(self, tmp_path):
        exp = _tiny_experiment(tmp_path, methods=["true"], n_seeds=1)
        exp.env_name = "lq-null"
        with pytest.raises(ConfigError):
            run_experiment(exp)


class TestExperimentConfig:
    def test_from_config(self):
        config = {
            "env": {"name": "lq-null", "seed": 2, "overrides": {"horizon": 10}},
            "train": dict(TINY_TRAIN),
            "selection": {"alpha": 0.2},
            "experiment": {"methods": ["ks", "all"], "n_seeds": 3, "out_dir": "x", "n_jobs": 1},
        }
        exp = ExperimentConfig.from_config(config)
        assert exp.methods == ["ks", "all"]
        assert exp.selection.alpha == 0.2
        assert exp.env_spec().horizon == 10

    def test_unknown_method(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(methods=["ks", "sac"])

    def test_unknown_experiment_key(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_config({"experiment": {"seeds": 3}})


class TestCli:
    @pytest.fixture
    def config_file(self, tmp_path):
        path = tmp_path / "tiny.yaml"
        path.write_text(yaml.safe_dump({
            "env": {"name": "lq-raw4-extra20", "overrides": {"horizon": 25}},
            "train": TINY_TRAIN,
            "selection": {"k_folds": 2},
        }))
        return path

    def test_train_then_select(self, config_file, tmp_path, capsys):
        out = tmp_path / "run"
        assert main(["train", "--config", str(config_file), "--out", str(out), "--seed", "3"]) == 0
        assert (out / "ks" / "seed_3.jsonl").exists()
        assert (out / "ks" / "seed_3_mask.yaml").exists()
        buffer = out / "ks" / "seed_3_buffer.parquet"
        assert buffer.exists()
        assert "=== ACTION SELECTION ===" in capsys.readouterr().out

        code = main(["select", "--config", str(config_file), "--buffer", str(buffer), "--out", str(out / "sel")])
        assert code == 0
        assert (out / "sel" / "selection_report.yaml").exists()

    def test_experiment_command(self, config_file, tmp_path):
        out = tmp_path / "exp"
        code = main([
            "experiment", "--config", str(config_file), "--out", str(out),
            "--method", "all", "--method", "true", "--n-seeds", "1",
        ])
        assert code == 0
        summary = pd.read_csv(out / "summary.csv")
        assert list(summary["Selection"]) == ["All", "True"]

    def test_missing_buffer_reports_json_error(self, tmp_path, capsys):
        code = main(["select", "--buffer", str(tmp_path / "absent.parquet")])
        assert code == 2
        err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert err["error"] == "FileNotFoundError"

    def test_invalid_config_reports_json_error(self, config_file, capsys):
        code = main(["train", "--config", str(config_file), "--tvs", "5000"])
        assert code == 2
        err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert err["error"] == "ConfigError"

    def test_malformed_yaml_reports_json_error(self, tmp_path, capsys):
        path = tmp_path / "broken.yaml"
        path.write_text("train: [unclosed\n")
        code = main(["train", "--config", str(path)])
        assert code == 2
        err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert err["error"] == "ConfigError"
        assert "not valid YAML" in err["message"]

    def test_unexpected_failure_still_reports_json(self, monkeypatch, capsys):
        def broken_command(args, config):
            raise RuntimeError("disk full")

        monkeypatch.setitem(main_module.COMMANDS, "select", broken_command)
        code = main(["select", "--buffer", "unused.parquet"])
        assert code == 1
        err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert err == {"error": "RuntimeError", "message": "disk full"}
