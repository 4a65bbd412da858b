# knockoff_rl/harness/__init__.py

from knockoff_rl.harness.experiment import (
    ExperimentConfig,
    ExperimentResult,
    run_experiment,
    summarize_runs,
)

__all__ = ["ExperimentConfig", "ExperimentResult", "run_experiment", "summarize_runs"]
