from harness.experiment import ExperimentConfig, TrialReport
from harness.runner import run_experiment

__all__ = ['ExperimentConfig', 'TrialReport', 'run_experiment']
