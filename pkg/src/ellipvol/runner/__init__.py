"""Experiment runner, configuration and command line interface."""

from .config import ExperimentConfig
from .experiment import ExperimentReport, SampleRecord, prepare, run_experiment
from .validate import validate
