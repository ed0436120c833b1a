"""Configuration, experiment orchestration, rendering, and CLI."""

from .config import (AttributionSettings, ExperimentPlan, RunConfig,
                     EXPERIMENT_PAIRINGS, load_config)
from .experiment import (canonical_json, consolidated_report, derive_seed,
                         explain_instances, prepare_experiment_data,
                         preprocess, preprocess_command, run_experiment)
from .render import render_svg

__all__ = [
    "AttributionSettings",
    "ExperimentPlan",
    "RunConfig",
    "EXPERIMENT_PAIRINGS",
    "load_config",
    "canonical_json",
    "consolidated_report",
    "derive_seed",
    "explain_instances",
    "prepare_experiment_data",
    "preprocess",
    "preprocess_command",
    "run_experiment",
    "render_svg",
]
