"""Experiment configuration, execution and the command-line interface."""
from .config import (
    KINDS,
    PRESETS,
    EstimateSpec,
    ExperimentConfig,
    LinearSpec,
    OracleSpec,
    VariationSpec,
    preset,
    validate,
)
from .run import RunResult, execute, manifest, run, to_csv, write_outputs

__all__ = [
    "KINDS",
    "PRESETS",
    "EstimateSpec",
    "ExperimentConfig",
    "LinearSpec",
    "OracleSpec",
    "RunResult",
    "VariationSpec",
    "execute",
    "manifest",
    "preset",
    "run",
    "to_csv",
    "validate",
    "write_outputs",
]
