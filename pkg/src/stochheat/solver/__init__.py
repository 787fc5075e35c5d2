"""Finite-difference solver for the stochastic heat equation on an interval."""
from .checkpoint import CheckpointError, read_checkpoint, write_checkpoint
from .config import (
    CFLReport,
    ConfigError,
    DriftSpec,
    SigmaSpec,
    SolverConfig,
    cfl_check,
)
from .schemes import (
    BlowUpError,
    FieldState,
    SpaceTimeRecord,
    prepare,
    run_replications,
    simulate,
    step_explicit,
    step_semi_implicit,
)

__all__ = [
    "BlowUpError",
    "CFLReport",
    "CheckpointError",
    "ConfigError",
    "DriftSpec",
    "FieldState",
    "SigmaSpec",
    "SolverConfig",
    "SpaceTimeRecord",
    "cfl_check",
    "prepare",
    "read_checkpoint",
    "run_replications",
    "simulate",
    "step_explicit",
    "step_semi_implicit",
    "write_checkpoint",
]
