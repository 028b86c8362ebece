"""Experiment plumbing: dataset registry, JSON config, sweeps and reports."""
from .config import ExperimentConfig, ModelSpec, load_config, parse_config, parse_model
from .registry import REGISTRY, is_available, load_dataset
from .report import emit_report
from .sweep import derive_seed, run_sweep

__all__ = ["ExperimentConfig", "ModelSpec", "REGISTRY", "derive_seed", "emit_report", "is_available",
           "load_config", "load_dataset", "parse_config", "parse_model", "run_sweep"]
