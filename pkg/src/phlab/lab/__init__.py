"""Experiment harness: configuration, records and checkpoints, experiments, CLI."""
from .config import ConfigError, ScenarioConfig, load_config, parse_config
from .io import RunRecord, read_checkpoint, read_records, write_checkpoint, write_records

__all__ = ["ConfigError", "ScenarioConfig", "load_config", "parse_config", "RunRecord",
           "read_checkpoint", "read_records", "write_checkpoint", "write_records"]
