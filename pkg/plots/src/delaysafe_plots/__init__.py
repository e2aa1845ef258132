"""Comparison-panel rendering for delaysafe trajectory CSV logs."""

from .render import TRAJECTORY_COLUMNS, RunArtifact, SchemaError, load_run, render

__all__ = ["TRAJECTORY_COLUMNS", "RunArtifact", "SchemaError", "load_run", "render"]

__version__ = "0.1.0"
