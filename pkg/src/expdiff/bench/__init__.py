"""Synthetic benchmark: data generation, metrics, reports and the stage runner."""

from .config import RunConfig, load_config, parse_config, schema_json
from .data import gen_synthetic, read_samples, read_truth, write_samples, write_truth
from .metrics import MetricsReport, compute_metrics, coverage, wasserstein1
from .report import render_svg
from .run import run_benchmark

__all__ = [
    "MetricsReport",
    "RunConfig",
    "compute_metrics",
    "coverage",
    "gen_synthetic",
    "load_config",
    "parse_config",
    "read_samples",
    "read_truth",
    "render_svg",
    "run_benchmark",
    "schema_json",
    "wasserstein1",
    "write_samples",
    "write_truth",
]
