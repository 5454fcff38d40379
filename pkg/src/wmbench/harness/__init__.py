"""Benchmark harness: codec x attack grids and protection-ratio studies."""
from .config import ConfigError, ExperimentConfig, load_config, marked_count, parse_config
from .report import ReportError, emit_report, to_csv, to_markdown
from .runner import (
    Dataset,
    DatasetError,
    ExperimentReport,
    ingest_dataset,
    mixing_selection,
    run_mixing_experiment,
    run_robustness_grid,
)
