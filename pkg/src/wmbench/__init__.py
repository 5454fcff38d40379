"""Watermark robustness toolkit: codecs, degrade-then-restore attacks,
spectral diagnostics and a benchmark harness."""

__version__ = "0.1.0"
