"""Evaluation toolkit for multi-target de novo molecular design benchmarks."""

__version__ = "0.1.0"
