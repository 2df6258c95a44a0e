"""Parameterized argumentation benchmarks for generative language models."""

__version__ = "0.1.0"
