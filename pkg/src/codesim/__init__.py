"""Synthetic code-simulation benchmarks and an evaluation harness for LLMs."""
from __future__ import annotations

__version__ = "0.1.0"
