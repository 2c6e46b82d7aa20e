"""Measurement-based quantum computing workbench."""

__version__ = "0.1.0"
