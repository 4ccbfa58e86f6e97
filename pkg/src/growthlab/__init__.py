"""Executable word-growth experiments for finitely generated groups."""

__version__ = "0.1.0"
