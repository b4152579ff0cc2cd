"""Toolkit for building, mining, and evaluating parallel corpora."""

__version__ = "0.1.0"
