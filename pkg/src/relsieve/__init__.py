"""Relation classification with strict rules and a semantic back-off matcher."""

__version__ = "0.1.0"
