"""Generalized quantum states for field correlators with indefinite causal order."""

__version__ = "0.1.0"
