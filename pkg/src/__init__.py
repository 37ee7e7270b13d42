"""Invariance lab - transformation sweeps against a small CNN and the invariant transformer net."""

__version__ = "0.1.0"
