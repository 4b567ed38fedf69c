"""Simulator, compiler and verifier for globally driven dual-species Rydberg Q-Pair processors."""

__version__ = "0.1.0"
