"""Quantum-speed-limit times of multilevel avoided-crossing systems via Krotov optimal control."""

__version__ = "0.1.0"
