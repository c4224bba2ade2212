"""Quantum Turing machines, their compilation into quantum circuits, and circuit codes."""

__version__ = "0.1.0"
