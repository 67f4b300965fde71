"""Numerics for one-way entanglement distillation, degradability and spin alignment."""

__version__ = "0.1.0"
