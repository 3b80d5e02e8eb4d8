"""Hybrid dynamical systems: simulation, finite-horizon optimal control and
regularity diagnostics for the optimal cost."""

__version__ = "0.1.0"
