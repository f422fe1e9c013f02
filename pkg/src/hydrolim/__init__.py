"""Attractive particle systems on Z and entropy solutions of their hydrodynamic equations."""

__version__ = "0.1.0"
