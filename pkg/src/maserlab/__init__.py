"""Spin-driven phonon maser in a levitated oscillator: rates, dynamics, diagnostics."""

__version__ = "0.1.0"
