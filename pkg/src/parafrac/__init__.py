"""Fractal dimensions of stable Levy processes with drift: simulation,
parabolic box counting, closed-form oracles and energy probes."""

__version__ = "0.1.0"
