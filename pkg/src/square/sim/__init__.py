"""Simulation lab: synthetic designs, idealized risk, illustrative example and Monte Carlo runner."""
