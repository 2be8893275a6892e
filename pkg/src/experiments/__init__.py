"""Experiment orchestration: sweeps, corner families, difference pairs and convergence fits."""
