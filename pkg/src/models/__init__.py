"""Immutable data models: interface states, solver configuration, trajectories and plans."""
