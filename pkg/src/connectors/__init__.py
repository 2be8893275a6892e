"""Persistence: HDF5 snapshot store and CSV diagnostics series."""
