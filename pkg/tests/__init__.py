"""Test modules for muskat-spectral."""
