"""Diagnostics: energies, identity residuals, monitors, rigidity and difference energies."""
