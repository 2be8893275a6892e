"""muskat-spectral - Pseudo-spectral simulation and diagnostics for the one-phase Muskat problem."""

__version__ = "0.1.0"
__author__ = "muskat-spectral developers"
__description__ = "Pseudo-spectral simulator and diagnostics for the one-phase Muskat problem"
