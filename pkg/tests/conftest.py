"""Pytest configuration and common fixtures for muskat-spectral tests."""

import numpy as np
import pytest

from src.models.interface_state import GFormState
from src.models.solver_config import SolverConfig
from src.muskat.initial_data import random_band_limited, single_mode
from src.muskat.model import g_to_z
from src.spectral.field import SpectralField
from src.spectral.grid import Grid


@pytest.fixture
def grid():
    """Provide a small grid for fast spectral tests."""
    return Grid(64)


@pytest.fixture
def coarse_grid():
    """Provide a coarse grid for integration tests."""
    return Grid(32)


@pytest.fixture
def band_limited_field(grid):
    """Provide a seeded real field on modes 1..5."""
    rng = np.random.default_rng(7)
    coeffs = np.zeros(grid.n_points, dtype=np.complex128)
    k = np.arange(1, 6)
    modes = (rng.standard_normal(5) + 1j * rng.standard_normal(5)) / k**2
    coeffs[k] = modes
    coeffs[-k] = np.conj(modes)
    return SpectralField(grid, coeffs, is_real=True)


@pytest.fixture
def smooth_g_state(coarse_grid):
    """Provide a small single-mode angle profile."""
    return single_mode(coarse_grid, amplitude=0.1, mode=1)


@pytest.fixture
def smooth_z_state(grid):
    """Provide a smooth z-form state built from band-limited g."""
    return g_to_z(random_band_limited(grid, seed=3, amplitude=0.2, k_cut=4))


@pytest.fixture
def flat_state(coarse_grid):
    """Provide the flat interface."""
    return GFormState(SpectralField.zeros(coarse_grid).to_real())


@pytest.fixture
def short_config():
    """Provide a short fixed-step configuration."""
    return SolverConfig(t_end=0.02, dt=1e-3, snapshot_every=5)


@pytest.fixture(autouse=True)
def setup_test_environment(monkeypatch, tmp_path):
    """Set up test environment variables and paths."""
    # Run from a scratch directory so default config and log paths stay isolated
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv('MUSKAT_THREADS', '1')

    (tmp_path / 'runs').mkdir(exist_ok=True)

    yield
