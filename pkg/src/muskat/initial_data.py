"""Initial-data presets for the angle variable g."""

import logging

import numpy as np

from ..connectors.snapshot_store import read_final_state
from ..models.experiment_plan import InitialDataPreset, InitialDataSpec
from ..models.interface_state import GFormState
from ..spectral.field import SpectralField
from ..spectral.grid import Grid
from ..spectral.interpolation import evaluate_at
from ..spectral.operators import poisson_extend
from .model import make_corner_data, to_g_state

logger = logging.getLogger(__name__)


def flat(grid: Grid) -> GFormState:
    return GFormState(SpectralField.zeros(grid).to_real())


def single_mode(grid: Grid, amplitude: float, mode: int = 1) -> GFormState:
    """g₀ = A cos(kα')."""
    if not 1 <= mode < grid.k_max:
        raise ValueError(f"mode must lie in [1, {grid.k_max}), got {mode}")
    return GFormState(SpectralField.from_function(grid, lambda a: amplitude * np.cos(mode * a), real=True))


def random_band_limited(
    grid: Grid, seed: int, amplitude: float, k_cut: int = 8, decay: float = 2.0
) -> GFormState:
    """Zero-mean real field on modes 1..k_cut with |ĝ(k)| ~ k^-decay, scaled to max|g| = amplitude."""
    if not 1 <= k_cut < grid.k_max:
        raise ValueError(f"k_cut must lie in [1, {grid.k_max}), got {k_cut}")
    rng = np.random.default_rng(seed)
    k = np.arange(1, k_cut + 1)
    modes = (rng.standard_normal(k_cut) + 1j * rng.standard_normal(k_cut)) * k ** (-float(decay))
    coeffs = np.zeros(grid.n_points, dtype=np.complex128)
    coeffs[k] = modes
    coeffs[-k] = np.conj(modes)
    field = SpectralField(grid, coeffs, is_real=True)
    peak = field.max_abs()
    if peak > 0.0:
        field = field * (amplitude / peak)
    return GFormState(field)


def shifted_snapshot(grid: Grid, path, depth: float) -> GFormState:
    """Stored g evaluated below the boundary: g ↦ poisson_extend(g, -depth)."""
    stored = to_g_state(read_final_state(path))
    g = stored.g
    if g.grid != grid:
        logger.info(f"Resampling stored snapshot from {g.grid} onto {grid}")
        g = SpectralField.from_values(grid, evaluate_at(g, grid.nodes), real=True)
    return GFormState(poisson_extend(g, -depth))


def build_initial_state(spec: InitialDataSpec, grid: Grid) -> GFormState:
    """Initial g for a preset specification."""
    logger.debug(f"Building {spec.preset.value} initial data on {grid}")
    if spec.preset is InitialDataPreset.FLAT:
        return flat(grid)
    if spec.preset is InitialDataPreset.SINGLE_MODE:
        return single_mode(grid, spec.amplitude, spec.mode)
    if spec.preset is InitialDataPreset.RANDOM_BAND_LIMITED:
        return random_band_limited(grid, spec.seed, spec.amplitude, spec.k_cut, spec.decay)
    if spec.preset is InitialDataPreset.CORNER:
        return make_corner_data(spec.nu, spec.corner_eps, grid)
    if spec.preset is InitialDataPreset.SHIFTED_SNAPSHOT:
        return shifted_snapshot(grid, spec.snapshot_path, spec.depth)
    raise ValueError(f"Unknown preset {spec.preset}")
