"""Fourier-multiplier operators and norms on the periodic grid.

Symbol conventions (k in FFT ordering):

    hilbert         -sgn(k), sgn(0) = 0
    derivative      ik
    abs_derivative  |k|^s
    mollify         φ̂_δ(k)
    poisson_extend  exp(-|k| |depth|)

Odd symbols, and |k|^s for s > 0, annihilate the Nyquist mode k = -n/2 so that
|∂| = iℍ∂ holds exactly and real inputs give exactly real/imaginary outputs.
"""

import logging
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray

from .field import SpectralField, dealiased_product
from .grid import Grid
from .mollifier import MollifierSpec

logger = logging.getLogger(__name__)

__all__ = [
    "abs_derivative",
    "antiderivative",
    "apply_multiplier",
    "derivative",
    "hilbert",
    "holomorphic_projection",
    "laplacian",
    "mollify",
    "norm_hhalf",
    "norm_hs",
    "norm_l2",
    "poisson_extend",
    "product",
]

product = dealiased_product


@lru_cache(maxsize=32)
def _odd_mask(grid: Grid) -> NDArray[np.float64]:
    mask = np.ones(grid.n_points)
    mask[grid.nyquist_index] = 0.0
    mask.setflags(write=False)
    return mask


def apply_multiplier(f: SpectralField, symbol: NDArray, real_to_real: bool) -> SpectralField:
    """Multiply the coefficients of `f` by `symbol`.

    `real_to_real` states whether the symbol maps real fields to real fields
    (even real symbols and odd imaginary symbols do).
    """
    return SpectralField(f.grid, f.coeffs * symbol, is_real=f.is_real and real_to_real)


def hilbert(f: SpectralField) -> SpectralField:
    """ℍf with symbol -sgn(k); real input gives purely imaginary output."""
    k = f.grid.wavenumbers
    return apply_multiplier(f, -np.sign(k) * _odd_mask(f.grid), real_to_real=False)


def derivative(f: SpectralField) -> SpectralField:
    k = f.grid.wavenumbers
    return apply_multiplier(f, 1j * k * _odd_mask(f.grid), real_to_real=True)


def antiderivative(f: SpectralField) -> SpectralField:
    """Zero-mean antiderivative; the mean of `f` is dropped."""
    k = f.grid.wavenumbers
    symbol = np.zeros(f.grid.n_points, dtype=np.complex128)
    nonzero = k != 0
    symbol[nonzero] = 1.0 / (1j * k[nonzero])
    symbol *= _odd_mask(f.grid)
    if abs(f.mean) > 1e-12 * (1.0 + f.max_abs()):
        logger.debug(f"antiderivative dropping mean {f.mean:.3e}")
    return apply_multiplier(f, symbol, real_to_real=True)


def abs_derivative(f: SpectralField, s: float = 1.0) -> SpectralField:
    """|∂|^s f with symbol |k|^s."""
    if s < 0:
        raise ValueError(f"abs_derivative exponent must be >= 0, got {s}")
    symbol = np.abs(f.grid.wavenumbers) ** s
    if s > 0:
        symbol = symbol * _odd_mask(f.grid)
    return apply_multiplier(f, symbol, real_to_real=True)


def laplacian(f: SpectralField) -> SpectralField:
    k = f.grid.wavenumbers
    return apply_multiplier(f, -(k**2), real_to_real=True)


def mollify(f: SpectralField, spec: MollifierSpec) -> SpectralField:
    """J_δ f; the identity for δ = 0."""
    if spec.is_identity:
        return f
    return apply_multiplier(f, spec.symbol(f.grid.wavenumbers), real_to_real=True)


def poisson_extend(f: SpectralField, depth: float) -> SpectralField:
    """Harmonic extension of `f` evaluated on the line Im z' = depth < 0."""
    if not depth < 0.0:
        raise ValueError(f"Poisson extension needs depth < 0, got {depth}")
    symbol = np.exp(-np.abs(f.grid.wavenumbers) * abs(depth))
    return apply_multiplier(f, symbol, real_to_real=True)


def holomorphic_projection(f: SpectralField) -> SpectralField:
    """Keep the modes k <= 0 (boundary values holomorphic in the lower half plane)."""
    k = f.grid.wavenumbers
    keep = (k <= 0).astype(np.float64) * _odd_mask(f.grid)
    return apply_multiplier(f, keep, real_to_real=False)


def norm_l2(f: SpectralField) -> float:
    """sqrt(2π Σ|f̂|²)."""
    return float(np.sqrt(2.0 * np.pi * np.sum(np.abs(f.coeffs) ** 2)))


def norm_hhalf(f: SpectralField) -> float:
    """Homogeneous Ḣ^{1/2} seminorm sqrt(2π Σ|k||f̂|²); constants have norm 0."""
    k = np.abs(f.grid.wavenumbers)
    return float(np.sqrt(2.0 * np.pi * np.sum(k * np.abs(f.coeffs) ** 2)))


def norm_hs(f: SpectralField, s: float) -> float:
    """Inhomogeneous H^s norm with weight (1 + k²)^s."""
    k = f.grid.wavenumbers
    return float(np.sqrt(2.0 * np.pi * np.sum((1.0 + k**2) ** s * np.abs(f.coeffs) ** 2)))
