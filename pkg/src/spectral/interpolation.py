"""Exact trigonometric interpolation of spectral fields at off-grid points."""

from typing import Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.fft import ifft

from .field import SpectralField

_CHUNK = 2048


def _symmetric_modes(field: SpectralField) -> Tuple[NDArray[np.float64], NDArray[np.complex128]]:
    """Wavenumbers and coefficients with the Nyquist mode split evenly over ±n/2."""
    grid = field.grid
    k = grid.wavenumbers.copy()
    coeffs = field.coeffs.copy()
    nyquist = grid.nyquist_index
    half = 0.5 * coeffs[nyquist]
    coeffs[nyquist] = half
    return np.append(k, -k[nyquist]), np.append(coeffs, half)


def evaluate_at(field: SpectralField, points: ArrayLike, order: int = 0) -> NDArray:
    """Evaluate the trigonometric interpolant (or its `order`-th derivative) at `points`.

    Args:
        field: Field to interpolate
        points: Arbitrary real abscissae; periodicity is implied
        order: Number of derivatives to take before evaluating

    Returns:
        Array of values with the shape of `points` (real for real fields)
    """
    x = np.asarray(points, dtype=np.float64)
    flat = x.ravel()
    k, coeffs = _symmetric_modes(field)
    if order:
        coeffs = coeffs * (1j * k) ** order
    out = np.empty(flat.shape, dtype=np.complex128)
    for start in range(0, flat.size, _CHUNK):
        block = flat[start:start + _CHUNK]
        out[start:start + _CHUNK] = np.exp(1j * np.outer(block, k)) @ coeffs
    if field.is_real:
        return out.real.reshape(x.shape)
    return out.reshape(x.shape)


def evaluate_derivative_at(field: SpectralField, points: ArrayLike) -> NDArray:
    return evaluate_at(field, points, order=1)


def sample_shifted(field: SpectralField, n_samples: int, shift: float = 0.0) -> NDArray:
    """Values at the nodes 2πj/n_samples + shift, computed with one inverse FFT.

    Requires n_samples >= field.grid.n_points.
    """
    n = field.grid.n_points
    if n_samples < n:
        raise ValueError(f"Cannot sample {field.grid} on {n_samples} < {n} points")
    k, coeffs = _symmetric_modes(field)
    spread = np.zeros(n_samples, dtype=np.complex128)
    np.add.at(spread, k.astype(np.int64) % n_samples, coeffs * np.exp(1j * k * shift))
    samples = ifft(spread) * n_samples
    return samples.real if field.is_real else samples


def field_extrema(field: SpectralField, oversampling: int = 8, polish_steps: int = 4) -> Tuple[float, float]:
    """Minimum and maximum of a real field over the whole circle.

    The interpolant is oversampled, and the best samples are polished with a
    few Newton iterations on the derivative.
    """
    if not field.is_real:
        raise ValueError("Extrema are only defined for real fields")
    n_fine = oversampling * field.grid.n_points
    fine = sample_shifted(field, n_fine)
    spacing = 2.0 * np.pi / n_fine
    results = []
    for index, sign in ((int(np.argmin(fine)), 1.0), (int(np.argmax(fine)), -1.0)):
        x = index * spacing
        best = fine[index]
        for _ in range(polish_steps):
            slope = float(evaluate_at(field, x, order=1))
            curvature = float(evaluate_at(field, x, order=2))
            if sign * curvature <= 0.0:
                break
            step = -slope / curvature
            if abs(step) > spacing:
                break
            x += step
        value = float(evaluate_at(field, x))
        results.append(min(value, best) if sign > 0 else max(value, best))
    return results[0], results[1]
