"""Spectral field: grid samples paired with their Fourier coefficients."""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np
from numpy.typing import NDArray
from scipy.fft import fft, ifft

from .grid import Grid

logger = logging.getLogger(__name__)

Scalar = Union[int, float, complex, np.number]

REALITY_TOLERANCE = 1e-12


def _mirror(coeffs: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """Coefficients reindexed k -> -k (FFT ordering)."""
    return np.roll(coeffs[::-1], 1)


def _freeze(array: NDArray) -> NDArray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Periodic function on a `Grid`, stored by its Fourier coefficients.

    The convention is f(α') = Σ_k f̂(k) e^{ikα'}, so `coeffs = fft(values) / n`.
    Node values are computed on first access and cached. Fields are immutable;
    every operation returns a new field.
    """

    grid: Grid
    coeffs: NDArray[np.complex128]
    is_real: bool = False

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=np.complex128)
        if coeffs.shape != (self.grid.n_points,):
            raise ValueError(
                f"Coefficient array of shape {coeffs.shape} does not match {self.grid}"
            )
        if self.is_real:
            mirrored = np.conj(_mirror(coeffs))
            scale = 1.0 + float(np.max(np.abs(coeffs)))
            asymmetry = float(np.max(np.abs(coeffs - mirrored)))
            if asymmetry > REALITY_TOLERANCE * scale:
                raise ValueError(
                    f"Field declared real but coefficients are not Hermitian "
                    f"(asymmetry {asymmetry:.3e})"
                )
            coeffs = 0.5 * (coeffs + mirrored)
        object.__setattr__(self, "coeffs", _freeze(coeffs))

    @classmethod
    def from_values(cls, grid: Grid, values: NDArray, real: Union[bool, None] = None) -> "SpectralField":
        """Build a field from node samples.

        Args:
            grid: Grid the samples live on
            values: Samples at the grid nodes
            real: Declare the field real; inferred from the dtype when omitted

        Returns:
            New SpectralField
        """
        values = np.asarray(values)
        if real is None:
            real = not np.iscomplexobj(values)
        if real and np.iscomplexobj(values):
            scale = 1.0 + float(np.max(np.abs(values))) if values.size else 1.0
            leak = float(np.max(np.abs(values.imag))) if values.size else 0.0
            if leak > REALITY_TOLERANCE * scale:
                raise ValueError(f"Values declared real carry imaginary part {leak:.3e}")
            values = values.real
        samples = np.array(values, dtype=np.float64 if real else np.complex128)
        field = cls(grid, fft(samples) / grid.n_points, is_real=bool(real))
        field.__dict__["values"] = _freeze(samples)
        return field

    @classmethod
    def from_coeffs(cls, grid: Grid, coeffs: NDArray, real: bool = False) -> "SpectralField":
        return cls(grid, coeffs, is_real=real)

    @classmethod
    def from_function(
        cls, grid: Grid, func: Callable[[NDArray[np.float64]], NDArray], real: Union[bool, None] = None
    ) -> "SpectralField":
        """Sample `func` at the grid nodes."""
        return cls.from_values(grid, func(grid.nodes), real=real)

    @classmethod
    def constant(cls, grid: Grid, value: Scalar) -> "SpectralField":
        coeffs = np.zeros(grid.n_points, dtype=np.complex128)
        coeffs[0] = value
        return cls(grid, coeffs, is_real=bool(np.isreal(value)))

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        return cls.constant(grid, 0.0)

    @cached_property
    def values(self) -> NDArray:
        samples = ifft(self.coeffs) * self.grid.n_points
        if self.is_real:
            samples = np.ascontiguousarray(samples.real)
        return _freeze(samples)

    @property
    def mean(self) -> complex:
        return complex(self.coeffs[0])

    def real(self) -> "SpectralField":
        return SpectralField.from_values(self.grid, np.real(self.values), real=True)

    def imag(self) -> "SpectralField":
        return SpectralField.from_values(self.grid, np.imag(self.values), real=True)

    def conj(self) -> "SpectralField":
        if self.is_real:
            return self
        return SpectralField(self.grid, np.conj(_mirror(self.coeffs)))

    def to_real(self, tolerance: float = 1e-10) -> "SpectralField":
        """Tag the field as real after checking the imaginary part is roundoff.

        Raises:
            ValueError: If the imaginary part exceeds `tolerance` relative to the field size
        """
        if self.is_real:
            return self
        leak = float(np.max(np.abs(np.imag(self.values))))
        scale = 1.0 + float(np.max(np.abs(self.values)))
        if leak > tolerance * scale:
            raise ValueError(f"Field is not real: imaginary part {leak:.3e}")
        return self.real()

    def map(self, func: Callable[[NDArray], NDArray], real: Union[bool, None] = None) -> "SpectralField":
        """Apply a pointwise function on the node values (no dealiasing)."""
        return SpectralField.from_values(self.grid, func(self.values), real=real)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.coeffs)))

    def _check_grid(self, other: "SpectralField") -> None:
        if other.grid != self.grid:
            raise ValueError(f"Grid mismatch: {self.grid} vs {other.grid}")

    def __add__(self, other: Union["SpectralField", Scalar]) -> "SpectralField":
        if isinstance(other, SpectralField):
            self._check_grid(other)
            return SpectralField(self.grid, self.coeffs + other.coeffs, self.is_real and other.is_real)
        coeffs = self.coeffs.copy()
        coeffs[0] += other
        return SpectralField(self.grid, coeffs, self.is_real and bool(np.isreal(other)))

    __radd__ = __add__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self.coeffs, self.is_real)

    def __sub__(self, other: Union["SpectralField", Scalar]) -> "SpectralField":
        return self + (-other)

    def __rsub__(self, other: Scalar) -> "SpectralField":
        return (-self) + other

    def __mul__(self, other: Union["SpectralField", Scalar]) -> "SpectralField":
        if isinstance(other, SpectralField):
            return dealiased_product(self, other)
        return SpectralField(self.grid, self.coeffs * other, self.is_real and bool(np.isreal(other)))

    __rmul__ = __mul__

    def __truediv__(self, other: Scalar) -> "SpectralField":
        if isinstance(other, SpectralField):
            raise TypeError("Divide fields pointwise with SpectralField.map")
        return self * (1.0 / other)

    def __repr__(self) -> str:
        kind = "real" if self.is_real else "complex"
        return f"SpectralField({self.grid}, {kind}, max|f|={self.max_abs():.3e})"


def _pad(coeffs: NDArray[np.complex128], n: int, m: int) -> NDArray[np.complex128]:
    half = n // 2
    padded = np.zeros(m, dtype=np.complex128)
    padded[:half] = coeffs[:half]
    padded[m - half + 1:] = coeffs[half + 1:]
    return padded


def _truncate(coeffs: NDArray[np.complex128], n: int, m: int) -> NDArray[np.complex128]:
    half = n // 2
    out = np.zeros(n, dtype=np.complex128)
    out[:half] = coeffs[:half]
    out[half + 1:] = coeffs[m - half + 1:]
    return out


def dealiased_product(a: SpectralField, b: SpectralField) -> SpectralField:
    """Pointwise product with 3/2 zero padding (the 2/3 rule).

    Both factors are padded to m = 3n/2 modes, multiplied on the fine grid and
    truncated back; every retained mode |k| < n/2 is alias free. The Nyquist
    mode of the factors and of the result is dropped.
    """
    a._check_grid(b)
    n = a.grid.n_points
    m = 3 * n // 2
    va = ifft(_pad(a.coeffs, n, m)) * m
    vb = ifft(_pad(b.coeffs, n, m)) * m
    both_real = a.is_real and b.is_real
    if both_real:
        va, vb = va.real, vb.real
    product = fft(va * vb) / m
    return SpectralField(a.grid, _truncate(product, n, m), is_real=both_real)
