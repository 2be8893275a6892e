"""Equispaced periodic grid on [0, 2π)."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray
from scipy.fft import fftfreq

TWO_PI = 2.0 * np.pi


@lru_cache(maxsize=32)
def _wavenumbers(n_points: int) -> NDArray[np.float64]:
    k = np.rint(fftfreq(n_points, 1.0 / n_points))
    k.setflags(write=False)
    return k


@lru_cache(maxsize=32)
def _nodes(n_points: int) -> NDArray[np.float64]:
    nodes = TWO_PI * np.arange(n_points) / n_points
    nodes.setflags(write=False)
    return nodes


@dataclass(frozen=True)
class Grid:
    """Periodic grid with `n_points` nodes α'_j = 2πj/n.

    Wavenumbers are returned in FFT order, i.e. 0, 1, ..., n/2-1, -n/2, ..., -1,
    so they line up with the output of `scipy.fft.fft`.
    """

    n_points: int

    def __post_init__(self):
        if not isinstance(self.n_points, (int, np.integer)) or isinstance(self.n_points, bool):
            raise ValueError(f"n_points must be an integer, got {self.n_points!r}")
        if self.n_points < 8 or self.n_points % 2 != 0:
            raise ValueError(f"n_points must be even and >= 8, got {self.n_points}")

    @property
    def node_spacing(self) -> float:
        return TWO_PI / self.n_points

    @property
    def nodes(self) -> NDArray[np.float64]:
        return _nodes(int(self.n_points))

    @property
    def wavenumbers(self) -> NDArray[np.float64]:
        return _wavenumbers(int(self.n_points))

    @property
    def k_max(self) -> int:
        return self.n_points // 2

    @property
    def nyquist_index(self) -> int:
        """Position of k = -n/2 in FFT ordering."""
        return self.n_points // 2

    def refined(self, factor: int = 2) -> "Grid":
        """Grid with `factor` times as many nodes."""
        if factor < 1:
            raise ValueError(f"Refinement factor must be >= 1, got {factor}")
        return Grid(self.n_points * factor)

    def __str__(self) -> str:
        return f"Grid(n={self.n_points})"
