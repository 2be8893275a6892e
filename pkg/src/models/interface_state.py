"""Interface states for the two equivalent formulations and their coefficients."""

from dataclasses import dataclass
from enum import Enum
from typing import Dict

import numpy as np

from ..spectral.field import SpectralField
from ..spectral.grid import Grid
from ..spectral.operators import derivative, hilbert, norm_l2


class Formulation(Enum):
    """State variable being evolved."""

    G = "g"
    Z = "z"


def _check_time(time: float) -> None:
    if not np.isfinite(time) or time < 0.0:
        raise ValueError(f"State time must be finite and >= 0, got {time}")


@dataclass(frozen=True)
class GFormState:
    """Tangent-angle variable g = Im log Z_{,α'} at one time."""

    g: SpectralField
    time: float = 0.0

    def __post_init__(self):
        _check_time(self.time)
        if not self.g.is_real:
            try:
                object.__setattr__(self, "g", self.g.to_real(tolerance=1e-12))
            except ValueError as e:
                raise ValueError(f"g must be real-valued: {e}") from e

    formulation = Formulation.G

    @property
    def grid(self) -> Grid:
        return self.g.grid

    @property
    def f(self) -> SpectralField:
        """f = iℍg = log|Z_{,α'}|."""
        return (1j * hilbert(self.g)).to_real()

    def is_finite(self) -> bool:
        return self.g.is_finite()

    def max_amplitude(self) -> float:
        return self.g.max_abs()

    def __str__(self) -> str:
        return f"GFormState(t={self.time:.6g}, {self.grid}, max|g|={self.max_amplitude():.3e})"


@dataclass(frozen=True)
class ZFormState:
    """Boundary trace of the conformal map: 1/Z_{,α'}, Z_{,α'} and Z - α'."""

    inv_zap: SpectralField
    zap: SpectralField
    z_minus_id: SpectralField
    time: float = 0.0

    def __post_init__(self):
        _check_time(self.time)
        grids = {self.inv_zap.grid, self.zap.grid, self.z_minus_id.grid}
        if len(grids) != 1:
            raise ValueError("ZFormState fields must share one grid")

    formulation = Formulation.Z

    @classmethod
    def from_inv_zap(
        cls, inv_zap: SpectralField, z_minus_id: SpectralField, time: float = 0.0
    ) -> "ZFormState":
        """Build a state with Z_{,α'} refreshed as the pointwise reciprocal."""
        return cls(inv_zap, inv_zap.map(np.reciprocal, real=False), z_minus_id, time)

    @property
    def grid(self) -> Grid:
        return self.inv_zap.grid

    @property
    def abs_zap(self) -> SpectralField:
        return self.zap.map(np.abs, real=True)

    @property
    def omega(self) -> SpectralField:
        """Unit tangent ω = Z_{,α'}/|Z_{,α'}|."""
        return self.zap.map(lambda v: v / np.abs(v), real=False)

    def is_finite(self) -> bool:
        return self.inv_zap.is_finite() and self.zap.is_finite() and self.z_minus_id.is_finite()

    def max_amplitude(self) -> float:
        return (self.inv_zap - 1.0).max_abs()

    def min_abs_zap(self) -> float:
        return float(np.min(np.abs(self.zap.values)))

    def consistency_report(self) -> Dict[str, float]:
        """Residuals of the reciprocal, derivative and holomorphy relations."""
        reciprocal = float(np.max(np.abs(self.inv_zap.values * self.zap.values - 1.0)))
        slope = derivative(self.z_minus_id) - (self.zap - 1.0)
        shifted = self.zap - 1.0
        positive = self.grid.wavenumbers > 0
        total_mass = float(np.sum(np.abs(shifted.coeffs) ** 2))
        positive_mass = float(np.sum(np.abs(shifted.coeffs[positive]) ** 2))
        return {
            "reciprocal": reciprocal,
            "derivative": norm_l2(slope),
            "positive_mass_fraction": positive_mass / total_mass if total_mass > 0.0 else 0.0,
        }

    def __str__(self) -> str:
        return f"ZFormState(t={self.time:.6g}, {self.grid}, min|Z_a|={self.min_abs_zap():.3e})"


@dataclass(frozen=True)
class CoefficientSet:
    """Coefficients c, b, B₁ and 𝒜 = c² derived from one state."""

    c: SpectralField
    b: SpectralField
    B1: SpectralField
    script_A: SpectralField

    def __post_init__(self):
        for name in ("c", "b", "B1", "script_A"):
            if not getattr(self, name).is_real:
                raise ValueError(f"Coefficient {name} must be real")
        if float(np.min(self.c.values)) <= 0.0:
            raise ValueError("Coefficient c must be positive everywhere")

    @property
    def B1_tolerance(self) -> float:
        return 1e-8 * (1.0 + self.B1.max_abs())

    def B1_sign_ok(self) -> bool:
        return float(np.min(self.B1.values)) >= -self.B1_tolerance

    def invariant_residuals(self) -> Dict[str, float]:
        c_squared = self.c.values**2
        return {
            "script_A_vs_c2": float(np.max(np.abs(self.script_A.values - c_squared))),
            "B1_min": float(np.min(self.B1.values)),
            "b_mean": abs(self.b.mean),
        }
