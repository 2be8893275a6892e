"""Mollifier profiles for the smoothing operator J_δ."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict

import numpy as np
from numpy.typing import NDArray


class MollifierProfile(Enum):
    """Even bump profiles with unit mass."""

    GAUSSIAN = "gaussian"
    RAISED_COSINE = "raised_cosine"


def _raised_cosine_symbol(xi: NDArray[np.float64]) -> NDArray[np.float64]:
    # Fourier transform of (1 + cos πx)/2 on [-1, 1]: π² sin ξ / (ξ (π² - ξ²))
    xi = np.abs(xi)
    near_pole = np.isclose(xi, np.pi, rtol=0.0, atol=1e-9)
    with np.errstate(divide="ignore", invalid="ignore"):
        symbol = np.sinc(xi / np.pi) * np.pi**2 / (np.pi**2 - xi**2)
    return np.where(near_pole, 0.5, symbol)


@dataclass(frozen=True)
class MollifierSpec:
    """Mollification scale and profile; delta = 0 is the identity."""

    delta: float = 0.0
    profile: MollifierProfile = field(default=MollifierProfile.GAUSSIAN)

    def __post_init__(self):
        if not np.isfinite(self.delta) or self.delta < 0.0:
            raise ValueError(f"Mollifier delta must be >= 0, got {self.delta}")
        if isinstance(self.profile, str):
            object.__setattr__(self, "profile", MollifierProfile(self.profile))

    @property
    def is_identity(self) -> bool:
        return self.delta == 0.0

    def symbol(self, wavenumbers: NDArray[np.float64]) -> NDArray[np.float64]:
        """Real, even multiplier φ̂_δ(k) with φ̂_δ(0) = 1 and |φ̂_δ| <= 1."""
        if self.is_identity:
            return np.ones_like(wavenumbers, dtype=np.float64)
        xi = self.delta * np.asarray(wavenumbers, dtype=np.float64)
        if self.profile is MollifierProfile.GAUSSIAN:
            return np.exp(-0.5 * xi**2)
        return _raised_cosine_symbol(xi)

    def to_dict(self) -> Dict[str, Any]:
        return {"delta": self.delta, "profile": self.profile.value}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MollifierSpec":
        return cls(
            delta=float(data.get("delta", 0.0)),
            profile=MollifierProfile(data.get("profile", MollifierProfile.GAUSSIAN.value)),
        )
