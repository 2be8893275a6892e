"""Energy functionals of the interface.

With w = 1/Z_{,α'} and D = w∂:

    instantaneous   ‖∂w‖² + ‖D²w‖²          (also the boundary energy)
    dissipation     2‖w D²w‖²_{Ḣ½}          (integrated in time by the caller)
"""

import logging
from typing import Dict, Iterable, List, NamedTuple, Sequence, Tuple

import numpy as np

from ..models.diagnostics_record import DiagnosticsRecord
from ..models.interface_state import ZFormState
from ..muskat.model import MIN_ABS_ZAP, SingularStateError
from ..spectral.field import SpectralField
from ..spectral.operators import derivative, norm_hhalf, norm_hs, norm_l2, poisson_extend

logger = logging.getLogger(__name__)

DEFAULT_DEPTHS: Tuple[float, ...] = tuple(-(2.0 ** -j) for j in range(1, 7))
MONOTONE_TOLERANCE = 1e-6


class EnergyM(NamedTuple):
    instantaneous: float
    dissipation_integrand: float


def _second_conformal_derivative(w: SpectralField) -> SpectralField:
    return w * derivative(w * derivative(w))


def _energy_terms(w: SpectralField) -> Tuple[float, SpectralField]:
    second = _second_conformal_derivative(w)
    return norm_l2(derivative(w)) ** 2 + norm_l2(second) ** 2, second


def _boundary_energy(w: SpectralField) -> float:
    return _energy_terms(w)[0]


def _require_regular(z: ZFormState) -> None:
    if not z.min_abs_zap() >= MIN_ABS_ZAP:
        raise SingularStateError(f"Energy undefined: min|Z_a| = {z.min_abs_zap():.3e}")


def energy_M(z: ZFormState) -> EnergyM:
    """Instantaneous part and dissipation integrand of the a priori energy.

    Raises:
        SingularStateError: If |Z_{,α'}| < 1e-8 somewhere
    """
    _require_regular(z)
    w = z.inv_zap
    instantaneous, second = _energy_terms(w)
    dissipation = 2.0 * norm_hhalf(w * second) ** 2
    return EnergyM(instantaneous, dissipation)


def energy_M1(z: ZFormState) -> float:
    """Boundary form ‖∂w‖² + ‖D²w‖²."""
    _require_regular(z)
    return _boundary_energy(z.inv_zap)


def interior_energy_profile(
    z: ZFormState, depths: Sequence[float] = DEFAULT_DEPTHS
) -> List[Tuple[float, float]]:
    """Boundary energy of the holomorphic extension of w on lines below the interface.

    Returns:
        (depth, energy) pairs ordered from the deepest line to the shallowest
    """
    _require_regular(z)
    profile = []
    for depth in sorted(depths):
        profile.append((float(depth), _boundary_energy(poisson_extend(z.inv_zap, depth))))
    return profile


def interior_supremum_check(
    z: ZFormState, depths: Sequence[float] = DEFAULT_DEPTHS
) -> Dict[str, float]:
    """Compare interior suprema with the boundary energy.

    The energy on lines Im z' = depth should grow monotonically as depth → 0⁻
    and stay below the boundary value.
    """
    profile = interior_energy_profile(z, depths)
    boundary = energy_M1(z)
    values = np.array([energy for _, energy in profile])
    scale = 1.0 + boundary
    drops = np.diff(values)
    monotone = bool(np.all(drops >= -MONOTONE_TOLERANCE * scale))
    supremum = float(np.max(values))
    if not monotone or supremum > boundary + MONOTONE_TOLERANCE * scale:
        logger.warning(
            f"Interior energy not monotone towards the boundary: sup {supremum:.6e}, boundary {boundary:.6e}"
        )
    return {
        "interior_supremum": supremum,
        "boundary": boundary,
        "excess": supremum - boundary,
        "monotone": float(monotone),
    }


def sobolev_energies(g: SpectralField, orders: Iterable[int]) -> Dict[int, float]:
    """H^n norms of g."""
    return {int(n): norm_hs(g, float(n)) for n in orders}


def energy_growth_ratio(records: Sequence[DiagnosticsRecord]) -> np.ndarray:
    """(dM₁/dt)₊ / (M₁ + M₁³) between consecutive records; 0 where M₁ vanishes."""
    if len(records) < 2:
        return np.zeros(0)
    times = np.array([r.time for r in records])
    m1 = np.array([r.M1 for r in records])
    rates = np.maximum(np.diff(m1) / np.diff(times), 0.0)
    base = m1[:-1] + m1[:-1] ** 3
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(base > 0.0, rates / base, 0.0)
    return ratio
