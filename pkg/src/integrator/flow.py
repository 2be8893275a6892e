"""Particle flow h(α, t) along the transport velocity b.

Between stored snapshots the coupled system

    ∂_t g = (full right-hand side),   dh/dt = b(h, t),   dφ/dt = Im(D Z_t)(h, t)

is re-integrated with classical RK4, with b and the phase integrand evaluated
off-grid by exact trigonometric interpolation. φ is the rotation picked up by
the unit tangent along each characteristic.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from ..models.interface_state import GFormState
from ..models.solver_config import Scheme
from ..models.trajectory import Trajectory
from ..muskat.model import compute_b, compute_c, g_to_z, to_g_state
from ..spectral.field import SpectralField
from ..spectral.grid import TWO_PI
from ..spectral.interpolation import evaluate_at
from ..spectral.operators import derivative
from .stepper import ExplicitRK4, RateFunction

logger = logging.getLogger(__name__)


class FlowMonotonicityError(Exception):
    """Raised when characteristics cross, i.e. h(·, t) stops being a homeomorphism."""


@dataclass(frozen=True)
class FlowMap:
    """Characteristic positions and accumulated phases at the snapshot times.

    `positions[i, j]` is h(seeds[j], times[i]) on the lifted line (not reduced
    modulo 2π).
    """

    times: NDArray[np.float64]
    seeds: NDArray[np.float64]
    positions: NDArray[np.float64]
    phase_integrals: NDArray[np.float64]
    substeps: int

    def at(self, index: int) -> NDArray[np.float64]:
        return self.positions[index]

    def displacement(self, index: int) -> NDArray[np.float64]:
        return self.positions[index] - self.seeds


def phase_integrand(g: GFormState) -> SpectralField:
    """Im(D Z_t) = Re(w conj(∂w)) for w = 1/Z_{,α'}."""
    w = g_to_z(g).inv_zap
    return (w * derivative(w).conj()).real()


def _coupled_rate(g: SpectralField, h: NDArray, rate: RateFunction) -> Tuple[SpectralField, NDArray, NDArray]:
    state = GFormState(g)
    b = compute_b(compute_c(state))
    return (
        rate((g,))[0],
        evaluate_at(b, h),
        evaluate_at(phase_integrand(state), h),
    )


def _rk4(g: SpectralField, h: NDArray, phase: NDArray, dt: float, rate: RateFunction):
    k1 = _coupled_rate(g, h, rate)
    k2 = _coupled_rate(g + 0.5 * dt * k1[0], h + 0.5 * dt * k1[1], rate)
    k3 = _coupled_rate(g + 0.5 * dt * k2[0], h + 0.5 * dt * k2[1], rate)
    k4 = _coupled_rate(g + dt * k3[0], h + dt * k3[1], rate)
    g_new = g + (dt / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    h_new = h + (dt / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    phase_new = phase + (dt / 6.0) * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
    return g_new, h_new, phase_new


def check_monotone(positions: NDArray, time: float) -> None:
    """Strict increase in the seed order, including across the period.

    Raises:
        FlowMonotonicityError: If two characteristics touch or cross
    """
    gaps = np.diff(positions)
    wrap = positions[0] + TWO_PI - positions[-1]
    if np.any(gaps <= 0.0) or (positions.size > 1 and wrap <= 0.0):
        raise FlowMonotonicityError(f"Characteristics cross at t={time:.6g}; h is no longer a homeomorphism")


def particle_flow(
    traj: Trajectory,
    seeds: Sequence[float],
    refine: int = 1,
    dt: Optional[float] = None,
) -> FlowMap:
    """Integrate h(α, t) for the given seeds over the snapshot times of `traj`.

    Args:
        traj: Trajectory of either formulation
        seeds: Strictly increasing starting points within one period
        refine: Extra factor on the number of RK4 substeps per snapshot interval
        dt: Substep size (defaults to the run's dt, else the explicit CFL step)

    Returns:
        FlowMap with one row per snapshot

    Raises:
        FlowMonotonicityError: If characteristics cross
    """
    seeds = np.asarray(seeds, dtype=np.float64)
    if seeds.ndim != 1 or seeds.size == 0:
        raise ValueError("particle_flow needs a non-empty 1-d array of seeds")
    if seeds.size > 1 and (np.any(np.diff(seeds) <= 0.0) or seeds[-1] - seeds[0] >= TWO_PI):
        raise ValueError("seeds must be strictly increasing within one period")
    if refine < 1:
        raise ValueError(f"refine must be >= 1, got {refine}")

    config = traj.config
    explicit = ExplicitRK4(config.with_updates(scheme=Scheme.RK4))
    rate = explicit.g_rate(0.0)
    times = traj.times
    positions = np.empty((len(times), seeds.size))
    phases = np.zeros((len(times), seeds.size))
    positions[0] = seeds
    h = seeds.copy()
    phase = np.zeros(seeds.size)
    total_substeps = 0

    for i in range(1, len(times)):
        g = to_g_state(traj.snapshots[i - 1]).g
        interval = times[i] - times[i - 1]
        step = dt or config.dt or explicit.stable_dt(GFormState(g))
        substeps = max(1, math.ceil(interval / step - 1e-9)) * refine
        h_dt = interval / substeps
        for _ in range(substeps):
            g, h, phase = _rk4(g, h, phase, h_dt, rate)
        total_substeps += substeps
        check_monotone(h, times[i])
        positions[i] = h
        phases[i] = phase

    logger.debug(f"Particle flow for {seeds.size} seeds over {len(times)} snapshots ({total_substeps} substeps)")
    return FlowMap(times=times, seeds=seeds, positions=positions, phase_integrals=phases, substeps=total_substeps)
