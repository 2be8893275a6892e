"""Conservation-identity residuals and maximum-principle monitoring along a trajectory."""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence

import numpy as np

from ..models.interface_state import GFormState
from ..models.trajectory import State, Trajectory
from ..muskat.model import compute_B1, to_g_state, to_z_state
from ..spectral.interpolation import field_extrema
from ..spectral.operators import norm_hhalf

logger = logging.getLogger(__name__)

MACHINE_EPSILON = float(np.finfo(np.float64).eps)
SLACK_FACTOR = 10.0


class ViolationType(Enum):
    """Which monotone quantity moved the wrong way."""

    G_MIN_DECREASED = "g_min_decreased"
    G_MAX_INCREASED = "g_max_increased"
    F_MAX_INCREASED = "f_max_increased"


@dataclass(frozen=True)
class Violation:
    """One slack-exceeding change between consecutive snapshots."""

    type: ViolationType
    time: float
    magnitude: float
    slack: float

    def __str__(self) -> str:
        return f"{self.type.value} at t={self.time:.6g}: {self.magnitude:.3e} (slack {self.slack:.3e})"


def _weighted_mass(state: State) -> float:
    """∫ |Z_{,α'}|² g² dα'."""
    z = to_z_state(state)
    g = to_g_state(state).g.values
    return float(z.grid.node_spacing * np.sum(np.abs(z.zap.values) ** 2 * g**2))


def _identity_terms(state: State):
    z = to_z_state(state)
    g_state = to_g_state(state)
    g = g_state.g.values
    weight = np.abs(z.zap.values) ** 2 * g**2
    b1_term = float(z.grid.node_spacing * np.sum(weight * compute_B1(z).values))
    hhalf_term = 2.0 * norm_hhalf(g_state.g) ** 2
    return b1_term, hhalf_term


def _lagrange_derivative(times: np.ndarray, values: np.ndarray, at: float) -> float:
    """Derivative at `at` of the quadratic through three (time, value) points."""
    t0, t1, t2 = times
    q0, q1, q2 = values
    return float(
        q0 * (2 * at - t1 - t2) / ((t0 - t1) * (t0 - t2))
        + q1 * (2 * at - t0 - t2) / ((t1 - t0) * (t1 - t2))
        + q2 * (2 * at - t0 - t1) / ((t2 - t0) * (t2 - t1))
    )


def _residual(times: np.ndarray, masses: np.ndarray, state: State) -> float:
    rate = _lagrange_derivative(times, masses, state.time)
    b1_term, hhalf_term = _identity_terms(state)
    return (rate + b1_term + hhalf_term) / max(1.0, hhalf_term)


def conservation_residual(window: Sequence[State]) -> float:
    """Normalized residual of d/dt∫|Z_a|²g² + ∫|Z_a|²g²B₁ + 2‖g‖²_{Ḣ½} = 0 at the middle snapshot.

    The identity holds for the unmollified system only.
    """
    if len(window) != 3:
        raise ValueError(f"Conservation residual needs 3 snapshots, got {len(window)}")
    times = np.array([s.time for s in window])
    masses = np.array([_weighted_mass(s) for s in window])
    return _residual(times, masses, window[1])


def conservation_series(traj: Trajectory) -> np.ndarray:
    """Residual at every snapshot, one-sided at the ends; NaN when fewer than 3 snapshots.

    Records attached to the trajectory get their `cons_residual` filled in.
    """
    count = len(traj.snapshots)
    if count < 3:
        residuals = np.full(count, np.nan)
    else:
        if not traj.config.is_unmollified:
            logger.info("Conservation identity evaluated on a mollified run; residuals are not expected to vanish")
        times = traj.times
        masses = np.array([_weighted_mass(s) for s in traj.snapshots])
        residuals = np.empty(count)
        for i, state in enumerate(traj.snapshots):
            lo = min(max(i - 1, 0), count - 3)
            window = slice(lo, lo + 3)
            residuals[i] = _residual(times[window], masses[window], state)
    for record, value in zip(traj.records, residuals):
        record.cons_residual = float(value)
    return residuals


def _slack(dt: float, steps: int, scale: float, order: int) -> float:
    per_step = MACHINE_EPSILON * (1.0 + scale) + dt ** (order + 1)
    return SLACK_FACTOR * max(steps, 1) * per_step


def max_principle_monitor(traj: Trajectory) -> List[Violation]:
    """Slack-tolerant check that min g rises, while max g and max f fall."""
    if not traj.config.is_unmollified:
        logger.info("Maximum principles are stated for the unmollified system")
    violations: List[Violation] = []
    previous = None
    for state, step in zip(traj.snapshots, traj.steps):
        g_state: GFormState = to_g_state(state)
        g_min, g_max = field_extrema(g_state.g)
        _, f_max = field_extrema(g_state.f)
        current = (state.time, step, g_min, g_max, f_max)
        if previous is not None:
            t0, step0, g_min0, g_max0, f_max0 = previous
            steps = step - step0
            dt = (state.time - t0) / max(steps, 1)
            checks = (
                (ViolationType.G_MIN_DECREASED, g_min0 - g_min, abs(g_min0)),
                (ViolationType.G_MAX_INCREASED, g_max - g_max0, abs(g_max0)),
                (ViolationType.F_MAX_INCREASED, f_max - f_max0, abs(f_max0)),
            )
            for kind, change, scale in checks:
                slack = _slack(dt, steps, scale, traj.config.order)
                if change > slack:
                    violation = Violation(kind, state.time, change, slack)
                    logger.warning(f"Maximum principle violated: {violation}")
                    violations.append(violation)
        previous = current
    return violations
