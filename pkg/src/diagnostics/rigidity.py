"""Corner rigidity diagnostics along characteristics.

For every non-singular characteristic the unit tangent obeys

    ω(h(α,t), t) = ω(α, 0) · exp(i ∫₀ᵗ Im(D Z_t)(h(α,s), s) ds),

so with ω = e^{ig} the angle along a characteristic changes exactly by the
accumulated phase of the flow map. At a tip (1/Z_{,α'} → 0) the velocity
tends to -i and the angle jump across the tip is frozen.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from ..integrator.flow import FlowMap, particle_flow
from ..models.trajectory import Trajectory
from ..muskat.model import darcy_velocity, to_g_state, to_z_state
from ..spectral.field import SpectralField
from ..spectral.grid import TWO_PI
from ..spectral.interpolation import evaluate_at, evaluate_derivative_at, field_extrema

logger = logging.getLogger(__name__)

DEFAULT_OFFSETS: NDArray[np.float64] = np.linspace(-0.5, 0.5, 9)
SINGULAR_SET_FACTOR = 10.0
DEFAULT_HALFWIDTH = 0.1


def angle_jump(g: SpectralField, center: float, halfwidth: float) -> float:
    """g(center - halfwidth) - g(center + halfwidth) by trigonometric interpolation."""
    left, right = evaluate_at(g, np.array([center - halfwidth, center + halfwidth]))
    return float(left - right)


def profile_jump(g: SpectralField) -> float:
    """Total swing max g - min g of the angle profile."""
    low, high = field_extrema(g)
    return high - low


def _periodic_distance(a: float, b: float) -> float:
    d = (a - b) % TWO_PI
    return float(min(d, TWO_PI - d))


@dataclass
class RigidityReport:
    """Time series measured at the snapshots of one trajectory."""

    tip_alpha: float
    halfwidth: float
    times: NDArray[np.float64]
    tip_location: NDArray[np.float64]
    tip_speed: NDArray[np.complex128]
    angle_jump: NDArray[np.float64]
    identity_residual: NDArray[np.float64]
    min_inv_zap: NDArray[np.float64]
    tip_w_dw: NDArray[np.float64]
    singular_set_size: NDArray[np.int64]
    singular_offset: NDArray[np.float64]
    tracked_seeds: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))

    @property
    def tip_speed_error(self) -> NDArray[np.float64]:
        """|Z_t(tip) + i|; the limiting tip velocity is -i."""
        return np.abs(self.tip_speed + 1j)

    @property
    def angle_drift(self) -> NDArray[np.float64]:
        return np.abs(self.angle_jump - self.angle_jump[0])

    @property
    def max_identity_residual(self) -> float:
        return float(np.max(self.identity_residual))

    def summary(self) -> Dict[str, Any]:
        return {
            "tip_alpha": self.tip_alpha,
            "halfwidth": self.halfwidth,
            "t_final": float(self.times[-1]),
            "tip_location_final": float(self.tip_location[-1]),
            "tip_speed_final": [float(self.tip_speed[-1].real), float(self.tip_speed[-1].imag)],
            "tip_speed_error_final": float(self.tip_speed_error[-1]),
            "angle_jump_initial": float(self.angle_jump[0]),
            "angle_jump_final": float(self.angle_jump[-1]),
            "angle_drift_final": float(self.angle_drift[-1]),
            "max_identity_residual": self.max_identity_residual,
            "min_inv_zap_final": float(self.min_inv_zap[-1]),
            "tip_w_dw_final": float(self.tip_w_dw[-1]),
            "singular_offset_final": float(self.singular_offset[-1]),
            "tracked_characteristics": int(self.tracked_seeds.size),
        }


def _tracked_seeds(tip_alpha: float, halfwidth: float, offsets: Sequence[float]) -> NDArray[np.float64]:
    points = np.concatenate([tip_alpha + np.asarray(offsets, dtype=np.float64), tip_alpha + np.array([-halfwidth, 0.0, halfwidth])])
    seeds = np.unique(np.round(points, 14))
    if seeds[-1] - seeds[0] >= TWO_PI:
        raise ValueError("Tracked offsets must span less than one period")
    return seeds


def rigidity_check(
    traj: Trajectory,
    tip_alpha: float = float(np.pi),
    halfwidth: Optional[float] = None,
    offsets: Sequence[float] = DEFAULT_OFFSETS,
    flow: Optional[FlowMap] = None,
) -> RigidityReport:
    """Track the tip characteristic and evaluate the rigidity predictions at every snapshot.

    Args:
        traj: Trajectory started from corner (or any smooth) data
        tip_alpha: Label α₀ of the tip particle
        halfwidth: Offset of the characteristics bracketing the tip for the angle jump
            (defaults to twice the corner width recorded in the trajectory metadata)
        offsets: Offsets from the tip of the characteristics tested against the identity
        flow: Precomputed flow for exactly the tracked seeds

    Returns:
        RigidityReport
    """
    if halfwidth is None:
        corner_eps = traj.metadata.get("corner_eps")
        halfwidth = 2.0 * float(corner_eps) if corner_eps else DEFAULT_HALFWIDTH
    seeds = _tracked_seeds(tip_alpha, halfwidth, offsets)
    if flow is None:
        flow = particle_flow(traj, seeds)
    elif not np.array_equal(flow.seeds, seeds):
        raise ValueError("Precomputed flow does not match the tracked seeds")

    tip = int(np.argmin(np.abs(seeds - tip_alpha)))
    minus = int(np.argmin(np.abs(seeds - (tip_alpha - halfwidth))))
    plus = int(np.argmin(np.abs(seeds - (tip_alpha + halfwidth))))
    g0 = to_g_state(traj.snapshots[0]).g
    g_at_seeds = evaluate_at(g0, seeds)

    count = len(traj.snapshots)
    tip_location = np.empty(count)
    tip_speed = np.empty(count, dtype=np.complex128)
    jump = np.empty(count)
    residual = np.empty(count)
    min_inv_zap = np.empty(count)
    tip_w_dw = np.empty(count)
    singular_size = np.empty(count, dtype=np.int64)
    singular_offset = np.empty(count)

    for i, state in enumerate(traj.snapshots):
        g = to_g_state(state).g
        z = to_z_state(state)
        h = flow.positions[i]
        turned = evaluate_at(g, h) - g_at_seeds - flow.phase_integrals[i]
        residual[i] = float(np.max(np.abs(np.exp(1j * turned) - 1.0)))

        tip_location[i] = h[tip]
        tip_speed[i] = complex(evaluate_at(darcy_velocity(z), h[tip]))
        jump[i] = float(evaluate_at(g, h[minus]) - evaluate_at(g, h[plus]))

        w = z.inv_zap
        abs_w = np.abs(w.values)
        min_inv_zap[i] = float(np.min(abs_w))
        tip_w_dw[i] = float(np.abs(evaluate_at(w, h[tip]) * evaluate_derivative_at(w, h[tip])))
        threshold = SINGULAR_SET_FACTOR * min_inv_zap[i]
        singular_size[i] = int(np.count_nonzero(abs_w < threshold))
        deepest = float(z.grid.nodes[int(np.argmin(abs_w))])
        singular_offset[i] = _periodic_distance(deepest, h[tip])

    report = RigidityReport(
        tip_alpha=tip_alpha,
        halfwidth=halfwidth,
        times=traj.times,
        tip_location=tip_location,
        tip_speed=tip_speed,
        angle_jump=jump,
        identity_residual=residual,
        min_inv_zap=min_inv_zap,
        tip_w_dw=tip_w_dw,
        singular_set_size=singular_size,
        singular_offset=singular_offset,
        tracked_seeds=seeds,
    )
    logger.info(
        f"Rigidity: tip speed error {report.tip_speed_error[-1]:.3e}, angle drift "
        f"{report.angle_drift[-1]:.3e}, identity residual {report.max_identity_residual:.3e}"
    )
    return report


def summarize_family(reports: List[RigidityReport], labels: Sequence[float]) -> Dict[str, Any]:
    """Final tip-speed errors and angle drifts across a corner family, with monotonicity flags.

    `labels` are the corner widths, listed in the same order as `reports`.
    """
    order = np.argsort(labels)[::-1]
    eps = [float(labels[i]) for i in order]
    speed = [float(reports[i].tip_speed_error[-1]) for i in order]
    drift = [float(reports[i].angle_drift[-1]) for i in order]
    return {
        "corner_eps": eps,
        "tip_speed_error": speed,
        "angle_drift": drift,
        "tip_speed_monotone": bool(np.all(np.diff(speed) < 0.0)),
        "angle_drift_monotone": bool(np.all(np.diff(drift) < 0.0)),
        "tip_speed_ratio": speed[0] / speed[-1] if speed[-1] > 0.0 else float("inf"),
    }
