"""Coefficients, right-hand sides and formulation transforms for the one-phase Muskat problem.

Notation on the boundary, with w = 1/Z_{,α'}:

    g = Im log Z_{,α'},  f = iℍg = log|Z_{,α'}|,  c = e^{-f} = |w|
    b  = -iℍ(c²)                         transport coefficient
    B₁ = -2 Im([w̄, ℍ]∂w) >= 0            (equivalently a positive kernel integral)
    D  = w ∂                             conformal derivative

The scalar system reads ∂_t g = -b∂g - c²|∂|g. The Eulerian form of the
w-equation is ∂_t w = -b∂w - i c² ∂w + B₁ w.
"""

import logging
from typing import Union

import numpy as np

from ..models.interface_state import CoefficientSet, GFormState, ZFormState
from ..spectral.field import SpectralField
from ..spectral.grid import Grid, TWO_PI
from ..spectral.operators import abs_derivative, antiderivative, derivative, hilbert, norm_l2
from ..spectral.oracle import (
    HEALTH_THRESHOLD,
    DualPathResult,
    KernelEvaluation,
    b1_kernel_quadrature,
    commutator_spectral,
    relative_discrepancy,
)

logger = logging.getLogger(__name__)

State = Union[GFormState, ZFormState]

MIN_ABS_ZAP = 1e-8
CORNER_OUTER_WIDTH = 0.5


class SingularStateError(ValueError):
    """Raised when a state is too close to a singularity for the requested operation."""


def _check_regular(z: ZFormState, threshold: float = MIN_ABS_ZAP) -> None:
    smallest = z.min_abs_zap()
    if not smallest >= threshold:
        raise SingularStateError(f"|Z_a| = {smallest:.3e} falls below {threshold:.0e}")


def compute_c(s: GFormState) -> SpectralField:
    """c = exp(-iℍg), real and positive.

    Raises:
        SingularStateError: If the exponent carries an imaginary part beyond roundoff
    """
    exponent = -1j * hilbert(s.g)
    try:
        exponent = exponent.to_real(tolerance=1e-10)
    except ValueError as e:
        raise SingularStateError(f"Corrupted state, exponent of c is not real: {e}") from e
    return exponent.map(np.exp, real=True)


def squared(c: SpectralField) -> SpectralField:
    """Pointwise c² on the nodes."""
    return c.map(np.square, real=True)


def compute_b(c: SpectralField) -> SpectralField:
    """b = -iℍ(c²); real with zero mean."""
    return (-1j * hilbert(squared(c))).to_real()


def compute_c_from_z(z: ZFormState) -> SpectralField:
    return z.inv_zap.map(np.abs, real=True)


def compute_B1(z: ZFormState, verify: bool = False) -> SpectralField:
    """B₁ in commutator form.

    With `verify`, the positive-kernel quadrature is evaluated as well and a
    disagreement above the health threshold is logged.
    """
    w = z.inv_zap
    value = (-2.0 * commutator_spectral(w.conj(), w)).imag()
    if verify:
        b1_dual_form(z, commutator_form=value)
    return value


def b1_kernel_form(z: ZFormState) -> KernelEvaluation:
    """(1/π) ∫ |w(α') - w(β')|² / (4 sin²((α'-β')/2)) dβ' by quadrature."""
    return b1_kernel_quadrature(z.inv_zap)


def b1_dual_form(z: ZFormState, commutator_form: Union[SpectralField, None] = None) -> DualPathResult:
    """Commutator form of B₁ cross-checked against the kernel form."""
    value = commutator_form if commutator_form is not None else compute_B1(z)
    kernel = b1_kernel_form(z)
    logger.debug(f"B1 kernel quadrature error estimate {kernel.quadrature_error_estimate:.3e}")
    discrepancy = relative_discrepancy(value, kernel.target)
    if discrepancy > HEALTH_THRESHOLD:
        logger.warning(f"B1 commutator and kernel forms disagree: relative discrepancy {discrepancy:.3e}")
    tolerance = 1e-8 * (1.0 + value.max_abs())
    if float(np.min(value.values)) < -tolerance:
        logger.warning(f"B1 negative beyond tolerance: min {float(np.min(value.values)):.3e}")
    return DualPathResult(value=value, relative_discrepancy=discrepancy)


def g_to_z(s: GFormState) -> ZFormState:
    """Z_{,α'} = exp(i(𝕀+ℍ)g), its reciprocal and the zero-mean Z - α'."""
    log_zap = (1j * (s.g + hilbert(s.g))).values
    zap = SpectralField.from_values(s.grid, np.exp(log_zap), real=False)
    inv_zap = SpectralField.from_values(s.grid, np.exp(-log_zap), real=False)
    z_minus_id = antiderivative(zap - 1.0)
    return ZFormState(inv_zap=inv_zap, zap=zap, z_minus_id=z_minus_id, time=s.time)


def z_to_g(z: ZFormState) -> GFormState:
    """g = Im log Z_{,α'} on a continuous branch.

    The phase is unwrapped along the grid starting from the node of largest
    |Z_{,α'}|, and the 2π branch whose mean is closest to zero is kept.

    Raises:
        SingularStateError: If |Z_{,α'}| < 1e-8 somewhere or the phase winds
    """
    _check_regular(z)
    values = z.zap.values
    start = int(np.argmax(np.abs(values)))
    phase = np.angle(np.roll(values, -start))
    unwrapped = np.unwrap(np.append(phase, phase[0]))
    winding = unwrapped[-1] - unwrapped[0]
    if abs(winding) > np.pi:
        raise SingularStateError(f"Phase of Z_a winds by {winding / TWO_PI:.2f} turns")
    g = np.roll(unwrapped[:-1], start)
    g -= TWO_PI * np.round(np.mean(g) / TWO_PI)
    return GFormState(SpectralField.from_values(z.grid, g, real=True), time=z.time)


def to_g_state(state: State) -> GFormState:
    return state if isinstance(state, GFormState) else z_to_g(state)


def to_z_state(state: State) -> ZFormState:
    return state if isinstance(state, ZFormState) else g_to_z(state)


def coefficient_set(state: State) -> CoefficientSet:
    """c, b, B₁ and 𝒜 = c² for either formulation."""
    z = to_z_state(state)
    c = compute_c(state) if isinstance(state, GFormState) else compute_c_from_z(z)
    return CoefficientSet(c=c, b=compute_b(c), B1=compute_B1(z), script_A=squared(c))


def rhs_g(s: GFormState) -> SpectralField:
    """∂_t g = -b∂g - c²|∂|g."""
    c = compute_c(s)
    b = compute_b(c)
    return -(b * derivative(s.g)) - squared(c) * abs_derivative(s.g)


def rhs_f(s: GFormState) -> SpectralField:
    """∂_t f = -b∂f - c²|∂|f - B₁."""
    c = compute_c(s)
    b = compute_b(c)
    f = s.f
    B1 = compute_B1(g_to_z(s))
    return -(b * derivative(f)) - squared(c) * abs_derivative(f) - B1


def rhs_invzap(z: ZFormState) -> SpectralField:
    """Eulerian ∂_t w = -b∂w - i c²∂w + B₁w for w = 1/Z_{,α'}."""
    w = z.inv_zap
    c = compute_c_from_z(z)
    b = compute_b(c)
    dw = derivative(w)
    return -(b * dw) - 1j * (squared(c) * dw) + compute_B1(z) * w


def conformal_derivative(z: ZFormState, f: SpectralField) -> SpectralField:
    """D f = (1/Z_{,α'}) ∂f."""
    return z.inv_zap * derivative(f)


def darcy_velocity(z: ZFormState) -> SpectralField:
    """Z_t = conj(i - i/Z_{,α'})."""
    return (1j - 1j * z.inv_zap).conj()


def z_reconstruction_rate(z: ZFormState) -> SpectralField:
    """Eulerian rate of Z - α': -i + i conj(w) - b Z_{,α'}."""
    b = compute_b(compute_c_from_z(z))
    return darcy_velocity(z) - b * z.zap


def darcy_residual(z: ZFormState, z_t: SpectralField) -> float:
    """‖conj(Z_t) - i + i/Z_{,α'}‖₂."""
    return norm_l2(z_t.conj() - 1j + 1j * z.inv_zap)


def amplitude_identity_residual(z: ZFormState) -> float:
    """Largest nodal deviation of i𝒜Z_{,α'} from Z_t + i."""
    script_A = np.abs(z.inv_zap.values) ** 2
    z_t = darcy_velocity(z)
    return float(np.max(np.abs(1j * script_A * z.zap.values - (z_t.values + 1j))))


def b_derivative_identity_residual(z: ZFormState) -> float:
    """‖∂b - (B₁ + 2 Re(i D w̄))‖₂."""
    w = z.inv_zap
    b = compute_b(compute_c_from_z(z))
    transported = (1j * conformal_derivative(z, w.conj())).real()
    return norm_l2(derivative(b) - (compute_B1(z) + 2.0 * transported))


def make_corner_data(nu: float, eps: float, grid: Grid) -> GFormState:
    """Smoothed corner of interior angle νπ at α' = π.

    The angle drops by (1-ν)π across α' = π over a width eps; the width
    relaxes to CORNER_OUTER_WIDTH at the antipode so the profile returns
    smoothly through α' = 0.

    Raises:
        ValueError: If nu is outside (0, 1) or eps <= 0
    """
    if not 0.0 < nu < 1.0:
        raise ValueError(f"nu must lie in (0,1), got {nu}")
    if not eps > 0.0:
        raise ValueError(f"eps must be > 0, got {eps}")
    theta = grid.nodes - np.pi
    width = 0.5 * eps * (1.0 + np.cos(theta)) + 0.5 * CORNER_OUTER_WIDTH * (1.0 - np.cos(theta))
    g = -(1.0 - nu) * 0.5 * np.pi * np.tanh(np.sin(theta) / width)
    g -= np.mean(g)
    return GFormState(SpectralField.from_values(grid, g, real=True))
