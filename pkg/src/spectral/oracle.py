"""Quadrature oracle for the principal-value kernels.

Every kernel is evaluated by a periodic trapezoid rule whose source nodes
β_j = (j + 1/2)·2π/M sit half a spacing off the target grid, so the
singularity at β = α is never sampled and the nodes are symmetric about every
target. On the circle 1/(α-β) becomes (1/2)cot((α-β)/2) and 1/(α-β)² becomes
1/(4 sin²((α-β)/2)); both are written through the periodic difference quotient

    Q_f(α, β) = (f(α) - f(β)) / (2 sin((α-β)/2)).

Each evaluation runs with M = n and M = 2n; the L² gap between the two is the
reported error estimate.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .field import SpectralField
from .grid import Grid
from .interpolation import sample_shifted
from .operators import derivative, hilbert, norm_l2

logger = logging.getLogger(__name__)

HEALTH_THRESHOLD = 1e-6
COINCIDENCE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class KernelEvaluation:
    """Quadrature result and its n vs 2n discrepancy in L²."""

    target: SpectralField
    quadrature_error_estimate: float


@dataclass(frozen=True)
class DualPathResult:
    """Spectral value of an operator with its quadrature cross-check."""

    value: SpectralField
    relative_discrepancy: float

    @property
    def is_healthy(self) -> bool:
        return self.relative_discrepancy <= HEALTH_THRESHOLD


@dataclass(frozen=True)
class _QuadratureRule:
    half_sine: NDArray[np.float64]
    half_cosine: NDArray[np.float64]
    coincident: NDArray[np.bool_]
    n_sources: int

    @property
    def weight(self) -> float:
        return 2.0 * np.pi / self.n_sources


@lru_cache(maxsize=4)
def _rule(n_targets: int, refinement: int) -> _QuadratureRule:
    n_sources = refinement * n_targets
    targets = 2.0 * np.pi * np.arange(n_targets) / n_targets
    sources = 2.0 * np.pi * (np.arange(n_sources) + 0.5) / n_sources
    separation = targets[:, None] - sources[None, :]
    half_sine = 2.0 * np.sin(0.5 * separation)
    coincident = np.abs(half_sine) < COINCIDENCE_TOLERANCE
    half_sine[coincident] = 1.0
    return _QuadratureRule(
        half_sine=half_sine,
        half_cosine=np.cos(0.5 * separation),
        coincident=coincident,
        n_sources=n_sources,
    )


def _sources(f: SpectralField, rule: _QuadratureRule) -> NDArray:
    return sample_shifted(f, rule.n_sources, shift=np.pi / rule.n_sources)


def _difference_quotient(f: SpectralField, rule: _QuadratureRule) -> NDArray:
    """Q_f on the target x source lattice, with f'(α) at coincidence."""
    quotient = (f.values[:, None] - _sources(f, rule)[None, :]) / rule.half_sine
    if np.any(rule.coincident):
        limit = np.broadcast_to(derivative(f).values[:, None], quotient.shape)
        quotient = np.where(rule.coincident, limit, quotient)
    return quotient


def _evaluate(
    grid: Grid,
    kernel: Callable[[_QuadratureRule], NDArray],
    real: bool,
) -> KernelEvaluation:
    results = []
    for refinement in (1, 2):
        rule = _rule(grid.n_points, refinement)
        values = kernel(rule)
        if real:
            values = np.real(values)
        results.append(SpectralField.from_values(grid, values, real=real))
    coarse, fine = results
    return KernelEvaluation(target=fine, quadrature_error_estimate=norm_l2(fine - coarse))


def pv_hilbert_quadrature(f: SpectralField) -> KernelEvaluation:
    """ℍf = (1/iπ) p.v.∫ f(β) (1/2)cot((α-β)/2) dβ."""

    def kernel(rule: _QuadratureRule) -> NDArray:
        # f(α) Σ cot vanishes on the symmetric nodes, leaving the regular part
        q = _difference_quotient(f, rule)
        return -(rule.weight / (1j * np.pi)) * np.sum(q * rule.half_cosine, axis=1)

    return _evaluate(f.grid, kernel, real=False)


def abs_derivative_quadrature(f: SpectralField) -> KernelEvaluation:
    """|∂|f = (1/π) ∫ (f(α) - f(β)) / (4 sin²((α-β)/2)) dβ."""

    def kernel(rule: _QuadratureRule) -> NDArray:
        q = _difference_quotient(f, rule)
        return (rule.weight / np.pi) * np.sum(q / rule.half_sine, axis=1)

    return _evaluate(f.grid, kernel, real=f.is_real)


def commutator_quadrature(f: SpectralField, g: SpectralField) -> KernelEvaluation:
    """[f, ℍ]∂g = (1/iπ) ∫ (f(α) - f(β)) (1/2)cot((α-β)/2) ∂g(β) dβ."""
    dg = derivative(g)

    def kernel(rule: _QuadratureRule) -> NDArray:
        q = _difference_quotient(f, rule)
        dg_sources = _sources(dg, rule)
        return (rule.weight / (1j * np.pi)) * np.sum(q * rule.half_cosine * dg_sources[None, :], axis=1)

    return _evaluate(f.grid, kernel, real=False)


def triple_bracket(f1: SpectralField, f2: SpectralField, f3: SpectralField) -> SpectralField:
    """[f1, f2; f3] = (1/iπ) ∫ Q_{f1} Q_{f2} f3(β) dβ."""
    return triple_bracket_quadrature(f1, f2, f3).target


def triple_bracket_quadrature(f1: SpectralField, f2: SpectralField, f3: SpectralField) -> KernelEvaluation:
    def kernel(rule: _QuadratureRule) -> NDArray:
        q1 = _difference_quotient(f1, rule)
        q2 = _difference_quotient(f2, rule)
        f3_sources = _sources(f3, rule)
        return (rule.weight / (1j * np.pi)) * np.sum(q1 * q2 * f3_sources[None, :], axis=1)

    return _evaluate(f1.grid, kernel, real=False)


def b1_kernel_quadrature(w: SpectralField) -> KernelEvaluation:
    """Positive-kernel form (1/π) ∫ |w(α) - w(β)|² / (4 sin²((α-β)/2)) dβ."""

    def kernel(rule: _QuadratureRule) -> NDArray:
        q = _difference_quotient(w, rule)
        return (rule.weight / np.pi) * np.sum(np.abs(q) ** 2, axis=1)

    return _evaluate(w.grid, kernel, real=True)


def relative_discrepancy(first: SpectralField, second: SpectralField) -> float:
    scale = max(norm_l2(first), norm_l2(second), 1e-14)
    return norm_l2(first - second) / scale


def commutator_spectral(f: SpectralField, g: SpectralField) -> SpectralField:
    """f·ℍ(∂g) - ℍ(f·∂g) with dealiased products."""
    dg = derivative(g)
    return f * hilbert(dg) - hilbert(f * dg)


def commutator_h(f: SpectralField, g: SpectralField) -> DualPathResult:
    """[f, ℍ]∂g by spectral composition, cross-checked against the kernel quadrature."""
    spectral = commutator_spectral(f, g)
    quadrature = commutator_quadrature(f, g).target
    discrepancy = relative_discrepancy(spectral, quadrature)
    if discrepancy > HEALTH_THRESHOLD:
        logger.warning(f"Commutator paths disagree: relative discrepancy {discrepancy:.3e}")
    return DualPathResult(value=spectral, relative_discrepancy=discrepancy)


def commutator_identity_residual(f: SpectralField, g: SpectralField, h: SpectralField) -> SpectralField:
    """h∂[f,ℍ]∂g - ([h∂f,ℍ]∂g + [f,ℍ]∂(h∂g) - [h,f;∂g]); zero up to quadrature error."""
    left = h * derivative(commutator_spectral(f, g))
    first = commutator_spectral(h * derivative(f), g)
    second = commutator_spectral(f, h * derivative(g))
    bracket = triple_bracket(h, f, derivative(g))
    return left - (first + second - bracket)
