"""Tests for the principal-value quadrature oracle and its spectral cross-checks."""

import numpy as np
import pytest

from src.muskat.initial_data import random_band_limited
from src.spectral.field import SpectralField
from src.spectral.operators import abs_derivative, hilbert
from src.spectral.oracle import (
    HEALTH_THRESHOLD,
    abs_derivative_quadrature,
    commutator_h,
    commutator_identity_residual,
    commutator_quadrature,
    commutator_spectral,
    pv_hilbert_quadrature,
    relative_discrepancy,
    triple_bracket,
)


def trig(grid, func, real=True):
    return SpectralField.from_function(grid, func, real=real)


class TestKernelQuadrature:
    """Test the quadrature forms of ℍ and |∂| against their symbols."""

    def test_hilbert_quadrature_matches_symbol(self, band_limited_field):
        """Test p.v. quadrature of ℍf against multiplication by -sgn(k)."""
        evaluation = pv_hilbert_quadrature(band_limited_field)
        assert relative_discrepancy(evaluation.target, hilbert(band_limited_field)) < 1e-10
        assert evaluation.quadrature_error_estimate < 1e-10

    def test_abs_derivative_quadrature_matches_symbol(self, band_limited_field):
        """Test the hypersingular form of |∂|f against multiplication by |k|."""
        evaluation = abs_derivative_quadrature(band_limited_field)
        assert evaluation.target.is_real
        assert relative_discrepancy(evaluation.target, abs_derivative(band_limited_field)) < 1e-10

    def test_quadrature_of_constant_vanishes(self, grid):
        """Test that both kernels annihilate constants."""
        constant = SpectralField.constant(grid, 3.0)
        assert pv_hilbert_quadrature(constant).target.max_abs() < 1e-12
        assert abs_derivative_quadrature(constant).target.max_abs() < 1e-12


class TestCommutator:
    """Test [f, ℍ]∂g in spectral and quadrature form."""

    def test_dual_paths_agree(self, grid):
        """Test that the commutator paths agree and report a healthy result."""
        f = trig(grid, lambda a: np.exp(0.3j * np.cos(a)) * (1 + 0.2 * np.sin(2 * a)), real=False)
        g = trig(grid, lambda a: 1 + 0.1 * np.exp(-1j * a), real=False)
        result = commutator_h(f, g)
        assert result.is_healthy
        assert result.relative_discrepancy < HEALTH_THRESHOLD
        quadrature = commutator_quadrature(f, g).target
        assert relative_discrepancy(result.value, quadrature) < 1e-8

    def test_commutator_with_constant_vanishes(self, grid, band_limited_field):
        """Test [1, ℍ]∂g = 0."""
        one = SpectralField.constant(grid, 1.0)
        assert commutator_spectral(one, band_limited_field).max_abs() < 1e-13

    def test_closed_form_for_single_modes(self, grid):
        """Test [e^{iα}, ℍ]∂e^{-iα} = -i on the circle.

        ℍ(∂e^{-iα}) = -i e^{-iα}, so the first term is -i, and e^{iα}∂e^{-iα} = -i
        is a constant that ℍ annihilates.
        """
        f = SpectralField.from_values(grid, np.exp(1j * grid.nodes))
        g = SpectralField.from_values(grid, np.exp(-1j * grid.nodes))
        value = commutator_spectral(f, g)
        assert np.allclose(value.values, -1j, atol=1e-13)


class TestTripleBracket:
    """Test the triple bracket and the derivative identity built from it."""

    def test_bracket_with_constant_argument_vanishes(self, grid, band_limited_field):
        """Test that a constant first argument gives a zero difference quotient."""
        constant = SpectralField.constant(grid, 2.0)
        assert triple_bracket(constant, band_limited_field, band_limited_field).max_abs() < 1e-12

    def test_commutator_derivative_identity(self, grid):
        """Test h∂[f,ℍ]∂g = [h∂f,ℍ]∂g + [f,ℍ]∂(h∂g) - [h,f;∂g] for low-mode data."""
        f = trig(grid, lambda a: np.cos(a) + 0.5 * np.sin(2 * a))
        g = trig(grid, lambda a: np.sin(a) - 0.3 * np.cos(3 * a))
        h = trig(grid, lambda a: 0.7 * np.cos(2 * a))
        residual = commutator_identity_residual(f, g, h)
        assert residual.max_abs() < 1e-9

    @pytest.mark.parametrize("seed", range(20))
    def test_commutator_derivative_identity_on_random_triples(self, grid, seed):
        """Test the derivative identity for seeded band-limited f, g and h."""
        f, g, h = (
            random_band_limited(grid, seed=seed + offset, amplitude=1.0, k_cut=3).g for offset in (0, 100, 200)
        )
        assert commutator_identity_residual(f, g, h).max_abs() < 1e-8


class TestRelativeDiscrepancy:
    """Test the discrepancy measure."""

    def test_zero_fields_do_not_divide_by_zero(self, grid):
        """Test the floor on the scale."""
        zero = SpectralField.zeros(grid)
        assert relative_discrepancy(zero, zero) == 0.0

    def test_scale_invariance(self, band_limited_field):
        """Test that a 1% perturbation reads as 0.01."""
        assert relative_discrepancy(band_limited_field, 1.01 * band_limited_field) == pytest.approx(
            0.01 / 1.01, rel=1e-10
        )
