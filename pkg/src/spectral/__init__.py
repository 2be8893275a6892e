"""Periodic grid, spectral fields, Fourier multipliers and the quadrature oracle."""

from .field import SpectralField, dealiased_product
from .grid import Grid
from .interpolation import evaluate_at, field_extrema, sample_shifted
from .mollifier import MollifierProfile, MollifierSpec
from .operators import (
    abs_derivative,
    antiderivative,
    derivative,
    hilbert,
    holomorphic_projection,
    laplacian,
    mollify,
    norm_hhalf,
    norm_hs,
    norm_l2,
    poisson_extend,
)
