"""One-phase Muskat model in conformal coordinates."""

from .model import (
    SingularStateError,
    coefficient_set,
    compute_b,
    compute_B1,
    compute_c,
    darcy_velocity,
    g_to_z,
    make_corner_data,
    rhs_g,
    rhs_invzap,
    z_to_g,
)
