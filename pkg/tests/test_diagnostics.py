"""Tests for energies, monitors, rigidity and difference-energy diagnostics."""

import numpy as np
import pytest

from src.diagnostics.difference import difference_energy, difference_operator, product_rule_residual
from src.diagnostics.energies import (
    energy_growth_ratio,
    energy_M,
    energy_M1,
    interior_energy_profile,
    interior_supremum_check,
    sobolev_energies,
)
from src.diagnostics.monitors import (
    ViolationType,
    conservation_residual,
    conservation_series,
    max_principle_monitor,
)
from src.diagnostics.rigidity import angle_jump, rigidity_check, summarize_family
from src.integrator.driver import integrate
from src.models.diagnostics_record import DiagnosticsRecord
from src.models.interface_state import GFormState, ZFormState
from src.models.solver_config import SolverConfig
from src.models.trajectory import Trajectory
from src.muskat.initial_data import single_mode
from src.muskat.model import SingularStateError, g_to_z
from src.spectral.field import SpectralField
from src.spectral.grid import Grid
from src.spectral.operators import derivative


@pytest.fixture
def smooth_run(smooth_g_state, short_config):
    """Provide a short unmollified run from single-mode data."""
    return integrate(smooth_g_state, short_config)


def records_with_m1(times, values):
    return [DiagnosticsRecord(time=t, M1=m) for t, m in zip(times, values)]


class TestEnergies:
    """Test the energy functionals."""

    def test_flat_energy_vanishes(self, flat_state):
        """Test M = 0 and zero dissipation for the flat interface."""
        energy = energy_M(g_to_z(flat_state))
        assert energy.instantaneous < 1e-20
        assert energy.dissipation_integrand < 1e-20

    def test_boundary_energy_matches_instantaneous_part(self, smooth_z_state):
        """Test that M₁ equals the instantaneous part of M."""
        assert energy_M1(smooth_z_state) == pytest.approx(energy_M(smooth_z_state).instantaneous)
        assert energy_M1(smooth_z_state) > 0.0

    def test_singular_state_has_no_energy(self, grid):
        """Test that energies refuse |Z_{,α'}| below the threshold."""
        zap = np.ones(grid.n_points, dtype=np.complex128)
        zap[3] = 1e-12
        state = g_to_z(single_mode(grid, 0.1))
        singular = ZFormState(state.inv_zap, SpectralField.from_values(grid, zap), state.z_minus_id)
        with pytest.raises(SingularStateError):
            energy_M(singular)

    def test_interior_profile_increases_towards_boundary(self, smooth_z_state):
        """Test that the interior energies rise towards the boundary and stay below it."""
        profile = interior_energy_profile(smooth_z_state)
        depths = [depth for depth, _ in profile]
        assert depths == sorted(depths)
        check = interior_supremum_check(smooth_z_state)
        assert check["monotone"] == 1.0
        assert check["interior_supremum"] <= check["boundary"]

    def test_sobolev_energies_of_constant(self, grid):
        """Test ‖1‖_{H^n} = sqrt(2π) for every n."""
        energies = sobolev_energies(SpectralField.constant(grid, 1.0), [0, 1, 2])
        assert energies == pytest.approx({0: np.sqrt(2 * np.pi), 1: np.sqrt(2 * np.pi), 2: np.sqrt(2 * np.pi)})

    def test_growth_ratio(self):
        """Test (dM₁/dt)₊/(M₁ + M₁³) and clipping of decreasing stretches."""
        ratio = energy_growth_ratio(records_with_m1([0.0, 1.0, 2.0], [1.0, 2.0, 1.0]))
        assert ratio == pytest.approx([0.5, 0.0])
        assert energy_growth_ratio(records_with_m1([0.0], [1.0])).size == 0


class TestConservationMonitor:
    """Test the weighted-mass identity residual."""

    def test_flat_run_has_zero_residual(self, flat_state, short_config):
        """Test that every term vanishes for the flat interface."""
        traj = integrate(flat_state, short_config)
        assert np.all(conservation_series(traj) == 0.0)

    def test_smooth_run_satisfies_identity(self, coarse_grid):
        """Test that the residual is small for a resolved unmollified run."""
        traj = integrate(single_mode(coarse_grid, 0.05), SolverConfig(t_end=0.01, dt=1e-3))
        residuals = conservation_series(traj)
        assert np.max(np.abs(residuals)) < 1e-5
        assert all(np.isfinite(r.cons_residual) for r in traj.records)

    def test_residual_is_second_order_in_dt(self, coarse_grid):
        """Test that halving dt cuts the residual by about four."""
        state = single_mode(coarse_grid, 0.1)
        coarse = conservation_series(integrate(state, SolverConfig(t_end=0.04, dt=4e-3)))
        fine = conservation_series(integrate(state, SolverConfig(t_end=0.04, dt=2e-3)))
        ratio = np.nanmax(np.abs(coarse)) / np.nanmax(np.abs(fine))
        assert 3.0 < ratio < 5.0

    def test_short_trajectory_gives_nan(self, smooth_g_state):
        """Test that fewer than three snapshots leave the residual undefined."""
        traj = integrate(smooth_g_state, SolverConfig(t_end=0.0))
        assert np.isnan(conservation_series(traj)).all()

    def test_window_size(self, smooth_run):
        """Test that the residual needs exactly three snapshots."""
        with pytest.raises(ValueError):
            conservation_residual(smooth_run.snapshots[:2])


class TestMaxPrincipleMonitor:
    """Test the slack-tolerant maximum principles."""

    def test_smooth_run_has_no_violations(self, smooth_run):
        """Test that a decaying run respects all three principles."""
        assert max_principle_monitor(smooth_run) == []

    def test_growing_maximum_is_flagged(self, coarse_grid):
        """Test that an artificial increase of max g is reported."""
        config = SolverConfig(t_end=1.0, dt=0.1)
        traj = Trajectory(formulation=GFormState.formulation, config=config)
        traj.append(single_mode(coarse_grid, 0.1), None, 0)
        grown = single_mode(coarse_grid, 0.2)
        traj.append(GFormState(grown.g, time=0.1), None, 1)
        kinds = {v.type for v in max_principle_monitor(traj)}
        assert ViolationType.G_MAX_INCREASED in kinds
        assert ViolationType.G_MIN_DECREASED in kinds


class TestRigidity:
    """Test the characteristic-based rigidity diagnostics."""

    def test_identity_holds_along_characteristics(self, smooth_run):
        """Test that the tangent identity residual is at integration-error level."""
        report = rigidity_check(smooth_run, tip_alpha=np.pi, halfwidth=0.2)
        assert report.times.shape == (len(smooth_run),)
        assert report.max_identity_residual < 1e-6
        assert report.angle_drift[0] == 0.0
        assert np.all(report.min_inv_zap > 0.0)

    def test_tracked_seeds_include_tip_and_bracket(self, smooth_run):
        """Test that the tip and both bracketing characteristics are followed."""
        report = rigidity_check(smooth_run, tip_alpha=np.pi, halfwidth=0.2, offsets=[-0.4, 0.4])
        assert np.allclose(report.tracked_seeds, np.pi + np.array([-0.4, -0.2, 0.0, 0.2, 0.4]))

    def test_flat_tip_velocity(self, flat_state, short_config):
        """Test that the flat interface does not move, so |Z_t + i| = 1."""
        traj = integrate(flat_state, short_config)
        report = rigidity_check(traj)
        assert np.allclose(report.tip_speed, 0.0)
        assert np.allclose(report.tip_speed_error, 1.0)

    def test_tip_w_dw_at_the_initial_tip(self, smooth_run):
        """Test that |w ∂w| at the tip matches the nodal values when the tip is a node."""
        report = rigidity_check(smooth_run, tip_alpha=np.pi, halfwidth=0.2)
        w = g_to_z(smooth_run.snapshots[0]).inv_zap
        node = w.grid.n_points // 2
        expected = abs(w.values[node] * derivative(w).values[node])
        assert report.tip_w_dw[0] == pytest.approx(expected, rel=1e-10)

    def test_flat_tip_w_dw_vanishes(self, flat_state, short_config):
        """Test that w = 1 gives w ∂w = 0 at the tip."""
        report = rigidity_check(integrate(flat_state, short_config))
        assert np.all(report.tip_w_dw < 1e-14)

    def test_angle_jump(self, grid):
        """Test g(c - w) - g(c + w) by interpolation."""
        g = SpectralField.from_function(grid, lambda a: np.sin(a), real=True)
        assert angle_jump(g, 0.0, 0.5) == pytest.approx(-2 * np.sin(0.5))

    def test_family_summary_orders_by_width(self, smooth_run):
        """Test that the family summary sorts reports by decreasing corner width."""
        report = rigidity_check(smooth_run, halfwidth=0.2)
        summary = summarize_family([report, report], [0.05, 0.1])
        assert summary["corner_eps"] == [0.1, 0.05]
        assert summary["tip_speed_monotone"] is False
        assert summary["tip_speed_ratio"] == pytest.approx(1.0)


class TestDifferenceEnergy:
    """Test the difference operator and the difference energy."""

    def test_identical_runs_have_zero_energy(self, smooth_run):
        """Test 𝓔 ≡ 0 when a run is compared with itself."""
        pair = difference_energy(smooth_run, smooth_run)
        assert np.max(pair.E) < 1e-16
        assert pair.initial_gap < 1e-20
        assert np.allclose(pair.htilde, smooth_run.grid.nodes[None, :], atol=1e-12)

    def test_nearby_runs_have_positive_bounded_ratio(self, coarse_grid, short_config):
        """Test that two nearby runs give 𝓕(t)/𝓕(0) of order one."""
        run_a = integrate(single_mode(coarse_grid, 0.10), short_config)
        run_b = integrate(single_mode(coarse_grid, 0.11), short_config)
        pair = difference_energy(run_a, run_b)
        assert pair.F[0] > 0.0
        assert np.all(np.diff(pair.F) >= 0.0)
        assert pair.ratio[0] == pytest.approx(1.0)
        assert np.max(pair.ratio) < 10.0

    def test_mismatched_times_rejected(self, smooth_g_state):
        """Test that runs with different snapshot times are refused."""
        run_a = integrate(smooth_g_state, SolverConfig(t_end=0.01, dt=1e-3))
        run_b = integrate(smooth_g_state, SolverConfig(t_end=0.01, dt=2e-3))
        with pytest.raises(ValueError, match="snapshot times"):
            difference_energy(run_a, run_b)

    def test_difference_operator_with_identity_map(self, grid, band_limited_field):
        """Test Δf = f_a - f_b on the nodes when h̃ is the identity."""
        shifted = band_limited_field + 1.0
        delta = difference_operator(shifted, band_limited_field, grid.nodes)
        assert np.allclose(delta.values, 1.0, atol=1e-13)

    def test_difference_operator_validates_inputs(self, grid, band_limited_field):
        """Test grid and sample-count validation."""
        with pytest.raises(ValueError):
            difference_operator(band_limited_field, SpectralField.zeros(Grid(32)), grid.nodes)
        with pytest.raises(ValueError):
            difference_operator(band_limited_field, band_limited_field, grid.nodes[:10])

    def test_product_rule(self, grid):
        """Test Δ(f₁f₂) = Δ(f₁)f₂,a + (f₁,b∘h̃)Δ(f₂) for a non-trivial h̃."""
        htilde = grid.nodes + 0.1 * np.sin(grid.nodes)

        def field(func):
            return SpectralField.from_function(grid, func, real=True)

        residual = product_rule_residual(
            field(lambda a: np.cos(a)),
            field(lambda a: np.cos(a) + 0.1 * np.sin(2 * a)),
            field(lambda a: np.sin(2 * a)),
            field(lambda a: 0.5 * np.cos(a)),
            htilde,
        )
        assert residual < 1e-12
