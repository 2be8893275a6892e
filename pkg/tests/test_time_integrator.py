"""Tests for the time steppers, the integration driver and the particle flow."""

import numpy as np
import pytest

from src.integrator.driver import integrate
from src.integrator.flow import FlowMonotonicityError, check_monotone, particle_flow
from src.integrator.stepper import (
    MAX_AUTO_DT,
    ExplicitRK4,
    IntegratingFactorRK4,
    StepRejectedError,
    TimeStepper,
    make_stepper,
    step_g,
    step_z,
)
from src.models.interface_state import Formulation
from src.models.solver_config import Scheme, SolverConfig
from src.models.trajectory import TrajectoryStatus
from src.muskat.initial_data import random_band_limited, single_mode
from src.muskat.model import SingularStateError, g_to_z, z_to_g
from src.spectral.mollifier import MollifierSpec
from src.spectral.operators import norm_l2


class TestStepper:
    """Test single steps of both schemes."""

    def test_scheme_selection(self):
        """Test that the scheme name picks the stepper class."""
        assert isinstance(make_stepper(SolverConfig(scheme="rk4")), ExplicitRK4)
        assert isinstance(make_stepper(SolverConfig(scheme="imex")), IntegratingFactorRK4)

    def test_flat_is_a_fixed_point(self, flat_state):
        """Test that a step leaves the flat interface unchanged."""
        new = step_g(flat_state, SolverConfig(dt=0.01))
        assert new.g.max_abs() == 0.0
        assert new.time == pytest.approx(0.01)

    @pytest.mark.parametrize("scheme", list(Scheme))
    def test_linear_decay(self, coarse_grid, scheme):
        """Test g(t) ≈ A e^{-kt} cos kα for small amplitude."""
        amplitude, mode, t_end = 1e-6, 2, 0.2
        config = SolverConfig(t_end=t_end, dt=1e-3, scheme=scheme)
        traj = integrate(single_mode(coarse_grid, amplitude, mode), config)
        expected = amplitude * np.exp(-mode * t_end) * np.cos(mode * coarse_grid.nodes)
        assert traj.final_state.time == t_end
        assert np.allclose(traj.final_state.g.values, expected, atol=1e-4 * amplitude)

    @pytest.mark.slow
    @pytest.mark.parametrize("mode", [1, 2, 4])
    def test_linear_decay_to_unit_time(self, grid, mode):
        """Test A e^{-kt} cos kα at t = 1 for several modes."""
        amplitude = 1e-6
        config = SolverConfig(t_end=1.0, dt=1e-3, snapshot_every=1000)
        traj = integrate(single_mode(grid, amplitude, mode), config)
        expected = amplitude * np.exp(-mode) * np.cos(mode * grid.nodes)
        assert np.max(np.abs(traj.final_state.g.values - expected)) < 1e-3 * amplitude * np.exp(-mode)

    @pytest.mark.slow
    def test_flat_stays_flat_for_many_steps(self, flat_state):
        """Test that ten thousand steps leave g identically zero."""
        traj = integrate(flat_state, SolverConfig(t_end=10.0, dt=1e-3, snapshot_every=2500))
        assert traj.final_state.time == 10.0
        assert traj.steps[-1] >= 10000
        assert all(snapshot.g.max_abs() == 0.0 for snapshot in traj.snapshots)

    def test_imex_is_exact_on_the_linear_part(self, coarse_grid):
        """Test that the integrating factor handles -|k|g exactly even for a large step."""
        amplitude, mode, dt = 1e-8, 10, 0.5
        config = SolverConfig(dt=dt, scheme="imex")
        new = step_g(single_mode(coarse_grid, amplitude, mode), config)
        expected = amplitude * np.exp(-mode * dt) * np.cos(mode * coarse_grid.nodes)
        assert np.allclose(new.g.values, expected, atol=1e-3 * amplitude)

    def test_unstable_step_is_halved(self, grid):
        """Test that an explicit step far beyond the CFL limit is rejected and retried."""
        state = random_band_limited(grid, seed=1, amplitude=0.1, k_cut=8, decay=0.0)
        new = step_g(state, SolverConfig(scheme="rk4"), dt=1.0)
        assert 0.0 < new.time < 1.0

    def test_rejection_without_halvings_raises(self, grid):
        """Test that exhausting the halving budget raises StepRejectedError."""
        state = random_band_limited(grid, seed=1, amplitude=0.1, k_cut=8, decay=0.0)
        with pytest.raises(StepRejectedError):
            step_g(state, SolverConfig(scheme="rk4", max_halvings=0), dt=1.0)

    def test_auto_dt_is_capped(self, flat_state):
        """Test that the automatic step never exceeds the cap."""
        config = SolverConfig()
        assert make_stepper(config).stable_dt(flat_state) == pytest.approx(config.cfl_safety * MAX_AUTO_DT)

    def test_viscosity_tightens_explicit_dt(self, smooth_g_state):
        """Test that ε > 0 shrinks the explicit step but not the imex one."""
        inviscid = make_stepper(SolverConfig()).stable_dt(smooth_g_state)
        viscous = make_stepper(SolverConfig(epsilon=1.0)).stable_dt(smooth_g_state)
        imex = make_stepper(SolverConfig(epsilon=1.0, scheme="imex")).stable_dt(smooth_g_state)
        assert viscous < inviscid
        assert imex >= inviscid

    def test_z_step_requires_unmollified_config(self, smooth_g_state):
        """Test that the z stepper refuses regularized configurations."""
        config = SolverConfig(epsilon=0.1)
        with pytest.raises(ValueError):
            step_z(g_to_z(smooth_g_state), config, dt=1e-3)

    def test_g_and_z_steps_agree(self, smooth_g_state):
        """Test that one step of each formulation lands on the same interface."""
        config = SolverConfig(dt=1e-3)
        from_g = step_g(smooth_g_state, config)
        from_z = z_to_g(step_z(g_to_z(smooth_g_state), config))
        assert norm_l2(from_g.g - from_z.g) < 1e-9


class TestDriver:
    """Test the integration loop."""

    def test_lands_on_t_end(self, smooth_g_state):
        """Test that the final snapshot sits exactly at t_end for a non-dividing dt."""
        traj = integrate(smooth_g_state, SolverConfig(t_end=0.105, dt=0.01))
        assert traj.final_state.time == 0.105
        assert np.all(np.diff(traj.times) > 0)
        assert traj.succeeded

    def test_snapshot_cadence(self, smooth_g_state, short_config):
        """Test snapshots every `snapshot_every` steps plus the initial one."""
        traj = integrate(smooth_g_state, short_config)
        assert traj.steps == [0, 5, 10, 15, 20]
        assert len(traj.records) == len(traj)

    def test_zero_length_run(self, smooth_g_state):
        """Test that t_end = 0 stores only the initial state."""
        traj = integrate(smooth_g_state, SolverConfig(t_end=0.0))
        assert len(traj) == 1
        assert traj.succeeded

    def test_z_formulation_is_selected_from_config(self, smooth_g_state):
        """Test that formulation z evolves the z-form state."""
        traj = integrate(smooth_g_state, SolverConfig(t_end=0.01, dt=1e-3, formulation="z"))
        assert traj.formulation is Formulation.Z

    def test_dissipation_accumulates(self, smooth_g_state, short_config):
        """Test that the accumulated dissipation is non-decreasing."""
        traj = integrate(smooth_g_state, short_config)
        accumulated = [r.M_dissipation_accum for r in traj.records]
        assert accumulated[0] == 0.0
        assert np.all(np.diff(accumulated) >= 0.0)

    def test_blowup_threshold_stops_the_run(self, smooth_g_state):
        """Test that exceeding the H² threshold marks the run as suspected blow-up."""
        config = SolverConfig(t_end=0.05, dt=1e-3, blowup_threshold=1e-3)
        traj = integrate(smooth_g_state, config)
        assert traj.status is TrajectoryStatus.BLOW_UP_SUSPECTED
        assert traj.final_state.time < 0.05
        assert "H2 norm" in traj.failure_reason

    def test_exhausted_halvings_mark_blowup(self, grid):
        """Test that a rejected step ends the run as suspected blow-up with the trajectory so far."""
        state = random_band_limited(grid, seed=1, amplitude=0.1, k_cut=8, decay=0.0)
        config = SolverConfig(t_end=2.0, dt=1.0, max_halvings=0)
        traj = integrate(state, config)
        assert traj.status is TrajectoryStatus.BLOW_UP_SUSPECTED
        assert "halvings" in traj.failure_reason
        assert len(traj) == 1

    def test_singular_state_marks_step_failure(self, monkeypatch, smooth_g_state):
        """Test that a singular state during a step ends the run as a step failure."""

        def singular_step(self, state, dt=None):
            raise SingularStateError("min |Z_{,α'}| below threshold")

        monkeypatch.setattr(TimeStepper, "step", singular_step)
        traj = integrate(smooth_g_state, SolverConfig(t_end=0.01, dt=1e-3))
        assert traj.status is TrajectoryStatus.STEP_FAILURE
        assert len(traj) == 1

    def test_progress_callback(self, smooth_g_state):
        """Test that progress reports every accepted step."""
        seen = []
        integrate(smooth_g_state, SolverConfig(t_end=0.005, dt=1e-3), progress=lambda t, end: seen.append((t, end)))
        assert len(seen) == 5
        assert seen[-1] == (0.005, 0.005)

    def test_checkpoint_resume_matches_uninterrupted_run(self, tmp_path, smooth_g_state):
        """Test that resuming from a checkpoint reproduces the single run."""
        checkpoint = tmp_path / "checkpoint.h5"
        first = SolverConfig(t_end=0.01, dt=1e-3, checkpoint_every=5, snapshot_every=5)
        integrate(smooth_g_state, first, checkpoint_path=checkpoint, seed=42)
        assert checkpoint.exists()

        full = SolverConfig(t_end=0.02, dt=1e-3, snapshot_every=5)
        resumed = integrate(smooth_g_state, full, resume_from=checkpoint)
        direct = integrate(smooth_g_state, full)

        assert resumed.steps[0] == 10
        assert resumed.seed == 42
        assert np.allclose(resumed.final_state.g.values, direct.final_state.g.values, atol=1e-12)
        assert resumed.records[-1].M_dissipation_accum == pytest.approx(
            direct.records[-1].M_dissipation_accum, rel=1e-8
        )


class TestParticleFlow:
    """Test the characteristics h(α, t)."""

    def test_flat_flow_is_stationary(self, flat_state, short_config):
        """Test that b = 0 keeps every particle in place."""
        traj = integrate(flat_state, short_config)
        flow = particle_flow(traj, flat_state.grid.nodes)
        assert np.allclose(flow.positions, flat_state.grid.nodes[None, :])
        assert np.allclose(flow.phase_integrals, 0.0)

    def test_flow_stays_monotone(self, smooth_g_state, short_config):
        """Test that characteristics keep their order."""
        traj = integrate(smooth_g_state, short_config)
        flow = particle_flow(traj, smooth_g_state.grid.nodes)
        assert flow.positions.shape == (len(traj), smooth_g_state.grid.n_points)
        assert np.all(np.diff(flow.positions, axis=1) > 0)
        assert np.max(np.abs(flow.displacement(len(traj) - 1))) > 0.0

    def test_seeds_must_increase(self, smooth_g_state, short_config):
        """Test that unsorted seeds are refused."""
        traj = integrate(smooth_g_state, short_config)
        with pytest.raises(ValueError):
            particle_flow(traj, [1.0, 0.5])

    def test_crossing_characteristics_detected(self):
        """Test that touching characteristics raise FlowMonotonicityError."""
        with pytest.raises(FlowMonotonicityError):
            check_monotone(np.array([0.0, 1.0, 1.0]), 0.5)
        with pytest.raises(FlowMonotonicityError):
            check_monotone(np.array([0.0, 3.0, 6.5]), 0.5)


class TestRegularizedRuns:
    """Test mollified and viscous g runs."""

    def test_mollified_run_completes(self, smooth_g_state):
        """Test that a δ > 0 run stays finite."""
        config = SolverConfig(t_end=0.01, dt=1e-3, mollifier=MollifierSpec(delta=0.05))
        traj = integrate(smooth_g_state, config)
        assert traj.succeeded
        assert traj.final_state.is_finite()

    def test_viscosity_damps_more(self, smooth_g_state):
        """Test that ε > 0 decays the amplitude faster."""
        base = integrate(smooth_g_state, SolverConfig(t_end=0.05, dt=1e-3, scheme="imex"))
        viscous = integrate(smooth_g_state, SolverConfig(t_end=0.05, dt=1e-3, scheme="imex", epsilon=0.5))
        assert norm_l2(viscous.final_state.g) < norm_l2(base.final_state.g)
