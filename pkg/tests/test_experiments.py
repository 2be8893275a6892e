"""Tests for trend fits and the experiment runner."""

import json
import math

import numpy as np
import pytest

from src.connectors.series_writer import read_series
from src.experiments.fits import (
    fit_power_constant,
    loglog_slope,
    per_step_orders,
    richardson_order,
    trend_summary,
)
from src.experiments import runner
from src.experiments.runner import (
    EXIT_IO_ERROR,
    EXIT_SUCCESS,
    SERIES_FILE,
    TRAJECTORY_FILE,
    ChildOutcome,
    run,
    run_child,
)
from src.models.experiment_plan import ExperimentKind, ExperimentPlan, InitialDataSpec
from src.models.solver_config import SolverConfig


def make_plan(tmp_path, kind="single", config=None, data=None, **kwargs):
    return ExperimentPlan(
        kind=kind,
        base_config=config or SolverConfig(t_end=0.01, dt=1e-3, snapshot_every=5),
        initial_data=data or InitialDataSpec(preset="single_mode", amplitude=0.1),
        n_points=kwargs.pop("n_points", 32),
        output_dir=tmp_path / "out",
        **kwargs,
    )


def fake_execute(tasks, threads, progress=None):
    return [
        ChildOutcome(
            label=child.label,
            value=value,
            formulation=formulation.value,
            output_dir=child.output_dir / formulation.value,
            status="completed",
        )
        for child, formulation, value in tasks
    ]


class TestFits:
    """Test the log-log and Richardson fits."""

    def test_quadratic_slope(self):
        """Test that y = x² has slope 2 and intercept 0."""
        x = np.array([0.1, 0.05, 0.025])
        slope, intercept = loglog_slope(x, x**2)
        assert slope == pytest.approx(2.0)
        assert intercept == pytest.approx(0.0, abs=1e-12)

    def test_too_few_samples(self):
        """Test that fewer than two positive samples give NaN."""
        slope, _ = loglog_slope([0.1, 0.05], [1e-3, 0.0])
        assert math.isnan(slope)

    def test_per_step_orders(self):
        """Test the consecutive-level orders of an exact power law."""
        x = np.array([0.4, 0.2, 0.1])
        assert per_step_orders(x, 3.0 * x**4) == pytest.approx([4.0, 4.0])

    def test_richardson_order(self):
        """Test the self-convergence order and its undefined cases."""
        assert richardson_order(16.0, 1.0) == pytest.approx(4.0)
        assert richardson_order(9.0, 1.0, ratio=3.0) == pytest.approx(2.0)
        assert math.isnan(richardson_order(0.0, 1.0))

    def test_power_constant(self):
        """Test C in C·h^p for exact data."""
        h = np.array([0.1, 0.05])
        assert fit_power_constant(h, 7.0 * h**4, 4.0) == pytest.approx(7.0)
        assert fit_power_constant([], [], 4.0) == 0.0

    def test_trend_summary(self):
        """Test that the slope is compared with the expected slope."""
        x = np.array([0.1, 0.01])
        trend = trend_summary(x, np.sqrt(x), expected=0.5)
        assert trend["slope_error"] == pytest.approx(0.0, abs=1e-12)


class TestSingleRuns:
    """Test single runs and their artifacts."""

    def test_run_child_writes_files(self, tmp_path):
        """Test that a child run leaves a trajectory and a diagnostics series."""
        outcome = run_child(make_plan(tmp_path))
        assert outcome.succeeded
        assert (outcome.output_dir / TRAJECTORY_FILE).exists()
        records = read_series(outcome.output_dir / SERIES_FILE)
        assert [r.step for r in records] == [0, 5, 10]
        assert np.isfinite(records[1].cons_residual)
        assert outcome.diagnostics["max_principle_violations"] == 0
        assert len(outcome.load()) == 3

    def test_flat_run(self, tmp_path):
        """Test exit code 0 and the summary of a flat run."""
        plan = make_plan(tmp_path, data=InitialDataSpec(preset="flat"))
        exit_code, summary = run(plan)
        assert exit_code == EXIT_SUCCESS
        assert summary.succeeded
        written = json.loads((plan.output_dir / "summary.json").read_text())
        assert written["status"] == "completed"
        assert written["runs"]["run"]["n_snapshots"] == 3

    def test_missing_snapshot_is_io_error(self, tmp_path):
        """Test exit code 4 when the shifted snapshot file is absent."""
        data = InitialDataSpec(preset="shifted_snapshot", snapshot_path=tmp_path / "absent.h5")
        plan = make_plan(tmp_path, data=data)
        exit_code, summary = run(plan)
        assert exit_code == EXIT_IO_ERROR
        assert summary.status == "io_failure"
        assert (plan.output_dir / "summary.json").exists()

    def test_both_formulations_agree(self, tmp_path):
        """Test that the g and z runs end on the same interface."""
        plan = make_plan(tmp_path, config=SolverConfig(t_end=0.01, dt=1e-3, formulation="both"))
        exit_code, summary = run(plan)
        assert exit_code == EXIT_SUCCESS
        assert summary.sections["equivalence"]["l2_gap"] < 1e-8
        assert (plan.output_dir / "g" / TRAJECTORY_FILE).exists()
        assert (plan.output_dir / "z" / TRAJECTORY_FILE).exists()


class TestExperimentKinds:
    """Test the multi-run experiment kinds."""

    def test_equivalence_check_uses_floor(self, tmp_path):
        """Test that fewer than three step sizes compare against the fixed floor."""
        plan = make_plan(tmp_path, kind=ExperimentKind.EQUIVALENCE_CHECK)
        exit_code, summary = run(plan)
        equivalence = summary.sections["equivalence"]
        assert exit_code == EXIT_SUCCESS
        assert equivalence["within_tolerance"] is True
        assert np.all(equivalence["tolerance"] == 1e-6)

    def test_difference_pair(self, tmp_path):
        """Test that a pair of nearby amplitudes reports a bounded stability ratio."""
        plan = make_plan(
            tmp_path,
            kind=ExperimentKind.DIFFERENCE_PAIR,
            sweep_values=(0.1, 0.11),
            pair_parameter="amplitude",
        )
        exit_code, summary = run(plan)
        difference = summary.sections["difference"]
        assert exit_code == EXIT_SUCCESS
        assert difference["stability_ratio"][0] == pytest.approx(1.0)
        assert np.max(difference["stability_ratio"]) < 10.0

    @pytest.mark.slow
    def test_dt_sweep_converges_at_fourth_order(self, tmp_path):
        """Test the observed self-convergence order of RK4."""
        plan = make_plan(
            tmp_path,
            kind=ExperimentKind.DT_SWEEP,
            config=SolverConfig(t_end=0.1, snapshot_every=1000),
            data=InitialDataSpec(preset="single_mode", amplitude=0.3),
            sweep_values=(2e-2, 1e-2, 5e-3),
        )
        exit_code, summary = run(plan)
        fits = summary.sections["fits"]
        assert exit_code == EXIT_SUCCESS
        assert fits["loglog_slope"] > 3.0
        assert len(fits["self_convergence_gaps"]) == 2

    @pytest.mark.slow
    def test_corner_family_reports_rigidity(self, tmp_path):
        """Test that each corner width gets a rigidity report plus a family summary."""
        plan = make_plan(
            tmp_path,
            kind=ExperimentKind.CORNER_FAMILY,
            config=SolverConfig(t_end=0.01, snapshot_every=5),
            data=InitialDataSpec(preset="corner", nu=0.5, corner_eps=0.2),
            sweep_values=(0.4, 0.2),
            n_points=128,
        )
        exit_code, summary = run(plan)
        rigidity = summary.sections["rigidity"]
        assert exit_code == EXIT_SUCCESS
        assert rigidity["family"]["corner_eps"] == [0.4, 0.2]
        assert "corner_eps=0.2" in rigidity


class TestEquivalenceTolerance:
    """Test the fitted-constant branch of the g/z equivalence check."""

    dts = (0.04, 0.02, 0.01)

    def run_with_gaps(self, tmp_path, monkeypatch, gaps):
        by_dt = dict(zip(self.dts, gaps))
        monkeypatch.setattr(runner, "_execute", fake_execute)
        monkeypatch.setattr(runner, "_equivalence_gap", lambda g_run, z_run: by_dt[g_run.value])
        plan = make_plan(tmp_path, kind=ExperimentKind.EQUIVALENCE_CHECK, sweep_values=self.dts)
        exit_code, summary = run(plan)
        assert exit_code == EXIT_SUCCESS
        return summary.sections["equivalence"]

    def test_fourth_order_scatter_is_accepted(self, tmp_path, monkeypatch):
        """Test that gaps close to C·dt⁴ with a few percent scatter pass."""
        gaps = [1000.0 * dt**4 * f for dt, f in zip(self.dts, (1.05, 0.95, 1.0))]
        equivalence = self.run_with_gaps(tmp_path, monkeypatch, gaps)
        assert equivalence["observed_order"] == pytest.approx(4.0, abs=0.2)
        assert equivalence["safety_factor"] > 1.0
        assert equivalence["within_tolerance"] is True

    def test_second_order_gaps_are_rejected(self, tmp_path, monkeypatch):
        """Test that gaps shrinking like dt² fail the fourth-order check."""
        gaps = [10.0 * dt**2 for dt in self.dts]
        equivalence = self.run_with_gaps(tmp_path, monkeypatch, gaps)
        assert equivalence["observed_order"] == pytest.approx(2.0)
        assert equivalence["order_ok"] is False
        assert equivalence["within_tolerance"] is False

    def test_gaps_at_round_off_pass(self, tmp_path, monkeypatch):
        """Test that gaps below the floor pass whatever their order."""
        equivalence = self.run_with_gaps(tmp_path, monkeypatch, [3e-12, 5e-12, 2e-12])
        assert equivalence["order_ok"] is True
        assert equivalence["within_tolerance"] is True


class TestRegularizationSweeps:
    """Test the δ and ε trend fits on real runs."""

    @pytest.mark.slow
    def test_delta_gaps_shrink_at_least_like_sqrt_delta(self, tmp_path):
        """Test that consecutive δ levels converge no slower than δ^{1/2}."""
        plan = make_plan(
            tmp_path,
            kind=ExperimentKind.DELTA_SWEEP,
            config=SolverConfig(t_end=0.05, dt=1e-3, snapshot_every=1000),
            data=InitialDataSpec(preset="single_mode", amplitude=0.1, mode=2),
            sweep_values=(0.4, 0.2, 0.1),
        )
        exit_code, summary = run(plan)
        fits = summary.sections["fits"]
        assert exit_code == EXIT_SUCCESS
        assert np.all(np.asarray(fits["h1_gaps"]) > 0.0)
        assert fits["slope"] >= fits["expected_slope"] - 0.15

    @pytest.mark.slow
    def test_epsilon_gaps_are_linear_in_the_difference(self, tmp_path):
        """Test that the H¹ gap between viscosities scales like |ε - ε'|."""
        plan = make_plan(
            tmp_path,
            kind=ExperimentKind.EPSILON_SWEEP,
            config=SolverConfig(t_end=0.05, dt=1e-3, scheme="imex", snapshot_every=1000),
            data=InitialDataSpec(preset="single_mode", amplitude=0.1, mode=2),
            sweep_values=(0.4, 0.2, 0.1),
        )
        exit_code, summary = run(plan)
        fits = summary.sections["fits"]
        assert exit_code == EXIT_SUCCESS
        assert fits["slope"] == pytest.approx(1.0, abs=0.2)


class TestReproducibility:
    """Test that identical plans give identical artifacts."""

    @pytest.mark.slow
    def test_diagnostics_series_is_byte_identical(self, tmp_path):
        """Test that two runs of one seeded plan write the same diagnostics.csv."""
        data = InitialDataSpec(preset="random_band_limited", amplitude=0.1, k_cut=4)
        written = []
        for name in ("first", "second"):
            plan = make_plan(tmp_path / name, data=data, seed=5, n_points=64)
            exit_code, _ = run(plan)
            assert exit_code == EXIT_SUCCESS
            written.append((plan.output_dir / SERIES_FILE).read_bytes())
        assert written[0] == written[1]
