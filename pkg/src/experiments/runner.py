"""Experiment orchestration: child runs, output files, cross-run analysis and the run summary."""

import logging
import math
import time as wallclock
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..connectors.series_writer import write_series
from ..connectors.snapshot_store import SnapshotError, SnapshotStore
from ..diagnostics.difference import difference_energy
from ..diagnostics.energies import energy_growth_ratio, interior_supremum_check
from ..diagnostics.monitors import conservation_series, max_principle_monitor
from ..diagnostics.report_generator import ReportGenerator, RunSummary
from ..diagnostics.rigidity import profile_jump, rigidity_check, summarize_family
from ..integrator.driver import ProgressCallback, integrate
from ..integrator.flow import FlowMonotonicityError
from ..integrator.stepper import StepRejectedError, make_stepper
from ..models.experiment_plan import ExperimentKind, ExperimentPlan, InitialDataPreset
from ..models.interface_state import Formulation
from ..models.solver_config import FormulationChoice
from ..models.trajectory import Trajectory, TrajectoryStatus
from ..muskat.initial_data import build_initial_state
from ..muskat.model import SingularStateError, to_g_state, to_z_state
from ..spectral.operators import norm_hs, norm_l2
from .fits import fit_power_constant, loglog_slope, per_step_orders, richardson_order, trend_summary

logger = logging.getLogger(__name__)

EXIT_SUCCESS = 0
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_FAILURE = 3
EXIT_IO_ERROR = 4

TRAJECTORY_FILE = "trajectory.h5"
SERIES_FILE = "diagnostics.csv"
CHECKPOINT_FILE = "checkpoint.h5"
SUMMARY_STEM = "summary"
EQUIVALENCE_FLOOR = 1e-6
EQUIVALENCE_SAFETY = 2.0
RK4_ORDER = 4.0
ORDER_SLACK = 1.0


@dataclass
class ChildOutcome:
    """What one child run leaves behind: file locations and its scalar diagnostics."""

    label: str
    value: Optional[float]
    formulation: str
    output_dir: Path
    status: str
    failure_reason: Optional[str] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def trajectory_path(self) -> Path:
        return self.output_dir / TRAJECTORY_FILE

    @property
    def succeeded(self) -> bool:
        return self.status == TrajectoryStatus.COMPLETED.value

    def load(self) -> Trajectory:
        return SnapshotStore(self.trajectory_path).read_trajectory()


def _nan_max(values: Sequence[float]) -> float:
    array = np.abs(np.asarray(values, dtype=np.float64))
    finite = array[np.isfinite(array)]
    return float(np.max(finite)) if finite.size else math.nan


def _run_diagnostics(traj: Trajectory) -> Dict[str, Any]:
    """Scalar post-run diagnostics; fills `cons_residual` in the records."""
    residuals = conservation_series(traj)
    violations = max_principle_monitor(traj)
    growth = energy_growth_ratio(traj.records)
    diagnostics: Dict[str, Any] = {
        **traj.summary(),
        "max_conservation_residual": _nan_max(residuals),
        "max_principle_violations": len(violations),
        "B1_min": min((r.B1_min for r in traj.records), default=math.nan),
        "max_energy_growth_ratio": float(np.max(growth)) if growth.size else 0.0,
    }
    if traj.records:
        final = traj.records[-1]
        diagnostics.update(
            {
                "M_final": final.M,
                "M_dissipation_accum": final.M_dissipation_accum,
                "hhalf_g_final": final.hhalf_g,
                **{f"E_{n}_final": value for n, value in final.E_n.items()},
            }
        )
    try:
        diagnostics["interior_energy"] = interior_supremum_check(to_z_state(traj.final_state))
    except SingularStateError as e:
        logger.warning(f"Interior energy profile skipped: {e}")
    return diagnostics


def run_child(
    plan: ExperimentPlan,
    formulation: Optional[Formulation] = None,
    value: Optional[float] = None,
    progress: Optional[ProgressCallback] = None,
) -> ChildOutcome:
    """Integrate one single-run plan and write its trajectory and diagnostics series.

    With an explicit `formulation` the files go to a subdirectory named after it.
    """
    output_dir = plan.output_dir / formulation.value if formulation is not None else plan.output_dir
    output_dir.mkdir(parents=True, exist_ok=True)
    initial = build_initial_state(plan.initial_data, plan.grid)
    traj = integrate(
        initial,
        plan.base_config,
        formulation=formulation,
        progress=progress,
        checkpoint_path=output_dir / CHECKPOINT_FILE,
        resume_from=plan.resume_from,
        seed=plan.seed,
    )
    traj.metadata["label"] = plan.label
    traj.metadata["preset"] = plan.initial_data.preset.value
    if plan.initial_data.preset is InitialDataPreset.CORNER:
        traj.metadata["corner_eps"] = plan.initial_data.corner_eps
        traj.metadata["nu"] = plan.initial_data.nu

    diagnostics = _run_diagnostics(traj)
    SnapshotStore(output_dir / TRAJECTORY_FILE).write_trajectory(traj)
    write_series(traj.records, output_dir / SERIES_FILE)
    return ChildOutcome(
        label=plan.label,
        value=value,
        formulation=traj.formulation.value,
        output_dir=output_dir,
        status=traj.status.value,
        failure_reason=traj.failure_reason,
        diagnostics=diagnostics,
    )


def _run_task(task: Tuple[ExperimentPlan, Optional[Formulation], Optional[float]]) -> ChildOutcome:
    return run_child(*task)


def _execute(
    tasks: List[Tuple[ExperimentPlan, Optional[Formulation], Optional[float]]],
    threads: int,
    progress: Optional[ProgressCallback] = None,
) -> List[ChildOutcome]:
    """Run the tasks in order, in a process pool when more than one worker is allowed."""
    workers = min(threads, len(tasks))
    if workers <= 1:
        return [run_child(plan, formulation, value, progress) for plan, formulation, value in tasks]
    logger.info(f"Running {len(tasks)} child runs on {workers} workers")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_task, tasks))


def _final_g(outcome: ChildOutcome):
    return to_g_state(outcome.load().final_state).g


def _sweep_tasks(plan: ExperimentPlan, formulation: Optional[Formulation] = None):
    values = plan.sweep_values or (None,)
    return [(child, formulation, value) for child, value in zip(plan.child_plans(), values)]


def _with_fixed_dt(plan: ExperimentPlan) -> ExperimentPlan:
    """Pin dt to the smallest automatic step over the children so snapshot times coincide."""
    if plan.base_config.dt is not None:
        return plan
    steps = []
    for child in plan.child_plans():
        stepper = make_stepper(child.base_config)
        steps.append(stepper.stable_dt(build_initial_state(child.initial_data, child.grid)))
    dt = min(steps)
    logger.info(f"Fixed dt={dt:.6g} for matched snapshot times")
    return replace(plan, base_config=plan.base_config.with_updates(dt=dt))


def _record_children(summary: RunSummary, outcomes: Sequence[ChildOutcome], root: Path) -> None:
    for outcome in outcomes:
        name = outcome.output_dir.relative_to(root).as_posix()
        name = "run" if name == "." else name
        summary.add_section("runs", {name: outcome.diagnostics})
    failed = [o for o in outcomes if not o.succeeded]
    if failed:
        first = failed[0]
        summary.status = first.status
        summary.failure_reason = f"{first.label or 'run'}: {first.failure_reason}"
        summary.exit_code = EXIT_NUMERICAL_FAILURE


def _equivalence_gap(g_outcome: ChildOutcome, z_outcome: ChildOutcome) -> float:
    """L² distance at the final time between the g run and the z run mapped back to g."""
    return norm_l2(_final_g(g_outcome) - _final_g(z_outcome))


# -- experiment kinds ----------------------------------------------------------


def _run_single(plan: ExperimentPlan, summary: RunSummary, progress: Optional[ProgressCallback]) -> None:
    if plan.base_config.formulation is FormulationChoice.BOTH:
        tasks = [(plan, Formulation.G, None), (plan, Formulation.Z, None)]
        outcomes = _execute(tasks, plan.threads, progress)
        _record_children(summary, outcomes, plan.output_dir)
        if all(o.succeeded for o in outcomes):
            summary.add_section("equivalence", {"l2_gap": _equivalence_gap(*outcomes)})
        return
    outcome = run_child(plan, progress=progress)
    _record_children(summary, [outcome], plan.output_dir)
    if plan.initial_data.preset is InitialDataPreset.CORNER:
        report = rigidity_check(outcome.load(), tip_alpha=plan.tip_alpha)
        summary.add_section("rigidity", report.summary())


def _run_dt_sweep(plan: ExperimentPlan, summary: RunSummary, progress: Optional[ProgressCallback]) -> None:
    tasks = sorted(_sweep_tasks(plan), key=lambda task: -task[2])
    outcomes = _execute(tasks, plan.threads, progress)
    _record_children(summary, outcomes, plan.output_dir)
    if summary.exit_code:
        return
    dts = np.array([o.value for o in outcomes])
    finals = [_final_g(o) for o in outcomes]
    gaps = np.array([norm_l2(coarse - fine) for coarse, fine in zip(finals[:-1], finals[1:])])
    fits: Dict[str, Any] = {"dt": dts[:-1], "self_convergence_gaps": gaps}
    if gaps.size >= 2:
        fits["loglog_slope"] = loglog_slope(dts[:-1], gaps)[0]
        fits["per_step_orders"] = per_step_orders(dts[:-1], gaps)
        fits["richardson_order"] = richardson_order(gaps[-2], gaps[-1], ratio=dts[-3] / dts[-2])
    summary.add_section("fits", fits)


def _regularization_gaps(outcomes: Sequence[ChildOutcome]) -> np.ndarray:
    finals = [_final_g(o) for o in outcomes]
    return np.array([norm_hs(a - b, 1.0) for a, b in zip(finals[:-1], finals[1:])])


def _run_delta_sweep(plan: ExperimentPlan, summary: RunSummary, progress: Optional[ProgressCallback]) -> None:
    tasks = sorted(_sweep_tasks(plan), key=lambda task: -task[2])
    outcomes = _execute(tasks, plan.threads, progress)
    _record_children(summary, outcomes, plan.output_dir)
    if summary.exit_code:
        return
    deltas = np.array([o.value for o in outcomes])
    gaps = _regularization_gaps(outcomes)
    scale = np.maximum(deltas[:-1], deltas[1:])
    summary.add_section(
        "fits", {"delta": scale, "h1_gaps": gaps, **trend_summary(scale, gaps, expected=0.5)}
    )


def _run_epsilon_sweep(plan: ExperimentPlan, summary: RunSummary, progress: Optional[ProgressCallback]) -> None:
    tasks = sorted(_sweep_tasks(plan), key=lambda task: -task[2])
    outcomes = _execute(tasks, plan.threads, progress)
    _record_children(summary, outcomes, plan.output_dir)
    if summary.exit_code:
        return
    eps = np.array([o.value for o in outcomes])
    gaps = _regularization_gaps(outcomes)
    spread = np.abs(eps[:-1] - eps[1:])
    summary.add_section(
        "fits", {"epsilon_difference": spread, "h1_gaps": gaps, **trend_summary(spread, gaps, expected=1.0)}
    )


def _run_corner_family(plan: ExperimentPlan, summary: RunSummary, progress: Optional[ProgressCallback]) -> None:
    tasks = sorted(_sweep_tasks(plan), key=lambda task: -task[2])
    outcomes = _execute(tasks, plan.threads, progress)
    _record_children(summary, outcomes, plan.output_dir)
    if summary.exit_code:
        return
    reports = []
    for outcome in outcomes:
        traj = outcome.load()
        report = rigidity_check(traj, tip_alpha=plan.tip_alpha)
        reports.append(report)
        details = report.summary()
        details["profile_jump_initial"] = profile_jump(to_g_state(traj.initial_state).g)
        summary.add_section("rigidity", {outcome.label: details})
    summary.add_section("rigidity", {"family": summarize_family(reports, [o.value for o in outcomes])})


def _run_difference_pair(plan: ExperimentPlan, summary: RunSummary, progress: Optional[ProgressCallback]) -> None:
    plan = _with_fixed_dt(plan)
    outcomes = _execute(_sweep_tasks(plan), plan.threads, progress)
    _record_children(summary, outcomes, plan.output_dir)
    if summary.exit_code:
        return
    pair = difference_energy(outcomes[0].load(), outcomes[1].load())
    summary.add_section(
        "difference",
        {
            "parameter": plan.pair_parameter,
            "values": list(plan.sweep_values),
            **pair.summary(),
            "times": pair.times,
            "stability_ratio": pair.ratio,
        },
    )


def _run_equivalence_check(plan: ExperimentPlan, summary: RunSummary, progress: Optional[ProgressCallback]) -> None:
    tasks = []
    for child, _, value in _sweep_tasks(plan):
        tasks.append((child, Formulation.G, value))
        tasks.append((child, Formulation.Z, value))
    outcomes = _execute(tasks, plan.threads, progress)
    _record_children(summary, outcomes, plan.output_dir)
    if summary.exit_code:
        return
    pairs = list(zip(outcomes[0::2], outcomes[1::2]))
    gaps = np.array([_equivalence_gap(g_run, z_run) for g_run, z_run in pairs])
    equivalence: Dict[str, Any] = {"l2_gaps": gaps}
    dts = [value for _, _, value in tasks[0::2]]
    if len(dts) >= 3 and all(dt is not None for dt in dts):
        constant = fit_power_constant(dts, gaps, RK4_ORDER)
        order, _ = loglog_slope(dts, gaps)
        tolerance = np.maximum(EQUIVALENCE_FLOOR, EQUIVALENCE_SAFETY * constant * np.asarray(dts) ** RK4_ORDER)
        # gaps at the floor carry no order information
        resolved = bool(np.any(gaps > EQUIVALENCE_FLOOR))
        order_ok = not resolved or (math.isfinite(order) and abs(order - RK4_ORDER) <= ORDER_SLACK)
        equivalence.update(
            {
                "dt": dts,
                "fitted_constant": constant,
                "safety_factor": EQUIVALENCE_SAFETY,
                "observed_order": order,
                "order_ok": order_ok,
                "tolerance": tolerance,
            }
        )
    else:
        order_ok = True
        tolerance = np.full(gaps.size, EQUIVALENCE_FLOOR)
        equivalence["tolerance"] = tolerance
    equivalence["within_tolerance"] = bool(np.all(gaps <= tolerance)) and order_ok
    summary.add_section("equivalence", equivalence)


_HANDLERS: Dict[ExperimentKind, Callable[[ExperimentPlan, RunSummary, Optional[ProgressCallback]], None]] = {
    ExperimentKind.SINGLE: _run_single,
    ExperimentKind.DT_SWEEP: _run_dt_sweep,
    ExperimentKind.DELTA_SWEEP: _run_delta_sweep,
    ExperimentKind.EPSILON_SWEEP: _run_epsilon_sweep,
    ExperimentKind.CORNER_FAMILY: _run_corner_family,
    ExperimentKind.DIFFERENCE_PAIR: _run_difference_pair,
    ExperimentKind.EQUIVALENCE_CHECK: _run_equivalence_check,
}


def run(plan: ExperimentPlan, progress: Optional[ProgressCallback] = None) -> Tuple[int, RunSummary]:
    """Execute a plan, write every artifact and the run summary.

    Returns:
        (exit code, summary): 0 success, 3 numerical failure or blow-up, 4 I/O error
    """
    started = wallclock.perf_counter()
    summary = RunSummary(plan=plan.to_dict(), status=TrajectoryStatus.COMPLETED.value)
    logger.info(f"Running {plan.kind.value} experiment into {plan.output_dir}")
    try:
        plan.output_dir.mkdir(parents=True, exist_ok=True)
        _HANDLERS[plan.kind](plan, summary, progress)
    except (StepRejectedError, SingularStateError, FlowMonotonicityError) as e:
        logger.error(f"Numerical failure: {e}")
        summary.status = "numerical_failure"
        summary.failure_reason = str(e)
        summary.exit_code = EXIT_NUMERICAL_FAILURE
    except ValueError as e:
        logger.error(f"Invalid experiment: {e}")
        summary.status = "invalid"
        summary.failure_reason = str(e)
        summary.exit_code = EXIT_CONFIG_ERROR
    except (OSError, SnapshotError) as e:
        logger.error(f"I/O failure: {e}")
        summary.status = "io_failure"
        summary.failure_reason = str(e)
        summary.exit_code = EXIT_IO_ERROR
    summary.wall_time = wallclock.perf_counter() - started

    try:
        ReportGenerator().generate_report(
            summary, format_type=plan.report_format, output_path=plan.output_dir / SUMMARY_STEM
        )
    except OSError as e:
        logger.error(f"Cannot write the run summary: {e}")
        summary.exit_code = summary.exit_code or EXIT_IO_ERROR
    return summary.exit_code, summary
