"""Integration driver: stepping loop, snapshots, blow-up monitor and checkpoints."""

import logging
import time as wallclock
from pathlib import Path
from typing import Callable, Optional, Union

from ..connectors.snapshot_store import Checkpoint, SnapshotStore
from ..diagnostics.records import RecordBuilder
from ..models.interface_state import Formulation
from ..models.solver_config import FormulationChoice, SolverConfig
from ..models.trajectory import State, Trajectory, TrajectoryStatus
from ..muskat.model import SingularStateError, to_g_state, to_z_state
from ..spectral.operators import norm_hs
from .stepper import StepRejectedError, make_stepper, shift_time

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[float, float], None]

LANDING_TOLERANCE = 1e-9


def _prepare(initial: State, config: SolverConfig, formulation: Optional[Formulation]) -> State:
    if formulation is None:
        formulation = Formulation.Z if config.formulation is FormulationChoice.Z else Formulation.G
    return to_z_state(initial) if formulation is Formulation.Z else to_g_state(initial)


def h2_norm(state: State) -> float:
    return norm_hs(to_g_state(state).g, 2.0)


def integrate(
    initial: State,
    config: SolverConfig,
    formulation: Optional[Formulation] = None,
    progress: Optional[ProgressCallback] = None,
    checkpoint_path: Optional[Union[str, Path]] = None,
    resume_from: Optional[Union[str, Path]] = None,
    seed: Optional[int] = None,
) -> Trajectory:
    """Run from `initial` (or a checkpoint) to `config.t_end`.

    The formulation defaults to z when the config asks for z and to g
    otherwise; `both` is resolved by the caller running twice. The run stops
    early when a step cannot be completed or the H² norm of g exceeds the
    blow-up threshold; the partial trajectory is returned with its status.

    Args:
        initial: Initial state of either formulation
        config: Solver configuration
        formulation: Force the evolved formulation
        progress: Called with (time, t_end) after every accepted step
        checkpoint_path: Where checkpoints go when `config.checkpoint_every` > 0
        resume_from: Checkpoint file to resume from instead of `initial`
        seed: Recorded in the trajectory metadata

    Returns:
        Trajectory with snapshots every `config.snapshot_every` steps and at the end
    """
    started = wallclock.perf_counter()
    stepper = make_stepper(config)
    builder = RecordBuilder(config)
    step = 0
    if resume_from is not None:
        checkpoint = SnapshotStore(resume_from).read_checkpoint()
        state = checkpoint.state
        step = checkpoint.step
        builder.restore(checkpoint.accumulator)
        seed = checkpoint.seed if seed is None else seed
        logger.info(f"Resuming from {resume_from} at step {step}, t={state.time:.6g}")
    else:
        state = _prepare(initial, config, formulation)
    store = SnapshotStore(checkpoint_path) if checkpoint_path and config.checkpoint_every else None

    traj = Trajectory(formulation=state.formulation, config=config, seed=seed)
    builder.observe(state)
    traj.append(state, builder.record(state, step), step)
    t_end = config.t_end

    while state.time < t_end:
        dt = config.dt if config.dt is not None else stepper.stable_dt(state)
        remaining = t_end - state.time
        landing = remaining <= dt * (1.0 + LANDING_TOLERANCE)
        if landing:
            dt = remaining
        try:
            new_state = stepper.step(state, dt)
        except (StepRejectedError, SingularStateError) as e:
            logger.error(f"Run stopped at t={state.time:.6g}: {e}")
            if traj.steps[-1] != step:
                traj.append(state, builder.record(state, step), step)
            # an exhausted halving cascade is read as loss of regularity
            status = (
                TrajectoryStatus.BLOW_UP_SUSPECTED
                if isinstance(e, StepRejectedError)
                else TrajectoryStatus.STEP_FAILURE
            )
            traj.mark_failed(status, str(e))
            break
        if landing and new_state.time != t_end and abs(new_state.time - t_end) <= LANDING_TOLERANCE * max(1.0, t_end):
            new_state = shift_time(new_state, t_end)
        state = new_state
        step += 1

        try:
            builder.observe(state)
            size = h2_norm(state)
        except SingularStateError as e:
            logger.error(f"Run stopped at t={state.time:.6g}: {e}")
            traj.append(state, None, step)
            traj.mark_failed(TrajectoryStatus.STEP_FAILURE, str(e))
            break
        if not size <= config.blowup_threshold:
            logger.error(f"Blow-up suspected at t={state.time:.6g}: H2 norm {size:.3e}")
            traj.append(state, builder.record(state, step), step)
            traj.mark_failed(
                TrajectoryStatus.BLOW_UP_SUSPECTED,
                f"H2 norm of g reached {size:.3e} at t={state.time:.6g}",
            )
            break
        if step % config.snapshot_every == 0 or state.time >= t_end:
            traj.append(state, builder.record(state, step), step)
        if store is not None and step % config.checkpoint_every == 0:
            store.write_checkpoint(
                Checkpoint(state=state, step=step, config=config.to_dict(), accumulator=builder.to_dict(), seed=seed)
            )
        if progress is not None:
            progress(state.time, t_end)

    traj.wall_time = wallclock.perf_counter() - started
    traj.metadata["steps"] = step
    logger.info(
        f"Integration finished ({traj.status.value}) at t={traj.final_state.time:.6g} "
        f"after {step} steps, {len(traj)} snapshots"
    )
    return traj
