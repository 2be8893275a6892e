"""Trajectory: ordered snapshots of one run and their diagnostics."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Union

import numpy as np

from ..spectral.grid import Grid
from .diagnostics_record import DiagnosticsRecord
from .interface_state import Formulation, GFormState, ZFormState
from .solver_config import SolverConfig

State = Union[GFormState, ZFormState]


class TrajectoryStatus(Enum):
    """How a run ended."""

    COMPLETED = "completed"
    BLOW_UP_SUSPECTED = "blow_up_suspected"
    STEP_FAILURE = "step_failure"


@dataclass
class Trajectory:
    """Snapshots of one formulation plus run metadata.

    Snapshot times are strictly increasing; `steps[i]` is the step counter at
    which snapshot i was taken.
    """

    formulation: Formulation
    config: SolverConfig
    snapshots: List[State] = field(default_factory=list)
    records: List[DiagnosticsRecord] = field(default_factory=list)
    steps: List[int] = field(default_factory=list)
    seed: Optional[int] = None
    wall_time: float = 0.0
    status: TrajectoryStatus = TrajectoryStatus.COMPLETED
    failure_reason: Optional[str] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def append(self, state: State, record: Optional[DiagnosticsRecord], step: int) -> None:
        """Add a snapshot; its time must exceed the last stored time."""
        if state.formulation is not self.formulation:
            raise ValueError(
                f"Cannot store a {state.formulation.value}-form state in a "
                f"{self.formulation.value}-form trajectory"
            )
        if self.snapshots and not state.time > self.snapshots[-1].time:
            raise ValueError(
                f"Snapshot times must be strictly increasing: {state.time} after "
                f"{self.snapshots[-1].time}"
            )
        self.snapshots.append(state)
        self.steps.append(int(step))
        if record is not None:
            self.records.append(record)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots], dtype=np.float64)

    @property
    def grid(self) -> Grid:
        if not self.snapshots:
            raise ValueError("Empty trajectory has no grid")
        return self.snapshots[0].grid

    @property
    def initial_state(self) -> State:
        return self.snapshots[0]

    @property
    def final_state(self) -> State:
        return self.snapshots[-1]

    @property
    def succeeded(self) -> bool:
        return self.status is TrajectoryStatus.COMPLETED

    def mark_failed(self, status: TrajectoryStatus, reason: str) -> None:
        self.status = status
        self.failure_reason = reason

    def __len__(self) -> int:
        return len(self.snapshots)

    def summary(self) -> Dict[str, Any]:
        return {
            "formulation": self.formulation.value,
            "n_snapshots": len(self.snapshots),
            "t_start": float(self.times[0]) if self.snapshots else None,
            "t_final": float(self.times[-1]) if self.snapshots else None,
            "final_step": self.steps[-1] if self.steps else 0,
            "status": self.status.value,
            "failure_reason": self.failure_reason,
            "seed": self.seed,
            "wall_time": self.wall_time,
        }
