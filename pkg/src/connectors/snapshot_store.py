"""HDF5 store for trajectory snapshots and checkpoints.

Layout of a store file:

    /                     attrs: kind ("trajectory" | "checkpoint"), formulation, n_points,
                                 config (JSON), seed, status, failure_reason, metadata (JSON)
    /snapshots/000000     attrs: formulation, n_points, time, step, metadata (JSON)
        g | inv_zap, zap, z_minus_id
                          (n, 2) float64 datasets of Fourier coefficients, interleaved real/imag;
                          attr `is_real`

A checkpoint holds a single snapshot plus the energy accumulator in the root
attributes. Coefficients round-trip bit-exactly.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import h5py
import numpy as np

from ..models.interface_state import Formulation, GFormState, ZFormState
from ..models.solver_config import SolverConfig
from ..models.trajectory import State, Trajectory, TrajectoryStatus
from ..spectral.field import SpectralField
from ..spectral.grid import Grid

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


class SnapshotError(Exception):
    """Raised for malformed or incompatible snapshot files."""


@dataclass
class Checkpoint:
    """State and run bookkeeping needed to resume an integration."""

    state: State
    step: int
    config: Dict[str, Any]
    accumulator: Dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None


def _pack(f: SpectralField) -> np.ndarray:
    return np.column_stack([f.coeffs.real, f.coeffs.imag]).astype(np.float64)


def _unpack(dataset: h5py.Dataset, grid: Grid) -> SpectralField:
    data = np.asarray(dataset[()], dtype=np.float64)
    if data.shape != (grid.n_points, 2):
        raise SnapshotError(f"Dataset {dataset.name} has shape {data.shape}, expected ({grid.n_points}, 2)")
    return SpectralField(grid, data[:, 0] + 1j * data[:, 1], is_real=bool(dataset.attrs.get("is_real", False)))


def _fields_of(state: State) -> Dict[str, SpectralField]:
    if isinstance(state, GFormState):
        return {"g": state.g}
    return {"inv_zap": state.inv_zap, "zap": state.zap, "z_minus_id": state.z_minus_id}


class SnapshotStore:
    """Reads and writes snapshot files."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)

    # -- single states -------------------------------------------------------

    @staticmethod
    def write_state(group: h5py.Group, state: State, step: int, metadata: Optional[Dict[str, Any]] = None):
        group.attrs["formulation"] = state.formulation.value
        group.attrs["n_points"] = state.grid.n_points
        group.attrs["time"] = float(state.time)
        group.attrs["step"] = int(step)
        group.attrs["metadata"] = json.dumps(metadata or {})
        for name, f in _fields_of(state).items():
            dataset = group.create_dataset(name, data=_pack(f))
            dataset.attrs["is_real"] = f.is_real

    @staticmethod
    def read_state(group: h5py.Group) -> State:
        try:
            formulation = Formulation(str(group.attrs["formulation"]))
            grid = Grid(int(group.attrs["n_points"]))
            time = float(group.attrs["time"])
            if formulation is Formulation.G:
                return GFormState(_unpack(group["g"], grid), time=time)
            # zap is rebuilt as the pointwise reciprocal, exactly as the stepper does
            return ZFormState.from_inv_zap(
                _unpack(group["inv_zap"], grid), _unpack(group["z_minus_id"], grid), time=time
            )
        except KeyError as e:
            raise SnapshotError(f"Snapshot group {group.name} is missing {e}") from e
        except ValueError as e:
            raise SnapshotError(f"Snapshot group {group.name} is invalid: {e}") from e

    # -- trajectories ----------------------------------------------------------

    def write_trajectory(self, traj: Trajectory) -> Path:
        """Write every snapshot of `traj` (overwrites the file)."""
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with h5py.File(self.path, "w") as handle:
            handle.attrs["kind"] = "trajectory"
            handle.attrs["format_version"] = FORMAT_VERSION
            handle.attrs["formulation"] = traj.formulation.value
            handle.attrs["n_points"] = traj.grid.n_points if traj.snapshots else 0
            handle.attrs["config"] = json.dumps(traj.config.to_dict())
            handle.attrs["seed"] = -1 if traj.seed is None else int(traj.seed)
            handle.attrs["status"] = traj.status.value
            handle.attrs["failure_reason"] = traj.failure_reason or ""
            handle.attrs["metadata"] = json.dumps(traj.metadata, default=str)
            snapshots = handle.create_group("snapshots")
            for index, (state, step) in enumerate(zip(traj.snapshots, traj.steps)):
                self.write_state(snapshots.create_group(f"{index:06d}"), state, step)
        logger.info(f"Trajectory with {len(traj)} snapshots saved to {self.path}")
        return self.path

    def read_trajectory(self) -> Trajectory:
        """Load snapshots and metadata; diagnostics records live in the CSV series."""
        with self._open("trajectory") as handle:
            try:
                config = SolverConfig.from_dict(json.loads(handle.attrs["config"]))
                traj = Trajectory(
                    formulation=Formulation(str(handle.attrs["formulation"])),
                    config=config,
                    seed=None if int(handle.attrs["seed"]) < 0 else int(handle.attrs["seed"]),
                    status=TrajectoryStatus(str(handle.attrs["status"])),
                    failure_reason=str(handle.attrs["failure_reason"]) or None,
                    metadata=json.loads(handle.attrs["metadata"]),
                )
            except (KeyError, ValueError) as e:
                raise SnapshotError(f"Trajectory header in {self.path} is invalid: {e}") from e
            for name in sorted(handle["snapshots"]):
                group = handle["snapshots"][name]
                traj.append(self.read_state(group), None, int(group.attrs["step"]))
        return traj

    # -- checkpoints -----------------------------------------------------------

    def write_checkpoint(self, checkpoint: Checkpoint) -> Path:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        with h5py.File(tmp, "w") as handle:
            handle.attrs["kind"] = "checkpoint"
            handle.attrs["format_version"] = FORMAT_VERSION
            handle.attrs["formulation"] = checkpoint.state.formulation.value
            handle.attrs["n_points"] = checkpoint.state.grid.n_points
            handle.attrs["config"] = json.dumps(checkpoint.config)
            handle.attrs["accumulator"] = json.dumps(checkpoint.accumulator)
            handle.attrs["seed"] = -1 if checkpoint.seed is None else int(checkpoint.seed)
            self.write_state(handle.create_group("snapshots/000000"), checkpoint.state, checkpoint.step)
        tmp.replace(self.path)
        logger.debug(f"Checkpoint at step {checkpoint.step} saved to {self.path}")
        return self.path

    def read_checkpoint(self) -> Checkpoint:
        with self._open("checkpoint") as handle:
            try:
                group = handle["snapshots/000000"]
                seed = int(handle.attrs["seed"])
                return Checkpoint(
                    state=self.read_state(group),
                    step=int(group.attrs["step"]),
                    config=json.loads(handle.attrs["config"]),
                    accumulator=json.loads(handle.attrs["accumulator"]),
                    seed=None if seed < 0 else seed,
                )
            except KeyError as e:
                raise SnapshotError(f"Checkpoint {self.path} is missing {e}") from e

    def read_final_state(self) -> State:
        """Last snapshot of a trajectory file, or the state of a checkpoint."""
        with self._open(None) as handle:
            names = sorted(handle.get("snapshots", {}))
            if not names:
                raise SnapshotError(f"{self.path} holds no snapshots")
            return self.read_state(handle["snapshots"][names[-1]])

    def list_times(self) -> List[float]:
        with self._open(None) as handle:
            return [float(handle["snapshots"][name].attrs["time"]) for name in sorted(handle["snapshots"])]

    def _open(self, expected_kind: Optional[str]) -> h5py.File:
        if not self.path.exists():
            raise SnapshotError(f"Snapshot file not found: {self.path}")
        try:
            handle = h5py.File(self.path, "r")
        except OSError as e:
            raise SnapshotError(f"Cannot read {self.path} as HDF5: {e}") from e
        kind = handle.attrs.get("kind")
        if expected_kind is not None and kind != expected_kind:
            handle.close()
            raise SnapshotError(f"{self.path} is a {kind!r} file, expected {expected_kind!r}")
        return handle


def read_final_state(path: Union[str, Path]) -> State:
    return SnapshotStore(path).read_final_state()
