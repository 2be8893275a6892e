"""Experiment plans: what to run, with which data, and where to write it."""

from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..spectral.grid import Grid
from ..spectral.mollifier import MollifierSpec
from .solver_config import FormulationChoice, SolverConfig


class ExperimentKind(Enum):
    """Supported experiment kinds."""

    SINGLE = "single"
    DT_SWEEP = "dt_sweep"
    DELTA_SWEEP = "delta_sweep"
    EPSILON_SWEEP = "epsilon_sweep"
    CORNER_FAMILY = "corner_family"
    DIFFERENCE_PAIR = "difference_pair"
    EQUIVALENCE_CHECK = "equivalence_check"

    @property
    def is_sweep(self) -> bool:
        return self in _SWEEP_PARAMETER


class InitialDataPreset(Enum):
    """Named initial data families."""

    FLAT = "flat"
    SINGLE_MODE = "single_mode"
    RANDOM_BAND_LIMITED = "random_band_limited"
    CORNER = "corner"
    SHIFTED_SNAPSHOT = "shifted_snapshot"


_SWEEP_PARAMETER = {
    ExperimentKind.DT_SWEEP: "dt",
    ExperimentKind.DELTA_SWEEP: "delta",
    ExperimentKind.EPSILON_SWEEP: "epsilon",
    ExperimentKind.CORNER_FAMILY: "corner_eps",
    ExperimentKind.DIFFERENCE_PAIR: None,
}

PAIR_PARAMETERS = ("corner_eps", "amplitude", "epsilon", "delta")
REPORT_FORMATS = ("json", "markdown", "text")


@dataclass(frozen=True)
class InitialDataSpec:
    """Preset name plus its parameters."""

    preset: InitialDataPreset = InitialDataPreset.FLAT
    amplitude: float = 1e-3
    mode: int = 1
    seed: int = 0
    k_cut: int = 8
    decay: float = 2.0
    nu: float = 0.4
    corner_eps: float = 0.05
    snapshot_path: Optional[Path] = None
    depth: float = 0.05

    def __post_init__(self):
        if isinstance(self.preset, str):
            object.__setattr__(self, "preset", InitialDataPreset(self.preset))
        if self.snapshot_path is not None and not isinstance(self.snapshot_path, Path):
            object.__setattr__(self, "snapshot_path", Path(self.snapshot_path))
        if not 0.0 < self.nu < 1.0:
            raise ValueError(f"nu must lie in (0,1), got {self.nu}")
        if not self.corner_eps > 0.0:
            raise ValueError(f"corner_eps must be > 0, got {self.corner_eps}")
        if self.mode < 1:
            raise ValueError(f"mode must be >= 1, got {self.mode}")
        if self.k_cut < 1:
            raise ValueError(f"k_cut must be >= 1, got {self.k_cut}")
        if not np.isfinite(self.amplitude):
            raise ValueError(f"amplitude must be finite, got {self.amplitude}")
        if self.depth <= 0.0:
            raise ValueError(f"depth must be > 0, got {self.depth}")
        if self.preset is InitialDataPreset.SHIFTED_SNAPSHOT and self.snapshot_path is None:
            raise ValueError("shifted_snapshot needs snapshot_path")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "preset": self.preset.value,
            "amplitude": self.amplitude,
            "mode": self.mode,
            "seed": self.seed,
            "k_cut": self.k_cut,
            "decay": self.decay,
            "nu": self.nu,
            "corner_eps": self.corner_eps,
            "snapshot_path": str(self.snapshot_path) if self.snapshot_path else None,
            "depth": self.depth,
        }


@dataclass(frozen=True)
class ExperimentPlan:
    """A validated experiment: kind, base configuration, data, sweep and output location."""

    kind: ExperimentKind
    base_config: SolverConfig
    initial_data: InitialDataSpec
    n_points: int = 256
    sweep_values: Tuple[float, ...] = ()
    pair_parameter: str = "corner_eps"
    output_dir: Path = Path("runs")
    seed: int = 0
    threads: int = 1
    tip_alpha: float = float(np.pi)
    report_format: str = "json"
    label: str = ""
    resume_from: Optional[Path] = None
    defaults_used: Tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", ExperimentKind(self.kind))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        if self.resume_from is not None:
            object.__setattr__(self, "resume_from", Path(self.resume_from))
            if self.kind is not ExperimentKind.SINGLE:
                raise ValueError("resume_from applies to single runs only")
        object.__setattr__(self, "sweep_values", tuple(float(v) for v in self.sweep_values))
        Grid(self.n_points)
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")
        if self.kind.is_sweep and not self.sweep_values:
            raise ValueError(f"sweep_values must be non-empty for {self.kind.value}")
        if self.kind is ExperimentKind.DIFFERENCE_PAIR:
            if len(self.sweep_values) != 2:
                raise ValueError("difference_pair needs exactly two sweep_values")
            if self.pair_parameter not in PAIR_PARAMETERS:
                raise ValueError(
                    f"pair_parameter must be one of {', '.join(PAIR_PARAMETERS)}, "
                    f"got {self.pair_parameter}"
                )
        if self.kind in (ExperimentKind.DELTA_SWEEP, ExperimentKind.EPSILON_SWEEP) or (
            self.kind is ExperimentKind.DIFFERENCE_PAIR and self.pair_parameter in ("epsilon", "delta")
        ):
            if self.base_config.formulation is not FormulationChoice.G:
                raise ValueError(f"{self.kind.value} runs the g formulation only")
        if self.kind is ExperimentKind.EQUIVALENCE_CHECK and not self.base_config.is_unmollified:
            raise ValueError("equivalence_check compares unmollified runs: epsilon and delta must be 0")
        if self.report_format not in REPORT_FORMATS:
            raise ValueError(f"report_format must be one of {', '.join(REPORT_FORMATS)}, got {self.report_format}")
        if self.kind is ExperimentKind.CORNER_FAMILY and self.initial_data.preset is not InitialDataPreset.CORNER:
            raise ValueError("corner_family needs the corner preset")
        if any(v <= 0.0 for v in self.sweep_values) and self.kind is not ExperimentKind.DIFFERENCE_PAIR:
            raise ValueError(f"sweep_values must be > 0, got {list(self.sweep_values)}")

    @property
    def grid(self) -> Grid:
        return Grid(self.n_points)

    @property
    def sweep_parameter(self) -> Optional[str]:
        if self.kind is ExperimentKind.DIFFERENCE_PAIR:
            return self.pair_parameter
        if self.kind is ExperimentKind.EQUIVALENCE_CHECK and self.sweep_values:
            return "dt"
        return _SWEEP_PARAMETER.get(self.kind)

    def _with_value(self, parameter: str, value: float) -> "ExperimentPlan":
        config = self.base_config
        data = self.initial_data
        if parameter == "dt":
            config = config.with_updates(dt=value)
        elif parameter == "epsilon":
            config = config.with_updates(epsilon=value)
        elif parameter == "delta":
            config = config.with_updates(
                mollifier=MollifierSpec(delta=value, profile=config.mollifier.profile)
            )
        elif parameter == "corner_eps":
            data = replace(data, corner_eps=value)
        elif parameter == "amplitude":
            data = replace(data, amplitude=value)
        else:
            raise ValueError(f"Unknown sweep parameter {parameter}")
        return replace(
            self,
            kind=ExperimentKind.SINGLE,
            base_config=config,
            initial_data=data,
            sweep_values=(),
            output_dir=self.output_dir / f"{parameter}_{value:g}",
            label=f"{parameter}={value:g}",
        )

    def child_plans(self) -> List["ExperimentPlan"]:
        """Single-run plans making up this experiment, in sweep order."""
        parameter = self.sweep_parameter
        if parameter is None:
            return [replace(self, kind=ExperimentKind.SINGLE, label=self.label or "base")]
        return [self._with_value(parameter, value) for value in self.sweep_values]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "n_points": self.n_points,
            "solver": self.base_config.to_dict(),
            "initial_data": self.initial_data.to_dict(),
            "sweep_values": list(self.sweep_values),
            "sweep_parameter": self.sweep_parameter,
            "output_dir": str(self.output_dir),
            "seed": self.seed,
            "threads": self.threads,
            "tip_alpha": self.tip_alpha,
            "report_format": self.report_format,
            "label": self.label,
            "resume_from": str(self.resume_from) if self.resume_from else None,
            "defaults_used": list(self.defaults_used),
        }
