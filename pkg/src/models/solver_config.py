"""Solver configuration for the time integrator."""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..spectral.mollifier import MollifierSpec


class Scheme(Enum):
    """Time-stepping scheme."""

    RK4 = "rk4"
    IMEX = "imex"


class FormulationChoice(Enum):
    """Which formulation(s) a run integrates."""

    G = "g"
    Z = "z"
    BOTH = "both"


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of one integration run.

    `dt = None` selects the CFL-limited automatic step.
    """

    t_end: float = 1.0
    dt: Optional[float] = None
    epsilon: float = 0.0
    mollifier: MollifierSpec = field(default_factory=MollifierSpec)
    scheme: Scheme = Scheme.RK4
    cfl_safety: float = 0.5
    formulation: FormulationChoice = FormulationChoice.G
    snapshot_every: int = 1
    checkpoint_every: int = 0
    energy_orders: Tuple[int, ...] = (1, 2)
    max_halvings: int = 10
    growth_limit: float = 0.1
    blowup_threshold: float = 1e6

    def __post_init__(self):
        if isinstance(self.scheme, str):
            object.__setattr__(self, "scheme", Scheme(self.scheme))
        if isinstance(self.formulation, str):
            object.__setattr__(self, "formulation", FormulationChoice(self.formulation))
        object.__setattr__(self, "energy_orders", tuple(int(n) for n in self.energy_orders))
        self._validate()

    def _validate(self):
        if not np.isfinite(self.t_end) or self.t_end < 0.0:
            raise ValueError(f"t_end must be >= 0, got {self.t_end}")
        if self.dt is not None and (not np.isfinite(self.dt) or self.dt <= 0.0):
            raise ValueError(f"dt must be > 0 or auto, got {self.dt}")
        if not np.isfinite(self.epsilon) or self.epsilon < 0.0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if self.snapshot_every < 1:
            raise ValueError(f"snapshot_every must be >= 1, got {self.snapshot_every}")
        if self.checkpoint_every < 0:
            raise ValueError(f"checkpoint_every must be >= 0, got {self.checkpoint_every}")
        if any(n < 0 for n in self.energy_orders):
            raise ValueError(f"energy orders must be >= 0, got {self.energy_orders}")
        if self.max_halvings < 0:
            raise ValueError(f"max_halvings must be >= 0, got {self.max_halvings}")
        if self.growth_limit <= 0.0:
            raise ValueError(f"growth_limit must be > 0, got {self.growth_limit}")
        if self.formulation is not FormulationChoice.G and not self.is_unmollified:
            raise ValueError(
                "the z formulation integrates the unmollified system: "
                "epsilon and delta must be 0 when formulation is z or both"
            )

    @property
    def is_unmollified(self) -> bool:
        return self.epsilon == 0.0 and self.mollifier.is_identity

    @property
    def order(self) -> int:
        return 4

    def with_updates(self, **changes: Any) -> "SolverConfig":
        """Copy with selected fields replaced (validated again)."""
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "t_end": self.t_end,
            "dt": "auto" if self.dt is None else self.dt,
            "epsilon": self.epsilon,
            "mollifier": self.mollifier.to_dict(),
            "scheme": self.scheme.value,
            "cfl_safety": self.cfl_safety,
            "formulation": self.formulation.value,
            "snapshot_every": self.snapshot_every,
            "checkpoint_every": self.checkpoint_every,
            "energy_orders": list(self.energy_orders),
            "max_halvings": self.max_halvings,
            "growth_limit": self.growth_limit,
            "blowup_threshold": self.blowup_threshold,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SolverConfig":
        dt = data.get("dt", "auto")
        return cls(
            t_end=float(data.get("t_end", 1.0)),
            dt=None if dt in (None, "auto") else float(dt),
            epsilon=float(data.get("epsilon", 0.0)),
            mollifier=MollifierSpec.from_dict(data.get("mollifier", {})),
            scheme=Scheme(data.get("scheme", Scheme.RK4.value)),
            cfl_safety=float(data.get("cfl_safety", 0.5)),
            formulation=FormulationChoice(data.get("formulation", FormulationChoice.G.value)),
            snapshot_every=int(data.get("snapshot_every", 1)),
            checkpoint_every=int(data.get("checkpoint_every", 0)),
            energy_orders=tuple(data.get("energy_orders", (1, 2))),
            max_halvings=int(data.get("max_halvings", 10)),
            growth_limit=float(data.get("growth_limit", 0.1)),
            blowup_threshold=float(data.get("blowup_threshold", 1e6)),
        )
