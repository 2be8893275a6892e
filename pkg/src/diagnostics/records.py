"""Building diagnostics records while a run advances."""

from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..models.diagnostics_record import DiagnosticsRecord
from ..models.solver_config import SolverConfig
from ..models.trajectory import State
from ..muskat.model import compute_B1, to_g_state, to_z_state
from ..spectral.interpolation import field_extrema
from ..spectral.operators import norm_hhalf
from .energies import EnergyM, energy_M, sobolev_energies


@dataclass
class RecordBuilder:
    """Accumulates the dissipation integral step by step and emits records on demand.

    The accumulator starts at the first observed state; a resumed run restores
    it from the checkpoint with `restore`.
    """

    config: SolverConfig
    accumulated: float = 0.0
    last_time: Optional[float] = None
    last_integrand: float = 0.0
    _cache: Optional[Tuple[float, EnergyM]] = None

    def _energy(self, state: State) -> EnergyM:
        if self._cache is not None and self._cache[0] == state.time:
            return self._cache[1]
        energy = energy_M(to_z_state(state))
        self._cache = (state.time, energy)
        return energy

    def observe(self, state: State) -> None:
        """Advance the trapezoid sum of the dissipation integrand to `state.time`."""
        integrand = self._energy(state).dissipation_integrand
        if self.last_time is not None:
            self.accumulated += 0.5 * (state.time - self.last_time) * (self.last_integrand + integrand)
        self.last_time = state.time
        self.last_integrand = integrand

    def record(self, state: State, step: int) -> DiagnosticsRecord:
        """Full record for `state` (which must already have been observed)."""
        g_state = to_g_state(state)
        z = to_z_state(state)
        energy = self._energy(state)
        g_min, g_max = field_extrema(g_state.g)
        _, f_max = field_extrema(g_state.f)
        return DiagnosticsRecord(
            time=state.time,
            step=step,
            M=energy.instantaneous,
            M_dissipation_accum=self.accumulated,
            M1=energy.instantaneous,
            E_n=sobolev_energies(g_state.g, self.config.energy_orders),
            hhalf_g=norm_hhalf(g_state.g),
            g_min=g_min,
            g_max=g_max,
            f_max=f_max,
            B1_min=float(np.min(compute_B1(z).values)),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "accumulated": self.accumulated,
            "last_time": self.last_time,
            "last_integrand": self.last_integrand,
        }

    def restore(self, data: Dict[str, Any]) -> None:
        self.accumulated = float(data["accumulated"])
        last_time = data.get("last_time")
        self.last_time = None if last_time is None else float(last_time)
        self.last_integrand = float(data["last_integrand"])
        self._cache = None
