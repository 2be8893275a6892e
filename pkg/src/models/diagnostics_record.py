"""Per-snapshot diagnostics record."""

from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List

import numpy as np


@dataclass
class DiagnosticsRecord:
    """Energies, norms, residuals and extrema measured at one snapshot.

    `cons_residual` is NaN until the conservation series has been filled in
    from neighbouring snapshots.
    """

    time: float
    step: int = 0
    M: float = 0.0
    M_dissipation_accum: float = 0.0
    M1: float = 0.0
    E_n: Dict[int, float] = field(default_factory=dict)
    hhalf_g: float = 0.0
    cons_residual: float = float("nan")
    g_min: float = 0.0
    g_max: float = 0.0
    f_max: float = 0.0
    B1_min: float = 0.0

    # Quantities whose finiteness is required on accepted steps.
    _CHECKED = ("time", "M", "M_dissipation_accum", "M1", "hhalf_g", "g_min", "g_max", "f_max", "B1_min")

    def is_finite(self) -> bool:
        values = [getattr(self, name) for name in self._CHECKED]
        values.extend(self.E_n.values())
        return bool(np.all(np.isfinite(values)))

    def to_row(self) -> Dict[str, Any]:
        """Flat mapping in field order, with E_n expanded as E_1, E_2, ..."""
        row: Dict[str, Any] = {
            "time": self.time,
            "step": self.step,
            "M": self.M,
            "M_dissipation_accum": self.M_dissipation_accum,
            "M1": self.M1,
        }
        for order in sorted(self.E_n):
            row[f"E_{order}"] = self.E_n[order]
        row.update(
            {
                "hhalf_g": self.hhalf_g,
                "cons_residual": self.cons_residual,
                "g_min": self.g_min,
                "g_max": self.g_max,
                "f_max": self.f_max,
                "B1_min": self.B1_min,
            }
        )
        return row

    @classmethod
    def from_row(cls, row: Dict[str, Any]) -> "DiagnosticsRecord":
        energies = {
            int(key.split("_", 1)[1]): float(value)
            for key, value in row.items()
            if key.startswith("E_")
        }
        return cls(
            time=float(row["time"]),
            step=int(row.get("step", 0)),
            M=float(row.get("M", 0.0)),
            M_dissipation_accum=float(row.get("M_dissipation_accum", 0.0)),
            M1=float(row.get("M1", 0.0)),
            E_n=energies,
            hhalf_g=float(row.get("hhalf_g", 0.0)),
            cons_residual=float(row.get("cons_residual", float("nan"))),
            g_min=float(row.get("g_min", 0.0)),
            g_max=float(row.get("g_max", 0.0)),
            f_max=float(row.get("f_max", 0.0)),
            B1_min=float(row.get("B1_min", 0.0)),
        )


def record_columns(energy_orders: Iterable[int]) -> List[str]:
    """CSV column order for records carrying the given energy orders."""
    template = DiagnosticsRecord(time=0.0, E_n={int(n): 0.0 for n in energy_orders})
    return list(template.to_row())
