"""CSV time series of diagnostics records."""

import logging
from pathlib import Path
from typing import List, Sequence, Union

import pandas as pd

from ..models.diagnostics_record import DiagnosticsRecord, record_columns

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def records_to_frame(records: Sequence[DiagnosticsRecord]) -> pd.DataFrame:
    """One row per record, columns in record field order."""
    orders = sorted({n for r in records for n in r.E_n}) if records else []
    columns = record_columns(orders)
    return pd.DataFrame([r.to_row() for r in records], columns=columns)


def write_series(records: Sequence[DiagnosticsRecord], path: Union[str, Path]) -> Path:
    """Write records to CSV with round-trip float precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    records_to_frame(records).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"Diagnostics series ({len(records)} rows) saved to {path}")
    return path


def read_series(path: Union[str, Path]) -> List[DiagnosticsRecord]:
    frame = pd.read_csv(path)
    return [DiagnosticsRecord.from_row(row) for row in frame.to_dict(orient="records")]
