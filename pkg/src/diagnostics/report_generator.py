"""Run-summary reports in several output formats."""
import json
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

logger = logging.getLogger(__name__)

SUCCESS_STATUSES = ("completed",)


@dataclass
class ReportMetadata:
    """Metadata for run summaries."""
    generated_at: datetime
    kind: str
    label: str = ""
    version: str = "1.0"


@dataclass
class RunSummary:
    """Everything a run reports: the resolved plan, the outcome and named result sections.

    Sections map a title (``residuals``, ``fits``, ``rigidity``, ...) to a flat
    or nested dictionary of numbers, strings and lists.
    """
    plan: Dict[str, Any]
    status: str
    exit_code: int = 0
    wall_time: float = 0.0
    sections: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    failure_reason: Optional[str] = None

    @property
    def succeeded(self) -> bool:
        return self.exit_code == 0

    def add_section(self, title: str, values: Dict[str, Any]) -> None:
        self.sections.setdefault(title, {}).update(values)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": self.status,
            "exit_code": self.exit_code,
            "failure_reason": self.failure_reason,
            "wall_time": self.wall_time,
            "plan": self.plan,
            **self.sections,
        }


def to_jsonable(value: Any) -> Any:
    """Plain Python values for numpy scalars, arrays, complex numbers and paths."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, Path):
        return str(value)
    return value


def _format_value(value: Any) -> str:
    value = to_jsonable(value)
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, list):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    return str(value)


def _flatten(values: Dict[str, Any], prefix: str = "") -> List[tuple]:
    rows = []
    for key, value in values.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            rows.extend(_flatten(value, f"{name}."))
        else:
            rows.append((name, value))
    return rows


class ReportFormatter(ABC):
    """Abstract base class for report formatters."""

    @abstractmethod
    def format(self, summary: RunSummary, metadata: ReportMetadata) -> str:
        """Format a run summary.

        Args:
            summary: RunSummary of a finished run
            metadata: Report metadata

        Returns:
            Formatted report as string
        """

    @property
    @abstractmethod
    def file_extension(self) -> str:
        """File extension for this format."""


class JSONFormatter(ReportFormatter):
    """JSON report formatter for programmatic access."""

    def __init__(self, pretty_print: bool = True):
        self.pretty_print = pretty_print

    @property
    def file_extension(self) -> str:
        return ".json"

    def format(self, summary: RunSummary, metadata: ReportMetadata) -> str:
        report_data = {
            "metadata": {
                "generated_at": metadata.generated_at.isoformat(),
                "version": metadata.version,
                "kind": metadata.kind,
                "label": metadata.label,
            },
            **to_jsonable(summary.to_dict()),
        }
        if self.pretty_print:
            return json.dumps(report_data, indent=2, ensure_ascii=False)
        return json.dumps(report_data, separators=(",", ":"), ensure_ascii=False)


class MarkdownFormatter(ReportFormatter):
    """Markdown report with one table per result section."""

    def __init__(self, include_emoji: bool = True, include_plan: bool = True):
        self.include_emoji = include_emoji
        self.include_plan = include_plan

    @property
    def file_extension(self) -> str:
        return ".md"

    def format(self, summary: RunSummary, metadata: ReportMetadata) -> str:
        lines = self._format_header(summary, metadata)
        for title, values in summary.sections.items():
            lines.append("")
            lines.extend(self._format_table(title.replace("_", " ").title(), values))
        if self.include_plan:
            lines.append("")
            lines.extend(self._format_table("Plan", summary.plan))
        return "\n".join(lines) + "\n"

    def _format_header(self, summary: RunSummary, metadata: ReportMetadata) -> List[str]:
        emoji = self._get_status_emoji(summary.status) + " " if self.include_emoji else ""
        title = f"# {emoji}Muskat run: {metadata.kind}"
        if metadata.label:
            title += f" ({metadata.label})"
        lines = [
            title,
            "",
            f"**Generated:** {metadata.generated_at.strftime('%Y-%m-%d %H:%M:%S')}",
            f"**Status:** {summary.status} (exit code {summary.exit_code})",
            f"**Wall time:** {summary.wall_time:.2f} s",
        ]
        if summary.failure_reason:
            lines.append(f"**Failure:** {summary.failure_reason}")
        return lines

    def _format_table(self, title: str, values: Dict[str, Any]) -> List[str]:
        lines = [f"## {title}", "", "| Quantity | Value |", "|:---|---:|"]
        for name, value in _flatten(values):
            lines.append(f"| {name} | {_format_value(value)} |")
        return lines

    def _get_status_emoji(self, status: str) -> str:
        if status in SUCCESS_STATUSES:
            return "✅"
        if status == "blow_up_suspected":
            return "💥"
        return "❌"


class TextFormatter(ReportFormatter):
    """Plain text report for terminal output."""

    def __init__(self, width: int = 80):
        self.width = width

    @property
    def file_extension(self) -> str:
        return ".txt"

    def format(self, summary: RunSummary, metadata: ReportMetadata) -> str:
        rule = "=" * self.width
        lines = [
            rule,
            f"MUSKAT RUN SUMMARY: {metadata.kind.upper()}".center(self.width),
            rule,
            f"Generated: {metadata.generated_at.strftime('%Y-%m-%d %H:%M:%S')}",
            f"Status:    {summary.status} (exit code {summary.exit_code})",
            f"Wall time: {summary.wall_time:.2f} s",
        ]
        if summary.failure_reason:
            lines.append(f"Failure:   {summary.failure_reason}")
        for title, values in summary.sections.items():
            lines.extend(["", title.upper(), "-" * len(title)])
            rows = _flatten(values)
            pad = max((len(name) for name, _ in rows), default=0)
            lines.extend(f"  {name.ljust(pad)}  {_format_value(value)}" for name, value in rows)
        return "\n".join(lines) + "\n"


class ReportGenerator:
    """Writes run summaries through a registry of formatters."""

    def __init__(self):
        self.formatters: Dict[str, ReportFormatter] = {
            "json": JSONFormatter(),
            "markdown": MarkdownFormatter(),
            "text": TextFormatter(),
        }

    def generate_report(
        self,
        summary: RunSummary,
        format_type: str = "json",
        output_path: Optional[Union[str, Path]] = None,
        metadata_overrides: Optional[Dict[str, Any]] = None,
    ) -> str:
        """Generate a run summary in the requested format.

        Args:
            summary: RunSummary of a finished run
            format_type: Output format ('json', 'markdown', 'text')
            output_path: Optional path to save the report; the format's extension is added when missing
            metadata_overrides: Optional metadata overrides

        Returns:
            Formatted report as string

        Raises:
            ValueError: If format_type is not supported
        """
        if format_type not in self.formatters:
            available = ", ".join(self.formatters.keys())
            raise ValueError(f"Unsupported format '{format_type}'. Available: {available}")

        metadata = ReportMetadata(
            generated_at=datetime.now(),
            kind=str(summary.plan.get("kind", "single")),
            label=str(summary.plan.get("label", "")),
        )
        for key, value in (metadata_overrides or {}).items():
            if hasattr(metadata, key):
                setattr(metadata, key, value)

        formatter = self.formatters[format_type]
        report_content = formatter.format(summary, metadata)

        if output_path:
            output_path = Path(output_path)
            if output_path.suffix == "":
                output_path = output_path.with_suffix(formatter.file_extension)
            output_path.parent.mkdir(parents=True, exist_ok=True)
            output_path.write_text(report_content, encoding="utf-8")
            logger.info(f"Report saved to {output_path}")

        return report_content

    def add_formatter(self, name: str, formatter: ReportFormatter) -> None:
        self.formatters[name] = formatter

    def get_available_formats(self) -> List[str]:
        return list(self.formatters.keys())

    def file_extension(self, format_type: str) -> str:
        return self.formatters[format_type].file_extension
