"""
Output Strategy Pattern - machine-readable defaults for run summaries

The summary files are always written; these strategies only decide what is
echoed to stdout.
"""

import io
import json
from abc import ABC, abstractmethod
from enum import Enum
from typing import Any, Dict

from rich.console import Console
from rich.table import Table


class OutputFormat(str, Enum):
    """Available stdout formats"""

    SILENT = "silent"  # Default: exit code only
    COMPACT = "compact"  # Minimal JSON on one line
    JSON = "json"  # Pretty JSON
    HUMAN = "human"  # Rich tables


class OutputStrategy(ABC):
    """Abstract base class for output strategies"""

    @abstractmethod
    def format_result(self, data: Dict[str, Any]) -> str:
        """Format the result data according to strategy"""

    @abstractmethod
    def format_error(self, error: str, code: int = 1) -> str:
        """Format error messages according to strategy"""


class CompactStrategy(OutputStrategy):
    """Compact JSON, null and empty values dropped"""

    def format_result(self, data: Dict[str, Any]) -> str:
        return json.dumps(self._clean_data(data), separators=(",", ":"), sort_keys=True)

    def format_error(self, error: str, code: int = 1) -> str:
        return json.dumps({"error": error, "code": code}, separators=(",", ":"))

    def _clean_data(self, data: Dict[str, Any]) -> Dict[str, Any]:
        cleaned: Dict[str, Any] = {}
        for key, value in data.items():
            if value is None or value == [] or value == {}:
                continue
            if isinstance(value, dict):
                nested = self._clean_data(value)
                if nested:
                    cleaned[key] = nested
            else:
                cleaned[key] = value
        return cleaned


class JsonStrategy(OutputStrategy):
    """Pretty JSON output for debugging"""

    def format_result(self, data: Dict[str, Any]) -> str:
        return json.dumps(data, indent=2, sort_keys=True)

    def format_error(self, error: str, code: int = 1) -> str:
        return json.dumps({"error": error, "code": code}, indent=2)


class HumanStrategy(OutputStrategy):
    """Rich tables for echoes, fits and diagnostics"""

    def format_result(self, data: Dict[str, Any]) -> str:
        console = Console(file=io.StringIO(), record=True, width=100, color_system=None)
        title = data.get("scenario", "run")
        console.print(f"[bold]Scenario:[/bold] {title}")

        echoes = (data.get("echo_report") or {}).get("echoes", [])
        if echoes:
            table = Table(title="Echoes")
            for column in ("bit", "time (us)", "|S|", "efficiency"):
                table.add_column(column)
            for echo in echoes:
                table.add_row(
                    str(echo.get("bit") or "-"),
                    f"{echo['time_us']:.2f}",
                    f"{echo['amplitude']:.4e}",
                    "-" if echo.get("efficiency") is None else f"{echo['efficiency']:.4f}",
                )
            console.print(table)
        elif "echo_report" in data:
            console.print("No echoes above the noise floor")

        fit = data.get("fit")
        if fit:
            console.print(f"Fit: tau = {fit['tau_us']:.2f} us, R^2 = {fit['r_squared']:.5f}")
        if data.get("storage_capacity") is not None:
            console.print(f"Storage capacity: {data['storage_capacity']}")

        diagnostics = data.get("diagnostics") or {}
        for key in sorted(diagnostics):
            value = diagnostics[key]
            if value is not None:
                console.print(f"{key}: {value:.3e}" if isinstance(value, float) else f"{key}: {value}")
        for message in data.get("warnings") or []:
            console.print(f"Warning: {message}", markup=False)
        return console.export_text().rstrip()

    def format_error(self, error: str, code: int = 1) -> str:
        return f"Error: {error}"


class SilentStrategy(OutputStrategy):
    """No output - exit code only"""

    def format_result(self, data: Dict[str, Any]) -> str:
        return ""

    def format_error(self, error: str, code: int = 1) -> str:
        return ""


class OutputFormatter:
    """Factory for output strategies (silent by default)"""

    _strategies = {
        OutputFormat.COMPACT: CompactStrategy(),
        OutputFormat.JSON: JsonStrategy(),
        OutputFormat.HUMAN: HumanStrategy(),
        OutputFormat.SILENT: SilentStrategy(),
    }

    @classmethod
    def get_strategy(cls, format_type: OutputFormat = OutputFormat.SILENT) -> OutputStrategy:
        return cls._strategies[OutputFormat(format_type)]

    @classmethod
    def format_output(cls, data: Dict[str, Any], format_type: OutputFormat = OutputFormat.SILENT) -> str:
        return cls.get_strategy(format_type).format_result(data)

    @classmethod
    def format_error(cls, error: str, code: int = 1, format_type: OutputFormat = OutputFormat.SILENT) -> str:
        return cls.get_strategy(format_type).format_error(error, code)
