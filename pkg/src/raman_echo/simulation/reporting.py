"""
File outputs: trace CSV, summary JSON, delay-scan CSV and plot scripts.

Every writer is deterministic: same data, same bytes.
"""

import json
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import numpy as np
import pandas as pd

from ..core.errors import ConfigurationError
from .ensemble import TRACE_COLUMNS, EnsembleTrace

FLOAT_FORMAT = "%.17g"
SCAN_COLUMNS = ["delay_us", "bit", "t_bit_end_us", "t_echo_us", "storage_time_us", "amplitude", "efficiency"]


class PlotStyle(str, Enum):
    """Panels the emitted script draws"""

    SPIN_ECHO = "spin-echo"  # |S| and Im S vs t
    PHOTON_ECHO = "photon-echo"  # Im P13 vs t
    POPULATIONS = "populations"


PLOT_COLUMNS: Dict[PlotStyle, List[str]] = {
    PlotStyle.SPIN_ECHO: ["t_us", "abs_S12", "im_S12"],
    PlotStyle.PHOTON_ECHO: ["t_us", "im_P13"],
    PlotStyle.POPULATIONS: ["t_us", "pop1", "pop2", "pop3", "pop4"],
}


def write_trace_csv(trace: EnsembleTrace, path: Union[str, Path]) -> Path:
    """Time series in the fixed column order, floats with 17 significant digits"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    trace.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def to_plain(value: Any) -> Any:
    """numpy scalars to Python, non-finite floats to None"""
    if isinstance(value, dict):
        return {str(key): to_plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(item) for item in value]
    if isinstance(value, np.ndarray):
        return [to_plain(item) for item in value.tolist()]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def dumps_summary(summary: Dict[str, Any]) -> str:
    """Sorted keys; floats as shortest round-trip repr"""
    return json.dumps(to_plain(summary), indent=2, sort_keys=True) + "\n"


def write_summary_json(summary: Dict[str, Any], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_summary(summary), encoding="utf-8")
    return path


def write_scan_csv(rows: Sequence[Dict[str, Any]], path: Union[str, Path]) -> Path:
    """One row per (delay, bit)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame([{column: row.get(column) for column in SCAN_COLUMNS} for row in rows], columns=SCAN_COLUMNS)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


_PLOT_BODIES: Dict[PlotStyle, str] = {
    PlotStyle.SPIN_ECHO: """\
fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
top.plot(data["t_us"], data["abs_S12"], color="black")
top.set_ylabel("|S|")
bottom.plot(data["t_us"], data["im_S12"], color="tab:blue")
bottom.set_ylabel("Im S")
bottom.set_xlabel("time (us)")
""",
    PlotStyle.PHOTON_ECHO: """\
fig, ax = plt.subplots(figsize=(8, 4))
ax.plot(data["t_us"], data["im_P13"], color="tab:red")
ax.set_ylabel("Im P13")
ax.set_xlabel("time (us)")
""",
    PlotStyle.POPULATIONS: """\
fig, ax = plt.subplots(figsize=(8, 4))
for column in ("pop1", "pop2", "pop3", "pop4"):
    if data[column].abs().max() > 0:
        ax.plot(data["t_us"], data[column], label=column)
ax.set_ylabel("population")
ax.set_xlabel("time (us)")
ax.legend()
""",
}


def render_plot_script(csv_path: Union[str, Path], style: Union[PlotStyle, str] = PlotStyle.SPIN_ECHO) -> str:
    """
    Stand-alone pandas + matplotlib script plotting a trace CSV.

    Raises:
        ConfigurationError: CSV unreadable or missing a column the style needs
    """
    style = PlotStyle(style)
    csv_path = Path(csv_path)
    try:
        header = pd.read_csv(csv_path, nrows=0)
    except (OSError, ValueError) as exc:
        raise ConfigurationError(f"cannot read trace {csv_path}: {exc}") from exc
    missing = [column for column in PLOT_COLUMNS[style] if column not in header.columns]
    if missing:
        raise ConfigurationError(f"{csv_path} lacks column(s) {', '.join(missing)} needed for {style.value}")

    output = csv_path.with_suffix(".png").name
    return (
        f'"""{style.value} plot of {csv_path.name}"""\n\n'
        "import matplotlib.pyplot as plt\n"
        "import pandas as pd\n\n"
        f"data = pd.read_csv({str(csv_path)!r})\n"
        f"{_PLOT_BODIES[style]}"
        "fig.tight_layout()\n"
        f"fig.savefig({output!r}, dpi=150)\n"
    )


__all__ = [
    "FLOAT_FORMAT",
    "PLOT_COLUMNS",
    "SCAN_COLUMNS",
    "TRACE_COLUMNS",
    "PlotStyle",
    "dumps_summary",
    "render_plot_script",
    "to_plain",
    "write_scan_csv",
    "write_summary_json",
    "write_trace_csv",
]
