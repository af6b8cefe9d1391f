"""
Tests for CSV, JSON and plot-script outputs
"""

import json
import math

import numpy as np
import pandas as pd
import pytest
from helpers import gaussian, make_trace

from raman_echo.core.errors import ConfigurationError
from raman_echo.simulation.reporting import (
    SCAN_COLUMNS,
    TRACE_COLUMNS,
    PlotStyle,
    dumps_summary,
    render_plot_script,
    to_plain,
    write_scan_csv,
    write_summary_json,
    write_trace_csv,
)


@pytest.fixture
def trace():
    times = np.arange(101) * 0.1
    values = gaussian(times, 5.0, 1.0, 0.3) * np.exp(1j * times / 3.0)
    return make_trace(times, values, {"R_end": 2.0}, p13=1j * gaussian(times, 4.0, 0.5, 0.1))


class TestTraceCsv:
    def test_columns(self, trace, tmp_path):
        path = write_trace_csv(trace, tmp_path / "out" / "trace.csv")
        assert path.read_text().splitlines()[0] == ",".join(TRACE_COLUMNS)
        frame = pd.read_csv(path)
        assert len(frame) == 101

    def test_values_round_trip(self, trace, tmp_path):
        """17 significant digits reproduce every float exactly"""
        path = write_trace_csv(trace, tmp_path / "trace.csv")
        frame = pd.read_csv(path, float_precision="round_trip")
        np.testing.assert_array_equal(frame["re_S12"].to_numpy(), trace.s12.real)
        np.testing.assert_array_equal(frame["im_P13"].to_numpy(), trace.p13.imag)

    def test_deterministic_bytes(self, trace, tmp_path):
        first = write_trace_csv(trace, tmp_path / "a.csv").read_bytes()
        second = write_trace_csv(trace, tmp_path / "b.csv").read_bytes()
        assert first == second
        assert b"\r\n" not in first


class TestSummaryJson:
    def test_to_plain(self):
        data = to_plain({"a": np.float64(0.5), "b": np.int64(3), "c": [math.inf, math.nan], "d": PlotStyle.POPULATIONS})
        assert data == {"a": 0.5, "b": 3, "c": [None, None], "d": "populations"}
        assert to_plain(np.array([1.0, 2.0])) == [1.0, 2.0]
        assert to_plain((1, "x")) == [1, "x"]

    def test_sorted_and_exact(self):
        text = dumps_summary({"z": 0.1 + 0.2, "a": {"y": 1, "b": 2}})
        assert text.index('"a"') < text.index('"z"')
        assert json.loads(text)["z"] == 0.1 + 0.2
        assert text.endswith("\n")

    def test_write(self, tmp_path):
        path = write_summary_json({"tau_us": math.inf}, tmp_path / "summary.json")
        assert json.loads(path.read_text()) == {"tau_us": None}


class TestScanCsv:
    def test_rows(self, tmp_path):
        rows = [
            {"delay_us": 60.0, "bit": "A", "t_echo_us": 128.5, "efficiency": 0.2},
            {"delay_us": 100.0, "bit": "A", "efficiency": None},
        ]
        frame = pd.read_csv(write_scan_csv(rows, tmp_path / "scan.csv"))
        assert list(frame.columns) == SCAN_COLUMNS
        assert frame["efficiency"].iloc[0] == 0.2
        assert math.isnan(frame["efficiency"].iloc[1])


class TestPlotScript:
    def test_spin_echo(self, trace, tmp_path):
        path = write_trace_csv(trace, tmp_path / "trace.csv")
        script = render_plot_script(path)
        assert "abs_S12" in script and "im_S12" in script
        assert "trace.png" in script
        compile(script, "plot.py", "exec")

    @pytest.mark.parametrize("style", list(PlotStyle))
    def test_every_style_compiles(self, trace, tmp_path, style):
        path = write_trace_csv(trace, tmp_path / "trace.csv")
        compile(render_plot_script(path, style), "plot.py", "exec")

    def test_photon_echo_panel(self, trace, tmp_path):
        path = write_trace_csv(trace, tmp_path / "trace.csv")
        assert "im_P13" in render_plot_script(path, "photon-echo")

    def test_missing_column(self, tmp_path):
        path = tmp_path / "partial.csv"
        path.write_text("t_us,abs_S12\n0,1\n")
        with pytest.raises(ConfigurationError, match="im_S12"):
            render_plot_script(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            render_plot_script(tmp_path / "nope.csv")

    def test_unknown_style(self, trace, tmp_path):
        path = write_trace_csv(trace, tmp_path / "trace.csv")
        with pytest.raises(ValueError):
            render_plot_script(path, "bar-chart")
