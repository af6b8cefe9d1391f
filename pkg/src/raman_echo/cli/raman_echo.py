"""
raman-echo CLI - run storage scenarios, delay scans and sequence files

Exit codes:
0 = Outputs written / inputs valid
1 = Validation error (bad configuration, sequence semantics or inputs)
2 = Sequence file unreadable or malformed
3 = Numerical failure (step size, trace drift)
"""

import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple

import click

from ..core.exit_codes import ExitCode, ExitCodeEncoder
from ..core.output_strategy import OutputFormat, OutputFormatter
from ..simulation.analysis import EfficiencyMetric
from ..simulation.config import RunSettings, SystemDocument, load_settings
from ..simulation.model import EnsembleSpec, FieldName, LevelSystem, PulseSequence, resolve_durations, validate
from ..simulation.propagate import Integrator
from ..simulation.reporting import (
    PlotStyle,
    render_plot_script,
    to_plain,
    write_scan_csv,
    write_summary_json,
    write_trace_csv,
)
from ..simulation.runner import SimulationRunner
from ..simulation.scenarios import (
    DEFAULT_DELAYS_US,
    RAMAN_VARIANTS,
    Scenario,
    ScenarioParams,
    ScenarioVariant,
    build_scenario,
    custom_scenario,
    delay_scan,
)
from ..simulation.seqdsl import parse_file

logger = logging.getLogger(__name__)

RUN_VARIANTS = [v.value for v in ScenarioVariant if v != ScenarioVariant.CUSTOM]
SCAN_VARIANTS = [v.value for v in RAMAN_VARIANTS]


class AreaType(click.ParamType):
    """Pulse area in units of pi: '2pi', 'pi', '0.5pi' or a bare number"""

    name = "area"

    def convert(self, value: Any, param: Optional[click.Parameter], ctx: Optional[click.Context]) -> float:
        if isinstance(value, (int, float)):
            return float(value)
        text = str(value).strip().lower().replace("π", "pi")
        if text.endswith("pi"):
            text = text[:-2].strip() or "1"
        try:
            area = float(text)
        except ValueError:
            self.fail(f"'{value}' is not an area such as 2pi", param, ctx)
        if area <= 0:
            self.fail("area must be positive", param, ctx)
        return area


class DelaysType(click.ParamType):
    """Comma-separated delays in us"""

    name = "delays"

    def convert(self, value: Any, param: Optional[click.Parameter], ctx: Optional[click.Context]) -> Tuple[float, ...]:
        if isinstance(value, tuple):
            return value
        try:
            delays = tuple(float(item) for item in str(value).split(",") if item.strip())
        except ValueError:
            self.fail(f"'{value}' is not a comma-separated list of numbers", param, ctx)
        if not delays:
            self.fail("no delays given", param, ctx)
        return delays


def _simulation_options(func: Callable[..., Any]) -> Callable[..., Any]:
    """Options shared by run and scan"""
    options = [
        click.option("--config", type=click.Path(path_type=Path), help="System document (.json) or settings (.toml)"),
        click.option("--area", type=AreaType(), help="Rephasing area, e.g. 2pi"),
        click.option("--delay", type=float, help="Rephasing pulse start (us)"),
        click.option("--final-area", type=AreaType(), help="Final Raman area of the locking sequence"),
        click.option("--lock-time", type=float, help="Lock window duration (us)"),
        click.option(
            "--rephase-rabi", type=float, help="Generalized Rabi frequency of the Raman rephasing pulses (kHz)"
        ),
        click.option("--aux-rabi", type=float, help="Rabi frequency of the aux pulses (kHz)"),
        click.option("--attenuation", type=float, help="Weak-probe amplitude factor"),
        click.option("--gamma21", type=float, help="Spin linewidth gamma21 (kHz)"),
        click.option("--dt", type=float, help="RK4 step bound (us)"),
        click.option("--integrator", type=click.Choice([i.value for i in Integrator]), help="Propagator"),
        click.option("--retain-delta", type=float, multiple=True, help="Keep the member at this shift (kHz)"),
        click.option("--threads", type=click.IntRange(min=1), help="Worker cap"),
        click.option("--sample-interval", type=float, help="Output sample spacing (us)"),
        click.option("--metric", type=click.Choice([m.value for m in EfficiencyMetric]), help="Efficiency metric"),
        click.option("--cross-check", is_flag=True, help="Compare exact and RK4 on one member"),
        click.option("--timing", is_flag=True, help="Include wall time in the summary JSON"),
        click.option(
            "--format",
            "output_format",
            type=click.Choice([f.value for f in OutputFormat]),
            default=OutputFormat.SILENT.value,
            help="Stdout format (default: silent)",
        ),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _settings(config: Optional[Path], opts: Dict[str, Any]) -> RunSettings:
    base = load_settings(config if config is not None and config.suffix.lower() == ".toml" else None)
    return base.merged(
        integrator=opts.get("integrator"),
        dt_us=opts.get("dt"),
        threads=opts.get("threads"),
        sample_interval_us=opts.get("sample_interval"),
        efficiency_metric=opts.get("metric"),
        cross_check=True if opts.get("cross_check") else None,
    )


def _document(config: Optional[Path]) -> Optional[SystemDocument]:
    if config is None:
        return None
    if config.suffix.lower() == ".toml":
        document = SystemDocument.from_toml(config)
        return document if document.model_fields_set else None
    return SystemDocument.from_json(config)


def _params(variant: str, opts: Dict[str, Any], document: Optional[SystemDocument]) -> ScenarioParams:
    values: Dict[str, Any] = {
        "variant": variant,
        "area_pi": opts.get("area"),
        "delay_us": opts.get("delay"),
        "final_area_pi": opts.get("final_area"),
        "lock_time_us": opts.get("lock_time"),
        "rephase_rabi_khz": opts.get("rephase_rabi"),
        "aux_rabi_khz": opts.get("aux_rabi"),
        "attenuation": opts.get("attenuation"),
        "gamma21_khz": opts.get("gamma21"),
        "delays_us": opts.get("delays"),
        "initial_populations": document.populations() if document else None,
    }
    if opts.get("retain_delta"):
        values["retain_deltas"] = tuple(opts["retain_delta"])
    return ScenarioParams(**{key: value for key, value in values.items() if value is not None})


def _apply_document(scenario: Scenario, document: Optional[SystemDocument]) -> Scenario:
    if document is None:
        return scenario
    scenario.system = document.to_system()
    scenario.ensemble = document.to_ensemble()
    return scenario


def _default_system(sequence: PulseSequence) -> LevelSystem:
    uses_aux = any(FieldName.AUX in segment.fields for segment in sequence.segments)
    return LevelSystem.four_level_default() if uses_aux else LevelSystem.three_level_default()


def _sequence_scenario(seq: Path, document: Optional[SystemDocument], retain: Tuple[float, ...]) -> Scenario:
    sequence = parse_file(seq)
    if document is not None:
        system = document.to_system()
        ensemble = document.to_ensemble()
        if sequence.initial_populations is None and document.initial_populations is not None:
            sequence = sequence.with_populations(document.initial_populations)
    else:
        system = _default_system(sequence)
        ensemble = EnsembleSpec(shift_target=system.shift_target)
    return custom_scenario(system, sequence, ensemble, retain)


def _fail(error: BaseException, output_format: str) -> None:
    code = ExitCodeEncoder.encode_exception(error)
    logger.debug("command failed", exc_info=error)
    click.echo(f"error: {error}", err=True)
    message = OutputFormatter.format_error(str(error), code, OutputFormat(output_format))
    if message and output_format in (OutputFormat.JSON.value, OutputFormat.COMPACT.value):
        click.echo(message)
    sys.exit(code)


@click.group()
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"]),
    default="WARNING",
    help="Logging level",
)
@click.version_option(package_name="raman-echo-sim")
def cli(log_level: str) -> None:
    """Raman spin-echo storage and optical population-locking simulator."""
    logging.basicConfig(level=getattr(logging, log_level), format="%(asctime)s - %(levelname)s - %(message)s")
    logging.getLogger().setLevel(getattr(logging, log_level))


@cli.command()
@click.option("--scenario", type=click.Choice(RUN_VARIANTS), help="Shipped experiment")
@click.option("--seq", type=click.Path(path_type=Path), help="Pulse sequence file (.qps)")
@click.option("--out", type=click.Path(path_type=Path), default=Path("trace.csv"), show_default=True)
@click.option("--summary", type=click.Path(path_type=Path), default=Path("summary.json"), show_default=True)
@_simulation_options
def run(scenario: Optional[str], seq: Optional[Path], out: Path, summary: Path, **opts: Any) -> None:
    """
    Simulate one scenario or sequence file and write trace CSV and summary JSON.

    Examples:
        raman-echo run --scenario fig1a --out trace.csv --summary sum.json
        raman-echo run --scenario fig1b --area 2pi
        raman-echo run --seq sequences/fig1a.qps --config sequences/fig1a.json
    """
    output_format = opts["output_format"]
    try:
        if (scenario is None) == (seq is None):
            raise ValueError("give exactly one of --scenario or --seq")
        config = opts["config"]
        document = _document(config)
        settings = _settings(config, opts)
        if seq is not None:
            built = _sequence_scenario(seq, document, tuple(opts["retain_delta"]))
        else:
            assert scenario is not None
            built = _apply_document(build_scenario(_params(scenario, opts, document)), document)

        trace, result = SimulationRunner(settings).run_scenario(built)
        write_trace_csv(trace, out)
        write_summary_json(result.to_dict(include_timing=opts["timing"]), summary)
        logger.info(f"wrote {out} and {summary}")

        output = OutputFormatter.format_output(
            to_plain(result.to_dict(include_timing=True)), OutputFormat(output_format)
        )
        if output:
            click.echo(output)
        sys.exit(ExitCode.SUCCESS.value)
    except Exception as e:
        _fail(e, output_format)


@cli.command()
@click.option("--scenario", type=click.Choice(SCAN_VARIANTS), default=ScenarioVariant.FIG1D.value, show_default=True)
@click.option("--delays", type=DelaysType(), default=",".join(f"{d:g}" for d in DEFAULT_DELAYS_US), show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=Path("scan.csv"), show_default=True)
@click.option("--summary", type=click.Path(path_type=Path), default=Path("scan_summary.json"), show_default=True)
@_simulation_options
def scan(scenario: str, delays: Tuple[float, ...], out: Path, summary: Path, **opts: Any) -> None:
    """
    Delay scan: efficiency vs storage time and its exponential fit.

    Examples:
        raman-echo scan
        raman-echo scan --delays 60,200 --gamma21 2 --format human
    """
    output_format = opts["output_format"]
    try:
        if len(delays) < 2:
            raise ValueError("a delay scan needs at least two delays")
        config = opts["config"]
        document = _document(config)
        settings = _settings(config, opts)
        params = _params(scenario, {**opts, "delays": delays}, document)
        scenarios = [_apply_document(item, document) for item in delay_scan(params)]

        result = SimulationRunner(settings).run_delay_scan(scenarios, data_pulse_us=params.data_duration_us)
        write_scan_csv(result.rows, out)
        write_summary_json(result.to_dict(include_timing=opts["timing"]), summary)
        if result.fit is not None:
            logger.info(f"tau_fit = {result.fit.tau_us:.2f} us (R^2 = {result.fit.r_squared:.5f})")

        output = OutputFormatter.format_output(
            to_plain(result.to_dict(include_timing=True)), OutputFormat(output_format)
        )
        if output:
            click.echo(output)
        sys.exit(ExitCode.SUCCESS.value)
    except Exception as e:
        _fail(e, output_format)


@cli.command(name="validate")
@click.option("--config", type=click.Path(path_type=Path), help="System document (.json or .toml)")
@click.option("--seq", type=click.Path(path_type=Path), help="Pulse sequence file (.qps)")
@click.option("--scenario", type=click.Choice(RUN_VARIANTS), help="Validate a shipped experiment instead")
@click.option(
    "--format",
    "output_format",
    type=click.Choice([f.value for f in OutputFormat]),
    default=OutputFormat.SILENT.value,
    help="Stdout format (default: silent)",
)
def validate_command(config: Optional[Path], seq: Optional[Path], scenario: Optional[str], output_format: str) -> None:
    """
    Parse and validate inputs without simulating.

    Exit codes: 0 valid, 1 validation errors, 2 sequence parse error.
    """
    try:
        document = _document(config)
        if seq is not None:
            built = _sequence_scenario(seq, document, ())
        elif scenario is not None:
            built = _apply_document(build_scenario(_params(scenario, {}, document)), document)
        elif document is not None:
            system = document.to_system()
            sequence = PulseSequence(initial_populations=document.populations())
            built = custom_scenario(system, sequence, document.to_ensemble())
        else:
            raise ValueError("nothing to validate: give --config, --seq or --scenario")

        report = validate(built.system, resolve_durations(built.sequence), built.ensemble)
        data = report.to_dict()
        if output_format == OutputFormat.HUMAN.value:
            lines = [f"{issue.level.name}: [{issue.category}] {issue.message}" for issue in report.issues]
            click.echo("\n".join(lines + [report.summary]))
        else:
            output = OutputFormatter.format_output(to_plain(data), OutputFormat(output_format))
            if output:
                click.echo(output)
        sys.exit(ExitCodeEncoder.encode_validation(report.is_valid))
    except Exception as e:
        _fail(e, output_format)


@cli.command(name="emit-plot")
@click.argument("trace_csv", type=click.Path(path_type=Path))
@click.option(
    "--style",
    type=click.Choice([s.value for s in PlotStyle]),
    default=PlotStyle.SPIN_ECHO.value,
    show_default=True,
)
@click.option("--output", "-o", type=click.Path(path_type=Path), help="Script path (default: stdout)")
def emit_plot(trace_csv: Path, style: str, output: Optional[Path]) -> None:
    """
    Write a stand-alone plotting script for a trace CSV.

    The script needs pandas and matplotlib (pip install raman-echo-sim[plot]).
    """
    try:
        script = render_plot_script(trace_csv, style)
        if output is None:
            click.echo(script, nl=False)
        else:
            output.write_text(script, encoding="utf-8")
        sys.exit(ExitCode.SUCCESS.value)
    except Exception as e:
        _fail(e, OutputFormat.SILENT.value)


if __name__ == "__main__":
    cli()
