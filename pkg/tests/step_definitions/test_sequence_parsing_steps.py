"""
Step definitions for pulse sequence BDD tests
"""

import pytest
from pytest_bdd import given, parsers, scenarios, then, when

from raman_echo.simulation.model import EnsembleSpec, LevelSystem, resolve_durations, validate
from raman_echo.simulation.seqdsl import ParseError, format_sequence, parse, parse_file

scenarios("../features/sequence_parsing.feature")

SOURCES = {
    "raman_2pi": (
        "init 0.5 0.5;\n"
        "mark R_start;\n"
        "pulse probe(amp=35.35533905932738kHz), coupling(amp=35.35533905932738kHz) area 2 pi;\n"
        "mark R_end;\n"
        "wait 10 us;\n"
    ),
    "missing_amplitude": "pulse probe() dur 3 us;\n",
    "unnormalized": "init 0.6 0.6;\nwait 5 us;\n",
}


@given(parsers.parse('the "{name}" sequence text'))
def sequence_text(test_context, name):
    test_context["source"] = SOURCES[name]


@given(parsers.parse('the shipped sequence file "{filename}"'))
def shipped_sequence(test_context, sequences_dir, filename):
    test_context["sequence"] = parse_file(sequences_dir / filename)


@when("I parse and resolve the sequence")
def parse_and_resolve(test_context):
    test_context["sequence"] = resolve_durations(parse(test_context["source"]))


@when("I parse the sequence expecting an error")
def parse_with_error(test_context):
    with pytest.raises(ParseError) as excinfo:
        parse(test_context["source"])
    test_context["error"] = excinfo.value


@when("I format and parse the sequence again")
def format_and_parse(test_context):
    test_context["reparsed"] = parse(format_sequence(test_context["sequence"]))


@when("I validate the sequence on the default lambda system")
def validate_sequence(test_context):
    sequence = resolve_durations(parse(test_context["source"]))
    test_context["report"] = validate(LevelSystem.three_level_default(), sequence, EnsembleSpec())


@then(parsers.parse('marker "{name}" should be at {time:g} us'))
def marker_time(test_context, name, time):
    assert test_context["sequence"].markers[name] == pytest.approx(time, abs=1e-9)


@then(parsers.parse("the sequence should end at {time:g} us"))
def sequence_end(test_context, time):
    assert test_context["sequence"].end_us == pytest.approx(time, abs=1e-9)


@then(parsers.parse("the parse error should be at line {line:d} column {column:d}"))
def error_position(test_context, line, column):
    error = test_context["error"]
    assert (error.line, error.column) == (line, column)


@then("both sequences should be equal")
def sequences_equal(test_context):
    assert test_context["reparsed"] == test_context["sequence"]


@then(parsers.parse('validation should fail in category "{category}"'))
def validation_fails(test_context, category):
    report = test_context["report"]
    assert not report.is_valid
    assert category in {issue.category for issue in report.errors}
