"""
Step definitions for Output Strategy BDD tests
"""

import json

from pytest_bdd import given, parsers, scenarios, then, when

from raman_echo.core.output_strategy import OutputFormat, OutputFormatter

scenarios("../features/output_strategy.feature")


@given("I have a run summary with two echoes")
def run_summary(test_context):
    test_context["data"] = {
        "scenario": "fig1a",
        "echo_report": {
            "channel": "abs_s12",
            "echoes": [
                {"bit": "C", "time_us": 108.5, "amplitude": 0.012, "efficiency": 0.61},
                {"bit": "B", "time_us": 118.5, "amplitude": 0.011, "efficiency": 0.58},
            ],
            "missing": [],
        },
        "phase": None,
        "diagnostics": {"max_trace_drift": 2.1e-13},
        "warnings": [],
    }


@when("I format with compact strategy")
def format_compact(test_context):
    test_context["output"] = OutputFormatter.format_output(test_context["data"], OutputFormat.COMPACT)


@when("I format with human strategy")
def format_human(test_context):
    test_context["output"] = OutputFormatter.format_output(test_context["data"], OutputFormat.HUMAN)


@when("I format with silent strategy")
def format_silent(test_context):
    test_context["output"] = OutputFormatter.format_output(test_context["data"], OutputFormat.SILENT)


@when(parsers.parse('I format the error "{message}" with code {code:d} as compact'))
def format_error(test_context, message, code):
    test_context["output"] = OutputFormatter.format_error(message, code, OutputFormat.COMPACT)


@then("the output should be compact JSON")
def output_is_compact_json(test_context):
    output = test_context["output"]
    json.loads(output)
    assert "\n" not in output
    assert "  " not in output


@then("the compact output should drop empty values")
def compact_drops_empty(test_context):
    data = json.loads(test_context["output"])
    assert "phase" not in data
    assert "warnings" not in data
    assert "missing" not in data["echo_report"]


@then("the output should be human-readable")
def output_is_human_readable(test_context):
    output = test_context["output"]
    assert "Scenario: fig1a" in output
    assert "Echoes" in output
    assert "max_trace_drift" in output


@then(parsers.parse('the output should mention bit "{bit}"'))
def output_mentions_bit(test_context, bit):
    assert any(line.strip().strip("│┃|").strip().startswith(bit) for line in test_context["output"].splitlines())


@then("the output should be empty")
def output_is_empty(test_context):
    assert test_context["output"] == ""


@then(parsers.parse("the error record should have code {code:d}"))
def error_has_code(test_context, code):
    assert json.loads(test_context["output"]) == {"error": "trace drift", "code": code}


@given(parsers.parse('the run flagged bit "{bit}" above unity'))
def flagged_bit(test_context, bit):
    test_context["data"]["warnings"] = [
        f"bit {bit}: efficiency 1.450 exceeds 1 (bit-end reference taken after in-pulse dephasing)"
    ]


@then(parsers.parse('the output should warn about bit "{bit}"'))
def output_warns(test_context, bit):
    assert f"Warning: bit {bit}: efficiency 1.450 exceeds 1" in test_context["output"]
