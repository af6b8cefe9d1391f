"""
Exit Code Tests

Exit codes are the contract with batch scripts: 0 success, 1 validation,
2 parse, 3 numerical.
"""

from pydantic import BaseModel, ValidationError

from raman_echo.core.errors import (
    ConfigurationError,
    NumericalError,
    SequenceError,
    StepSizeError,
    TraceDriftError,
)
from raman_echo.core.exit_codes import ExitCode, ExitCodeEncoder
from raman_echo.simulation.seqdsl import ParseError


class _Positive(BaseModel):
    value: int


def pydantic_error() -> ValidationError:
    try:
        _Positive(value="not a number")
    except ValidationError as exc:
        return exc
    raise AssertionError("validation should have failed")


class TestExitCodeEncoding:
    """Exceptions map to one code per family"""

    def test_values(self):
        """Codes are fixed"""
        assert [code.value for code in ExitCode] == [0, 1, 2, 3]

    def test_parse_errors(self):
        """Unreadable or malformed sequences exit 2"""
        assert ExitCodeEncoder.encode_exception(SequenceError("missing.qps")) == 2
        assert ExitCodeEncoder.encode_exception(ParseError(1, 5, "expected ';'")) == 2

    def test_validation_errors(self):
        """Bad configuration and bad CLI values exit 1"""
        assert ExitCodeEncoder.encode_exception(ConfigurationError("populations")) == 1
        assert ExitCodeEncoder.encode_exception(ValueError("delays")) == 1
        assert ExitCodeEncoder.encode_exception(pydantic_error()) == 1
        assert ExitCodeEncoder.encode_exception(FileNotFoundError("trace.csv")) == 1

    def test_numerical_errors(self):
        """Integrator failures exit 3"""
        assert ExitCodeEncoder.encode_exception(StepSizeError("dt too large")) == 3
        assert ExitCodeEncoder.encode_exception(TraceDriftError(1e-5, 12.0, 10.0)) == 3
        assert ExitCodeEncoder.encode_exception(NumericalError("member failed")) == 3

    def test_unexpected_errors(self):
        """Anything else is treated as a numerical failure"""
        assert ExitCodeEncoder.encode_exception(RuntimeError("boom")) == 3

    def test_encode_validation(self):
        assert ExitCodeEncoder.encode_validation(True) == 0
        assert ExitCodeEncoder.encode_validation(False) == 1


class TestErrorMessages:
    """Numerical errors carry where they happened"""

    def test_trace_drift_message(self):
        error = TraceDriftError(2.5e-6, 101.25, -8.0)
        assert "2.500e-06" in str(error)
        assert "t=101.2500 us" in str(error)
        assert "delta=-8 kHz" in str(error)
