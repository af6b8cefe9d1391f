"""
Exit Codes - process status for scripted simulation runs

A run communicates its outcome through four exit codes so batch scripts can
branch without parsing output.
"""

from enum import Enum

from pydantic import ValidationError

from .errors import ConfigurationError, NumericalError, SequenceError


class ExitCode(Enum):
    """Standard exit codes for raman-echo commands"""

    SUCCESS = 0  # Outputs written
    VALIDATION = 1  # Invalid configuration, sequence semantics or CLI inputs
    PARSE = 2  # Sequence file unreadable or malformed
    NUMERICAL = 3  # Integrator failure (step size, trace drift)


class ExitCodeEncoder:
    """
    Encodes outcomes into exit codes
    """

    @staticmethod
    def encode_exception(error: BaseException) -> int:
        """
        Map an exception to its exit code

        Args:
            error: Exception raised while loading, validating or simulating

        Returns:
            Exit code (1 validation, 2 parse, 3 numerical)
        """
        if isinstance(error, SequenceError):
            return ExitCode.PARSE.value
        if isinstance(error, NumericalError):
            return ExitCode.NUMERICAL.value
        if isinstance(error, (ConfigurationError, ValidationError, ValueError, OSError)):
            return ExitCode.VALIDATION.value
        return ExitCode.NUMERICAL.value

    @staticmethod
    def encode_validation(is_valid: bool) -> int:
        """
        Encode a validation verdict

        Args:
            is_valid: True when no error-level issue was found

        Returns:
            0 when valid, 1 otherwise
        """
        return ExitCode.SUCCESS.value if is_valid else ExitCode.VALIDATION.value

