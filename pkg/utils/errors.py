"""
Error Types Module
Exception hierarchy shared by the simulator, the action-mapping table and the
training harness. Each error carries the process exit code app.py reports.
"""


class RaceError(Exception):
    """Base class for every error raised by the toolkit."""

    exit_code = 3


class UsageError(RaceError):
    """Raised when an API is called in a state or shape it does not accept."""

    exit_code = 1


class ValidationError(RaceError):
    """Raised when a config, track or artifact file fails validation."""

    exit_code = 2


class TableFormatError(ValidationError):
    """Raised when a boundary table or checkpoint file is malformed."""


class RuntimeFault(RaceError):
    """Raised on non-finite simulation state, losses, or failed writes."""

    exit_code = 3


class TableMismatchWarning(UserWarning):
    """Emitted when a boundary table was built for different vehicle parameters."""
