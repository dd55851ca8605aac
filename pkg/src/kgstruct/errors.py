"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
anything else -> 3.
"""


class KgstructError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(KgstructError):
    """Invalid configuration or command-line usage."""


class DataError(KgstructError):
    """Input data is missing, malformed, or inconsistent with a request."""


class ParseError(DataError):
    """A line of an edge file could not be parsed."""

    def __init__(self, path, line_number, message):
        super().__init__(f"{path}:{line_number}: {message}")
        self.path = str(path)
        self.line_number = line_number


class TrainingDivergedError(KgstructError):
    """Training produced a non-finite loss (learning rate likely too high)."""
