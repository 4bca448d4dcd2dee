"""Exception hierarchy. CLI exit codes are attached to each class."""


class EcgSqaError(Exception):
    exit_code = 3


class ConfigError(EcgSqaError):
    """Bad configuration or command-line usage."""

    exit_code = 1


class DataError(EcgSqaError):
    """Input data violates a precondition (bad file, degenerate signal, ...)."""

    exit_code = 2


class FormatError(DataError):
    """A file could not be parsed.

    The message always carries the file path, the line (or record) and the
    reason, e.g. ``rec01.ecg:17: non-numeric sample 'abc'``.
    """

    def __init__(self, path, reason, line=None):
        self.path = str(path)
        self.line = line
        self.reason = reason
        where = self.path if line is None else f"{self.path}:{line}"
        super().__init__(f"{where}: {reason}")


class InvariantError(EcgSqaError):
    """Internal consistency check failed."""

    exit_code = 3
