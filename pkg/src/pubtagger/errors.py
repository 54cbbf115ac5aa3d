"""Exception hierarchy shared by every module.

The command-line interface maps these classes onto process exit codes:
configuration and usage problems exit 1, data problems exit 2, scorer
backend and sidecar problems exit 3.
"""

from __future__ import annotations


class PubTaggerError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ConfigError(PubTaggerError):
    """Invalid configuration, command usage, or policy/vocabulary content."""

    exit_code = 1


class DataError(PubTaggerError):
    """Malformed or inconsistent input data."""

    exit_code = 2


class ParseError(DataError):
    """A corpus line that is not valid JSON."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class SchemaError(DataError):
    """A record that parses but is missing or mistypes a required field."""


class AlignmentError(DataError):
    """Predicted and gold records that do not line up by citation id."""


class UndefinedMetricError(DataError):
    """A metric requested on data where it has no defined value."""


class TrainingError(DataError):
    """A dataset that cannot be trained on."""


class TrainingDivergedError(TrainingError):
    """Training loss became non-finite."""

    def __init__(self, epoch: int, message: str | None = None):
        super().__init__(message or f"training diverged at epoch {epoch}: loss is not finite")
        self.epoch = epoch


class BackendError(PubTaggerError):
    """A scorer backend (local model file or remote sidecar) failed."""

    exit_code = 3


class RecordScoringError(BackendError):
    """A backend rejected one record; the batch can continue without it."""

    def __init__(self, citation_id: str, message: str):
        super().__init__(f"citation {citation_id!r}: {message}")
        self.citation_id = citation_id
