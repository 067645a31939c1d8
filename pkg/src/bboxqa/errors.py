"""Exception hierarchy.

Every error carries the process exit code the CLI maps it to.
"""


class BBoxQAError(Exception):
    exit_code = 1


class ParseError(BBoxQAError):
    """Malformed payload. ``position`` is a line number (CSV) or record path (JSON)."""

    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at {position})"
        super().__init__(message)


class ReferentialError(BBoxQAError):
    pass


class RecordError(BBoxQAError):
    def __init__(self, message, records=()):
        self.records = list(records)
        super().__init__(message)


class VocabularyError(BBoxQAError):
    pass


class ConsistencyError(BBoxQAError):
    pass


class InsufficientDataError(BBoxQAError):
    exit_code = 2


class CurationError(BBoxQAError):
    exit_code = 3


class CoverageError(CurationError):
    def __init__(self, message, images=()):
        self.images = list(images)
        super().__init__(message)


class EvaluationError(BBoxQAError):
    exit_code = 4


class ConfigError(BBoxQAError):
    exit_code = 5
