"""Exception hierarchy shared across the package."""


class BlockAgentError(Exception):
    """Base class for all package errors."""


class ParseError(BlockAgentError):
    """Malformed port reference or model document.

    ``line`` and ``column`` are 1-based and set when the failure has a location.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class ExpandError(BlockAgentError):
    pass


class MergeConflict(BlockAgentError):
    def __init__(self, block):
        self.block = block
        super().__init__(f"conflicting definitions for block {block!r}")


class IngestError(BlockAgentError):
    pass


class EmitError(BlockAgentError):
    pass


class LoadError(BlockAgentError):
    pass


class NotFound(BlockAgentError):
    def __init__(self, message, suggestions=()):
        self.suggestions = list(suggestions)
        super().__init__(message)


class SizeExceeded(BlockAgentError):
    pass


class FlattenError(BlockAgentError):
    """``block`` names the offending subsystem when known."""

    def __init__(self, message, block=None):
        self.block = block
        super().__init__(message)


class ConfigError(BlockAgentError):
    pass


class ProtocolError(BlockAgentError):
    pass


class DegenerateTrajectory(BlockAgentError):
    pass


class EnvError(BlockAgentError):
    pass


class EvalError(BlockAgentError):
    pass
