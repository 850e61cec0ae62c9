"""Shared exception types."""


class DimensionError(ValueError):
    """Operands act on different qubit counts or mismatched vector sizes."""


class ResourceLimitError(RuntimeError):
    """A dense-matrix construction was requested above the memory cap."""


class ParseError(ValueError):
    """Malformed input text; message carries the line or byte position."""


class ConvergenceError(RuntimeError):
    """An iterative solver exhausted its restart budget."""
