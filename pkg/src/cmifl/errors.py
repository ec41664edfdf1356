"""Exception hierarchy.

``DataError`` subclasses describe bad input data or files; the CLI maps them
to exit status 2.
"""


class CmiflError(Exception):
    """Base class for all package errors."""


class DataError(CmiflError, ValueError):
    """Input data or a file is malformed."""


class EmptyBatch(CmiflError, ValueError):
    pass


class EmptyDataset(DataError):
    pass


class LengthMismatch(DataError):
    pass


class ShapeMismatch(CmiflError, ValueError):
    pass


class IndexOutOfRange(CmiflError, IndexError):
    pass


class DomainError(CmiflError, ValueError):
    pass


class NonFiniteProb(CmiflError, ValueError):
    pass


class ZeroCount(DataError):
    pass


class SingularCovariance(CmiflError, ValueError):
    pass


class UnknownLabel(DataError):
    def __init__(self, label, line=None, source=None):
        self.label = label
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(f"{where}unknown label {label!r}")


class MalformedLine(DataError):
    def __init__(self, line, source=None, reason="expected text<TAB>label"):
        self.line = line
        self.source = source
        prefix = f"{source}:" if source is not None else "line "
        super().__init__(f"{prefix}{line}: {reason}")


class ModelFormatError(DataError):
    pass


class BadMagic(ModelFormatError):
    pass


class UnsupportedVersion(ModelFormatError):
    pass


class Truncated(ModelFormatError):
    pass
