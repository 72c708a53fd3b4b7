"""Exception hierarchy shared across the package.

``ConfigError`` maps to exit code 2, ``DataError`` (and subclasses) to 3,
``InternalError`` to 4 in the command-line interface.
"""


class LexdiffError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(LexdiffError):
    """Invalid or inconsistent run configuration."""


class DataError(LexdiffError):
    """Problem with an input data file."""


class MalformedRow(DataError):
    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class MissingRequiredColumn(DataError):
    def __init__(self, path, column):
        super().__init__(f"{path}: missing required column {column!r}")
        self.path = str(path)
        self.column = column


class EmptyResource(DataError):
    def __init__(self, path):
        super().__init__(f"{path}: resource file contains no data rows")
        self.path = str(path)


class MissingColumn(MissingRequiredColumn):
    """Required column absent from a vocabulary-item CSV."""


class RowParseError(MalformedRow):
    """A vocabulary-item row failed to parse."""


class EmptySplit(DataError):
    def __init__(self, path):
        super().__init__(f"{path}: split contains no items")
        self.path = str(path)


class EmptyCorpus(LexdiffError):
    """Character vectorizer fitted on an empty word-form corpus."""


class DomainError(LexdiffError):
    """A value lies outside the domain of the requested transform."""


class SchemaMismatch(LexdiffError):
    """Feature table does not match the schema a model was trained on."""


class DegenerateTarget(LexdiffError):
    """Training target is constant; the boosted ensemble reduces to its base score."""


class AllMasked(LexdiffError):
    """Every grid cell of a kernel surface fell below the weight threshold."""


class InternalError(LexdiffError):
    """An internal invariant was violated."""
