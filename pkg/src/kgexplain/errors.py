"""
Exception hierarchy for kgexplain.

Every error carries the process exit code the command-line front end
uses for it: 1 usage, 2 data/config, 3 backend.
"""
from typing import Optional


class KGExplainError(Exception):
    """Base class for all engine errors."""
    exit_code = 1


class DataError(KGExplainError):
    """Input data could not be read or is inconsistent."""
    exit_code = 2


class ConfigError(KGExplainError, ValueError):
    """Configuration violates an invariant."""
    exit_code = 2


class BackendError(KGExplainError):
    """An external encoder or generation backend failed."""
    exit_code = 3


class GraphParseError(DataError, ValueError):
    """A triple line could not be parsed."""

    def __init__(self, line_number: int, message: str, source: Optional[str] = None):
        self.line_number = line_number
        self.source = source
        where = f"{source}:{line_number}" if source else f"line {line_number}"
        super().__init__(f"{where}: {message}")


class EmptyGraphError(DataError, ValueError):
    """The triple source contained no triples."""


class UnknownEntityError(DataError, KeyError):
    """Entity id or name is not part of the graph."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown entity"


class UnknownItemError(DataError, KeyError):
    """Item id is not in the catalog."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown item"


class UnknownUserError(DataError, KeyError):
    """User id has no recorded history."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown user"


class EmptyHistoryError(DataError, ValueError):
    """User history has no usable items."""


class DimensionMismatchError(DataError, ValueError):
    """Vectors of different dimensions were combined."""


class MissingEmbeddingError(DataError, KeyError):
    """An entity or relation has no vector in the store."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "missing embedding"


class SnapshotError(DataError):
    """An index snapshot has the wrong magic header or format version."""


class UnscoreableCorpusError(DataError):
    """No evaluation instance had any extracted feature."""

    def __init__(self, unscoreable: int):
        self.unscoreable = unscoreable
        super().__init__(
            f"No scoreable instances: all {unscoreable} explanations mention zero features"
        )


class EncoderError(BackendError):
    """Text/entity encoder endpoint failed."""


class GenerationError(BackendError):
    """Completion endpoint failed or returned an unusable response."""
