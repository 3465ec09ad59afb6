"""Exception types shared across the package.

Every error raised for bad user input derives from EngineError so the HTTP
layer can map them to 4xx responses; anything else escaping a handler is a
programming bug.
"""


class EngineError(Exception):
    """Base class for all expected failures."""


class ConfigError(EngineError):
    """Invalid configuration value or out-of-range argument."""


class ParseError(EngineError):
    """Malformed corpus record; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class EmptyCorpusError(EngineError):
    """Corpus file or split contains no documents."""


class EmptyTokenError(EngineError):
    """Text produced no tokens after normalization."""


class UnknownIdError(EngineError):
    """Document id not covered by a precomputed embedding map."""


class NotFoundError(EngineError):
    """Document id not present in the index."""


class DuplicateIdError(EngineError):
    """Document id already present in the index."""


class NoNegativesError(EngineError):
    """Pair sampling needs at least two distinct labels."""


class DegenerateCosineError(EngineError):
    """Cosine similarity undefined: an input has zero norm."""


class DegenerateNormError(EngineError):
    """Cannot normalize the zero vector."""


class UndefinedCorrelationError(EngineError):
    """Rank correlation undefined for a constant sequence."""


class TrainingDivergedError(EngineError):
    """Loss became non-finite; carries epoch and batch indices."""

    def __init__(self, epoch: int, batch: int):
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


class DegenerateProjectionError(EngineError):
    """2-D projection undefined: all embeddings identical."""


class DimensionMismatchError(EngineError):
    """Embedding dimensions of two artifacts disagree."""

    def __init__(self, expected: int, actual: int, what: str = "embedding"):
        super().__init__(f"{what} dimension mismatch: expected {expected}, got {actual}")
        self.expected = expected
        self.actual = actual


class EmptyBatchError(EngineError):
    """An operation over documents received zero documents."""
