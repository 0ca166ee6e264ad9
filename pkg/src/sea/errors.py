"""Exception types shared across the package."""


class SeaError(Exception):
    """Base class for errors raised by this package."""


class EmptyQuery(SeaError):
    """Search was asked to run with a blank query."""


class EngineUnavailable(SeaError):
    """The remote search engine timed out or returned a failure status."""


class QuotaExceeded(SeaError):
    """The remote search engine rejected the request for quota reasons."""


class EmptyText(SeaError):
    """Embedding was asked for a blank string."""


class NoDocuments(SeaError):
    """A retrieval distribution needs at least one score."""


class EmptyContext(SeaError):
    """Query generation needs at least one dialogue turn."""


class GeneratorUnavailable(SeaError):
    """The remote query-generation endpoint failed."""


class DimensionMismatch(SeaError):
    """Mixture inputs disagree in length."""


class NoValidContinuation(SeaError):
    """Every candidate token is masked and the minimum length is unmet."""


class EmptyCorpus(SeaError):
    """Language-model training needs at least one token."""


class EmptyTargets(SeaError):
    """Perplexity needs at least one target token."""


class ParseError(SeaError):
    """A line of an input file is not valid JSON."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class SchemaViolation(SeaError):
    """A record violates the dataset or snapshot schema."""

    def __init__(self, line: int, field: str, message: str):
        super().__init__(f"line {line}: field {field!r}: {message}")
        self.line = line
        self.field = field
