"""Exception hierarchy shared by all diatopic modules.

Two broad families matter to callers: :class:`DataError` (bad or missing
input; the CLI maps these to exit code 2) and :class:`NumericalError`
(a computation broke down; exit code 3).
"""

__all__ = [
    "DiatopicError",
    "DataError",
    "NumericalError",
    "EmptyDictionary",
    "EmptyCorpus",
    "AllTokensFiltered",
    "EmptySlice",
    "VocabularyMismatch",
    "DimensionMismatch",
    "NonFiniteInput",
    "NonPositiveAlpha",
    "ParseError",
    "DuplicateTopicId",
    "UnknownMainArea",
    "UnknownDocId",
    "NoTopicsInArea",
    "DegenerateX",
    "InsufficientData",
    "InvalidDf",
    "NonConvergenceWarning",
]


class DiatopicError(Exception):
    """Base class for all errors raised by this package."""


class DataError(DiatopicError):
    """Input data is missing, malformed or inconsistent."""


class NumericalError(DiatopicError):
    """A numerical routine received unusable values or broke down."""


class EmptyDictionary(DataError):
    """The base frequency lexicon is empty; correction cannot run."""


class EmptyCorpus(DataError):
    """No documents available where at least one is required."""


class AllTokensFiltered(DataError):
    """Vocabulary pruning removed every token."""


class EmptySlice(DataError):
    """A time slice holds no documents where at least one is required."""


class VocabularyMismatch(DataError):
    """Held-out vocabulary is not a subset of the model vocabulary."""


class DimensionMismatch(DataError):
    """Array shapes are inconsistent with each other or with the model."""


class NonFiniteInput(NumericalError):
    """An input vector contains NaN or infinity."""


class NonPositiveAlpha(NumericalError):
    """A Dirichlet parameter vector has an entry <= 0."""


class ParseError(DataError):
    """A data file could not be parsed.

    ``line`` is the 1-based line number when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicateTopicId(ParseError):
    """The same topic id appears on more than one line of a tags file."""


class UnknownMainArea(ParseError):
    """A tags file names a main area outside the fixed taxonomy."""


class UnknownDocId(DataError):
    """An assignment references a document missing from the year table."""


class NoTopicsInArea(DataError):
    """No topic carries the requested main-area tag."""


class DegenerateX(DataError):
    """All regression x values are equal; the slope is undefined."""


class InsufficientData(DataError):
    """Too few points for the requested statistic."""


class InvalidDf(DataError):
    """Degrees of freedom must be a positive integer."""


class NonConvergenceWarning(UserWarning):
    """An iterative fit hit its iteration cap before reaching tolerance.

    The best-so-far result is still returned; the warning carries the
    final convergence delta so callers can judge severity.
    """
