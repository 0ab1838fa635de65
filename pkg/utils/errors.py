"""Domain errors.

Every error raised on bad *data* (transcripts, ARPA files, emissions,
manifests) derives from DataError so the command line can map it to exit
code 2. Plain ValueError is kept for invalid arguments.
"""

from typing import Optional


class DataError(ValueError):
    """Input data cannot be used."""


class LineError(DataError):
    """Data error tied to a line of a text file."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


# textkit
class InvalidScript(DataError):
    """Text holds Latin letters, digits or letters outside the Arabic block."""


class InsufficientDiacritics(DataError):
    """Diacritic coverage is below the scansion threshold."""

    def __init__(self, coverage: float, threshold: float):
        self.coverage = coverage
        self.threshold = threshold
        super().__init__(f"diacritic coverage {coverage:.3f} is below threshold {threshold:.3f}")


# metrics
class EmptyReference(DataError):
    pass


class LengthMismatch(DataError):
    pass


class UnknownLabel(DataError):
    pass


# lm
class EmptyCorpus(DataError):
    pass


class EmptyText(DataError):
    pass


class MalformedArpa(LineError):
    pass


# ctc
class InvalidEmission(DataError):
    pass


class TooLarge(DataError):
    """Exhaustive decoding requested on a grid beyond the enumeration guard."""


class MissingSpaceSymbol(DataError):
    pass


# meter
class DimensionMismatch(DataError):
    pass


class EmptyDataset(DataError):
    pass


# bench
class ManifestError(LineError):
    pass


class ParseError(ManifestError):
    pass


class DuplicateId(ManifestError):
    pass


class MissingField(ManifestError):
    pass


class UnlabeledEntry(DataError):
    pass


class AlphabetMismatch(DataError):
    pass


class ConfigError(ValueError):
    """Run configuration violates its invariants."""
