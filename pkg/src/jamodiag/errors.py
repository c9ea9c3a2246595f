"""Exception hierarchy shared across the package."""


class JamodiagError(Exception):
    """Base class for all domain errors raised by this package."""


class DecompositionError(JamodiagError):
    """A character cannot be decomposed into jamo."""


class CompositionError(JamodiagError):
    """A jamo sequence cannot be recomposed into syllables."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class VocabularyError(JamodiagError):
    """A token is outside the vocabulary, or a vocabulary file is malformed."""


class RuleError(JamodiagError):
    """A rule file is syntactically or semantically invalid."""


class ArpaError(JamodiagError):
    """An ARPA language-model file is malformed."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmissionFormatError(JamodiagError):
    """An emission-matrix file is malformed or inconsistent."""


class ManifestError(JamodiagError):
    """A corpus manifest fails validation."""


class MetricError(JamodiagError):
    """A metric is undefined for the given input (e.g. empty reference)."""


class PipelineError(JamodiagError):
    """An evaluation run failed while processing a specific utterance."""
