"""Exception types shared across the pipeline."""


class StoryMineError(Exception):
    """Base class; carries a short machine-readable code for the CLI/API."""

    code = "error"

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or {}


class CorpusFormatError(StoryMineError):
    code = "corpus.format"


class DuplicateIdError(StoryMineError):
    code = "corpus.duplicate_id"


class EmptyCorpusError(StoryMineError):
    code = "corpus.empty"


class DegenerateCorpusError(StoryMineError):
    code = "textprep.degenerate"


class OovTokenError(StoryMineError):
    code = "textprep.oov"


class RulesMismatchError(StoryMineError):
    code = "textprep.rules_mismatch"


class FingerprintMismatchError(StoryMineError):
    code = "artifact.fingerprint_mismatch"


class MissingArtifactError(StoryMineError):
    code = "artifact.missing"


class CodebookError(StoryMineError):
    code = "codebook.invalid"


class SweepError(StoryMineError):
    """A grid point failed; .partial holds the results gathered so far."""

    code = "model_select.sweep"

    def __init__(self, message, partial=None, details=None):
        super().__init__(message, details)
        self.partial = partial
