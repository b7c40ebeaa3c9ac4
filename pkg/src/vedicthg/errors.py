"""Exception classes shared across the pipeline.

The CLI maps these onto distinct exit codes, so keep the split between
configuration problems, bad input data, and runtime pipeline failures.
"""


class VedicThgError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(VedicThgError):
    """Invalid or inconsistent run configuration."""


class InputValidationError(VedicThgError):
    """Malformed or contract-violating input data (files, streams, assets)."""


class LexiconParseError(InputValidationError):
    """Lexicon file could not be parsed; carries the offending line number."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class UnknownWordError(InputValidationError):
    """Word missing from the lexicon (no letter-to-sound fallback exists)."""

    def __init__(self, word):
        super().__init__(f"word not in lexicon: {word!r}")
        self.word = word


class AlignmentError(InputValidationError):
    """Phoneme timing data violates ordering/interval invariants."""

    def __init__(self, message, index=None):
        if index is not None:
            message = f"segment {index}: {message}"
        super().__init__(message)
        self.index = index


class PipelineError(VedicThgError):
    """A pipeline stage failed at runtime; carries the stage name."""

    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
