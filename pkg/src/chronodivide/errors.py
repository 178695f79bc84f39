"""Exception and warning types shared across the package."""


class ChronodivideError(Exception):
    """Base class for all errors raised by this package."""


class CorpusError(ChronodivideError):
    """Corpus loading or segmentation failed."""


class LexiconError(ChronodivideError):
    """Lexicon file missing, unreadable, or unusable."""


class VocabularyError(ChronodivideError):
    """Vocabulary construction produced no usable features."""


class FeatureError(ChronodivideError):
    """Feature extraction or normalization contract violated."""


class TrainingError(ChronodivideError):
    """SVM training preconditions violated (e.g. single-class input)."""


class SelectionError(ChronodivideError):
    """Repeat/selection procedure could not run (e.g. impossible split)."""


class AnalysisError(ChronodivideError):
    """Series analysis preconditions violated."""


class ConfigError(ChronodivideError):
    """Run configuration invalid or inconsistent."""


class PipelineError(ChronodivideError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage '{stage}': {message}")
        self.stage = stage


class ShortSampleWarning(UserWarning):
    """A produced sample is shorter than the configured minimum."""


class NoSentencesWarning(UserWarning):
    """A sample contained no sentences; sentence-based features set to 0."""


class UnmatchedQuoteWarning(UserWarning):
    """An opening quote had no closing counterpart; segment ran to text end."""


class ConvergenceWarning(UserWarning):
    """The SVM solver hit its iteration cap before reaching tolerance."""
