"""Content-independent stylometric features and median normalization.

The feature vector for a sample is: per-1000-character rates of the selected
function characters, per-1000-character rates of the selected function words,
then four global statistics (sentence length mean/variance, direct-speech
rate, exclamation rate per 100 sentences). Normalization divides each column
by its median over the training rows, so training medians become 1.
"""

from __future__ import annotations

import csv
import json
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import (
    EXCLAMATION_MARKS,
    Sample,
    sentence_content_length,
    split_sentences,
)
from .errors import (
    FeatureError,
    LexiconError,
    NoSentencesWarning,
    UnmatchedQuoteWarning,
    VocabularyError,
)

GLOBAL_FEATURES = (
    "sentence_len_mean",
    "sentence_len_var",
    "direct_speech_rate",
    "exclamation_rate",
)

# opening quote -> matching closing quote
QUOTE_PAIRS = {
    "「": "」",  # 「」
    "『": "』",  # 『』
    "“": "”",  # “”
    '"': '"',
}

CHAR_PREFIX = "char:"
WORD_PREFIX = "word:"


@dataclass(frozen=True)
class FeatureSpec:
    """Ordered feature identity: characters, words, then global statistics."""

    char_features: tuple[str, ...]
    word_features: tuple[str, ...]

    def __post_init__(self) -> None:
        entries = list(self.char_features) + list(self.word_features)
        if len(set(entries)) != len(entries):
            raise FeatureError("duplicate feature entries")
        for w in self.word_features:
            if len(w) < 2:
                raise FeatureError(f"word feature {w!r} shorter than 2 chars")

    @property
    def total_dim(self) -> int:
        return len(self.char_features) + len(self.word_features) + len(GLOBAL_FEATURES)

    def feature_names(self) -> list[str]:
        return (
            [CHAR_PREFIX + c for c in self.char_features]
            + [WORD_PREFIX + w for w in self.word_features]
            + list(GLOBAL_FEATURES)
        )

    @classmethod
    def from_feature_names(cls, names: Sequence[str]) -> "FeatureSpec":
        """Rebuild a spec from exported column names (round-trip identity)."""
        chars, words = [], []
        for name in names:
            if name.startswith(CHAR_PREFIX):
                chars.append(name[len(CHAR_PREFIX):])
            elif name.startswith(WORD_PREFIX):
                words.append(name[len(WORD_PREFIX):])
            elif name not in GLOBAL_FEATURES:
                raise FeatureError(f"unrecognized feature name {name!r}")
        spec = cls(tuple(chars), tuple(words))
        if list(names) != spec.feature_names():
            raise FeatureError("feature names are not in canonical order")
        return spec


@dataclass
class Normalizer:
    """Per-column training medians; zero medians and their substitutes."""

    medians: np.ndarray
    substitutions: dict[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if np.any(self.medians <= 0):
            raise FeatureError("stored medians must be strictly positive")


@dataclass
class FeatureMatrix:
    """Sample-by-feature values with row metadata, rows in chronological order."""

    values: np.ndarray
    feature_names: list[str]
    sample_ids: list[str]
    ordinals: list[int]
    class_tags: list[str]

    def __post_init__(self) -> None:
        n, d = self.values.shape
        if d != len(self.feature_names):
            raise FeatureError("column count does not match feature names")
        if not (n == len(self.sample_ids) == len(self.ordinals) == len(self.class_tags)):
            raise FeatureError("row metadata length mismatch")

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    def rows_with_tags(self, tags: Iterable[str]) -> np.ndarray:
        wanted = set(tags)
        return np.array(
            [i for i, t in enumerate(self.class_tags) if t in wanted], dtype=int
        )

    def rows_with_ordinals(self, ordinals: Iterable[int]) -> np.ndarray:
        wanted = set(ordinals)
        return np.array(
            [i for i, o in enumerate(self.ordinals) if o in wanted], dtype=int
        )

    def subset_rows(self, rows: Sequence[int]) -> "FeatureMatrix":
        rows = list(rows)
        return FeatureMatrix(
            values=self.values[rows],
            feature_names=list(self.feature_names),
            sample_ids=[self.sample_ids[i] for i in rows],
            ordinals=[self.ordinals[i] for i in rows],
            class_tags=[self.class_tags[i] for i in rows],
        )


def load_lexicon(path: str | Path) -> tuple[set[str], set[str]]:
    """Read a lexicon file into (characters, words).

    One entry per line, single characters and multi-character words
    intermixed; '#' starts a comment line.
    """
    path = Path(path)
    if not path.exists():
        raise LexiconError(f"lexicon file does not exist: {path}")
    chars, words = set(), set()
    for raw in path.read_text(encoding="utf-8").splitlines():
        entry = raw.strip()
        if not entry or entry.startswith("#"):
            continue
        if len(entry) == 1:
            chars.add(entry)
        else:
            words.add(entry)
    if not chars and not words:
        raise LexiconError(f"lexicon is empty: {path}")
    return chars, words


def default_lexicon_path() -> Path:
    """Path of the bundled convenience lexicon of Chinese function items."""
    return Path(__file__).parent / "data" / "function_lexicon.txt"


def count_word_occurrences(text: str, word: str) -> int:
    """Non-overlapping occurrences found by one left-to-right scan."""
    if not word:
        raise FeatureError("word must be non-empty")
    return text.count(word)


def build_vocabulary(
    samples: Sequence[Sample],
    function_lexicon: tuple[set[str], set[str]],
    k_chars: int = 500,
    k_words: int = 300,
) -> FeatureSpec:
    """Select the character and word features for a corpus.

    Characters: the k_chars most frequent characters over all samples,
    intersected with the lexicon's characters. Words: the k_words most
    frequent lexicon words (non-overlapping counts). Both lists are ordered
    by descending frequency, ties by ascending code point.
    """
    lex_chars, lex_words = function_lexicon
    if not lex_chars and not lex_words:
        raise LexiconError("function lexicon is empty")
    if k_chars < 1 or k_words < 1:
        raise VocabularyError("k_chars and k_words must be >= 1")

    char_counts: Counter[str] = Counter()
    for sample in samples:
        char_counts.update(sample.text)
    by_freq = sorted(char_counts.items(), key=lambda kv: (-kv[1], kv[0]))
    top_chars = [c for c, _ in by_freq[:k_chars]]
    char_features = [c for c in top_chars if c in lex_chars]

    word_counts: Counter[str] = Counter()
    for word in lex_words:
        total = sum(count_word_occurrences(s.text, word) for s in samples)
        if total > 0:
            word_counts[word] = total
    ranked_words = sorted(word_counts.items(), key=lambda kv: (-kv[1], kv[0]))
    word_features = [w for w, _ in ranked_words[:k_words]]

    if not char_features and not word_features:
        raise VocabularyError(
            "no lexicon character or word occurs in the corpus"
        )
    return FeatureSpec(tuple(char_features), tuple(word_features))


def _count_quoted_segments(text: str, sample_id: str = "") -> int:
    segments = 0
    expect: str | None = None
    for ch in text:
        if expect is not None:
            if ch == expect:
                segments += 1
                expect = None
        elif ch in QUOTE_PAIRS:
            expect = QUOTE_PAIRS[ch]
    if expect is not None:
        segments += 1
        warnings.warn(
            f"sample {sample_id!r}: unmatched opening quote; "
            "segment extends to text end",
            UnmatchedQuoteWarning,
            stacklevel=3,
        )
    return segments


def extract_features(sample: Sample, spec: FeatureSpec) -> np.ndarray:
    """Raw feature vector for one sample, in FeatureSpec order."""
    text = sample.text
    if not text:
        raise FeatureError(f"sample {sample.id!r} has empty text")
    n_chars = len(text)
    vec = np.zeros(spec.total_dim)

    char_counts = Counter(text)
    for i, c in enumerate(spec.char_features):
        vec[i] = char_counts[c] / n_chars * 1000.0
    off = len(spec.char_features)
    for j, w in enumerate(spec.word_features):
        vec[off + j] = count_word_occurrences(text, w) / n_chars * 1000.0

    off = len(spec.char_features) + len(spec.word_features)
    sentences = split_sentences(text)
    if not sentences:
        warnings.warn(
            f"sample {sample.id!r} has no sentences; global features set to 0",
            NoSentencesWarning,
            stacklevel=2,
        )
        return vec
    lengths = np.array([sentence_content_length(s) for s in sentences], dtype=float)
    n_sent = len(sentences)
    vec[off] = lengths.mean()
    vec[off + 1] = lengths.var()  # population variance
    vec[off + 2] = _count_quoted_segments(text, sample.id) / n_sent * 100.0
    exclaims = sum(1 for s in sentences if s and s[-1] in EXCLAMATION_MARKS)
    vec[off + 3] = exclaims / n_sent * 100.0
    return vec


def build_feature_matrix(samples: Sequence[Sample], spec: FeatureSpec) -> FeatureMatrix:
    """Extract features for every sample; rows follow sample order."""
    values = np.empty((len(samples), spec.total_dim))
    for i, sample in enumerate(samples):
        values[i] = extract_features(sample, spec)
    return FeatureMatrix(
        values=values,
        feature_names=spec.feature_names(),
        sample_ids=[s.id for s in samples],
        ordinals=[s.ordinal for s in samples],
        class_tags=[s.class_tag for s in samples],
    )


def lower_median(values: np.ndarray) -> float:
    """Median with the lower-median convention for even counts."""
    ordered = np.sort(np.asarray(values, dtype=float))
    return float(ordered[(len(ordered) - 1) // 2])


def fit_normalizer(matrix: FeatureMatrix, training_rows: Sequence[int]) -> Normalizer:
    """Per-feature lower medians over the training rows.

    Zero medians are replaced by the smallest strictly positive training
    value in the column, or by 1 when the whole column is zero; every
    substitution is recorded.
    """
    rows = list(training_rows)
    if not rows:
        raise FeatureError("training_rows must be non-empty")
    train = matrix.values[rows]
    medians = np.empty(train.shape[1])
    substitutions: dict[int, float] = {}
    for j in range(train.shape[1]):
        med = lower_median(train[:, j])
        if med <= 0:
            positive = train[train[:, j] > 0, j]
            med = float(positive.min()) if positive.size else 1.0
            substitutions[j] = med
        medians[j] = med
    return Normalizer(medians=medians, substitutions=substitutions)


def apply_normalizer(matrix: FeatureMatrix, norm: Normalizer) -> FeatureMatrix:
    """Divide every column by its stored median; metadata passes through."""
    if matrix.values.shape[1] != norm.medians.shape[0]:
        raise FeatureError(
            f"dimension mismatch: matrix has {matrix.values.shape[1]} columns, "
            f"normalizer has {norm.medians.shape[0]} medians"
        )
    return FeatureMatrix(
        values=matrix.values / norm.medians,
        feature_names=list(matrix.feature_names),
        sample_ids=list(matrix.sample_ids),
        ordinals=list(matrix.ordinals),
        class_tags=list(matrix.class_tags),
    )


def write_feature_csv(matrix: FeatureMatrix, path: str | Path) -> None:
    """CSV export: sample_id, ordinal, class_tag, then one column per feature.

    Floats are written with repr so the file round-trips bit-exactly.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "ordinal", "class_tag"] + matrix.feature_names)
        for i in range(matrix.n_samples):
            writer.writerow(
                [matrix.sample_ids[i], matrix.ordinals[i], matrix.class_tags[i]]
                + [repr(v) for v in matrix.values[i].tolist()]
            )


def read_feature_csv(path: str | Path) -> FeatureMatrix:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["sample_id", "ordinal", "class_tag"]:
            raise FeatureError(f"unexpected feature CSV header in {path}")
        names = header[3:]
        ids, ordinals, tags, rows = [], [], [], []
        for row in reader:
            ids.append(row[0])
            ordinals.append(int(row[1]))
            tags.append(row[2])
            rows.append([float(v) for v in row[3:]])
    values = np.array(rows, dtype=float) if rows else np.empty((0, len(names)))
    return FeatureMatrix(values, names, ids, ordinals, tags)


def write_normalizer_json(
    norm: Normalizer, feature_names: Sequence[str], path: str | Path
) -> None:
    payload = {
        "feature_names": list(feature_names),
        "medians": norm.medians.tolist(),
        "substitutions": {str(k): v for k, v in norm.substitutions.items()},
    }
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def read_normalizer_json(path: str | Path) -> tuple[Normalizer, list[str]]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    norm = Normalizer(
        medians=np.array(payload["medians"], dtype=float),
        substitutions={int(k): float(v) for k, v in payload["substitutions"].items()},
    )
    return norm, list(payload["feature_names"])
