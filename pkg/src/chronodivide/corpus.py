"""Ordered-corpus ingestion, sentence splitting, and sample segmentation.

A corpus is an ordered list of documents (chapters). Documents are split into
ordered samples according to a segmentation policy: one sample per document,
two identical samples (duplication), or two halves split at the sentence
boundary nearest the character midpoint. Class tags mark which stretch of the
corpus belongs to each suspected author.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import CorpusError, ShortSampleWarning

CLASS_A = "A"
CLASS_B = "B"
UNLABELED = "unlabeled"

# CJK full-width terminators plus their ASCII counterparts.
SENTENCE_TERMINATORS = frozenset("。！？；…") | frozenset(".!?;")

EXCLAMATION_MARKS = frozenset("！!")


@dataclass(frozen=True)
class Document:
    """One ordered text unit (a chapter) of the corpus."""

    id: str
    ordinal: int
    text: str

    def __post_init__(self) -> None:
        if self.ordinal < 0:
            raise CorpusError(f"document {self.id!r}: ordinal must be >= 0")
        if not self.text.strip():
            raise CorpusError(f"document {self.id!r}: text is empty")


@dataclass(frozen=True)
class Sample:
    """One chronologically ordered sample produced from a document."""

    id: str
    ordinal: int
    source_document: str
    part_index: int
    class_tag: str
    text: str


@dataclass(frozen=True)
class SegmentationPolicy:
    """How documents become samples.

    balance_mode:
      none         -- one sample per document
      split_halves -- documents in balance_range yield two halves, split at
                      the sentence boundary nearest the character midpoint
      duplicate    -- documents in balance_range yield two identical samples
    balance_range is an inclusive (start, end) ordinal interval; None applies
    balancing to every document.
    """

    min_chars: int = 1000
    balance_mode: str = "none"
    balance_range: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if self.min_chars < 1:
            raise CorpusError("min_chars must be >= 1")
        if self.balance_mode not in ("none", "split_halves", "duplicate"):
            raise CorpusError(f"unknown balance_mode {self.balance_mode!r}")

    def in_balance_range(self, ordinal: int) -> bool:
        if self.balance_mode == "none":
            return False
        if self.balance_range is None:
            return True
        lo, hi = self.balance_range
        return lo <= ordinal <= hi


def load_corpus(locator: str | Path) -> list[Document]:
    """Load an ordered corpus from a directory of .txt files or a manifest.

    Directory mode orders documents by lexicographic filename; manifest mode
    (a UTF-8 text file listing one relative path per line, '#' comments)
    preserves manifest order. Ordinals are assigned 0..D-1.
    """
    locator = Path(locator)
    if not locator.exists():
        raise CorpusError(f"corpus locator does not exist: {locator}")

    if locator.is_dir():
        paths = sorted(locator.glob("*.txt"), key=lambda p: p.name)
        names = [p.name for p in paths]
    else:
        names = []
        seen = set()
        for raw in locator.read_text(encoding="utf-8").splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line in seen:
                raise CorpusError(f"duplicate filename in manifest: {line!r}")
            seen.add(line)
            names.append(line)
        paths = [locator.parent / name for name in names]

    if not paths:
        raise CorpusError(f"empty corpus: {locator}")

    documents = []
    for ordinal, (name, path) in enumerate(zip(names, paths)):
        try:
            text = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise CorpusError(f"corpus file missing: {path}") from None
        except UnicodeDecodeError as exc:
            raise CorpusError(f"not valid UTF-8: {path} ({exc})") from None
        if not text.strip():
            raise CorpusError(f"corpus file is empty: {path}")
        documents.append(Document(id=name, ordinal=ordinal, text=text))
    return documents


def split_sentences(text: str) -> list[str]:
    """Split text into sentences at terminator characters.

    Every terminator closes the current sentence (the terminator stays
    attached); a trailing run without a terminator counts as one sentence.
    Empty input yields an empty list.
    """
    sentences = []
    start = 0
    for i, ch in enumerate(text):
        if ch in SENTENCE_TERMINATORS:
            sentences.append(text[start : i + 1])
            start = i + 1
    if start < len(text):
        sentences.append(text[start:])
    return sentences


def sentence_content_length(sentence: str) -> int:
    """Length in Unicode scalar values, excluding the trailing terminator."""
    if sentence and sentence[-1] in SENTENCE_TERMINATORS:
        return len(sentence) - 1
    return len(sentence)


def _sentence_boundaries(text: str) -> list[int]:
    """Character offsets of internal sentence boundaries (exclusive ends)."""
    boundaries = []
    pos = 0
    for sentence in split_sentences(text):
        pos += len(sentence)
        if pos < len(text):
            boundaries.append(pos)
    return boundaries


def _split_point(doc: Document, min_chars: int) -> int:
    """Pick the sentence boundary nearest the character midpoint.

    Boundaries leaving both halves >= min_chars are preferred; if none
    qualifies the nearest internal boundary is used and a warning issued.
    """
    boundaries = _sentence_boundaries(doc.text)
    if not boundaries:
        raise CorpusError(
            f"document {doc.id!r} has a single sentence and cannot be split"
        )
    midpoint = len(doc.text) / 2.0
    legal = [
        b for b in boundaries if b >= min_chars and len(doc.text) - b >= min_chars
    ]
    if not legal:
        warnings.warn(
            f"document {doc.id!r}: no sentence boundary leaves both halves "
            f">= {min_chars} chars; splitting at the nearest boundary",
            ShortSampleWarning,
            stacklevel=3,
        )
        legal = boundaries
    return min(legal, key=lambda b: (abs(b - midpoint), b))


def _normalize_labels(
    labels: Mapping[tuple[int, int], str] | None,
) -> list[tuple[int, int, str]]:
    if not labels:
        return []
    ranges = []
    for (lo, hi), tag in labels.items():
        if lo > hi:
            raise CorpusError(f"label range ({lo}, {hi}) is inverted")
        if tag not in (CLASS_A, CLASS_B, UNLABELED):
            raise CorpusError(f"unknown class tag {tag!r}")
        ranges.append((lo, hi, tag))
    ranges.sort()
    for (_, hi1, _), (lo2, _, _) in zip(ranges, ranges[1:]):
        if lo2 <= hi1:
            raise CorpusError("label ranges overlap")
    return ranges


def _tag_for(ordinal: int, ranges: Sequence[tuple[int, int, str]]) -> str:
    for lo, hi, tag in ranges:
        if lo <= ordinal <= hi:
            return tag
    return UNLABELED


def segment_samples(
    documents: Sequence[Document],
    policy: SegmentationPolicy,
    labels: Mapping[tuple[int, int], str] | None = None,
) -> list[Sample]:
    """Turn ordered documents into ordered, class-tagged samples.

    Sample ordinals run 0..N-1 and refine document order; within a document,
    parts keep their part_index order. Documents shorter than min_chars still
    produce their (whole-document) sample but raise a ShortSampleWarning.
    """
    if not documents:
        raise CorpusError("empty corpus")
    ranges = _normalize_labels(labels)
    max_ordinal = documents[-1].ordinal
    if policy.balance_range is not None:
        lo, hi = policy.balance_range
        if lo < 0 or hi > max_ordinal or lo > hi:
            raise CorpusError(
                f"balance_range ({lo}, {hi}) outside corpus ordinals 0..{max_ordinal}"
            )

    samples = []
    ordinal = 0
    for doc in documents:
        tag = _tag_for(doc.ordinal, ranges)
        balanced = policy.in_balance_range(doc.ordinal)
        if balanced and policy.balance_mode == "split_halves":
            if len(doc.text) < 2 * policy.min_chars:
                raise CorpusError(
                    f"document {doc.id!r} has {len(doc.text)} chars, "
                    f"needs >= {2 * policy.min_chars} for split_halves"
                )
            cut = _split_point(doc, policy.min_chars)
            parts = [doc.text[:cut], doc.text[cut:]]
        elif balanced and policy.balance_mode == "duplicate":
            parts = [doc.text, doc.text]
        else:
            parts = [doc.text]

        if len(parts) == 1 and len(doc.text) < policy.min_chars:
            warnings.warn(
                f"document {doc.id!r} has {len(doc.text)} chars "
                f"(< min_chars {policy.min_chars}); sample produced anyway",
                ShortSampleWarning,
                stacklevel=2,
            )

        for part_index, text in enumerate(parts):
            samples.append(
                Sample(
                    id=f"{doc.id}#{part_index}",
                    ordinal=ordinal,
                    source_document=doc.id,
                    part_index=part_index,
                    class_tag=tag,
                    text=text,
                )
            )
            ordinal += 1
    return samples


def write_manifest(path: str | Path, names: Iterable[str]) -> None:
    """Write a corpus manifest listing files in chronological order."""
    Path(path).write_text(
        "".join(f"{name}\n" for name in names), encoding="utf-8"
    )
