"""Synthetic ordered corpora with a planted authorship divide.

Chapters are i.i.d. symbol draws from distribution A before the divide and
distribution B after it (or a linear blend when transition="linear").
Sentence terminators are inserted on a fixed cadence so sentence-based
features are well defined but carry no signal. A ground-truth manifest and
a lexicon covering the whole alphabet are written next to the chapters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError

# CJK ideograph block; none of these collide with terminators or quotes
_ALPHABET_BASE = 0x4E00

_SENTENCE_LEN = 19          # content symbols per sentence
_EXCLAIM_EVERY = 5          # every 5th sentence ends with an exclamation

GROUND_TRUTH_NAME = "ground_truth.json"
LEXICON_NAME = "lexicon.txt"
CHAPTERS_DIR = "chapters"


@dataclass(frozen=True)
class SyntheticSpec:
    alphabet_size: int
    dist_a: tuple[float, ...]
    dist_b: tuple[float, ...]
    chars_per_chapter: int
    chapters_a: int
    chapters_b: int
    divide_position: int
    seed: int
    transition: str = "sharp"

    def __post_init__(self) -> None:
        if self.alphabet_size < 1:
            raise ConfigError("alphabet_size must be >= 1")
        if len(self.dist_a) != self.alphabet_size or len(self.dist_b) != self.alphabet_size:
            raise ConfigError("distribution length must equal alphabet_size")
        for name, dist in (("dist_a", self.dist_a), ("dist_b", self.dist_b)):
            if abs(sum(dist) - 1.0) > 1e-9:
                raise ConfigError(f"{name} must sum to 1 within 1e-9")
            if any(p < 0 for p in dist):
                raise ConfigError(f"{name} has negative probabilities")
        if self.chapters_a < 1 or self.chapters_b < 1:
            raise ConfigError("chapter counts must be >= 1")
        if self.divide_position != self.chapters_a:
            raise ConfigError(
                "divide_position must equal chapters_a "
                f"({self.divide_position} != {self.chapters_a})"
            )
        if self.chars_per_chapter < 1:
            raise ConfigError("chars_per_chapter must be >= 1")
        if self.transition not in ("sharp", "linear"):
            raise ConfigError(f"unknown transition {self.transition!r}")


def alphabet_symbols(size: int) -> list[str]:
    return [chr(_ALPHABET_BASE + i) for i in range(size)]


def make_shifted_distributions(
    alphabet_size: int, n_shifted: int, factor: float
) -> tuple[tuple[float, ...], tuple[float, ...], list[int]]:
    """Zipf-like base distribution plus a second one with n_shifted symbols
    scaled by `factor` (then renormalized).

    Shifted symbols are spread evenly across the rarer half of the alphabet
    so the signal is split over several moderate-strength markers rather
    than one overwhelming one. Deterministic.
    """
    if not (1 <= n_shifted <= alphabet_size):
        raise ConfigError("n_shifted must be in 1..alphabet_size")
    if factor <= 0:
        raise ConfigError("factor must be positive")
    base = 1.0 / (np.arange(alphabet_size) + alphabet_size / 10.0)
    lo = alphabet_size // 2 if n_shifted <= alphabet_size - alphabet_size // 2 else 0
    shifted = sorted(
        {int(i) for i in np.linspace(lo, alphabet_size - 1, n_shifted)}
    )
    if len(shifted) != n_shifted:
        raise ConfigError("alphabet too small for n_shifted distinct symbols")
    weights_b = base.copy()
    weights_b[shifted] *= factor
    dist_a = base / base.sum()
    dist_b = weights_b / weights_b.sum()
    return tuple(dist_a.tolist()), tuple(dist_b.tolist()), shifted


def differing_symbols(
    dist_a: tuple[float, ...], dist_b: tuple[float, ...]
) -> list[int]:
    """Symbols whose B/A frequency ratio deviates from the bulk ratio.

    Renormalization after a shift rescales every probability slightly; only
    symbols whose ratio departs from the median ratio genuinely differ.
    """
    a = np.array(dist_a)
    b = np.array(dist_b)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(a > 0, b / a, np.where(b > 0, np.inf, 1.0))
    bulk = float(np.median(ratio))
    return [int(i) for i in np.flatnonzero(np.abs(ratio - bulk) > 1e-9 * max(bulk, 1.0))]


def _chapter_distribution(spec: SyntheticSpec, k: int, total: int) -> np.ndarray:
    a = np.array(spec.dist_a)
    b = np.array(spec.dist_b)
    if spec.transition == "sharp":
        return a if k < spec.divide_position else b
    t = k / (total - 1) if total > 1 else 0.0
    mix = (1.0 - t) * a + t * b
    return mix / mix.sum()


def _render_chapter(symbols: np.ndarray, alphabet: list[str]) -> str:
    sentences = []
    for s, start in enumerate(range(0, len(symbols), _SENTENCE_LEN)):
        chunk = "".join(alphabet[i] for i in symbols[start : start + _SENTENCE_LEN])
        terminator = "！" if s % _EXCLAIM_EVERY == _EXCLAIM_EVERY - 1 else "。"
        sentences.append(chunk + terminator)
    return "".join(sentences)


def generate_synthetic(spec: SyntheticSpec, out_dir: str | Path) -> Path:
    """Write the corpus, its lexicon, and the ground-truth manifest.

    Chapters land in <out_dir>/chapters/ as 0000.txt, 0001.txt, ... so
    lexicographic order is chronological order; the lexicon and manifest
    stay above them, out of the corpus glob. chars_per_chapter counts
    content symbols; terminators are added on top. Byte-identical for
    identical specs.
    """
    out = Path(out_dir)
    chapters = out / CHAPTERS_DIR
    try:
        chapters.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create corpus directory {out}: {exc}") from None
    alphabet = alphabet_symbols(spec.alphabet_size)
    total = spec.chapters_a + spec.chapters_b
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed & ((1 << 64) - 1)]))
    for k in range(total):
        dist = _chapter_distribution(spec, k, total)
        symbols = rng.choice(spec.alphabet_size, size=spec.chars_per_chapter, p=dist)
        (chapters / f"{k:04d}.txt").write_text(
            _render_chapter(symbols, alphabet), encoding="utf-8"
        )

    (out / LEXICON_NAME).write_text(
        "".join(f"{s}\n" for s in alphabet), encoding="utf-8"
    )
    differing = differing_symbols(spec.dist_a, spec.dist_b)
    manifest = {
        "alphabet_size": spec.alphabet_size,
        "chapters_a": spec.chapters_a,
        "chapters_b": spec.chapters_b,
        "chars_per_chapter": spec.chars_per_chapter,
        "divide_position": spec.divide_position,
        "differing_symbol_indices": differing,
        "differing_symbols": [alphabet[i] for i in differing],
        "transition": spec.transition,
        "seed": spec.seed,
    }
    (out / GROUND_TRUTH_NAME).write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return out
