"""Vocabularies and numeric encoding of logs for the tagger.

Word lookup is lowercased (public pretrained vectors are lowercased);
character lookup preserves case, since casing is a character-level signal.
Index 0 is PAD and index 1 is UNK in both vocabularies; encoding is total,
unseen symbols map to UNK.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import AnnotatedLog
from .errors import DimensionMismatch, FormatError

PAD = 0
UNK = 1
_RESERVED = ("<pad>", "<unk>")


@dataclass(frozen=True)
class WordVocab:
    index: dict[str, int]
    min_freq: int

    def __len__(self) -> int:
        return len(self.index) + len(_RESERVED)

    def lookup(self, token: str) -> int:
        return self.index.get(token.lower(), UNK)

    def words(self) -> list[str]:
        """Vocabulary words in index order (reserved entries excluded)."""
        return sorted(self.index, key=self.index.get)


@dataclass(frozen=True)
class CharVocab:
    index: dict[str, int]

    def __len__(self) -> int:
        return len(self.index) + len(_RESERVED)

    def lookup(self, char: str) -> int:
        return self.index.get(char, UNK)

    def chars(self) -> list[str]:
        return sorted(self.index, key=self.index.get)


@dataclass(frozen=True)
class EncodedLog:
    word_ids: np.ndarray  # (T,) int
    char_ids: np.ndarray  # (T, max_word_len) int, PAD-filled

    @property
    def token_count(self) -> int:
        return len(self.word_ids)


def build_vocabs(train: list[AnnotatedLog], min_freq: int = 1) -> tuple[WordVocab, CharVocab]:
    """Vocabularies from a training set.

    Words are lowercased and kept when they occur at least ``min_freq``
    times; the char vocabulary keeps every character seen, case-preserved.
    """
    if not train:
        raise ValueError("empty training set")
    if min_freq < 1:
        raise ValueError("min_freq must be >= 1")
    word_counts: Counter[str] = Counter()
    chars: set[str] = set()
    for log in train:
        for tok in log.tokens:
            word_counts[tok.lower()] += 1
            chars.update(tok)
    words = sorted(w for w, n in word_counts.items() if n >= min_freq)
    word_index = {w: i + len(_RESERVED) for i, w in enumerate(words)}
    char_index = {c: i + len(_RESERVED) for i, c in enumerate(sorted(chars))}
    return WordVocab(word_index, min_freq), CharVocab(char_index)


def load_word_vectors(
    path: str | Path, vocab: WordVocab, dim: int, seed: int = 0
) -> tuple[np.ndarray, float]:
    """Embedding matrix initialized from a text vector file.

    Rows for vocabulary words found in the file are copied; the rest
    (including UNK) are uniform in [-0.25, 0.25] and PAD is zeroed.
    Returns the (|vocab|, dim) matrix and the coverage ratio
    found / (|vocab| - 2).
    """
    rng = np.random.default_rng(seed)
    matrix = rng.uniform(-0.25, 0.25, size=(len(vocab), dim)).astype(np.float32)
    matrix[PAD] = 0.0
    found = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                raise FormatError(f"line {lineno}: not a word-vector line")
            word, values = parts[0], parts[1:]
            if len(values) != dim:
                raise DimensionMismatch(
                    f"line {lineno}: vector has {len(values)} entries, expected {dim}"
                )
            idx = vocab.index.get(word.lower())
            if idx is None:
                continue
            try:
                matrix[idx] = np.asarray([float(v) for v in values], dtype=np.float32)
            except ValueError as exc:
                raise FormatError(f"line {lineno}: {exc}") from exc
            found += 1
    coverage = found / max(len(vocab) - len(_RESERVED), 1)
    return matrix, coverage


def encode_log(
    log: AnnotatedLog, wv: WordVocab, cv: CharVocab, max_word_len: int = 30
) -> EncodedLog:
    """Word ids and right-padded/truncated char-id rows for one log."""
    if max_word_len < 1:
        raise ValueError("max_word_len must be >= 1")
    t = len(log.tokens)
    word_ids = np.fromiter((wv.lookup(tok) for tok in log.tokens), dtype=np.int64, count=t)
    char_ids = np.full((t, max_word_len), PAD, dtype=np.int64)
    for i, tok in enumerate(log.tokens):
        for j, ch in enumerate(tok[:max_word_len]):
            char_ids[i, j] = cv.lookup(ch)
    return EncodedLog(word_ids, char_ids)
