"""Vocabulary extension and prior-based initialization of braille token rows.

New braille tokens are appended to an existing (vocabulary, embedding table)
pair under the name ``<|FRAGMENT|>``. Their rows start at zero and are then
initialized from lexical priors:

* Chinese fragments map to a pinyin syllable; the row becomes the arithmetic
  mean of the embedding rows of that syllable's homophone character tokens
  (summed in ascending row order so results are bit-reproducible).
* English fragments map to a word; the row is a bitwise copy of the word's
  row, or the mean of a greedy longest-prefix subword decomposition when the
  word is not a single vocabulary item.

Tables store as a JSON header ``{"vocab": [...], "dim": d}`` next to a flat
little-endian float64 binary of rows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .codec import BrailleError
from .kb import KnowledgeBase

TOKEN_TEMPLATE = "<|{}|>"


class DuplicateToken(BrailleError):
    pass


class UnknownFragment(BrailleError):
    pass


class EmptySyllableSet(BrailleError):
    pass


class AmbiguousSyllable(BrailleError):
    pass


class WordNotInVocab(BrailleError):
    pass


class VocabIndex:
    """Bijective token-name <-> dense row id map."""

    def __init__(self, names=()):
        self.names: list[str] = []
        self.index: dict[str, int] = {}
        for n in names:
            self.add(n)

    def add(self, name: str) -> int:
        if name in self.index:
            raise DuplicateToken(name)
        self.index[name] = len(self.names)
        self.names.append(name)
        return self.index[name]

    def row(self, name: str) -> int:
        return self.index[name]

    def __contains__(self, name: str) -> bool:
        return name in self.index

    def __len__(self) -> int:
        return len(self.names)

    def copy(self) -> "VocabIndex":
        return VocabIndex(self.names)


@dataclass
class EmbeddingTable:
    matrix: np.ndarray  # (|V|, d) float64

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def zeros(cls, n: int, dim: int) -> "EmbeddingTable":
        return cls(np.zeros((n, dim), dtype=np.float64))


def token_name(fragment: str) -> str:
    return TOKEN_TEMPLATE.format(fragment)


def extend_vocab(vocab: VocabIndex, table: EmbeddingTable, fragments,
                 naming=token_name) -> tuple[VocabIndex, EmbeddingTable]:
    """Append zero-initialized rows for braille fragments; originals untouched."""
    new_vocab = vocab.copy()
    names = [naming(f) for f in fragments]
    for n in names:
        new_vocab.add(n)
    new_matrix = np.zeros((len(new_vocab), table.dim), dtype=np.float64)
    new_matrix[:len(vocab)] = table.matrix
    return new_vocab, EmbeddingTable(new_matrix)


class SyllableTokenMap:
    """syllable -> row ids of single-character homophone tokens."""

    def __init__(self, vocab: VocabIndex, char_pinyin: dict[str, str]):
        self.rows: dict[str, list[int]] = {}
        for name, row in vocab.index.items():
            syllable = char_pinyin.get(name) if len(name) == 1 else None
            if syllable:
                self.rows.setdefault(syllable, []).append(row)
        for rows in self.rows.values():
            rows.sort()

    @staticmethod
    def load_char_pinyin(path) -> dict[str, str]:
        table = {}
        for raw in Path(path).read_text(encoding="utf-8").splitlines():
            if not raw.strip() or raw.lstrip().startswith("#"):
                continue
            char, syllable = raw.split("\t")[:2]
            table[char] = syllable
        return table

    def resolve(self, syllable: str) -> list[int]:
        """Rows for a syllable, tone-exact first, tone-insensitive fallback."""
        rows = self.rows.get(syllable)
        if rows:
            return rows
        bare = syllable[:-1] if syllable and syllable[-1] in "12345" else syllable
        merged = sorted({r for s, rs in self.rows.items()
                         for r in rs
                         if (s[:-1] if s and s[-1] in "12345" else s) == bare})
        return merged


def init_chinese(table: EmbeddingTable, vocab: VocabIndex, stm: SyllableTokenMap,
                 kc: KnowledgeBase, fragment: str, syllable: str | None = None) -> np.ndarray:
    """Set the fragment token's row to the homophone-set mean for its syllable.

    A fragment with several counterparts must have `syllable` chosen by the
    caller; aggregate runs pick the highest-frequency one.
    """
    if syllable is None:
        counterparts = kc.lookup(fragment)
        if not counterparts:
            raise UnknownFragment(fragment)
        if len(counterparts) > 1:
            raise AmbiguousSyllable(f"{fragment!r} maps to {counterparts}; pick one")
        syllable = counterparts[0]
    rows = stm.resolve(syllable)
    if not rows:
        raise EmptySyllableSet(f"no vocabulary tokens for syllable {syllable!r}")
    # staged mean, summed in ascending row order, published in one write
    staging = np.zeros(table.dim, dtype=np.float64)
    for r in rows:
        staging += table.matrix[r]
    staging /= len(rows)
    table.matrix[vocab.row(token_name(fragment))] = staging
    return staging.copy()


def _decompose(word: str, vocab: VocabIndex) -> list[int] | None:
    """Greedy longest-prefix split of a word into vocabulary tokens."""
    rows = []
    i = 0
    while i < len(word):
        for j in range(len(word), i, -1):
            if word[i:j] in vocab:
                rows.append(vocab.row(word[i:j]))
                i = j
                break
        else:
            return None
    return rows


def init_english(table: EmbeddingTable, vocab: VocabIndex,
                 ke: KnowledgeBase, fragment: str) -> np.ndarray:
    """Clone the counterpart word's row into the fragment token's row."""
    counterparts = ke.lookup(fragment)
    if not counterparts:
        raise UnknownFragment(fragment)
    word = counterparts[0]
    if word in vocab:
        vec = table.matrix[vocab.row(word)].copy()
    else:
        rows = _decompose(word, vocab)
        if not rows:
            raise WordNotInVocab(word)
        staging = np.zeros(table.dim, dtype=np.float64)
        for r in sorted(rows):
            staging += table.matrix[r]
        vec = staging / len(rows)
    table.matrix[vocab.row(token_name(fragment))] = vec
    return vec.copy()


@dataclass
class InitReport:
    chinese_inited: int = 0
    english_inited: int = 0
    skipped: list[tuple[str, str]] = field(default_factory=list)  # (token, reason)

    def to_dict(self) -> dict:
        return {"chinese_inited": self.chinese_inited,
                "english_inited": self.english_inited,
                "skipped": [list(s) for s in self.skipped]}


def init_all(table: EmbeddingTable, vocab: VocabIndex, kc: KnowledgeBase | None,
             ke: KnowledgeBase | None, stm: SyllableTokenMap | None) -> InitReport:
    """Initialize every ``<|...|>`` token from whichever prior covers it.

    Fragments present in both priors take the Chinese route. Idempotent: a
    second run rewrites identical values because sources are original rows.
    """
    report = InitReport()
    prefix, suffix = TOKEN_TEMPLATE.format("£").split("£")
    for name in vocab.names:
        if not (name.startswith(prefix) and name.endswith(suffix)):
            continue
        fragment = name[len(prefix):len(name) - len(suffix)]
        if kc is not None and kc.lookup(fragment):
            syllable = kc.lookup(fragment)[0]  # highest frequency wins
            try:
                init_chinese(table, vocab, stm, kc, fragment, syllable=syllable)
                report.chinese_inited += 1
            except EmptySyllableSet:
                report.skipped.append((name, "EmptySyllableSet"))
        elif ke is not None and ke.lookup(fragment):
            try:
                init_english(table, vocab, ke, fragment)
                report.english_inited += 1
            except WordNotInVocab:
                report.skipped.append((name, "WordNotInVocab"))
        else:
            report.skipped.append((name, "UnknownFragment"))
    return report


def init_random(table: EmbeddingTable, vocab: VocabIndex, fragments,
                seed: int, scale: float = 1.0) -> None:
    """Baseline initializer: independent gaussian rows for braille tokens."""
    rng = np.random.default_rng(seed)
    for f in fragments:
        table.matrix[vocab.row(token_name(f))] = rng.normal(0.0, scale, table.dim)


def save_embeddings(table: EmbeddingTable, vocab: VocabIndex, prefix) -> None:
    prefix = Path(prefix)
    header = {"vocab": vocab.names, "dim": table.dim}
    prefix.with_suffix(".json").write_text(json.dumps(header, ensure_ascii=False), encoding="utf-8")
    data = np.ascontiguousarray(table.matrix, dtype="<f8")
    prefix.with_suffix(".bin").write_bytes(data.tobytes())


def load_embeddings(prefix) -> tuple[EmbeddingTable, VocabIndex]:
    prefix = Path(prefix)
    header = json.loads(prefix.with_suffix(".json").read_text(encoding="utf-8"))
    vocab = VocabIndex(header["vocab"])
    raw = np.frombuffer(prefix.with_suffix(".bin").read_bytes(), dtype="<f8")
    matrix = raw.reshape(len(vocab), header["dim"]).astype(np.float64).copy()
    return EmbeddingTable(matrix), vocab
