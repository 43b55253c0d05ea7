"""Prior knowledge bases: braille fragment <-> counterpart maps plus the
attribute-labelled fragment inventory used by span-replacement augmentation.

Three kinds of data live here:

* the Chinese prior map (fragment -> pinyin syllable, e.g. ``HV2 -> han4``),
* the English prior map (fragment -> word, e.g. ``L1/ -> least``),
* attribute entries (fragment, grammatical attribute, plain-text counterpart).

All are loaded from TSV (``fragment<TAB>counterpart[<TAB>frequency]``,
``#`` comments allowed) and indexed both ways. A separate word inventory
(``words.tsv``) backs deterministic braille word segmentation.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from pathlib import Path

from .codec import BrailleError, char_to_mask, validate

PINYIN_RE = re.compile(r"^[a-zA-Zü]+[1-5]?$")


class ParseError(BrailleError):
    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class DuplicateEntry(BrailleError):
    def __init__(self, line: int):
        self.line = line
        super().__init__(f"line {line}: duplicate entry")


class EmptyAttributeGroup(BrailleError):
    pass


@dataclass(frozen=True)
class PriorEntry:
    fragment: str
    counterpart: str
    language: str  # "zh" | "en"
    frequency: int = 0


@dataclass(frozen=True)
class AttributeEntry:
    fragment: str
    attribute: str
    text: str


def _strip_tone(syllable: str) -> str:
    return syllable[:-1] if syllable and syllable[-1] in "12345" else syllable


def _read_tsv(path) -> list[tuple[int, list[str]]]:
    rows = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        rows.append((lineno, raw.split("\t")))
    return rows


class KnowledgeBase:
    """Immutable-after-load store of prior entries, attribute entries and the
    optional word inventory, with forward and inverse indices."""

    def __init__(self, language: str):
        self.language = language
        self.entries: list[PriorEntry] = []
        self.by_fragment: dict[str, list[PriorEntry]] = {}
        self.by_counterpart: dict[str, list[PriorEntry]] = {}
        self.attr_entries: dict[str, list[AttributeEntry]] = {}
        self.words: dict[str, int] = {}

    # -- construction ----------------------------------------------------

    def add(self, fragment: str, counterpart: str, frequency: int = 0, line: int = 0):
        if not fragment or not counterpart:
            raise ParseError(line, "empty fragment or counterpart")
        vr = validate(fragment)
        if not vr.ok or " " in fragment:
            raise ParseError(line, f"fragment is not valid braille: {fragment!r}")
        if self.language == "zh" and not PINYIN_RE.match(counterpart):
            raise ParseError(line, f"not a pinyin syllable: {counterpart!r}")
        if any(e.counterpart == counterpart for e in self.by_fragment.get(fragment, ())):
            raise DuplicateEntry(line)
        entry = PriorEntry(fragment, counterpart, self.language, frequency)
        self.entries.append(entry)
        self.by_fragment.setdefault(fragment, []).append(entry)
        self.by_counterpart.setdefault(counterpart, []).append(entry)

    def add_attribute(self, fragment: str, attribute: str, text: str, line: int = 0):
        if not fragment or not attribute or not text:
            raise ParseError(line, "attribute rows need fragment, attribute and text")
        if not validate(fragment).ok:
            raise ParseError(line, f"fragment is not valid braille: {fragment!r}")
        group = self.attr_entries.setdefault(attribute, [])
        if any(e.fragment == fragment for e in group):
            raise DuplicateEntry(line)
        group.append(AttributeEntry(fragment, attribute, text))

    def load_attributes(self, path):
        for lineno, cols in _read_tsv(path):
            if len(cols) != 3:
                raise ParseError(lineno, f"expected 3 columns, got {len(cols)}")
            self.add_attribute(cols[0], cols[1], cols[2], line=lineno)
        return self

    def load_words(self, path):
        for lineno, cols in _read_tsv(path):
            if len(cols) not in (1, 2):
                raise ParseError(lineno, f"expected 1-2 columns, got {len(cols)}")
            word = cols[0]
            if not validate(word).ok or " " in word:
                raise ParseError(lineno, f"word is not valid braille: {word!r}")
            freq = int(cols[1]) if len(cols) == 2 else 0
            self.words[word] = freq
        return self

    # -- queries ----------------------------------------------------------

    def lookup(self, fragment: str) -> list[str]:
        """Counterparts of a fragment, highest frequency first, then lexicographic."""
        entries = self.by_fragment.get(fragment, [])
        return [e.counterpart for e in sorted(entries, key=lambda e: (-e.frequency, e.counterpart))]

    def inverse_lookup(self, counterpart: str) -> list[str]:
        """Fragments for a counterpart; falls back to tone-insensitive matching
        for Chinese when the exact-tone lookup comes up empty."""
        entries = self.by_counterpart.get(counterpart, [])
        if not entries and self.language == "zh":
            bare = _strip_tone(counterpart)
            entries = [e for k, es in self.by_counterpart.items()
                       for e in es if _strip_tone(k) == bare]
        return [e.fragment for e in sorted(entries, key=lambda e: (-e.frequency, e.fragment))]

    def fragments(self) -> list[str]:
        return list(self.by_fragment)

    def attribute_group(self, attribute: str) -> list[AttributeEntry]:
        return list(self.attr_entries.get(attribute, ()))

    def sample_compatible(self, attribute: str, exclude: str, rng_seed: int) -> AttributeEntry:
        """Uniformly random same-attribute entry other than `exclude`."""
        candidates = [e for e in self.attr_entries.get(attribute, ()) if e.fragment != exclude]
        if not candidates:
            raise EmptyAttributeGroup(f"no {attribute!r} entry other than {exclude!r}")
        return random.Random(rng_seed).choice(candidates)

    def __len__(self):
        return len(self.entries)


def load(path, language: str) -> KnowledgeBase:
    """Load a prior KB from TSV rows ``fragment<TAB>counterpart[<TAB>frequency]``."""
    kb = KnowledgeBase(language)
    for lineno, cols in _read_tsv(path):
        if len(cols) not in (2, 3):
            raise ParseError(lineno, f"expected 2-3 columns, got {len(cols)}")
        try:
            freq = int(cols[2]) if len(cols) == 3 else 0
        except ValueError:
            raise ParseError(lineno, f"bad frequency: {cols[2]!r}") from None
        if freq < 0:
            raise ParseError(lineno, f"negative frequency: {freq}")
        kb.add(cols[0], cols[1], freq, line=lineno)
    return kb


def similarity(a: str, b: str) -> float:
    """1 - normalized Levenshtein distance over the fragments' dot-mask sequences."""
    ma = [char_to_mask(c) for c in a]
    mb = [char_to_mask(c) for c in b]
    if not ma and not mb:
        return 1.0
    dist = _levenshtein(ma, mb)
    return 1.0 - dist / max(len(ma), len(mb))


def _levenshtein(a, b) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]
