"""Dictionary-driven segmentation of braille sequences.

``segment`` splits each space-delimited word into KB fragments by dynamic
programming: maximize characters covered by KB fragments, break ties by
fewest tokens, then leftmost-longest. Anything uncovered becomes single-cell
OOV tokens, so concatenating tokens and reinserting the recorded spaces
always reproduces the input exactly.

``word_segment`` goes the other way for unsegmented input: it inserts word
boundaries with a DP over the KB's word inventory (coverage first, then sum
of log(1+frequency), then fewest words, then leftmost-longest). Runs of
cells not matching any inventory word are kept together unsplit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import log1p

from .kb import KnowledgeBase

OOV = "<OOV>"


@dataclass(frozen=True)
class Token:
    fragment: str
    counterpart: str  # top KB counterpart, or OOV
    start: int
    end: int


@dataclass
class TokenizedSequence:
    source: str
    tokens: list[Token] = field(default_factory=list)
    word_boundaries: list[int] = field(default_factory=list)  # positions of spaces in source

    def fragments(self) -> list[str]:
        return [t.fragment for t in self.tokens]

    def reconstruct(self) -> str:
        out = [""] * len(self.source)
        for t in self.tokens:
            for i, c in enumerate(t.fragment):
                out[t.start + i] = c
        for p in self.word_boundaries:
            out[p] = " "
        return "".join(out)


def _segment_word(word: str, kb: KnowledgeBase) -> list[str]:
    """Optimal fragmentation of one space-free word.

    best[i] scores the suffix word[i:] as (covered chars, -token count);
    reconstruction walks left to right taking the longest fragment that
    stays optimal, which realizes the leftmost-longest tie-break.
    """
    n = len(word)
    maxlen = max((len(f) for f in kb.by_fragment), default=0)
    best: list[tuple[int, int]] = [(0, 0)] * (n + 1)
    for i in range(n - 1, -1, -1):
        cov, tok = best[i + 1]
        score = (cov, tok - 1)  # single-cell OOV
        for j in range(i + 1, min(i + maxlen, n) + 1):
            if word[i:j] in kb.by_fragment:
                cov2, tok2 = best[j]
                cand = (cov2 + (j - i), tok2 - 1)
                if cand > score:
                    score = cand
        best[i] = score

    frags = []
    i = 0
    while i < n:
        chosen = None
        for j in range(min(i + maxlen, n), i, -1):
            if word[i:j] in kb.by_fragment:
                cov2, tok2 = best[j]
                if (cov2 + (j - i), tok2 - 1) == best[i]:
                    chosen = j
                    break
        if chosen is None:
            chosen = i + 1  # OOV cell
        frags.append(word[i:chosen])
        i = chosen
    return frags


def segment(s: str, kb: KnowledgeBase) -> TokenizedSequence:
    result = TokenizedSequence(source=s)
    pos = 0
    for word in s.split(" "):
        if pos > 0:
            result.word_boundaries.append(pos - 1)
        for frag in _segment_word(word, kb) if word else []:
            counterparts = kb.lookup(frag)
            result.tokens.append(Token(frag, counterparts[0] if counterparts else OOV,
                                       pos, pos + len(frag)))
            pos += len(frag)
        pos += 1  # the separator (or end)
    return result


def map_counterparts(t: TokenizedSequence, kb: KnowledgeBase) -> list[str]:
    """Top counterpart per token; OOV tokens map to the OOV sentinel."""
    out = []
    for tok in t.tokens:
        counterparts = kb.lookup(tok.fragment)
        out.append(counterparts[0] if counterparts else OOV)
    return out


def _segment_chunk_words(chunk: str, inventory: dict[str, int]) -> list[str]:
    """Split one space-free chunk into inventory words plus residue runs."""
    n = len(chunk)
    maxlen = max((len(w) for w in inventory), default=0)
    # score: (covered chars, sum log1p(freq), -matched word count)
    best: list[tuple[int, float, int]] = [(0, 0.0, 0)] * (n + 1)
    for i in range(n - 1, -1, -1):
        cov, lf, cnt = best[i + 1]
        score = (cov, lf, cnt)  # residue cell, merged later
        for j in range(i + 1, min(i + maxlen, n) + 1):
            w = chunk[i:j]
            if w in inventory:
                cov2, lf2, cnt2 = best[j]
                cand = (cov2 + (j - i), lf2 + log1p(inventory[w]), cnt2 - 1)
                if cand > score:
                    score = cand
        best[i] = score

    pieces: list[tuple[str, bool]] = []  # (text, is_word)
    i = 0
    while i < n:
        chosen = None
        for j in range(min(i + maxlen, n), i, -1):
            w = chunk[i:j]
            if w in inventory:
                cov2, lf2, cnt2 = best[j]
                if (cov2 + (j - i), lf2 + log1p(inventory[w]), cnt2 - 1) == best[i]:
                    chosen = j
                    break
        if chosen is not None:
            pieces.append((chunk[i:chosen], True))
            i = chosen
        else:
            if pieces and not pieces[-1][1]:
                pieces[-1] = (pieces[-1][0] + chunk[i], False)
            else:
                pieces.append((chunk[i], False))
            i += 1
    return [p for p, _ in pieces]


def word_segment(s: str, kb: KnowledgeBase) -> str:
    """Insert word boundaries into untokenised braille.

    Existing spaces are respected as fixed boundaries. The word inventory is
    ``kb.words`` when loaded, otherwise the fragment inventory stands in.
    """
    inventory = kb.words if kb.words else {f: 0 for f in kb.by_fragment}
    out_words = []
    for chunk in s.split(" "):
        if not chunk:
            continue
        out_words.extend(_segment_chunk_words(chunk, inventory))
    return " ".join(out_words)
