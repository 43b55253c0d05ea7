"""Corpus ingestion and fixture generation for parallel text/braille data.

The interchange format is JSONL, one example per line:

    {"id": ..., "language": "zh"|"en", "text": ..., "braille": ...,
     "alignment": [[t_start, t_end, b_start, b_end], ...],
     "spans": [{"start": ..., "end": ..., "attribute": ..., "text": ...}, ...]}

``alignment`` pairs character ranges of aligned text/braille units (monotone,
non-overlapping; braille units separated by spaces). ``spans`` optionally
tile the aligned units with grammatical attributes for augmentation.

Also here: text normalization (NFC, control stripping, canonical math),
instruction-template rendering, rule-driven transcription of mixed
text+formula content into braille, and exact dedup.
"""

from __future__ import annotations

import json
import re
import string
import unicodedata
from dataclasses import dataclass, field, asdict
from pathlib import Path

from .codec import BrailleError, Issue, validate
from .kb import KnowledgeBase


class UnbalancedMathDelimiters(BrailleError):
    pass


class UnknownPlaceholder(BrailleError):
    pass


class UntranscribableSymbol(BrailleError):
    def __init__(self, position: int, char: str):
        self.position = position
        self.char = char
        super().__init__(f"no transcription rule for {char!r} at position {position}")


@dataclass
class Span:
    start: int  # first aligned-unit index
    end: int    # one past the last unit
    attribute: str
    text: str


@dataclass
class ParallelExample:
    id: str
    language: str  # "zh" | "en"
    text: str
    braille: str
    alignment: list[tuple[int, int, int, int]] = field(default_factory=list)
    spans: list[Span] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["alignment"] = [list(a) for a in self.alignment]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ParallelExample":
        return cls(id=str(d["id"]), language=d["language"], text=d["text"],
                   braille=d["braille"],
                   alignment=[tuple(a) for a in d.get("alignment", [])],
                   spans=[Span(**s) for s in d.get("spans", [])])


def load_corpus(path) -> list[ParallelExample]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(ParallelExample.from_dict(json.loads(line)))
    return out


def save_corpus(examples, path) -> None:
    lines = [json.dumps(ex.to_dict(), ensure_ascii=False) for ex in examples]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


# --- normalization -----------------------------------------------------------

_FRAC_BARE = re.compile(r"\\frac([0-9a-zA-Z])([0-9a-zA-Z])")
_FRAC_HALF_L = re.compile(r"\\frac([0-9a-zA-Z])(\{[^{}]*\})")
_FRAC_HALF_R = re.compile(r"\\frac(\{[^{}]*\})([0-9a-zA-Z])")


def split_math(s: str) -> list[tuple[bool, str]]:
    """Split into (is_math, content) segments on unescaped ``$`` delimiters."""
    segments = []
    buf = []
    in_math = False
    i = 0
    while i < len(s):
        c = s[i]
        if c == "\\" and i + 1 < len(s):  # backslash escapes the next character
            buf.append(s[i:i + 2])
            i += 2
            continue
        if c == "$":
            segments.append((in_math, "".join(buf)))
            buf = []
            in_math = not in_math
            i += 1
            continue
        buf.append(c)
        i += 1
    if in_math:
        raise UnbalancedMathDelimiters(s)
    segments.append((False, "".join(buf)))
    return [(m, t) for m, t in segments if t or m]


def _canonical_math(content: str) -> str:
    content = "".join(content.split())
    content = _FRAC_BARE.sub(r"\\frac{\1}{\2}", content)
    content = _FRAC_HALF_L.sub(r"\\frac{\1}\2", content)
    content = _FRAC_HALF_R.sub(r"\\frac\1{\2}", content)
    # an odd trailing backslash run would escape the closing $ on re-parse
    if (len(content) - len(content.rstrip("\\"))) % 2 == 1:
        content += " "
    return content


def normalize(raw: str) -> str:
    """NFC, control characters stripped, math spans in canonical form
    (whitespace-free, ``\\frac`` arguments braced). Idempotent."""
    s = "".join(c for c in raw if unicodedata.category(c) != "Cc")
    s = unicodedata.normalize("NFC", s)
    out = []
    for is_math, content in split_math(s):
        out.append("$" + _canonical_math(content) + "$" if is_math else content)
    return "".join(out)


# --- validation --------------------------------------------------------------

def _balanced_braces(s: str) -> bool:
    depth = 0
    for c in s:
        if c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth < 0:
                return False
    return depth == 0


def validate_example(ex: ParallelExample) -> list[Issue]:
    """Automated checks: braille charset, LaTeX shape, alignment geometry."""
    issues = []
    if not ex.text:
        issues.append(Issue("EmptySide", 0, "text"))
    if not ex.braille:
        issues.append(Issue("EmptySide", 0, "braille"))
    for i in validate(ex.braille).issues:
        issues.append(Issue("InvalidBrailleAscii", i.position, i.detail))
    try:
        for is_math, content in split_math(ex.text):
            if is_math and not _balanced_braces(content):
                issues.append(Issue("MalformedLatex", 0, content))
    except UnbalancedMathDelimiters:
        issues.append(Issue("MalformedLatex", 0, "unbalanced $ delimiters"))

    prev_te = prev_be = 0
    for n, (ts, te, bs, be) in enumerate(ex.alignment):
        if not (0 <= ts < te <= len(ex.text)) or not (0 <= bs < be <= len(ex.braille)):
            issues.append(Issue("AlignmentIssue", n, "unit out of bounds"))
            continue
        if ts < prev_te or bs < prev_be:
            issues.append(Issue("AlignmentIssue", n, "overlapping or non-monotone units"))
        elif set(ex.braille[prev_be:bs]) - {" "}:
            issues.append(Issue("AlignmentIssue", n, "braille gap contains cells"))
        prev_te, prev_be = te, be

    if ex.spans:
        n_units = len(ex.alignment)
        expected_start = 0
        for n, sp in enumerate(ex.spans):
            if not (0 <= sp.start < sp.end <= n_units) or sp.start != expected_start:
                issues.append(Issue("SpanIssue", n, "spans must tile the aligned units"))
                break
            expected_start = sp.end
        else:
            if expected_start != n_units:
                issues.append(Issue("SpanIssue", len(ex.spans), "spans must tile the aligned units"))
    return issues


# --- instruction rendering ----------------------------------------------------

ALLOWED_PLACEHOLDERS = {"input", "language", "task"}


@dataclass
class InstructionRecord:
    template_id: str
    instruction: str
    input: str
    expected_output: str
    task: str

    def to_dict(self) -> dict:
        return asdict(self)


def render_instruction(template: str, ex: ParallelExample, direction: str,
                       template_id: str = "inline") -> InstructionRecord:
    """Substitute {input}/{language}/{task}; the input must land exactly once."""
    if direction not in ("to_text", "to_braille"):
        raise ValueError(f"unknown direction {direction!r}")
    fields = [f for _, f, _, _ in string.Formatter().parse(template) if f is not None]
    unknown = set(fields) - ALLOWED_PLACEHOLDERS
    if unknown:
        raise UnknownPlaceholder(", ".join(sorted(unknown)))
    if fields.count("input") != 1:
        raise UnknownPlaceholder("template must use {input} exactly once")
    task = "braille-to-text" if direction == "to_text" else "text-to-braille"
    source = ex.braille if direction == "to_text" else ex.text
    expected = ex.text if direction == "to_text" else ex.braille
    instruction = template.format(input=source, language=ex.language, task=task)
    if instruction.count(source) != 1:
        raise UnknownPlaceholder("rendered instruction must contain the input exactly once")
    return InstructionRecord(template_id, instruction, source, expected, task)


def load_templates(directory) -> dict[str, str]:
    templates = {}
    for p in sorted(Path(directory).glob("*.txt")):
        templates[p.stem] = p.read_text(encoding="utf-8").rstrip("\n")
    return templates


# --- rule-driven transcription -------------------------------------------------

@dataclass(frozen=True)
class Rule:
    domain: str    # math | text-en | pinyin-zh
    key: str       # sym:<char> | digit:<d> | lower_digit:<d> | <named sign>
    emission: str
    spacing: str   # attach | prespace | attach_prev


class RuleSet:
    """First-match-wins symbol rewrite table, grouped by domain."""

    def __init__(self, rules=()):
        self.rules: dict[tuple[str, str], Rule] = {}
        for r in rules:
            self.rules.setdefault((r.domain, r.key), r)

    @classmethod
    def load(cls, path) -> "RuleSet":
        rules = []
        for raw in Path(path).read_text(encoding="utf-8").splitlines():
            if not raw.strip() or raw.lstrip().startswith("#"):
                continue
            cols = raw.split("\t")
            if len(cols) != 4:
                raise ValueError(f"rule rows need 4 columns: {raw!r}")
            rules.append(Rule(cols[0], cols[1], cols[2], cols[3]))
        return cls(rules)

    def get(self, domain: str, key: str) -> Rule | None:
        return self.rules.get((domain, key))

    def require(self, domain: str, key: str, position: int = 0) -> Rule:
        rule = self.get(domain, key)
        if rule is None:
            raise UntranscribableSymbol(position, key)
        return rule


class _WordBuilder:
    def __init__(self):
        self.words: list[str] = []
        self.current = ""

    def add(self, text: str, spacing: str):
        if spacing == "prespace" and self.current:
            self.words.append(self.current)
            self.current = ""
        self.current += text

    def flush(self):
        if self.current:
            self.words.append(self.current)
            self.current = ""


_MATH_TOKEN = re.compile(r"\\frac\{(\d+)\}\{(\d+)\}|(\d+)|([a-zA-Z])|(.)", re.DOTALL)


def _digits(num: str, rules: RuleSet, key: str, position: int) -> str:
    return "".join(rules.require("math", f"{key}:{d}", position).emission for d in num)


def _emit_math(content: str, rules: RuleSet, builder: _WordBuilder, offset: int):
    tokens = list(_MATH_TOKEN.finditer(content))
    letters = [t for t in tokens if t.group(4)]
    lone_letter = len(tokens) == 1 and bool(letters)
    number_sign = rules.require("math", "number_sign").emission
    for t in tokens:
        pos = offset + t.start()
        if t.group(1) is not None:  # \frac{num}{den}
            emission = number_sign + _digits(t.group(1), rules, "digit", pos) \
                + _digits(t.group(2), rules, "lower_digit", pos)
            builder.add(emission, "attach")
        elif t.group(3) is not None:  # integer
            builder.add(number_sign + _digits(t.group(3), rules, "digit", pos), "attach")
        elif t.group(4) is not None:  # letter
            sign = "lone_letter_sign" if lone_letter else "letter_sign"
            builder.add(rules.require("math", sign, pos).emission + t.group(4).upper(), "attach")
        else:
            c = t.group(5)
            if c.isspace():
                continue
            rule = rules.require("math", f"sym:{c}", pos)
            builder.add(rule.emission, rule.spacing)


_HAN_RANGES = ((0x3400, 0x4DBF), (0x4E00, 0x9FFF), (0xF900, 0xFA6A))


def is_han(c: str) -> bool:
    return any(lo <= ord(c) <= hi for lo, hi in _HAN_RANGES)


def _emit_zh(content: str, rules: RuleSet, kb: KnowledgeBase, pinyin_iter,
             char_pinyin: dict[str, str] | None, builder: _WordBuilder, offset: int):
    i = 0
    while i < len(content):
        c = content[i]
        if c.isspace():
            builder.flush()
            i += 1
        elif is_han(c):
            try:
                group = next(pinyin_iter)
            except StopIteration:
                if char_pinyin and c in char_pinyin:
                    group = [char_pinyin[c]]
                else:
                    raise UntranscribableSymbol(offset + i, c) from None
            covered = content[i:i + len(group)]
            if len(covered) < len(group) or not all(is_han(x) for x in covered):
                raise UntranscribableSymbol(offset + i, covered)
            word = ""
            for syllable in group:
                fragments = kb.inverse_lookup(syllable)
                if not fragments:
                    raise UntranscribableSymbol(offset + i, syllable)
                word += fragments[0]
            builder.flush()
            builder.add(word, "attach")
            i += len(group)  # one Han character per syllable
        elif c.isdigit():
            j = i
            while j < len(content) and content[j].isdigit():
                j += 1
            number_sign = rules.require("math", "number_sign").emission
            builder.add(number_sign + _digits(content[i:j], rules, "digit", offset + i), "attach")
            i = j
        else:
            rule = rules.require("pinyin-zh", f"sym:{c}", offset + i)
            builder.add(rule.emission, rule.spacing)
            i += 1


def _emit_en_word(word: str, rules: RuleSet, kb: KnowledgeBase,
                  builder: _WordBuilder, offset: int):
    builder.flush()
    lead = 0
    while lead < len(word) and unicodedata.category(word[lead]).startswith("P"):
        lead += 1
    tail = len(word)
    while tail > lead and unicodedata.category(word[tail - 1]).startswith("P"):
        tail -= 1
    for k in range(lead):
        rule = rules.require("text-en", f"sym:{word[k]}", offset + k)
        builder.add(rule.emission, "attach")
    core = word[lead:tail]
    if core:
        if core[0].isupper():
            builder.add(rules.require("text-en", "capital_sign").emission, "attach")
        fragments = kb.inverse_lookup(core.lower())
        if fragments:
            builder.add(fragments[0], "attach")
        else:
            for k, c in enumerate(core):
                if c.isalpha() and c.isascii():
                    builder.add(c.upper(), "attach")
                elif c.isdigit():
                    builder.add(rules.require("math", "number_sign").emission
                                + _digits(c, rules, "digit", offset + lead + k), "attach")
                else:
                    rule = rules.require("text-en", f"sym:{c}", offset + lead + k)
                    builder.add(rule.emission, rule.spacing)
    for k in range(tail, len(word)):
        rule = rules.require("text-en", f"sym:{word[k]}", offset + k)
        builder.add(rule.emission, "attach")


def transcribe_mixed(text: str, rules: RuleSet, kb: KnowledgeBase,
                     pinyin: list[list[str]] | None = None,
                     char_pinyin: dict[str, str] | None = None) -> str:
    """Transcribe normalized mixed text into a braille sequence.

    The prose language follows ``kb.language``: Chinese prose consumes
    ``pinyin`` (one syllable list per word, one Han character per syllable,
    with a per-character fallback through ``char_pinyin``); English prose is
    matched against the KB's word inventory with letter spelling as fallback.
    Math spans (``$...$``) go through the math rule domain.
    """
    builder = _WordBuilder()
    pinyin_iter = iter(pinyin or [])
    offset = 0
    for is_math, content in split_math(text):
        if is_math:
            builder.flush()
            _emit_math(content, rules, builder, offset + 1)
        elif kb.language == "zh":
            _emit_zh(content, rules, kb, pinyin_iter, char_pinyin, builder, offset)
        else:
            for m in re.finditer(r"\S+", content):
                _emit_en_word(m.group(), rules, kb, builder, offset + m.start())
        offset += len(content) + (2 if is_math else 0)
    builder.flush()
    return " ".join(builder.words)


def dedup(corpus: list[ParallelExample]) -> list[ParallelExample]:
    """Drop examples whose normalized text was already seen; keep first, stable."""
    seen = set()
    out = []
    for ex in corpus:
        key = normalize(ex.text)
        if key not in seen:
            seen.add(key)
            out.append(ex)
    return out
