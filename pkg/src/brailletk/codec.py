"""Braille ASCII <-> Unicode braille codec, sequence validation, dot-level noise.

Six-dot braille has 64 possible cells. Each cell is identified by a dot mask:
bit k set means dot k+1 is raised (dots 1-2-3 run down the left column,
4-5-6 down the right). The computational encoding maps every mask to one
printable ASCII character per the North American Braille ASCII chart
(uppercase letters); the same table is shipped as ``tables/braille_ascii.tsv``
and cross-checked by the test suite.

A braille *sequence* is a run of cell characters with single ASCII spaces as
word separators. Inside a word the blank cell (mask 0) cannot be written as
an ASCII space without destroying word structure, so it is represented by the
Unicode blank braille cell U+2800 (``BLANK_CELL``); ``validate`` accepts it
and ``ascii_to_unicode`` passes it through.
"""

from __future__ import annotations

from dataclasses import dataclass, field

# Mask-indexed Braille ASCII table: BRAILLE_ASCII[mask] is the character for
# that dot pattern. Index 0 is the blank cell, rendered as the ASCII space.
BRAILLE_ASCII = " A1B'K2L@CIF/MSP\"E3H9O6R^DJG>NTQ,*5<-U8V.%[$+X!&;:4\\0Z7(_?W]#Y)="

UNICODE_BASE = 0x2800

# Blank cell usable inside a word (distinct from the ASCII-space separator).
BLANK_CELL = chr(UNICODE_BASE)

_CHAR_TO_MASK = {c: m for m, c in enumerate(BRAILLE_ASCII)}
_CELL_CHARS = frozenset(BRAILLE_ASCII) - {" "} | {BLANK_CELL}


class BrailleError(Exception):
    """Base class for all toolkit errors."""


class InvalidChar(BrailleError):
    def __init__(self, position, char):
        self.position = position
        self.char = char
        super().__init__(f"invalid Braille ASCII character {char!r} at position {position}")


class OutOfRange(BrailleError):
    def __init__(self, position):
        self.position = position
        super().__init__(f"code point outside six-dot braille range at position {position}")


class InvalidRate(BrailleError):
    pass


@dataclass
class Issue:
    kind: str
    position: int
    detail: str


@dataclass
class ValidationResult:
    issues: list[Issue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues


def char_to_mask(c: str) -> int:
    """Dot mask of a single Braille ASCII character (space counts as blank)."""
    if c == BLANK_CELL:
        return 0
    try:
        return _CHAR_TO_MASK[c]
    except KeyError:
        raise InvalidChar(0, c) from None


def mask_to_char(mask: int) -> str:
    if not 0 <= mask <= 63:
        raise ValueError(f"dot mask out of range: {mask}")
    return BRAILLE_ASCII[mask]


def is_cell_char(c: str) -> bool:
    """True for any non-separator cell character (including the blank cell)."""
    return c in _CELL_CHARS


def ascii_to_unicode(s: str) -> str:
    """Convert Braille ASCII to Unicode braille (U+2800 + dot mask per cell).

    Spaces map to the blank cell U+2800; an embedded U+2800 passes through.
    Raises InvalidChar for anything outside the table.
    """
    out = []
    for i, c in enumerate(s):
        if c == BLANK_CELL:
            out.append(c)
            continue
        mask = _CHAR_TO_MASK.get(c)
        if mask is None:
            raise InvalidChar(i, c)
        out.append(chr(UNICODE_BASE + mask))
    return "".join(out)


def unicode_to_ascii(s: str) -> str:
    """Inverse of ascii_to_unicode over six-dot cells (U+2800..U+283F).

    U+2800 renders as the chart's blank entry, the ASCII space.
    """
    out = []
    for i, c in enumerate(s):
        cp = ord(c)
        if not UNICODE_BASE <= cp <= UNICODE_BASE + 63:
            raise OutOfRange(i)
        out.append(BRAILLE_ASCII[cp - UNICODE_BASE])
    return "".join(out)


def validate(s: str) -> ValidationResult:
    """Check that every character is a Braille ASCII cell, a space, or U+2800.

    Issues are returned, never raised.
    """
    result = ValidationResult()
    for i, c in enumerate(s):
        if c != " " and c != BLANK_CELL and c not in _CHAR_TO_MASK:
            result.issues.append(Issue("InvalidChar", i, repr(c)))
    return result


def split_words(s: str) -> list[str]:
    """Words of a braille sequence (single-space separated)."""
    return s.split(" ") if s else []


# --- counter-based randomness ------------------------------------------------
#
# perturb_dots must be reproducible independent of iteration order, so each
# (seed, cell, dot) triple gets its own uniform draw from a stateless mixer
# (splitmix64 finalizer over the packed key).

_MASK64 = (1 << 64) - 1


def _mix64(x: int) -> int:
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def counter_uniform(seed: int, *counters: int) -> float:
    """Deterministic uniform in [0, 1) keyed by seed and counter indices."""
    h = _mix64(seed & _MASK64)
    for c in counters:
        h = _mix64(h ^ ((c + 0x9E3779B97F4A7C15) & _MASK64))
    return (h >> 11) / float(1 << 53)


def perturb_dots(s: str, rate: float, seed: int) -> str:
    """Flip each dot of each non-space cell independently with probability rate.

    Word separators are never touched. A cell whose dots all flip off is
    emitted as BLANK_CELL so word alignment survives. Deterministic under
    seed regardless of traversal order: dot j of the i-th cell flips iff
    counter_uniform(seed, i, j) < rate.
    """
    if not 0.0 <= rate <= 1.0:
        raise InvalidRate(f"rate must be in [0, 1], got {rate}")
    out = []
    cell_index = 0
    for c in s:
        if c == " ":
            out.append(c)
            continue
        mask = char_to_mask(c)
        for dot in range(6):
            if counter_uniform(seed, cell_index, dot) < rate:
                mask ^= 1 << dot
        out.append(BRAILLE_ASCII[mask] if mask else BLANK_CELL)
        cell_index += 1
    return "".join(out)
