import random

import pytest
from hypothesis import given, strategies as st

from brailletk import codec
from brailletk.codec import (BLANK_CELL, BRAILLE_ASCII, InvalidChar, InvalidRate,
                             OutOfRange, ascii_to_unicode, char_to_mask, perturb_dots,
                             unicode_to_ascii, validate)

# Published North American Braille ASCII chart, entered by hand from the
# dots notation as an independent cross-check of the frozen constant.
CHART = {
    "A": "1", "B": "12", "C": "14", "D": "145", "E": "15", "F": "124",
    "G": "1245", "H": "125", "I": "24", "J": "245", "K": "13", "L": "123",
    "M": "134", "N": "1345", "O": "135", "P": "1234", "Q": "12345",
    "R": "1235", "S": "234", "T": "2345", "U": "136", "V": "1236",
    "W": "2456", "X": "1346", "Y": "13456", "Z": "1356",
    "1": "2", "2": "23", "3": "25", "4": "256", "5": "26", "6": "235",
    "7": "2356", "8": "236", "9": "35", "0": "356",
    " ": "", "'": "3", ",": "6", "-": "36", ".": "46", "!": "2346",
    '"': "5", "#": "3456", "$": "1246", "%": "146", "&": "12346",
    "(": "12356", ")": "23456", "*": "16", "+": "346", "/": "34",
    ":": "156", ";": "56", "<": "126", "=": "123456", ">": "345",
    "?": "1456", "@": "4", "[": "246", "\\": "1256", "]": "12456",
    "^": "45", "_": "456",
}

CELLS = st.text(alphabet=BRAILLE_ASCII, min_size=0, max_size=60)


def dots_to_mask(dots: str) -> int:
    mask = 0
    for d in dots:
        mask |= 1 << (int(d) - 1)
    return mask


def test_table_matches_published_chart():
    assert len(CHART) == 64
    assert len(BRAILLE_ASCII) == 64
    for char, dots in CHART.items():
        assert BRAILLE_ASCII[dots_to_mask(dots)] == char, (char, dots)


def test_table_tsv_matches_constant(paths):
    rows = [line.split("\t") for line in paths["braille_table"].read_text().splitlines()
            if not line.startswith("#")]
    assert len(rows) == 64
    for mask_s, char, hexcp in rows:
        mask = int(mask_s)
        assert BRAILLE_ASCII[mask] == char
        assert int(hexcp, 16) == 0x2800 + mask


def test_ascii_to_unicode_goldens():
    assert ascii_to_unicode("A") == "⠁"
    assert ascii_to_unicode("") == ""
    assert ascii_to_unicode("#A") == "⠼⠁"
    assert ascii_to_unicode(" ") == "⠀"


def test_unicode_to_ascii_goldens():
    assert unicode_to_ascii("⠁") == "A"
    assert unicode_to_ascii("⠀") == " "


def test_round_trip_all_64():
    for c in BRAILLE_ASCII:
        assert unicode_to_ascii(ascii_to_unicode(c)) == c


def test_dot_mask_law():
    for mask, c in enumerate(BRAILLE_ASCII):
        assert ord(ascii_to_unicode(c)) - 0x2800 == mask
        assert char_to_mask(c) == mask


def test_invalid_char_error():
    with pytest.raises(InvalidChar) as exc:
        ascii_to_unicode("A~B")
    assert exc.value.position == 1
    assert exc.value.char == "~"


def test_out_of_range_error():
    with pytest.raises(OutOfRange) as exc:
        unicode_to_ascii("⠁⤀")
    assert exc.value.position == 1


def test_validate_goldens():
    assert validate("G*AGI D KYSU F9/V'").ok
    assert validate("").ok
    issues = validate("abc").issues
    assert len(issues) == 3
    assert [i.position for i in issues] == [0, 1, 2]


def test_validate_accepts_blank_cell():
    assert validate("A" + BLANK_CELL + "B").ok


@given(CELLS)
def test_round_trip_property(s):
    assert unicode_to_ascii(ascii_to_unicode(s)) == s


def test_perturb_zero_rate_identity():
    s = "G*AGI D KYSU F9/V'"
    assert perturb_dots(s, 0.0, seed=1) == s


def test_perturb_rate_one_complements():
    s = "A= K"
    out = perturb_dots(s, 1.0, seed=3)
    assert len(out) == len(s)
    assert out[2] == " "
    for orig, new in zip(s, out):
        if orig == " ":
            assert new == " "
        else:
            assert char_to_mask(new) == char_to_mask(orig) ^ 0b111111
    # the full cell '=' inverts to the blank cell, not to a space
    assert out[1] == BLANK_CELL


def test_perturb_reproducible():
    s = "G*AGI D KYSU F9/V'" * 5
    assert perturb_dots(s, 0.3, seed=42) == perturb_dots(s, 0.3, seed=42)
    assert perturb_dots(s, 0.3, seed=42) != perturb_dots(s, 0.3, seed=43)


def test_perturb_never_touches_separators():
    rng = random.Random(0)
    cells = [c for c in BRAILLE_ASCII if c != " "]
    words = [" ".join("".join(rng.choice(cells) for _ in range(rng.randint(1, 6)))
                      for _ in range(rng.randint(1, 5))) for _ in range(50)]
    for i, s in enumerate(words):
        out = perturb_dots(s, 0.5, seed=i)
        assert len(out) == len(s)
        assert [j for j, c in enumerate(out) if c == " "] == \
               [j for j, c in enumerate(s) if c == " "]
        assert validate(out).ok


def test_perturb_flip_fraction():
    rng = random.Random(7)
    cells = [c for c in BRAILLE_ASCII if c != " "]
    s = "".join(rng.choice(cells) for _ in range(10_000))
    out = perturb_dots(s, 0.05, seed=11)
    flips = sum(bin(char_to_mask(a) ^ char_to_mask(b)).count("1")
                for a, b in zip(s, out))
    fraction = flips / (6 * len(s))
    assert 0.045 <= fraction <= 0.055


def test_perturb_invalid_rate():
    with pytest.raises(InvalidRate):
        perturb_dots("A", 1.5, seed=0)
    with pytest.raises(InvalidRate):
        perturb_dots("A", -0.1, seed=0)


def test_counter_uniform_order_independent():
    # value depends only on the key, not on call order
    a = codec.counter_uniform(5, 100, 3)
    codec.counter_uniform(5, 0, 0)
    assert codec.counter_uniform(5, 100, 3) == a
    assert 0.0 <= a < 1.0
