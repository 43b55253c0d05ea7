"""Default locations of the shipped tables, knowledge bases and rule files."""

from __future__ import annotations

import os
from pathlib import Path


def data_root() -> Path:
    """Repository root holding tables/, kb/, rules/, templates/, corpus/.

    Overridable through the BRAILLETK_DATA environment variable.
    """
    env = os.environ.get("BRAILLETK_DATA")
    if env:
        return Path(env)
    return Path(__file__).resolve().parents[2]


def default_paths() -> dict[str, Path]:
    root = data_root()
    return {
        "braille_table": root / "tables" / "braille_ascii.tsv",
        "zh_prior": root / "kb" / "zh_prior.tsv",
        "en_prior": root / "kb" / "en_prior.tsv",
        "attributes": root / "kb" / "attributes.tsv",
        "words": root / "kb" / "words.tsv",
        "char_pinyin": root / "kb" / "char_pinyin.tsv",
        "math_rules": root / "rules" / "math_braille.tsv",
        "templates": root / "templates",
        "golden_corpus": root / "corpus" / "golden_pairs.jsonl",
    }
