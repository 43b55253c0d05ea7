import random

import pytest

from brailletk.augment import (AnnotationError, InsufficientCandidates, augment,
                               augment_corpus, fragment_replace, noise_inject)
from brailletk.codec import InvalidRate, validate
from brailletk.kb import KnowledgeBase
from brailletk.pipeline import ParallelExample, Span, validate_example

CELLS = "ABCDEFGHIJKLMNopqrstuvwxyz".upper()


def _tree_example(golden_corpus):
    return next(e for e in golden_corpus if e.id == "zh-tree-1")


def test_augment_golden(golden_corpus, kc):
    out = augment(_tree_example(golden_corpus), kc, k=1, min_sim=0.0, seed=5)
    assert out.braille == "B9A:1SVASW N%K*AD K5AH)1G$A T1QUAL5 Q72H<AD LI'L3"
    assert out.text.endswith("宁静的古老村落矗立在起伏的林地")
    assert validate_example(out) == []


def test_augment_single_candidate_deterministic():
    kb = KnowledgeBase("zh")
    kb.add_attribute("IW", "Quantifier", "一座")
    kb.add_attribute("B9A", "Quantifier", "几个")
    ex = ParallelExample("t", "zh", "一座山", "IW :V", [(0, 2, 0, 2), (2, 3, 3, 5)],
                         [Span(0, 1, "Quantifier", "一座"), Span(1, 2, "Noun", "山")])
    for seed in range(10):
        out = augment(ex, kb, k=1, seed=seed)
        assert out.braille == "B9A :V"
        assert out.text == "几个山"


def test_augment_k_validation(golden_corpus, kc):
    with pytest.raises(ValueError):
        augment(_tree_example(golden_corpus), kc, k=0)


def test_augment_insufficient_candidates():
    kb = KnowledgeBase("zh")
    kb.add_attribute("IW", "Quantifier", "一座")
    ex = ParallelExample("t", "zh", "一座", "IW", [(0, 2, 0, 2)],
                         [Span(0, 1, "Quantifier", "一座")])
    with pytest.raises(InsufficientCandidates):
        augment(ex, kb, k=1, seed=0)  # only entry equals the span itself


def test_augment_min_sim_filters():
    kb = KnowledgeBase("zh")
    kb.add_attribute("AB", "Noun", "甲")
    kb.add_attribute("AC", "Noun", "乙")   # similarity("AB","AC") = 0.5
    kb.add_attribute("XYZQ", "Noun", "丙")  # similarity("AB","XYZQ") = 0
    ex = ParallelExample("t", "zh", "甲", "AB", [(0, 1, 0, 2)], [Span(0, 1, "Noun", "甲")])
    for seed in range(10):
        assert augment(ex, kb, k=1, min_sim=0.4, seed=seed).braille == "AC"
    with pytest.raises(InsufficientCandidates):
        augment(ex, kb, k=1, min_sim=0.9, seed=0)


def test_augment_requires_tiling_spans(golden_corpus, kc):
    ex = _tree_example(golden_corpus)
    broken = ParallelExample(ex.id, ex.language, ex.text, ex.braille,
                             ex.alignment, ex.spans[1:])
    with pytest.raises(AnnotationError):
        augment(broken, kc, k=1, seed=0)


def _random_annotated(rng, attr_kb, n_attrs=4):
    """Random example whose spans tile random-width unit groups."""
    attrs = sorted(attr_kb.attr_entries)
    n_units = rng.randint(2, 6)
    b_units, t_units, spans = [], [], []
    unit = 0
    while unit < n_units:
        width = min(rng.randint(1, 2), n_units - unit)
        attr = rng.choice(attrs)
        entry = rng.choice(attr_kb.attr_entries[attr])
        b_units.extend([entry.fragment] * width)
        t_units.extend([entry.text] * width)
        spans.append(Span(unit, unit + width, attr, entry.text * width))
        unit += width
    braille = " ".join(b_units)
    text = "".join(t_units)
    alignment = []
    b = t = 0
    for bu, tu in zip(b_units, t_units):
        alignment.append((t, t + len(tu), b, b + len(bu)))
        t += len(tu)
        b += len(bu) + 1
    # span text must mirror the final unit layout
    spans = [Span(s.start, s.end, s.attribute, "".join(t_units[s.start:s.end]))
             for s in spans]
    return ParallelExample("r", "zh", text, braille, alignment, spans)


def _rich_attr_kb(rng):
    kb = KnowledgeBase("zh")
    for attr in ("Noun", "Verb", "Quantifier", "PlaceName"):
        for i in range(6):
            frag = "".join(rng.choice(CELLS) for _ in range(rng.randint(1, 5)))
            try:
                kb.add_attribute(frag, attr, f"{attr}词{i}")
            except Exception:
                pass
    return kb


def test_augment_property_run(kc):
    rng = random.Random(77)
    kb = _rich_attr_kb(rng)
    checked = 0
    for trial in range(300):
        ex = _random_annotated(rng, kb)
        k = rng.randint(1, 2)
        try:
            out = augment(ex, kb, k=k, seed=trial)
        except InsufficientCandidates:
            continue
        checked += 1
        assert validate(out.braille).ok
        assert validate_example(out) == []
        # differs from the source in exactly k spans
        orig = [" ".join(ex.braille[bs:be] for bs, be in
                         [(a[2], a[3]) for a in ex.alignment[s.start:s.end]])
                for s in ex.spans]
        new = [" ".join(out.braille[bs:be] for bs, be in
                        [(a[2], a[3]) for a in out.alignment[s.start:s.end]])
               for s in out.spans]
        assert len(orig) == len(new)
        assert sum(a != b for a, b in zip(orig, new)) == k
        # alignment is a bijection over units on both sides
        assert len(out.alignment) == len({(a[0], a[1]) for a in out.alignment})
        assert len(out.alignment) == len({(a[2], a[3]) for a in out.alignment})
    assert checked > 200


def test_augment_deterministic(golden_corpus, kc):
    ex = _tree_example(golden_corpus)
    for seed in (0, 1, 2, 9):
        assert augment(ex, kc, k=1, seed=seed).braille == \
               augment(ex, kc, k=1, seed=seed).braille


def test_augment_diversity_monotone(golden_corpus, kc):
    ex = _tree_example(golden_corpus)
    seen = set()
    counts = []
    for seed in range(30):
        seen.add(augment(ex, kc, k=1, seed=seed).braille)
        counts.append(len(seen))
    assert counts == sorted(counts)
    assert counts[-1] >= 2


# --- noise injection ---------------------------------------------------------

def _plain_corpus(rng, n_examples, n_units):
    corpus = []
    for i in range(n_examples):
        b_units = ["".join(rng.choice(CELLS) for _ in range(rng.randint(1, 4)))
                   for _ in range(n_units)]
        t_units = [f"字{j}" for j in range(n_units)]
        braille = " ".join(b_units)
        text = "".join(t_units)
        alignment = []
        b = t = 0
        for bu, tu in zip(b_units, t_units):
            alignment.append((t, t + len(tu), b, b + len(bu)))
            t += len(tu)
            b += len(bu) + 1
        corpus.append(ParallelExample(f"e{i}", "zh", text, braille, alignment))
    return corpus


def test_noise_rate_zero_identity(golden_corpus):
    assert noise_inject(golden_corpus, rate=0.0, seed=3) == golden_corpus


def test_noise_exact_count():
    rng = random.Random(1)
    corpus = _plain_corpus(rng, 1, 100)
    out = noise_inject(corpus, rate=0.15, seed=4)[0]
    src = corpus[0]
    src_units = [src.braille[bs:be] for _, _, bs, be in src.alignment]
    out_units = [out.braille[bs:be] for _, _, bs, be in out.alignment]
    # exactly 15 units were deleted or duplicated
    deletions = sum(1 for u in src_units if u not in out_units)
    import collections
    src_counts = collections.Counter(src_units)
    out_counts = collections.Counter(out_units)
    modified = sum((out_counts - src_counts).values()) + sum((src_counts - out_counts).values())
    assert modified == 15


def test_noise_alignment_consistency():
    rng = random.Random(5)
    for trial in range(300):
        corpus = _plain_corpus(rng, 3, rng.randint(1, 12))
        out = noise_inject(corpus, rate=rng.choice([0.1, 0.3, 0.5]), seed=trial)
        for ex in out:
            for ts, te, bs, be in ex.alignment:
                assert 0 <= ts < te <= len(ex.text)
                assert 0 <= bs < be <= len(ex.braille)
            issues = [i.kind for i in validate_example(ex)]
            assert "AlignmentIssue" not in issues
            assert len(ex.alignment) == len({(a[0], a[1]) for a in ex.alignment})


def test_noise_invalid_rate(golden_corpus):
    with pytest.raises(InvalidRate):
        noise_inject(golden_corpus, rate=1.5, seed=0)


def test_noise_deterministic():
    rng = random.Random(8)
    corpus = _plain_corpus(rng, 5, 10)
    a = noise_inject(corpus, rate=0.3, seed=12)
    b = noise_inject(corpus, rate=0.3, seed=12)
    assert a == b


# --- fragment replacement -------------------------------------------------------

def test_fragment_replace_identity_at_zero(golden_corpus, kc):
    assert fragment_replace(golden_corpus, kc, rate=0.0, seed=1) == golden_corpus


def test_fragment_replace_membership(kc):
    rng = random.Random(3)
    corpus = _plain_corpus(rng, 10, 8)
    out = fragment_replace(corpus, kc, rate=0.5, seed=9)
    fragments = set(kc.fragments())
    replaced = 0
    for src, ex in zip(corpus, out):
        src_units = [src.braille[bs:be] for _, _, bs, be in src.alignment]
        for (ts, te, bs, be), orig in zip(ex.alignment, src_units):
            unit = ex.braille[bs:be]
            if unit != orig:
                replaced += 1
                assert unit in fragments
                assert ex.text[ts:te] in kc.lookup(unit)
    assert replaced > 0


def test_fragment_replace_single_entry_kb():
    kb = KnowledgeBase("zh")
    kb.add("HV2", "han4")
    rng = random.Random(4)
    corpus = _plain_corpus(rng, 2, 4)
    out = fragment_replace(corpus, kb, rate=1.0, seed=2)
    for ex in out:
        for _, _, bs, be in ex.alignment:
            assert ex.braille[bs:be] == "HV2"


def test_augment_corpus_derived_seeds(golden_corpus, kc):
    out1 = augment_corpus(golden_corpus, kc, k=1, seed=3)
    out2 = augment_corpus(golden_corpus, kc, k=1, seed=3)
    assert [e.braille for e in out1] == [e.braille for e in out2]
    par = augment_corpus(golden_corpus, kc, k=1, seed=3, jobs=4)
    assert [e.braille for e in par] == [e.braille for e in out1]
