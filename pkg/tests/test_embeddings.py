import hashlib

import numpy as np
import pytest

from brailletk.embeddings import (AmbiguousSyllable, DuplicateToken, EmbeddingTable,
                                  EmptySyllableSet, SyllableTokenMap, UnknownFragment,
                                  VocabIndex, WordNotInVocab, extend_vocab, init_all,
                                  init_chinese, init_english, load_embeddings,
                                  save_embeddings, token_name)
from brailletk.kb import KnowledgeBase
from oracles import fsum_mean


def _table_checksum(matrix):
    return hashlib.sha256(np.ascontiguousarray(matrix).tobytes()).hexdigest()


def _base(n=10, d=4, seed=0):
    rng = np.random.default_rng(seed)
    vocab = VocabIndex([f"t{i}" for i in range(n)])
    return vocab, EmbeddingTable(rng.normal(size=(n, d)))


def test_extend_vocab_appends():
    vocab, table = _base()
    v2, t2 = extend_vocab(vocab, table, ["G*A", "GI"])
    assert len(v2) == 12
    assert v2.row(token_name("G*A")) == 10
    assert v2.row(token_name("GI")) == 11
    assert np.array_equal(t2.matrix[:10], table.matrix)
    assert np.all(t2.matrix[10:] == 0.0)


def test_extend_vocab_empty():
    vocab, table = _base()
    v2, t2 = extend_vocab(vocab, table, [])
    assert v2.names == vocab.names
    assert np.array_equal(t2.matrix, table.matrix)


def test_extend_vocab_duplicate():
    vocab, table = _base()
    v2, t2 = extend_vocab(vocab, table, ["G*A"])
    with pytest.raises(DuplicateToken):
        extend_vocab(v2, t2, ["G*A"])


def _chinese_setup(syllable_rows, d=4):
    """vocab of single 'characters' with controlled syllable map."""
    chars = []
    char_pinyin = {}
    for syl, count in syllable_rows.items():
        for k in range(count):
            c = chr(0x4E00 + len(chars))
            chars.append(c)
            char_pinyin[c] = syl
    vocab = VocabIndex(chars)
    rng = np.random.default_rng(1)
    table = EmbeddingTable(rng.normal(size=(len(chars), d)))
    return vocab, table, char_pinyin


def test_init_chinese_singleton_mean():
    vocab, table, cp = _chinese_setup({"han4": 1})
    kc = KnowledgeBase("zh")
    kc.add("HV2", "han4")
    v2, t2 = extend_vocab(vocab, table, ["HV2"])
    stm = SyllableTokenMap(v2, cp)
    vec = init_chinese(t2, v2, stm, kc, "HV2")
    assert np.array_equal(vec, table.matrix[0])
    assert np.array_equal(t2.matrix[v2.row(token_name("HV2"))], table.matrix[0])


def test_init_chinese_two_vector_mean():
    vocab, table, cp = _chinese_setup({"han4": 2}, d=2)
    table.matrix[0] = [1.0, 0.0]
    table.matrix[1] = [0.0, 1.0]
    kc = KnowledgeBase("zh")
    kc.add("HV2", "han4")
    v2, t2 = extend_vocab(vocab, table, ["HV2"])
    vec = init_chinese(t2, v2, SyllableTokenMap(v2, cp), kc, "HV2")
    assert np.array_equal(vec, [0.5, 0.5])


def test_init_chinese_matches_fsum_oracle():
    rng = np.random.default_rng(44)
    for _ in range(100):
        n = int(rng.integers(1, 8))
        d = int(rng.integers(1, 17))
        vocab, table, cp = _chinese_setup({"ka1": n}, d=d)
        table.matrix[:] = rng.normal(size=table.matrix.shape)
        kc = KnowledgeBase("zh")
        kc.add("KA", "ka1")
        v2, t2 = extend_vocab(vocab, table, ["KA"])
        vec = init_chinese(t2, v2, SyllableTokenMap(v2, cp), kc, "KA")
        assert np.max(np.abs(vec - fsum_mean(table.matrix[:n]))) <= 1e-12


def test_init_chinese_errors():
    vocab, table, cp = _chinese_setup({"han4": 1})
    kc = KnowledgeBase("zh")
    kc.add("HV2", "han4")
    kc.add("X", "xi1", 5)
    kc.add("X", "xa1", 5)
    v2, t2 = extend_vocab(vocab, table, ["HV2", "X", "GI"])
    stm = SyllableTokenMap(v2, cp)
    with pytest.raises(UnknownFragment):
        init_chinese(t2, v2, stm, kc, "GI")
    with pytest.raises(EmptySyllableSet):
        init_chinese(t2, v2, stm, kc, "X", syllable="xi1")
    with pytest.raises(AmbiguousSyllable):
        init_chinese(t2, v2, stm, kc, "X")


def test_syllable_map_tone_fallback():
    vocab, table, cp = _chinese_setup({"fa1": 1, "fa3": 2})
    stm = SyllableTokenMap(vocab, cp)
    assert stm.resolve("fa1") == [0]           # tone-exact
    assert stm.resolve("fa2") == [0, 1, 2]      # fallback merges all tones


def test_init_english_clone_golden():
    vocab = VocabIndex(["least", "other"])
    rng = np.random.default_rng(5)
    table = EmbeddingTable(rng.normal(size=(2, 6)))
    ke = KnowledgeBase("en")
    ke.add("L1/", "least")
    v2, t2 = extend_vocab(vocab, table, ["L1/"])
    init_english(t2, v2, ke, "L1/")
    row = v2.row(token_name("L1/"))
    assert t2.matrix[row].tobytes() == table.matrix[0].tobytes()  # bitwise clone
    # value-copy semantics: mutating the source afterwards leaves the clone alone
    before = t2.matrix[row].copy()
    t2.matrix[0] += 1.0
    assert np.array_equal(t2.matrix[row], before)


def test_init_english_subword_mean():
    vocab = VocabIndex(["lea", "st"])
    table = EmbeddingTable(np.array([[2.0, 0.0], [0.0, 4.0]]))
    ke = KnowledgeBase("en")
    ke.add("L1/", "least")
    v2, t2 = extend_vocab(vocab, table, ["L1/"])
    vec = init_english(t2, v2, ke, "L1/")
    assert np.array_equal(vec, [1.0, 2.0])


def test_init_english_errors():
    vocab = VocabIndex(["xyz"])
    table = EmbeddingTable(np.zeros((1, 2)))
    ke = KnowledgeBase("en")
    ke.add("L1/", "least")
    v2, t2 = extend_vocab(vocab, table, ["L1/", "GI"])
    with pytest.raises(WordNotInVocab):
        init_english(t2, v2, ke, "L1/")
    with pytest.raises(UnknownFragment):
        init_english(t2, v2, ke, "GI")


def _full_setup():
    vocab, table, cp = _chinese_setup({"han4": 3, "gu4": 2})
    vocab = VocabIndex(vocab.names + ["least", "that"])
    rng = np.random.default_rng(9)
    table = EmbeddingTable(rng.normal(size=(len(vocab), 4)))
    kc = KnowledgeBase("zh")
    kc.add("HV2", "han4")
    kc.add("GU", "gu4")
    kc.add("NOCHAR", "zu4")  # syllable with no character rows
    ke = KnowledgeBase("en")
    ke.add("L1/", "least")
    ke.add("T", "that")
    ke.add("Q", "quoi")
    return vocab, table, cp, kc, ke


def test_init_all_counts_and_skips():
    vocab, table, cp, kc, ke = _full_setup()
    fragments = ["HV2", "GU", "NOCHAR", "L1/", "T", "Q", "UNK"]
    v2, t2 = extend_vocab(vocab, table, fragments)
    stm = SyllableTokenMap(v2, cp)
    report = init_all(t2, v2, kc, ke, stm)
    # independent recount from the KBs
    expect_c = sum(1 for f in fragments if kc.lookup(f) and stm.resolve(kc.lookup(f)[0]))
    expect_e = sum(1 for f in fragments
                   if not kc.lookup(f) and ke.lookup(f) and ke.lookup(f)[0] in v2)
    assert report.chinese_inited == expect_c == 2
    assert report.english_inited == expect_e == 2
    assert sorted(r for _, r in report.skipped) == \
        ["EmptySyllableSet", "UnknownFragment", "WordNotInVocab"]


def test_init_all_idempotent_and_noninterfering():
    vocab, table, cp, kc, ke = _full_setup()
    fragments = ["HV2", "GU", "L1/", "T"]
    v2, t2 = extend_vocab(vocab, table, fragments)
    stm = SyllableTokenMap(v2, cp)
    original = _table_checksum(table.matrix)
    init_all(t2, v2, kc, ke, stm)
    first = _table_checksum(t2.matrix)
    report = init_all(t2, v2, kc, ke, stm)
    assert _table_checksum(t2.matrix) == first  # bitwise idempotent
    assert report.skipped == []
    # pre-existing rows never move
    assert _table_checksum(t2.matrix[:len(vocab)]) == original


def test_save_load_round_trip(tmp_path):
    vocab, table = _base(n=7, d=5, seed=3)
    prefix = tmp_path / "emb"
    save_embeddings(table, vocab, prefix)
    table2, vocab2 = load_embeddings(prefix)
    assert vocab2.names == vocab.names
    assert table2.matrix.tobytes() == table.matrix.tobytes()
    header = (tmp_path / "emb.json").read_text()
    assert '"vocab"' in header and '"dim"' in header
