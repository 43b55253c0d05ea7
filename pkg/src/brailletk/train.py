"""Desk-scale training harness comparing prior-based vs random embedding init.

The model is a position-wise classifier: each braille token id is embedded
and mapped through a linear head to a distribution over target tokens, and
training minimizes the mean negative log-likelihood with plain gradient
descent (optional momentum). That keeps gradients exactly checkable while
still exercising the thing under study: whether starting braille-token rows
from lexical priors (homophone-set means for Chinese, word clones for
English) speeds up learning compared to random rows.

Bilingual corpora are consumed with strictly alternating batches while both
have batches remaining; everything is bit-reproducible under a fixed seed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from statistics import median

import numpy as np

from .codec import BrailleError
from .embeddings import (EmbeddingTable, SyllableTokenMap, VocabIndex,
                         extend_vocab, init_all, token_name)
from .kb import KnowledgeBase


class InvalidTokenId(BrailleError):
    pass


class ConfigMismatch(BrailleError):
    pass


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    max_seq_len: int = 1024
    batch_size: int = 32
    epochs: int = 10
    seed: int = 0
    init_mode: str = "bkft"  # "bkft" | "random"
    momentum: float = 0.0
    assert_monotone: bool = False

    def __post_init__(self):
        if self.learning_rate <= 0 or self.max_seq_len <= 0 or \
                self.batch_size <= 0 or self.epochs <= 0:
            raise ValueError("hyperparameters must be positive")
        if self.init_mode not in ("bkft", "random"):
            raise ValueError(f"unknown init_mode {self.init_mode!r}")


@dataclass
class ToyModel:
    emb: np.ndarray  # (V, d)
    W: np.ndarray    # (d, C)
    b: np.ndarray    # (C,)

    def copy(self) -> "ToyModel":
        return ToyModel(self.emb.copy(), self.W.copy(), self.b.copy())


@dataclass
class Gradients:
    d_emb: np.ndarray
    d_W: np.ndarray
    d_b: np.ndarray


Batch = tuple[np.ndarray, np.ndarray]  # (input ids, target ids), same length


def _check_batch(model: ToyModel, batch: Batch):
    s, y = batch
    if len(s) == 0:
        raise InvalidTokenId("empty batch")
    if s.min() < 0 or s.max() >= model.emb.shape[0]:
        raise InvalidTokenId(f"input id out of range [0, {model.emb.shape[0]})")
    if y.min() < 0 or y.max() >= model.W.shape[1]:
        raise InvalidTokenId(f"target id out of range [0, {model.W.shape[1]})")


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    m = logits.max(axis=1, keepdims=True)
    return logits - m - np.log(np.exp(logits - m).sum(axis=1, keepdims=True))


def forward_nll(model: ToyModel, batch: Batch) -> float:
    """Mean -log p(y_t | s_t) with p = softmax(emb[s_t] @ W + b)."""
    s, y = batch
    _check_batch(model, batch)
    logp = _log_softmax(model.emb[s] @ model.W + model.b)
    return float(-logp[np.arange(len(y)), y].mean())


def backward(model: ToyModel, batch: Batch) -> Gradients:
    """Exact analytic gradient of forward_nll for the embedding rows used, W, b."""
    s, y = batch
    _check_batch(model, batch)
    logits = model.emb[s] @ model.W + model.b
    p = np.exp(_log_softmax(logits))
    p[np.arange(len(y)), y] -= 1.0
    p /= len(y)
    d_W = model.emb[s].T @ p
    d_b = p.sum(axis=0)
    d_emb = np.zeros_like(model.emb)
    np.add.at(d_emb, s, p @ model.W.T)
    return Gradients(d_emb, d_W, d_b)


@dataclass
class BatchSchedule:
    entries: list[tuple[str, int]]  # ("C"|"E", within-corpus batch index)

    @property
    def labels(self) -> list[str]:
        return [label for label, _ in self.entries]


def schedule_batches(n_c: int, n_e: int, seed: int = 0) -> BatchSchedule:
    """Strictly alternate C,E,... while both have batches left, remainder after;
    within-corpus batch order is shuffled by the seed."""
    rng = random.Random(seed)
    order_c = list(range(n_c))
    order_e = list(range(n_e))
    rng.shuffle(order_c)
    rng.shuffle(order_e)
    entries: list[tuple[str, int]] = []
    i = j = 0
    while i < n_c and j < n_e:
        entries.append(("C", order_c[i]))
        entries.append(("E", order_e[j]))
        i += 1
        j += 1
    entries.extend(("C", order_c[x]) for x in range(i, n_c))
    entries.extend(("E", order_e[x]) for x in range(j, n_e))
    return BatchSchedule(entries)


Example = tuple[list[int], list[int]]  # aligned (input ids, target ids)


def make_batches(corpus: list[Example], batch_size: int, max_seq_len: int) -> list[Batch]:
    """Group consecutive examples into flat position batches."""
    batches = []
    for i in range(0, len(corpus), batch_size):
        s: list[int] = []
        y: list[int] = []
        for inputs, targets in corpus[i:i + batch_size]:
            if len(inputs) != len(targets):
                raise ValueError("inputs and targets must align position-wise")
            s.extend(inputs[:max_seq_len])
            y.extend(targets[:max_seq_len])
        batches.append((np.asarray(s, dtype=np.intp), np.asarray(y, dtype=np.intp)))
    return batches


def accuracy(model: ToyModel, corpus: list[Example]) -> float:
    s = np.asarray([t for inputs, _ in corpus for t in inputs], dtype=np.intp)
    y = np.asarray([t for _, targets in corpus for t in targets], dtype=np.intp)
    pred = (model.emb[s] @ model.W + model.b).argmax(axis=1)
    return float((pred == y).mean())


@dataclass
class RunResult:
    epoch_losses: list[float] = field(default_factory=list)
    epoch_accuracy: list[float] = field(default_factory=list)  # [0] = before training

    def epochs_to_target(self, target: float = 0.9) -> int | None:
        for i, acc in enumerate(self.epoch_accuracy):
            if acc >= target:
                return i
        return None


def train_run(model: ToyModel, corpus_c: list[Example], corpus_e: list[Example],
              cfg: TrainConfig, heldout: list[Example] | None = None) -> RunResult:
    """Train in place; returns per-epoch mean loss and held-out accuracy."""
    batches_c = make_batches(corpus_c, cfg.batch_size, cfg.max_seq_len) if corpus_c else []
    batches_e = make_batches(corpus_e, cfg.batch_size, cfg.max_seq_len) if corpus_e else []
    result = RunResult()
    if heldout:
        result.epoch_accuracy.append(accuracy(model, heldout))
    vel = Gradients(np.zeros_like(model.emb), np.zeros_like(model.W), np.zeros_like(model.b))
    for epoch in range(cfg.epochs):
        schedule = schedule_batches(len(batches_c), len(batches_e),
                                    seed=cfg.seed * 100_003 + epoch)
        losses = []
        for label, idx in schedule.entries:
            batch = batches_c[idx] if label == "C" else batches_e[idx]
            loss = forward_nll(model, batch)
            grads = backward(model, batch)
            if cfg.momentum:
                vel.d_emb = cfg.momentum * vel.d_emb + grads.d_emb
                vel.d_W = cfg.momentum * vel.d_W + grads.d_W
                vel.d_b = cfg.momentum * vel.d_b + grads.d_b
                grads = vel
            model.emb -= cfg.learning_rate * grads.d_emb
            model.W -= cfg.learning_rate * grads.d_W
            model.b -= cfg.learning_rate * grads.d_b
            if cfg.assert_monotone:
                after = forward_nll(model, batch)
                if after > loss + 1e-12:
                    raise AssertionError(f"loss increased {loss} -> {after}")
            losses.append(loss)
        result.epoch_losses.append(float(np.mean(losses)) if losses else 0.0)
        if heldout:
            result.epoch_accuracy.append(accuracy(model, heldout))
    return result


# --- synthetic task ------------------------------------------------------------

_LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


def _two_cell_fragments(count: int, offset: int = 0) -> list[str]:
    combos = [a + b for a in _LETTERS for b in _LETTERS]
    return combos[offset:offset + count]


@dataclass
class SyntheticTask:
    """A classification world where the priors are informative by design.

    Base vocabulary rows ("characters", one per homophone; "words" for the
    English side) sit near per-class prototypes, and the linear head is
    pre-built from the same prototypes, mirroring a model that already knows
    its plain-text vocabulary. The braille fragments' prior counterparts
    identify exactly the rows of their own target class.
    """
    vocab: VocabIndex
    base_table: EmbeddingTable
    W: np.ndarray
    b: np.ndarray
    kb_c: KnowledgeBase
    kb_e: KnowledgeBase
    char_pinyin: dict[str, str]
    fragments_c: list[str]
    fragments_e: list[str]
    corpus_c: list[Example]
    corpus_e: list[Example]
    heldout: list[Example]
    proto_norm: float
    dim: int


def make_synthetic_task(n_syllables: int = 200, homophones: int = 3,
                        n_train: int = 500, n_heldout: int = 100,
                        n_words_e: int = 60, n_train_e: int = 150,
                        dim: int = 32, proto_norm: float = 2.0,
                        noise: float = 0.15, seed: int = 12345) -> SyntheticTask:
    rng = np.random.default_rng(seed)
    initials = "bcdfghklmn"
    finals = "aeiou"
    syllables = [f"{i}{f}{t}" for i in initials for f in finals for t in range(1, 5)]
    if n_syllables > len(syllables):
        raise ValueError("at most 200 synthetic syllables available")
    if n_train < 2 * n_syllables or n_train_e < 2 * n_words_e:
        raise ValueError("need at least two full passes of training pairs")
    syllables = syllables[:n_syllables]

    chars = [chr(0x4E00 + i) for i in range(n_syllables * homophones)]
    char_pinyin = {c: syllables[i // homophones] for i, c in enumerate(chars)}
    words = [f"w{i:03d}" for i in range(n_words_e)]

    vocab = VocabIndex(chars + words)
    n_classes = n_syllables + n_words_e

    def _unit_rows(count):
        m = rng.normal(size=(count, dim))
        return m / np.linalg.norm(m, axis=1, keepdims=True) * proto_norm

    proto = _unit_rows(n_classes)
    matrix = np.zeros((len(vocab), dim))
    for i, c in enumerate(chars):
        matrix[vocab.row(c)] = proto[i // homophones] + \
            rng.normal(0.0, noise * proto_norm / np.sqrt(dim), dim)
    for j, w in enumerate(words):
        matrix[vocab.row(w)] = proto[n_syllables + j] + \
            rng.normal(0.0, noise * proto_norm / np.sqrt(dim), dim)

    fragments_c = _two_cell_fragments(n_syllables)
    fragments_e = _two_cell_fragments(n_words_e, offset=400)
    kb_c = KnowledgeBase("zh")
    for frag, syl in zip(fragments_c, syllables):
        kb_c.add(frag, syl)
    kb_e = KnowledgeBase("en")
    for frag, w in zip(fragments_e, words):
        kb_e.add(frag, w)

    base = len(vocab)
    frag_row_c = {f: base + i for i, f in enumerate(fragments_c)}
    frag_row_e = {f: base + len(fragments_c) + i for i, f in enumerate(fragments_e)}

    def _pairs_c(count_extra, passes=2):
        order = []
        for _ in range(passes):
            idx = rng.permutation(n_syllables)
            order.extend(int(i) for i in idx)
        order.extend(int(i) for i in rng.integers(0, n_syllables, count_extra))
        return [([frag_row_c[fragments_c[i]]], [i]) for i in order]

    corpus_c = _pairs_c(n_train - 2 * n_syllables)
    heldout = [([frag_row_c[fragments_c[int(i)]]], [int(i)])
               for i in rng.integers(0, n_syllables, n_heldout)]

    order_e = []
    for _ in range(2):
        order_e.extend(int(i) for i in rng.permutation(n_words_e))
    order_e.extend(int(i) for i in rng.integers(0, n_words_e, n_train_e - 2 * n_words_e))
    corpus_e = [([frag_row_e[fragments_e[i]]], [n_syllables + i]) for i in order_e]

    return SyntheticTask(vocab=vocab, base_table=EmbeddingTable(matrix),
                         W=(proto.T).copy(), b=np.zeros(n_classes),
                         kb_c=kb_c, kb_e=kb_e, char_pinyin=char_pinyin,
                         fragments_c=fragments_c, fragments_e=fragments_e,
                         corpus_c=corpus_c, corpus_e=corpus_e, heldout=heldout,
                         proto_norm=proto_norm, dim=dim)


def load_aligned_corpus(path) -> list[tuple[str, list[str]]]:
    """Aligned-pairs JSONL: {"braille": <sequence>, "text_tokens": [...]} rows
    where the braille tokenizes into exactly one fragment per text token."""
    import json
    from pathlib import Path
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            d = json.loads(line)
            rows.append((d["braille"], list(d["text_tokens"])))
    return rows


def make_file_task(rows_c: list[tuple[str, list[str]]],
                   rows_e: list[tuple[str, list[str]]],
                   kb_c: KnowledgeBase, kb_e: KnowledgeBase,
                   char_pinyin: dict[str, str], dim: int = 32,
                   proto_norm: float = 3.0, heldout_fraction: float = 0.2,
                   seed: int = 0) -> SyntheticTask:
    """Build a trainable task from aligned corpora on disk.

    The output classes are the text tokens themselves; the linear head column
    for each class is tied to that token's (random) base embedding, mirroring
    a model whose head already knows its plain-text vocabulary.
    """
    from .tokenizer import segment

    rng = np.random.default_rng(seed)
    targets = sorted({t for _, toks in rows_c + rows_e for t in toks})
    vocab = VocabIndex(targets)
    matrix = rng.normal(0.0, proto_norm / np.sqrt(dim), (len(vocab), dim))
    base = EmbeddingTable(matrix)
    W = matrix.T.copy()
    b = np.zeros(len(targets))

    fragments_c: list[str] = []
    fragments_e: list[str] = []

    def build(rows, kb, fragments):
        examples = []
        for braille, toks in rows:
            frags = segment(braille, kb).fragments()
            if len(frags) != len(toks):
                raise ValueError(f"{braille!r}: {len(frags)} fragments vs {len(toks)} tokens")
            for f in frags:
                if f not in fragments_c and f not in fragments_e:
                    fragments.append(f)
            examples.append((frags, [vocab.row(t) for t in toks]))
        return examples

    raw_c = build(rows_c, kb_c, fragments_c)
    raw_e = build(rows_e, kb_e, fragments_e)
    frag_row = {f: len(vocab) + i for i, f in enumerate(fragments_c + fragments_e)}
    corpus_c = [([frag_row[f] for f in frags], ys) for frags, ys in raw_c]
    corpus_e = [([frag_row[f] for f in frags], ys) for frags, ys in raw_e]
    n_held = max(1, int(heldout_fraction * len(corpus_c)))
    heldout, corpus_c = corpus_c[:n_held], corpus_c[n_held:]
    if not corpus_c:
        corpus_c, heldout = heldout, corpus_c
    return SyntheticTask(vocab=vocab, base_table=base, W=W, b=b, kb_c=kb_c,
                         kb_e=kb_e, char_pinyin=char_pinyin,
                         fragments_c=fragments_c, fragments_e=fragments_e,
                         corpus_c=corpus_c, corpus_e=corpus_e, heldout=heldout,
                         proto_norm=proto_norm, dim=dim)


def shuffle_prior(kb: KnowledgeBase, seed: int) -> KnowledgeBase:
    """Ablation KB: same fragments, counterparts permuted (uninformative prior)."""
    rng = random.Random(seed)
    fragments = [e.fragment for e in kb.entries]
    counterparts = [(e.counterpart, e.frequency) for e in kb.entries]
    rng.shuffle(counterparts)
    out = KnowledgeBase(kb.language)
    for frag, (cp, freq) in zip(fragments, counterparts):
        out.add(frag, cp, freq)
    return out


def build_arm_model(task: SyntheticTask, init_mode: str, seed: int,
                    kb_c: KnowledgeBase | None = None,
                    kb_e: KnowledgeBase | None = None) -> ToyModel:
    """Extend the base vocabulary with braille tokens and initialize one arm.

    The random arm samples each new row from the empirical distribution of
    existing rows (clone of a uniformly random base row plus noise), the
    usual initializer for newly added tokens; only the prior's structure
    distinguishes the arms, not the marginal row distribution.
    """
    kb_c = kb_c if kb_c is not None else task.kb_c
    kb_e = kb_e if kb_e is not None else task.kb_e
    fragments = task.fragments_c + task.fragments_e
    vocab2, table2 = extend_vocab(task.vocab, task.base_table, fragments)
    if init_mode == "bkft":
        stm = SyllableTokenMap(vocab2, task.char_pinyin)
        init_all(table2, vocab2, kb_c, kb_e, stm)
    elif init_mode == "random":
        rng = np.random.default_rng(seed * 7 + 1)
        n_base = len(task.vocab)
        noise = 0.1 * task.proto_norm / np.sqrt(task.dim)
        for f in fragments:
            source = int(rng.integers(0, n_base))
            table2.matrix[vocab2.row(token_name(f))] = \
                task.base_table.matrix[source] + rng.normal(0.0, noise, task.dim)
    else:
        raise ValueError(f"unknown init_mode {init_mode!r}")
    return ToyModel(emb=table2.matrix, W=task.W.copy(), b=task.b.copy())


@dataclass
class ArmResult:
    seed: int
    init_mode: str
    epoch_losses: list[float]
    epoch_accuracy: list[float]
    epochs_to_target: int | None


@dataclass
class ExperimentReport:
    target_accuracy: float
    arms: list[ArmResult] = field(default_factory=list)

    def median_epochs(self, init_mode: str) -> float:
        values = [a.epochs_to_target for a in self.arms if a.init_mode == init_mode]
        return median(float("inf") if v is None else v for v in values)

    def to_dict(self) -> dict:
        medians = {}
        for mode in ("bkft", "random"):
            m = self.median_epochs(mode)
            medians[mode] = m if m != float("inf") else None  # None: never reached
        return {"target_accuracy": self.target_accuracy,
                "median_epochs": medians,
                "arms": [{"seed": a.seed, "init_mode": a.init_mode,
                          "epoch_losses": a.epoch_losses,
                          "epoch_accuracy": a.epoch_accuracy,
                          "epochs_to_target": a.epochs_to_target} for a in self.arms]}


def run_experiment(corpus_c: list[Example], corpus_e: list[Example],
                   cfg_pair: tuple[TrainConfig, TrainConfig], task: SyntheticTask,
                   seeds=(0, 1, 2, 3, 4), target_accuracy: float = 0.9,
                   kb_c: KnowledgeBase | None = None,
                   jobs: int | None = None) -> ExperimentReport:
    """Train both configurations on identical data and batch schedules.

    The configs must be identical apart from init_mode. ``kb_c`` overrides the
    task's Chinese prior (for shuffled-prior ablations). Seed/arm runs are
    fully isolated, so ``jobs`` may fan them out; the report is assembled in
    submission order and is identical either way.
    """
    cfg_a, cfg_b = cfg_pair
    differing = {f for f in cfg_a.__dataclass_fields__
                 if getattr(cfg_a, f) != getattr(cfg_b, f)}
    if differing - {"init_mode"}:
        raise ConfigMismatch(f"configs differ beyond init_mode: {sorted(differing)}")
    if not corpus_c or not corpus_e:
        raise ValueError("both corpora must be non-empty")

    def one_arm(seed: int, cfg: TrainConfig) -> ArmResult:
        run_cfg = replace(cfg, seed=seed)
        model = build_arm_model(task, cfg.init_mode, seed, kb_c=kb_c)
        result = train_run(model, corpus_c, corpus_e, run_cfg, heldout=task.heldout)
        return ArmResult(seed, cfg.init_mode, result.epoch_losses,
                         result.epoch_accuracy, result.epochs_to_target(target_accuracy))

    report = ExperimentReport(target_accuracy=target_accuracy)
    runs = [(seed, cfg) for seed in seeds for cfg in (cfg_a, cfg_b)]
    if jobs and jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            report.arms = list(pool.map(lambda r: one_arm(*r), runs))
    else:
        report.arms = [one_arm(*r) for r in runs]
    return report
