"""Parallel-corpus augmentation over aligned text/braille units.

Three strategies:

* ``augment`` — constituent span replacement: swap k annotated spans for
  same-attribute knowledge-base entries whose braille clears a similarity
  threshold, rewriting both sides consistently.
* ``noise_inject`` — delete or duplicate an exact fraction of aligned units.
* ``fragment_replace`` — overwrite an exact fraction of aligned units with
  random KB fragments and their counterpart text (attribute-blind baseline).

All operate on the unit decomposition induced by an example's alignment, so
untouched content stays byte-identical and alignments are recomputed exactly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from .codec import BrailleError, InvalidRate
from .kb import KnowledgeBase, similarity
from .pipeline import ParallelExample, Span


class InsufficientCandidates(BrailleError):
    def __init__(self, span):
        self.span = span
        super().__init__(f"no compatible replacement for span {span}")


class AnnotationError(BrailleError):
    pass


@dataclass
class _Units:
    """One side of an example, decomposed around its aligned units."""
    prefix: str
    units: list[str]
    seps: list[str]  # len(units) - 1 separators
    suffix: str
    default_sep: str

    def assemble(self) -> tuple[str, list[tuple[int, int]]]:
        parts = [self.prefix]
        spans = []
        pos = len(self.prefix)
        for i, u in enumerate(self.units):
            if i > 0:
                sep = self.seps[i - 1]
                parts.append(sep)
                pos += len(sep)
            parts.append(u)
            spans.append((pos, pos + len(u)))
            pos += len(u)
        parts.append(self.suffix)
        return "".join(parts), spans


def _decompose(ex: ParallelExample) -> tuple[_Units, _Units]:
    if not ex.alignment:
        raise AnnotationError(f"example {ex.id} has no alignment")
    t_bounds = [(ts, te) for ts, te, _, _ in ex.alignment]
    b_bounds = [(bs, be) for _, _, bs, be in ex.alignment]

    def side(text: str, bounds, default_sep: str) -> _Units:
        units = [text[s:e] for s, e in bounds]
        seps = [text[bounds[i][1]:bounds[i + 1][0]] for i in range(len(bounds) - 1)]
        return _Units(text[:bounds[0][0]], units, seps, text[bounds[-1][1]:], default_sep)

    return (side(ex.text, t_bounds, "" if ex.language == "zh" else " "),
            side(ex.braille, b_bounds, " "))


def _reassemble(ex: ParallelExample, t: _Units, b: _Units,
                spans: list[Span] | None) -> ParallelExample:
    text, t_spans = t.assemble()
    braille, b_spans = b.assemble()
    alignment = [(ts, te, bs, be) for (ts, te), (bs, be) in zip(t_spans, b_spans)]
    return replace(ex, text=text, braille=braille, alignment=alignment,
                   spans=spans if spans is not None else [])


def _exact_count(rate: float, n: int) -> int:
    if not 0.0 <= rate <= 1.0:
        raise InvalidRate(f"rate must be in [0, 1], got {rate}")
    return int(rate * n + 0.5)


def _example_rng(seed: int, index: int) -> random.Random:
    return random.Random(f"{seed}:{index}")


def augment(ex: ParallelExample, attr_kb: KnowledgeBase, k: int = 1,
            min_sim: float = 0.0, seed: int = 0) -> ParallelExample:
    """Replace exactly k annotated spans with same-attribute KB entries.

    Candidate entries must share the span's attribute, differ from its
    current braille, and reach ``similarity >= min_sim`` on the space-stripped
    cell sequences. Each replaced span collapses to a single aligned unit.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not ex.spans:
        raise AnnotationError(f"example {ex.id} has no attribute spans")
    t_units, b_units = _decompose(ex)
    n_units = len(b_units.units)
    if ex.spans[0].start != 0 or ex.spans[-1].end != n_units or any(
            ex.spans[i].end != ex.spans[i + 1].start for i in range(len(ex.spans) - 1)):
        raise AnnotationError(f"spans of example {ex.id} do not tile its units")

    span_braille = [" ".join(b_units.units[sp.start:sp.end]) for sp in ex.spans]
    candidates = []
    for sp, braille in zip(ex.spans, span_braille):
        cells = braille.replace(" ", "")
        ok = [e for e in attr_kb.attribute_group(sp.attribute)
              if e.fragment != cells and similarity(cells, e.fragment) >= min_sim]
        candidates.append(ok)
    eligible = [i for i, ok in enumerate(candidates) if ok]
    if len(eligible) < k:
        ineligible = [ex.spans[i] for i, ok in enumerate(candidates) if not ok]
        raise InsufficientCandidates(ineligible[0] if ineligible else ex.spans[0])

    rng = _example_rng(seed, 0)
    chosen = sorted(rng.sample(eligible, k))
    picks = {i: rng.choice(candidates[i]) for i in chosen}

    new_t, new_b, new_t_seps, new_b_seps, new_spans = [], [], [], [], []
    unit_cursor = 0
    for i, sp in enumerate(ex.spans):
        if i > 0:  # separator carried over from between the adjacent original units
            new_t_seps.append(t_units.seps[sp.start - 1])
            new_b_seps.append(b_units.seps[sp.start - 1])
        if i in picks:
            entry = picks[i]
            new_t.append(entry.text)
            new_b.append(entry.fragment)
            new_spans.append(Span(unit_cursor, unit_cursor + 1, sp.attribute, entry.text))
            unit_cursor += 1
        else:
            for u in range(sp.start, sp.end):
                if u > sp.start:
                    new_t_seps.append(t_units.seps[u - 1])
                    new_b_seps.append(b_units.seps[u - 1])
                new_t.append(t_units.units[u])
                new_b.append(b_units.units[u])
            new_spans.append(Span(unit_cursor, unit_cursor + (sp.end - sp.start),
                                  sp.attribute, sp.text))
            unit_cursor += sp.end - sp.start

    t_units = replace(t_units, units=new_t, seps=new_t_seps)
    b_units = replace(b_units, units=new_b, seps=new_b_seps)
    return _reassemble(ex, t_units, b_units, new_spans)


def _apply_unit_edits(u: _Units, decisions: dict[int, str]) -> _Units:
    """Apply delete/duplicate decisions; a deletion also drops the separator
    before the deleted unit (after it, when the first unit goes)."""
    units, seps = [], []
    n = len(u.units)

    def push(unit: str, sep_before: str | None):
        if units:
            seps.append(sep_before if sep_before is not None else u.default_sep)
        units.append(unit)

    for i, unit in enumerate(u.units):
        action = decisions.get(i)
        if action == "delete":
            continue
        push(unit, u.seps[i - 1] if i > 0 else None)
        if action == "duplicate":
            sep = u.seps[i] if i < n - 1 else (u.seps[i - 1] if i > 0 else None)
            push(unit, sep)
    return replace(u, units=units, seps=seps)


def noise_inject(corpus: list[ParallelExample], rate: float = 0.15,
                 seed: int = 0) -> list[ParallelExample]:
    """Delete or duplicate (fifty-fifty) an exact fraction of units per example."""
    out = []
    for idx, ex in enumerate(corpus):
        n = len(ex.alignment)
        m = _exact_count(rate, n)
        if m == 0:
            out.append(ex)
            continue
        rng = _example_rng(seed, idx)
        selected = sorted(rng.sample(range(n), m))
        decisions = {i: ("delete" if rng.random() < 0.5 else "duplicate") for i in selected}
        t_units, b_units = _decompose(ex)
        out.append(_reassemble(ex, _apply_unit_edits(t_units, decisions),
                               _apply_unit_edits(b_units, decisions), None))
    return out


def fragment_replace(corpus: list[ParallelExample], kb: KnowledgeBase,
                     rate: float = 0.15, seed: int = 0) -> list[ParallelExample]:
    """Overwrite an exact fraction of units with random KB fragments."""
    fragments = kb.fragments()
    if not fragments:
        raise ValueError("knowledge base has no fragments")
    out = []
    for idx, ex in enumerate(corpus):
        n = len(ex.alignment)
        m = _exact_count(rate, n)
        if m == 0:
            out.append(ex)
            continue
        rng = _example_rng(seed, idx)
        selected = sorted(rng.sample(range(n), m))
        t_units, b_units = _decompose(ex)
        for i in selected:
            frag = rng.choice(fragments)
            b_units.units[i] = frag
            t_units.units[i] = kb.lookup(frag)[0]
        out.append(_reassemble(ex, t_units, b_units, None))
    return out


def augment_corpus(corpus: list[ParallelExample], attr_kb: KnowledgeBase,
                   k: int = 1, min_sim: float = 0.0, seed: int = 0,
                   skip_unaugmentable: bool = True,
                   jobs: int | None = None) -> list[ParallelExample]:
    """Span-replacement augmentation over a corpus, one derived seed per example.

    Examples are independent; ``jobs`` bounds worker parallelism and results
    keep corpus order either way.
    """
    def one(item):
        idx, ex = item
        try:
            return augment(ex, attr_kb, k=k, min_sim=min_sim, seed=seed * 1_000_003 + idx)
        except (InsufficientCandidates, AnnotationError):
            if not skip_unaugmentable:
                raise
            return None

    if jobs and jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, enumerate(corpus)))
    else:
        results = [one(item) for item in enumerate(corpus)]
    return [r for r in results if r is not None]
