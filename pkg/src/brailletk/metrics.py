"""Reference-based translation metrics: corpus BLEU, chrF++, CER and TER.

All scores are deterministic, computed in double precision, and corpus-level
values aggregate sufficient statistics (so pair order never matters).

* CER  — unit-cost Levenshtein over Unicode scalar values / reference length.
* TER  — (edits + shifts) / reference tokens * 100, with a greedy block-shift
         search: at each round every movable block that appears contiguously
         in the reference is tried at every landing position, and the shift
         giving the strictly best edit distance is applied (ties broken by
         smallest block start, then longest block, then smallest destination).
* chrF++ — F-beta over precision/recall averaged across character n-grams
         (1..char_n, whitespace removed) and word n-grams (1..word_n).
* BLEU — geometric mean of clipped n-gram precisions (1..4) times the brevity
         penalty, no smoothing; `char` tokenization for Chinese-style text,
         `intl` (punctuation/symbol splitting) for English, or `whitespace`.
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .codec import BrailleError


class EmptyReference(BrailleError):
    pass


class LengthMismatch(BrailleError):
    pass


MAX_SHIFT_LEN = 10


def levenshtein(a, b) -> int:
    """Unit-cost edit distance between two sequences."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


def cer(hyp: str, ref: str) -> float:
    """Character error rate: edit distance / reference length."""
    if not ref:
        raise EmptyReference("reference must be non-empty")
    return levenshtein(hyp, ref) / len(ref)


def _best_shift(hyp: list, ref: list, base_dist: int):
    """Best single block shift of hyp, or None if none strictly improves."""
    ref_blocks = set()
    for n in range(1, min(MAX_SHIFT_LEN, len(ref)) + 1):
        for i in range(len(ref) - n + 1):
            ref_blocks.add(tuple(ref[i:i + n]))
    best = None  # (dist, start, -length, dest, shifted)
    for start in range(len(hyp)):
        for length in range(1, min(MAX_SHIFT_LEN, len(hyp) - start) + 1):
            block = tuple(hyp[start:start + length])
            if block not in ref_blocks:
                continue
            rest = hyp[:start] + hyp[start + length:]
            for dest in range(len(rest) + 1):
                if dest == start:
                    continue
                shifted = rest[:dest] + list(block) + rest[dest:]
                d = levenshtein(shifted, ref)
                if d < base_dist:
                    key = (d, start, -length, dest)
                    if best is None or key < best[0]:
                        best = (key, shifted)
    return best


def ter(hyp, ref, shifts: bool = True) -> float:
    """Translation error rate as a percentage of the reference length.

    `shifts=False` gives the plain edit-distance rate (oracle comparison mode).
    """
    hyp = list(hyp)
    ref = list(ref)
    if not ref:
        raise EmptyReference("reference must be non-empty")
    stats = ter_statistics(hyp, ref, shifts=shifts)
    return stats[0] / stats[1] * 100.0


def ter_statistics(hyp, ref, shifts: bool = True) -> tuple[int, int]:
    """(edits + shifts, reference length) sufficient statistics for TER."""
    hyp = list(hyp)
    ref = list(ref)
    if not ref:
        raise EmptyReference("reference must be non-empty")
    n_shifts = 0
    dist = levenshtein(hyp, ref)
    if shifts:
        while dist > 0:
            found = _best_shift(hyp, ref, dist)
            if found is None:
                break
            (dist, _, _, _), hyp = found
            n_shifts += 1
    return dist + n_shifts, len(ref)


def _char_ngrams(s: str, n: int) -> Counter:
    return Counter(s[i:i + n] for i in range(len(s) - n + 1))


def _word_ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def chrf_statistics(hyp: str, ref: str, char_n: int = 6, word_n: int = 2) -> list[int]:
    """Flat [hyp_total, ref_total, matched] per n-gram order (char then word)."""
    stats = []
    h_chars = "".join(hyp.split())
    r_chars = "".join(ref.split())
    for n in range(1, char_n + 1):
        hg, rg = _char_ngrams(h_chars, n), _char_ngrams(r_chars, n)
        stats += [sum(hg.values()), sum(rg.values()), sum((hg & rg).values())]
    h_words, r_words = hyp.split(), ref.split()
    for n in range(1, word_n + 1):
        hg, rg = _word_ngrams(h_words, n), _word_ngrams(r_words, n)
        stats += [sum(hg.values()), sum(rg.values()), sum((hg & rg).values())]
    return stats


def _chrf_from_statistics(stats: list[int], beta: float) -> float:
    avg_p = avg_r = 0.0
    effective = 0
    any_ngrams = False
    for i in range(0, len(stats), 3):
        h_total, r_total, match = stats[i:i + 3]
        any_ngrams = any_ngrams or h_total > 0 or r_total > 0
        if h_total > 0 and r_total > 0:
            avg_p += match / h_total
            avg_r += match / r_total
            effective += 1
    if not any_ngrams:
        return 100.0  # both sides empty
    if effective == 0 or avg_p + avg_r == 0.0:
        return 0.0
    avg_p /= effective
    avg_r /= effective
    b2 = beta * beta
    return 100.0 * (1 + b2) * avg_p * avg_r / (b2 * avg_p + avg_r)


def chrf_pp(hyp: str, ref: str, char_n: int = 6, word_n: int = 2, beta: float = 2.0) -> float:
    return _chrf_from_statistics(chrf_statistics(hyp, ref, char_n, word_n), beta)


def corpus_chrf_pp(hyps, refs, char_n: int = 6, word_n: int = 2, beta: float = 2.0) -> float:
    if len(hyps) != len(refs):
        raise LengthMismatch(f"{len(hyps)} hypotheses vs {len(refs)} references")
    total = [0] * (3 * (char_n + word_n))
    for h, r in zip(hyps, refs):
        for i, v in enumerate(chrf_statistics(h, r, char_n, word_n)):
            total[i] += v
    return _chrf_from_statistics(total, beta)


# --- BLEU --------------------------------------------------------------------

def tokenize_char(s: str) -> list[str]:
    return [c for c in s if not c.isspace()]


def tokenize_whitespace(s: str) -> list[str]:
    return s.split()


def tokenize_intl(s: str) -> list[str]:
    """Split punctuation and symbols into their own tokens, except punctuation
    sitting between two digits (decimal and thousands separators)."""
    out = []
    chars = list(s)
    for i, c in enumerate(chars):
        cat = unicodedata.category(c)
        if cat.startswith("S"):
            out += [" ", c, " "]
        elif cat.startswith("P"):
            prev_digit = i > 0 and chars[i - 1].isdigit()
            next_digit = i + 1 < len(chars) and chars[i + 1].isdigit()
            if prev_digit and next_digit:
                out.append(c)
            else:
                out += [" ", c, " "]
        else:
            out.append(c)
    return "".join(out).split()


TOKENIZERS = {
    "char": tokenize_char,
    "whitespace": tokenize_whitespace,
    "intl": tokenize_intl,
}


def bleu_statistics(hyp_tokens, ref_tokens, max_n: int = 4):
    """(correct[n], total[n], hyp_len, ref_len) for one pair."""
    correct = [0] * max_n
    total = [0] * max_n
    for n in range(1, max_n + 1):
        hg = _word_ngrams(hyp_tokens, n)
        rg = _word_ngrams(ref_tokens, n)
        correct[n - 1] = sum((hg & rg).values())
        total[n - 1] = sum(hg.values())
    return correct, total, len(hyp_tokens), len(ref_tokens)


def bleu_from_statistics(correct, total, hyp_len, ref_len, max_n: int = 4,
                         use_effective_order: bool = False) -> float:
    """No-smoothing BLEU from aggregated counts. With ``use_effective_order``
    (sentence-level reporting) orders beyond the hypothesis length are
    dropped instead of zeroing the score."""
    if use_effective_order:
        max_n = max((n for n in range(1, max_n + 1) if total[n - 1] > 0), default=0)
        if max_n == 0:
            return 0.0
    if any(t == 0 or c == 0 for c, t in zip(correct[:max_n], total[:max_n])):
        return 0.0
    log_precision = sum(math.log(c / t)
                        for c, t in zip(correct[:max_n], total[:max_n])) / max_n
    if hyp_len == 0:
        return 0.0
    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * bp * math.exp(log_precision)


def corpus_bleu(hyps, refs, max_n: int = 4, tokenize: str = "char") -> float:
    """Corpus BLEU over single references, aggregated counts, no smoothing."""
    if len(hyps) != len(refs) or not hyps:
        raise LengthMismatch(f"{len(hyps)} hypotheses vs {len(refs)} references")
    tok = TOKENIZERS[tokenize]
    correct = [0] * max_n
    total = [0] * max_n
    hyp_len = ref_len = 0
    for h, r in zip(hyps, refs):
        c, t, hl, rl = bleu_statistics(tok(h), tok(r), max_n)
        correct = [a + b for a, b in zip(correct, c)]
        total = [a + b for a, b in zip(total, t)]
        hyp_len += hl
        ref_len += rl
    return bleu_from_statistics(correct, total, hyp_len, ref_len, max_n)


# --- report ------------------------------------------------------------------

@dataclass
class MetricReport:
    config: dict
    per_pair: list[dict] = field(default_factory=list)
    corpus: dict = field(default_factory=dict)
    sufficient: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"config": self.config, "corpus": self.corpus,
                "per_pair": self.per_pair, "sufficient": self.sufficient}


def _pair_statistics(h, r, tok, metrics, char_n, word_n, beta):
    out = {}
    if "bleu" in metrics:
        out["bleu"] = bleu_statistics(tok(h), tok(r))
    if "chrf" in metrics:
        out["chrf"] = chrf_statistics(h, r, char_n, word_n)
    if "cer" in metrics:
        if not r:
            raise EmptyReference("reference must be non-empty")
        out["cer"] = (levenshtein(h, r), len(r))
    if "ter" in metrics:
        out["ter"] = ter_statistics(tok(h), tok(r))
    return out


def evaluate_pairs(hyps, refs, tokenize: str = "char",
                   metrics=("bleu", "chrf", "cer", "ter"),
                   char_n: int = 6, word_n: int = 2, beta: float = 2.0,
                   jobs: int | None = None) -> MetricReport:
    """Score parallel hypothesis/reference segments and aggregate a corpus view.

    Per-pair statistics may be computed by up to ``jobs`` workers; results are
    reduced in input order, so the report is identical either way.
    """
    if len(hyps) != len(refs) or not hyps:
        raise LengthMismatch(f"{len(hyps)} hypotheses vs {len(refs)} references")
    tok = TOKENIZERS[tokenize]
    report = MetricReport(config={"tokenize": tokenize, "metrics": list(metrics),
                                  "bleu_max_n": 4, "chrf_char_n": char_n,
                                  "chrf_word_n": word_n, "chrf_beta": beta})
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            all_stats = list(pool.map(
                lambda pair: _pair_statistics(*pair, tok, metrics, char_n, word_n, beta),
                zip(hyps, refs)))
    else:
        all_stats = [_pair_statistics(h, r, tok, metrics, char_n, word_n, beta)
                     for h, r in zip(hyps, refs)]
    bleu_corr = [0] * 4
    bleu_tot = [0] * 4
    bleu_hyp_len = bleu_ref_len = 0
    chrf_total = [0] * (3 * (char_n + word_n))
    cer_dist = cer_ref = 0
    ter_err = ter_ref = 0
    for stats in all_stats:
        row = {}
        if "bleu" in metrics:
            c, t, hl, rl = stats["bleu"]
            bleu_corr = [a + b for a, b in zip(bleu_corr, c)]
            bleu_tot = [a + b for a, b in zip(bleu_tot, t)]
            bleu_hyp_len += hl
            bleu_ref_len += rl
            row["bleu"] = bleu_from_statistics(c, t, hl, rl, use_effective_order=True)
        if "chrf" in metrics:
            chrf_total = [a + b for a, b in zip(chrf_total, stats["chrf"])]
            row["chrf"] = _chrf_from_statistics(stats["chrf"], beta)
        if "cer" in metrics:
            d, n = stats["cer"]
            cer_dist += d
            cer_ref += n
            row["cer"] = d / n
        if "ter" in metrics:
            err, n = stats["ter"]
            ter_err += err
            ter_ref += n
            row["ter"] = err / n * 100.0
        report.per_pair.append(row)
    if "bleu" in metrics:
        report.corpus["bleu"] = bleu_from_statistics(bleu_corr, bleu_tot, bleu_hyp_len, bleu_ref_len)
        report.sufficient["bleu"] = {"correct": bleu_corr, "total": bleu_tot,
                                     "hyp_len": bleu_hyp_len, "ref_len": bleu_ref_len}
    if "chrf" in metrics:
        report.corpus["chrf"] = _chrf_from_statistics(chrf_total, beta)
        report.sufficient["chrf"] = {"stats": chrf_total}
    if "cer" in metrics:
        report.corpus["cer"] = cer_dist / cer_ref if cer_ref else 0.0
        report.sufficient["cer"] = {"distance": cer_dist, "ref_chars": cer_ref}
    if "ter" in metrics:
        report.corpus["ter"] = ter_err / ter_ref * 100.0 if ter_ref else 0.0
        report.sufficient["ter"] = {"errors": ter_err, "ref_tokens": ter_ref}
    return report
