"""Corpus-level BLEU and ChrF++ scorers.

BLEU: clipped word n-gram precision (n=1..4) pooled over the corpus, uniform
weights, multiplicative brevity penalty, no smoothing. ChrF++: character
n-grams (n=1..6, whitespace removed) plus word n-grams (n=1..2), per-order
F-score with beta=2, averaged over orders; counts pooled at corpus level.
Single reference per hypothesis.
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass, field

BLEU_MAX_ORDER = 4
CHRF_CHAR_ORDER = 6
CHRF_WORD_ORDER = 2
CHRF_BETA = 2.0


@dataclass
class BleuScore:
    score: float
    precisions: list[float]
    brevity_penalty: float
    hyp_len: int
    ref_len: int


@dataclass
class ChrfScore:
    score: float
    beta: float = CHRF_BETA
    char_order: int = CHRF_CHAR_ORDER
    word_order: int = CHRF_WORD_ORDER
    per_order_f: list[float] = field(default_factory=list)


def tokenize_eval(text: str) -> list[str]:
    """Case-preserving tokenizer: whitespace delimits, Unicode punctuation
    becomes separate single-char tokens, digit runs stay together."""
    tokens = []
    cur = []
    for ch in text:
        if ch.isspace():
            if cur:
                tokens.append("".join(cur))
                cur = []
        elif unicodedata.category(ch).startswith("P"):
            if cur:
                tokens.append("".join(cur))
                cur = []
            tokens.append(ch)
        else:
            cur.append(ch)
    if cur:
        tokens.append("".join(cur))
    return tokens


def _ngrams(items, n: int) -> Counter:
    return Counter(tuple(items[i:i + n]) for i in range(len(items) - n + 1))


def corpus_bleu(hyps: list[str], refs: list[str]) -> BleuScore:
    if len(hyps) != len(refs):
        raise ValueError(f"hypothesis/reference length mismatch: "
                         f"{len(hyps)} vs {len(refs)}")
    if not hyps:
        raise ValueError("empty corpus")

    matched = [0] * BLEU_MAX_ORDER
    total = [0] * BLEU_MAX_ORDER
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hyps, refs):
        h_toks = tokenize_eval(hyp)
        r_toks = tokenize_eval(ref)
        hyp_len += len(h_toks)
        ref_len += len(r_toks)
        for n in range(1, BLEU_MAX_ORDER + 1):
            h_grams = _ngrams(h_toks, n)
            r_grams = _ngrams(r_toks, n)
            matched[n - 1] += sum((h_grams & r_grams).values())
            total[n - 1] += max(0, len(h_toks) - n + 1)

    precisions = [m / t if t > 0 else 0.0 for m, t in zip(matched, total)]

    if hyp_len == 0:
        return BleuScore(0.0, precisions, 1.0, hyp_len, ref_len)
    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    if any(p == 0.0 for p in precisions):
        score = 0.0
    else:
        log_mean = sum(math.log(p) for p in precisions) / BLEU_MAX_ORDER
        score = 100.0 * bp * math.exp(log_mean)
    return BleuScore(score, precisions, bp, hyp_len, ref_len)


def _f_beta(matched: int, hyp_total: int, ref_total: int, beta: float) -> float:
    p = matched / hyp_total if hyp_total > 0 else 0.0
    r = matched / ref_total if ref_total > 0 else 0.0
    if p + r == 0.0:
        return 0.0
    b2 = beta * beta
    return (1 + b2) * p * r / (b2 * p + r)


def corpus_chrf_pp(hyps: list[str], refs: list[str]) -> ChrfScore:
    if len(hyps) != len(refs):
        raise ValueError(f"hypothesis/reference length mismatch: "
                         f"{len(hyps)} vs {len(refs)}")
    if not hyps:
        raise ValueError("empty corpus")

    n_orders = CHRF_CHAR_ORDER + CHRF_WORD_ORDER
    matched = [0] * n_orders
    hyp_total = [0] * n_orders
    ref_total = [0] * n_orders

    for hyp, ref in zip(hyps, refs):
        h_chars = "".join(hyp.split())
        r_chars = "".join(ref.split())
        for n in range(1, CHRF_CHAR_ORDER + 1):
            h_grams = _ngrams(h_chars, n)
            r_grams = _ngrams(r_chars, n)
            matched[n - 1] += sum((h_grams & r_grams).values())
            hyp_total[n - 1] += sum(h_grams.values())
            ref_total[n - 1] += sum(r_grams.values())
        h_toks = tokenize_eval(hyp)
        r_toks = tokenize_eval(ref)
        for n in range(1, CHRF_WORD_ORDER + 1):
            k = CHRF_CHAR_ORDER + n - 1
            h_grams = _ngrams(h_toks, n)
            r_grams = _ngrams(r_toks, n)
            matched[k] += sum((h_grams & r_grams).values())
            hyp_total[k] += sum(h_grams.values())
            ref_total[k] += sum(r_grams.values())

    # Orders with no reference n-grams carry no signal and are skipped.
    f_scores = []
    for k in range(n_orders):
        if ref_total[k] == 0:
            continue
        f_scores.append(_f_beta(matched[k], hyp_total[k], ref_total[k],
                                CHRF_BETA))
    score = 100.0 * sum(f_scores) / len(f_scores) if f_scores else 0.0
    return ChrfScore(score, per_order_f=f_scores)


def segment_scores(hyps: list[str], refs: list[str], metric: str) -> list[float]:
    """Per-segment scores for reports; the contract is corpus-level."""
    fn = {"bleu": corpus_bleu, "chrfpp": corpus_chrf_pp}.get(metric)
    if fn is None:
        raise ValueError(f"unknown metric {metric!r}")
    return [fn([h], [r]).score for h, r in zip(hyps, refs)]
