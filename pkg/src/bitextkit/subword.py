"""BPE merge learning and base-vocabulary extension with new merged tokens."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

END_OF_WORD = "</w>"


@dataclass(frozen=True)
class MergeRule:
    left: str
    right: str
    rank: int

    @property
    def product(self) -> str:
        return self.left + self.right


@dataclass
class SubwordVocab:
    base_tokens: set[str]
    merges: list[MergeRule]
    new_tokens: list[str]


def word_to_symbols(word: str) -> tuple[str, ...]:
    """Character symbols with the end-of-word marker appended to the last."""
    if not word:
        return ()
    chars = list(word)
    chars[-1] += END_OF_WORD
    return tuple(chars)


def _count_words(corpus: Iterable) -> Counter:
    counts = Counter()
    for item in corpus:
        text = item if isinstance(item, str) else item.text
        for w in text.split():
            counts[w] += 1
    return counts


def learn_bpe(corpus: Iterable, min_count: int = 30,
              max_merges: Optional[int] = None) -> list[MergeRule]:
    """Repeatedly merge the most frequent adjacent symbol pair, counting words
    with multiplicity. Stops when the best pair count drops below min_count.
    Ties broken by lexicographic order of (left, right)."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    word_counts = _count_words(corpus)
    if not word_counts:
        return []
    words = {w: word_to_symbols(w) for w in word_counts}

    merges: list[MergeRule] = []
    while max_merges is None or len(merges) < max_merges:
        pair_counts: Counter = Counter()
        for w, syms in words.items():
            c = word_counts[w]
            for i in range(len(syms) - 1):
                pair_counts[(syms[i], syms[i + 1])] += c
        if not pair_counts:
            break
        best_count = max(pair_counts.values())
        if best_count < min_count:
            break
        best = min(p for p, c in pair_counts.items() if c == best_count)
        merges.append(MergeRule(best[0], best[1], len(merges)))
        merged = best[0] + best[1]
        for w, syms in words.items():
            if best[0] not in syms:
                continue
            out = []
            i = 0
            while i < len(syms):
                if (i < len(syms) - 1 and syms[i] == best[0]
                        and syms[i + 1] == best[1]):
                    out.append(merged)
                    i += 2
                else:
                    out.append(syms[i])
                    i += 1
            words[w] = tuple(out)
    return merges


def apply_bpe(merges: list[MergeRule], word: str) -> list[str]:
    """Greedy application in rank order: at each step the lowest-rank
    applicable rule is applied to all its occurrences left-to-right."""
    syms = list(word_to_symbols(word))
    if not syms:
        return []
    ranks = {(m.left, m.right): m.rank for m in merges}
    while len(syms) > 1:
        best_rank = None
        for i in range(len(syms) - 1):
            r = ranks.get((syms[i], syms[i + 1]))
            if r is not None and (best_rank is None or r < best_rank):
                best_rank = r
        if best_rank is None:
            break
        rule = merges[best_rank]
        out = []
        i = 0
        while i < len(syms):
            if (i < len(syms) - 1 and syms[i] == rule.left
                    and syms[i + 1] == rule.right):
                out.append(rule.left + rule.right)
                i += 2
            else:
                out.append(syms[i])
                i += 1
        syms = out
    return syms


def extend_vocab(base: set[str], merges: list[MergeRule]) -> SubwordVocab:
    """New tokens = merge products not already in the base vocabulary,
    in rank order, without duplicates."""
    new_tokens = []
    seen = set(base)
    for m in merges:
        tok = m.product
        if tok not in seen:
            new_tokens.append(tok)
            seen.add(tok)
    return SubwordVocab(base_tokens=set(base), merges=list(merges),
                        new_tokens=new_tokens)


def write_merges(merges: list[MergeRule], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for m in merges:
            f.write(f"{m.left} {m.right}\n")


def read_merges(path: str | Path) -> list[MergeRule]:
    merges = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(" ")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno + 1}: expected 'left right'")
            merges.append(MergeRule(parts[0], parts[1], len(merges)))
    return merges
